#include "odeident/jets.hpp"

#include <cmath>
#include <string>

namespace odeident::jets {

std::vector<double> uniform_grid(double a, double b, int n) {
    if (n <= 0) throw JetError("grid size must be positive");
    if (!(a < b)) throw JetError("grid window requires a < b");
    std::vector<double> g(n);
    double step = (b - a) / n;
    for (int k = 0; k < n; ++k) g[k] = a + k * step;
    return g;
}

namespace {

void validate_jet(const SystemSpec& spec, const OutputJet& jet, double t) {
    if (jet.channels() != spec.output_dim)
        throw JetError("analytic jet at t = " + std::to_string(t) + " has " +
                       std::to_string(jet.channels()) + " channels, expected " +
                       std::to_string(spec.output_dim));
    for (int i = 0; i < jet.channels(); ++i) {
        int want = spec.output_derivative_orders[i] + 1;
        if (static_cast<int>(jet.values[i].size()) != want)
            throw JetError("analytic jet channel " + std::to_string(i + 1) + " carries " +
                           std::to_string(jet.values[i].size()) + " orders, expected " +
                           std::to_string(want));
        for (double v : jet.values[i])
            if (!std::isfinite(v))
                throw JetError("non-finite jet entry at t = " + std::to_string(t));
    }
}

}  // namespace

std::vector<OutputJet> analytic_jets(const SystemSpec& spec, const ode::Trajectory& traj,
                                     const Vec& theta, const std::vector<double>& grid,
                                     Exec exec) {
    if (!spec.analytic_jet)
        throw JetError("system has no closed-form jet evaluator; use the numeric path");
    const double slack = 1e-12 * std::max(1.0, traj.t_end() - traj.t_begin());
    for (double t : grid)
        if (t < traj.t_begin() - slack || t > traj.t_end() + slack)
            throw JetError("grid time " + std::to_string(t) + " outside trajectory span [" +
                           std::to_string(traj.t_begin()) + ", " + std::to_string(traj.t_end()) +
                           "]");

    const int n = static_cast<int>(grid.size());
    std::vector<OutputJet> out(n);
    if (exec == Exec::openmp) {
        std::string deferred;
#pragma omp parallel
        {
            Vec x(spec.state_dim);
#pragma omp for schedule(static)
            for (int k = 0; k < n; ++k) {
                try {
                    traj.state_at_into(grid[k], x);
                    out[k] = spec.analytic_jet(x, theta);
                    out[k].t = grid[k];
                } catch (const std::exception& e) {
#pragma omp critical
                    if (deferred.empty()) deferred = e.what();
                }
            }
        }
        if (!deferred.empty()) throw JetError(deferred);
    } else {
        Vec x(spec.state_dim);
        for (int k = 0; k < n; ++k) {
            traj.state_at_into(grid[k], x);
            out[k] = spec.analytic_jet(x, theta);
            out[k].t = grid[k];
        }
    }
    for (int k = 0; k < n; ++k) validate_jet(spec, out[k], grid[k]);
    return out;
}

Mat fd_weights(const std::vector<double>& nodes, double x0, int max_order) {
    // Fornberg's recurrence for finite-difference weights on arbitrary nodes.
    const int n = static_cast<int>(nodes.size());
    if (max_order >= n)
        throw JetError("need more than " + std::to_string(max_order) +
                       " nodes for derivative order " + std::to_string(max_order));
    Mat w = Mat::Zero(n, max_order + 1);
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    w(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, max_order);
        double c2 = 1.0;
        double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    w(i, k) = c1 * (k * w(i - 1, k - 1) - c5 * w(i - 1, k)) / c2;
                w(i, 0) = -c1 * c5 * w(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                w(j, k) = (c4 * w(j, k) - k * w(j, k - 1)) / c3;
            w(j, 0) = c4 * w(j, 0) / c3;
        }
        c1 = c2;
    }
    return w;
}

std::vector<OutputJet> numeric_jets(const SampleTable& samples, const std::vector<int>& orders,
                                    int stencil, Exec exec) {
    const int n = samples.samples();
    const int m = samples.channels();
    if (m != static_cast<int>(orders.size()))
        throw JetError("orders list has " + std::to_string(orders.size()) + " entries for " +
                       std::to_string(m) + " channels");
    if (stencil < 3 || stencil % 2 == 0)
        throw JetError("stencil width must be odd and at least 3");
    int dmax = 0;
    for (int d : orders) {
        if (d < 0) throw JetError("derivative orders must be non-negative");
        dmax = std::max(dmax, d);
    }
    if (stencil < 2 * dmax + 1)
        throw JetError("stencil width " + std::to_string(stencil) +
                       " too small for derivative order " + std::to_string(dmax) +
                       " (need at least " + std::to_string(2 * dmax + 1) + ")");
    if (n < stencil)
        throw JetError("too few samples: " + std::to_string(n) + " for stencil width " +
                       std::to_string(stencil));

    const double dt = samples.t[1] - samples.t[0];
    if (!(dt > 0)) throw JetError("sample times must be strictly increasing");
    for (int i = 1; i + 1 < n; ++i) {
        double d = samples.t[i + 1] - samples.t[i];
        if (!(d > 0)) throw JetError("sample times must be strictly increasing (row " +
                                     std::to_string(i + 2) + ")");
        if (std::abs(d - dt) > 1e-9 * dt)
            throw JetError("non-uniform sample spacing at row " + std::to_string(i + 2) +
                           ": step " + std::to_string(d) + " vs " + std::to_string(dt));
    }

    const int half = stencil / 2;
    std::vector<double> offsets(stencil);
    for (int s = 0; s < stencil; ++s) offsets[s] = (s - half) * dt;
    const Mat w = fd_weights(offsets, 0.0, dmax);  // same weights at every interior point

    const int count = n - 2 * half;
    std::vector<OutputJet> out(count);

    auto fill = [&](int p) {
        const int i = p + half;  // sample index at the jet time
        OutputJet jet;
        jet.t = samples.t[i];
        jet.values.resize(m);
        for (int c = 0; c < m; ++c) {
            jet.values[c].resize(orders[c] + 1);
            jet.values[c][0] = samples.y(i, c);
            for (int k = 1; k <= orders[c]; ++k) {
                double acc = 0.0;
                for (int s = 0; s < stencil; ++s) acc += w(s, k) * samples.y(i - half + s, c);
                jet.values[c][k] = acc;
            }
        }
        out[p] = std::move(jet);
    };

    if (exec == Exec::openmp) {
#pragma omp parallel for schedule(static)
        for (int p = 0; p < count; ++p) fill(p);
    } else {
        for (int p = 0; p < count; ++p) fill(p);
    }
    return out;
}

}  // namespace odeident::jets
