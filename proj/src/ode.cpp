#include "odeident/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace odeident::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b_i - bhat_i, the embedded fourth-order error weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output coefficients
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, IntegrationTolerances tol) {
    double acc = 0.0;
    for (int i = 0; i < err.size(); ++i) {
        double scale = tol.atol + tol.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        double e = err(i) / scale;
        acc += e * e;
    }
    return std::sqrt(acc / err.size());
}

// Initial step heuristic from the norms of the state and the field.
double initial_step(const std::function<Vec(const Vec&)>& f, const Vec& y0, double span,
                    IntegrationTolerances tol) {
    Vec f0 = f(y0);
    double d0 = 0.0, d1n = 0.0;
    for (int i = 0; i < y0.size(); ++i) {
        double scale = tol.atol + tol.rtol * std::abs(y0(i));
        d0 += std::pow(y0(i) / scale, 2);
        d1n += std::pow(f0(i) / scale, 2);
    }
    d0 = std::sqrt(d0 / y0.size());
    d1n = std::sqrt(d1n / y0.size());
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, span);

    Vec y1 = y0 + h0 * f0;
    Vec f1 = f(y1);
    double d2 = 0.0;
    for (int i = 0; i < y0.size(); ++i) {
        double scale = tol.atol + tol.rtol * std::abs(y0(i));
        d2 += std::pow((f1(i) - f0(i)) / scale, 2);
    }
    d2 = std::sqrt(d2 / y0.size()) / h0;
    double m = std::max(d1n, d2);
    double h1 = (m <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::min({100.0 * h0, h1, span});
}

}  // namespace

Vec Trajectory::state_at(double t) const {
    Vec out;
    state_at_into(t, out);
    return out;
}

void Trajectory::state_at_into(double t, Vec& out) const {
    const double lo = times_.front(), hi = times_.back();
    const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
    if (t < lo - slack || t > hi + slack)
        throw Error("span", "time " + std::to_string(t) + " outside trajectory span [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
    t = std::clamp(t, lo, hi);
    // locate the step containing t
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t idx = (it == times_.begin()) ? 0 : (it - times_.begin() - 1);
    idx = std::min(idx, dense_.size() - 1);
    const DenseStep& s = dense_[idx];
    double theta = (t - s.t0) / s.h;
    double th1 = 1.0 - theta;
    out.resize(s.r1.size());
    for (int i = 0; i < out.size(); ++i)
        out(i) = s.r1(i) +
                 theta * (s.r2(i) + th1 * (s.r3(i) + theta * (s.r4(i) + th1 * s.r5(i))));
}

Trajectory integrate(const SystemSpec& spec, const Vec& xi, const Vec& theta, double t0, double t1,
                     IntegrationTolerances tol) {
    if (!(t0 < t1)) throw Error("span", "integration span requires t0 < t1");
    if (spec.theta_member && !spec.theta_member(theta))
        throw Error("domain", "theta outside admissible parameter set");
    if (spec.omega_member && !spec.omega_member(xi, theta))
        throw OmegaExitError(t0, "initial state outside admissible set");

    auto field = [&](const Vec& x) { return spec.f(x, theta); };

    Trajectory traj;
    traj.tol_ = tol;
    traj.times_.push_back(t0);
    traj.states_.push_back(xi);

    double t = t0;
    Vec y = xi;
    Vec k1 = field(y);
    double h = initial_step(field, y, t1 - t0, tol);
    const double hmin = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t1 - t0);
    if (!(t1 - t0 > hmin)) throw Error("span", "integration span is degenerate");

    int rejected_in_a_row = 0;
    while (t1 - t > hmin) {
        h = std::min(h, t1 - t);
        if (h < hmin)
            throw StepSizeError("step size underflow at t = " + std::to_string(t) +
                                " (stiffness signal)");

        Vec k2 = field(y + h * (a21 * k1));
        Vec k3 = field(y + h * (a31 * k1 + a32 * k2));
        Vec k4 = field(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        Vec k5 = field(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        Vec k6 = field(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Vec y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        Vec k7 = field(y1);  // FSAL

        Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double en = error_norm(err, y, y1, tol);

        if (en <= 1.0) {
            Trajectory::DenseStep ds;
            ds.t0 = t;
            ds.h = h;
            Vec ydiff = y1 - y;
            Vec bspl = h * k1 - ydiff;
            ds.r1 = y;
            ds.r2 = ydiff;
            ds.r3 = bspl;
            ds.r4 = ydiff - h * k7 - bspl;
            ds.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            traj.dense_.push_back(std::move(ds));

            t += h;
            y = y1;
            k1 = k7;
            traj.times_.push_back(t);
            traj.states_.push_back(y);

            if (spec.omega_member && !spec.omega_member(y, theta)) {
                // locate the crossing inside the step via the dense interpolant
                double lo = 0.0, hi = 1.0;
                Vec probe(y.size());
                for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
                    double mid = 0.5 * (lo + hi);
                    traj.state_at_into(t - h + mid * h, probe);
                    (spec.omega_member(probe, theta) ? lo : hi) = mid;
                }
                double t_exit = t - h + hi * h;
                throw OmegaExitError(t_exit,
                                     "state left admissible set at t = " + std::to_string(t_exit));
            }

            double factor = (en == 0.0) ? 10.0 : 0.9 * std::pow(en, -0.2);
            if (rejected_in_a_row > 0) factor = std::min(factor, 1.0);
            h *= std::clamp(factor, 0.2, 10.0);
            rejected_in_a_row = 0;
        } else {
            h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
            ++rejected_in_a_row;
            if (rejected_in_a_row > 100)
                throw StepSizeError("repeated step rejection at t = " + std::to_string(t));
        }
    }
    traj.times_.back() = t1;  // pin the endpoint label against roundoff drift
    return traj;
}

Vec integrate_backward(const SystemSpec& spec, double t_at, const Vec& state_at, const Vec& theta,
                       double t_target, IntegrationTolerances tol) {
    if (t_target > t_at) throw Error("span", "backward integration requires t_target <= t_at");
    if (t_target == t_at) return state_at;

    // forward integration of the time-reversed field over [0, t_at - t_target]
    SystemSpec reversed = spec;
    auto f = spec.f;
    reversed.f = [f](const Vec& x, const Vec& th) { return Vec(-f(x, th)); };
    Trajectory traj = integrate(reversed, state_at, theta, 0.0, t_at - t_target, tol);
    return traj.end_state();
}

}  // namespace odeident::ode
