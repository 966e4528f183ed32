#pragma once

// Shared helpers for the test suites: admissible-set samplers per model,
// jet generation along simulated trajectories, and small utilities.

#include "odeident/jets.hpp"
#include "odeident/models.hpp"
#include "odeident/ode.hpp"
#include "odeident/recovery.hpp"
#include "odeident/registry.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace odeident::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double sign_uniform(Rng& rng, double lo, double hi) {
    double v = uniform(rng, lo, hi);
    return (rng() & 1u) ? v : -v;
}

inline double rel_err(const Vec& estimate, const Vec& truth) {
    double worst = 0.0;
    for (int i = 0; i < truth.size(); ++i)
        worst = std::max(worst,
                         std::abs(estimate(i) - truth(i)) / std::max(std::abs(truth(i)), 1e-300));
    return worst;
}

struct Draw {
    Vec theta;
    Vec x0;
};

inline Draw draw_lotka_volterra(Rng& rng) {
    Draw d;
    d.theta = Vec(4);
    for (int i = 0; i < 4; ++i) d.theta(i) = uniform(rng, 0.4, 1.6);
    for (;;) {
        d.x0 = Vec(2);
        d.x0 << uniform(rng, 0.4, 2.5), uniform(rng, 0.4, 2.5);
        double eq1 = d.theta(3) / d.theta(2), eq2 = d.theta(0) / d.theta(1);
        if (std::hypot(d.x0(0) - eq1, d.x0(1) - eq2) > 0.05) return d;
    }
}

inline Draw draw_reactor(Rng& rng) {
    Draw d;
    d.theta = Vec(3);
    d.theta << uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 3.0), uniform(rng, 50.0, 300.0);
    d.x0 = Vec(3);
    d.x0 << uniform(rng, 0.5, 2.0), uniform(rng, 0.0, 1.0), uniform(rng, 250.0, 400.0);
    return d;
}

inline Draw draw_henon_heiles(Rng& rng) {
    Draw d;
    d.theta = Vec(6);
    for (int i = 0; i < 4; ++i) d.theta(i) = uniform(rng, 0.4, 0.8);
    d.theta(4) = sign_uniform(rng, 0.5, 1.0);
    d.theta(5) = sign_uniform(rng, 0.1, 0.3);
    d.x0 = Vec(4);
    for (int i = 0; i < 4; ++i) d.x0(i) = sign_uniform(rng, 0.02, 0.1);
    return d;
}

inline Draw draw_linparam(Rng& rng) {
    Draw d;
    d.theta = Vec(3);
    for (int i = 0; i < 3; ++i) d.theta(i) = sign_uniform(rng, 0.05, 0.5);
    d.x0 = Vec(1);
    d.x0 << uniform(rng, 0.1, 0.6);
    return d;
}

/// Fixed coefficient matrix for the linparam test instance; seeded and full
/// rank by construction.
inline Mat linparam_test_matrix() {
    Rng rng(42);
    Mat A(4, 3);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) A(i, j) = uniform(rng, -1.0, 1.0);
    return A;
}

inline models::ModelBundle make_linparam_test_bundle() {
    models::LinparamOptions opts;
    opts.A = linparam_test_matrix();
    opts.x_max = 50.0;  // turns blow-ups into clean admissibility exits
    return models::make_linparam(opts);
}

inline Draw draw_for(const std::string& model, Rng& rng) {
    if (model == "lotka_volterra") return draw_lotka_volterra(rng);
    if (model == "reactor") return draw_reactor(rng);
    if (model == "henon_heiles") return draw_henon_heiles(rng);
    if (model == "linparam") return draw_linparam(rng);
    throw std::logic_error("no sampler for model " + model);
}

inline double default_t_end(const std::string& model) {
    return model == "linparam" ? 0.5 : 10.0;
}

/// Appends the known time coordinate for the model that carries one.
inline Vec full_initial_state(const Model& model, const Vec& x0) {
    if (static_cast<int>(x0.size()) == model.spec.state_dim) return x0;
    Vec full(model.spec.state_dim);
    full.head(x0.size()) = x0;
    full(x0.size()) = 0.0;
    return full;
}

/// Draws (theta, x0) until the trajectory stays admissible over [0, t_end].
/// Draws whose output barely moves are rejected as well: every model here
/// assumes non-constant observations.
inline Draw admissible_draw(const Model& model, Rng& rng, double t_end,
                            ode::Trajectory* traj_out = nullptr,
                            ode::IntegrationTolerances tol = {}) {
    for (int attempt = 0; attempt < 400; ++attempt) {
        Draw d = draw_for(model.name, rng);
        try {
            ode::Trajectory traj =
                ode::integrate(model.spec, full_initial_state(model, d.x0), d.theta, 0.0, t_end,
                               tol);
            if (model.name == "linparam") {
                double lo = 1e300, hi = -1e300;
                for (const Vec& x : traj.states()) {
                    lo = std::min(lo, x(0));
                    hi = std::max(hi, x(0));
                }
                if (hi - lo < 0.05) continue;  // started too close to a rest point
            }
            if (traj_out) *traj_out = std::move(traj);
            return d;
        } catch (const Error&) {
            continue;  // left the admissible set or went stiff; redraw
        }
    }
    throw std::runtime_error("no admissible draw found for " + model.name);
}

struct JetData {
    ode::Trajectory traj;
    std::vector<OutputJet> jets;
};

inline JetData simulate_jets(const Model& model, const Vec& theta, const Vec& x0, double t_end,
                             double window_a, double window_b, int grid_n,
                             ode::IntegrationTolerances tol = {}) {
    JetData out;
    out.traj = ode::integrate(model.spec, full_initial_state(model, x0), theta, 0.0, t_end, tol);
    std::vector<double> grid = jets::uniform_grid(window_a, window_b, grid_n);
    out.jets = jets::analytic_jets(model.spec, out.traj, theta, grid);
    return out;
}

/// Sigma store filled from the forward map, for checks that need true values
/// of earlier blocks (staged targets).
inline SigmaStore true_sigma_store(const Model& model, const Vec& theta) {
    Vec sigma = model.pmap.forward(theta);
    SigmaStore store(model.block_count());
    for (int j = 0; j < model.block_count(); ++j)
        store.set(j, sigma.segment(model.sigma_offsets[j], model.blocks[j].basis_size));
    return store;
}

/// Largest scaled violation of the per-block linear identity over the jets.
inline double identity_residual(const Model& model, const Vec& theta,
                                const std::vector<OutputJet>& jet_list) {
    SigmaStore store = true_sigma_store(model, theta);
    double worst = 0.0;
    for (int j = 0; j < model.block_count(); ++j) {
        const RegressionBlock& block = model.blocks[j];
        const Vec& sigma = store.block(j);
        for (const auto& jet : jet_list) {
            double lhs = block.eval_target(jet, store);
            double rhs = 0.0;
            for (int l = 0; l < block.basis_size; ++l) rhs += sigma(l) * block.basis[l](jet);
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        }
    }
    return worst;
}

}  // namespace odeident::testing
