#pragma once

#include "odeident/types.hpp"

#include <vector>

namespace odeident::ode {

struct IntegrationTolerances {
    double rtol = 1e-10;
    double atol = 1e-12;
};

/// Solution of an initial value problem on [t_begin, t_end] with a stored
/// fourth-order dense interpolant, so states can be queried at any time in
/// the span after integration has finished.
class Trajectory {
  public:
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<Vec>& states() const { return states_; }
    const Vec& end_state() const { return states_.back(); }
    IntegrationTolerances tolerances() const { return tol_; }
    std::size_t step_count() const { return times_.size() - 1; }

    /// Dense evaluation; exact at step endpoints. Throws outside the span.
    Vec state_at(double t) const;

    /// Allocation-free dense evaluation into a caller-owned buffer.
    void state_at_into(double t, Vec& out) const;

  private:
    friend Trajectory integrate(const SystemSpec&, const Vec&, const Vec&, double, double,
                                IntegrationTolerances);

    struct DenseStep {
        double t0, h;
        Vec r1, r2, r3, r4, r5;  // continuous-extension coefficients
    };

    std::vector<double> times_;
    std::vector<Vec> states_;
    std::vector<DenseStep> dense_;
    IntegrationTolerances tol_;
    bool reversed_time_ = false;  // states are for the time-reversed field
};

/// Integrates dx/dt = f(x, theta) from xi over [t0, t1] with an adaptive
/// embedded Runge-Kutta 5(4) pair. Omega membership is checked at accepted
/// steps; leaving it raises OmegaExitError with the exit time.
Trajectory integrate(const SystemSpec& spec, const Vec& xi, const Vec& theta, double t0, double t1,
                     IntegrationTolerances tol = {});

/// State at t_target <= t_at, obtained by integrating the time-reversed
/// field forward. t_target == t_at returns the input state unchanged.
Vec integrate_backward(const SystemSpec& spec, double t_at, const Vec& state_at, const Vec& theta,
                       double t_target, IntegrationTolerances tol = {});

}  // namespace odeident::ode
