#pragma once

#include "odeident/jets.hpp"
#include "odeident/ode.hpp"
#include "odeident/registry.hpp"
#include "odeident/timeselect.hpp"
#include "odeident/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace odeident::recovery {

enum class SolveMode { square, oversampled };
enum class DerivativeMode { analytic, numeric };

struct BlockSolve {
    Vec sigma;
    double residual = 0.0;  // relative, over the rows the solve used
};

/// Solves one block for its sigma vector. Square mode uses exactly the
/// selected rows; oversampled mode solves least squares over all grid rows.
BlockSolve solve_block(const timeselect::BasisEvaluation& ev, const timeselect::TimeSelection& sel,
                       SolveMode mode, const std::string& label = {});

/// Asserts each redundancy pair agrees within tol (relative), then replaces
/// both entries by the pair mean.
Vec reconcile_sigma(const Vec& sigma, const std::vector<std::pair<int, int>>& pairs, double tol);

/// theta = pmap.inverse(sigma), checked against the parameter set and the
/// image of the forward map.
Vec recover_theta(const Vec& sigma, const ParameterMap& pmap,
                  const std::function<bool(const Vec&)>& theta_member, double image_tol = 1e-10);

/// Guarded-median estimate of a single-basis block's sigma component:
/// median of target/basis over all jets with |basis| > guard.
struct RatioEstimate {
    double value = 0.0;
    double residual = 0.0;           // relative spread of the ratio over guarded jets
    std::vector<double> times_used;  // guarded jet times
};
RatioEstimate estimate_ratio(const RegressionBlock& block, const std::vector<OutputJet>& jets,
                             const SigmaStore& prior_sigma, double guard = 1e-8);

/// Medians of all pointwise-ratio blocks of a model, keyed by block label.
std::map<std::string, double> recover_pointwise_ratios(const Model& model,
                                                       const std::vector<OutputJet>& jets,
                                                       double guard = 1e-8);

struct InitialState {
    Vec x0;
    std::vector<bool> recoverable;
    double t_tilde = 0.0;
    bool backward_integrated = false;
};

/// State at t_tilde from the inverse output map, then backward integration to
/// t = 0 (skipped when t_tilde is already 0). Unrecoverable coordinates are
/// carried as placeholders and excluded from admissibility checks.
InitialState recover_initial_state(const SystemSpec& spec, const OutputJet& jet_at_t_tilde,
                                   const Vec& theta, ode::IntegrationTolerances tol = {});

struct IdentifyOptions {
    double window_a = 0.0;
    double window_b = 0.0;  // <= window_a means "use all supplied jets"
    timeselect::Strategy strategy = timeselect::Strategy::greedy;
    double selection_tol = 1e-8;
    SolveMode solve_mode = SolveMode::oversampled;
    double ratio_guard = 1e-8;
    double redundancy_tol = 1e-3;
    double image_tol = 1e-10;
    int stencil = 5;  // numeric path
    ode::IntegrationTolerances ode_tol{};
    DerivativeMode derivative_mode = DerivativeMode::analytic;  // recorded in the report
};

/// Runs the whole pipeline on prepared jets: per-block selection and solve in
/// dependency order, redundancy reconciliation, parameter-map inversion, and
/// initial-state reconstruction.
IdentificationReport identify(const Model& model, std::vector<OutputJet> jets,
                              const IdentifyOptions& opts);

/// Numeric-derivative entry point: differentiates the samples first.
IdentificationReport identify(const Model& model, const jets::SampleTable& samples,
                              IdentifyOptions opts);

}  // namespace odeident::recovery
