#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace odeident {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base error carrying a machine-readable kind tag alongside the message.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

  private:
    std::string kind_;
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class CsvError : public Error {
  public:
    explicit CsvError(const std::string& m) : Error("csv", m) {}
};

class RegistryError : public Error {
  public:
    explicit RegistryError(const std::string& m) : Error("registry", m) {}
};

/// Trajectory left the admissible state set during integration.
class OmegaExitError : public Error {
  public:
    OmegaExitError(double time, const std::string& m) : Error("omega_exit", m), time_(time) {}
    double time() const { return time_; }

  private:
    double time_;
};

class StepSizeError : public Error {
  public:
    explicit StepSizeError(const std::string& m) : Error("step_underflow", m) {}
};

/// A block evaluator produced a non-finite value at a specific jet time.
class EvaluationError : public Error {
  public:
    EvaluationError(double time, const std::string& m) : Error("evaluation", m), time_(time) {}
    double time() const { return time_; }

  private:
    double time_;
};

class SelectionError : public Error {
  public:
    explicit SelectionError(const std::string& m) : Error("selection", m) {}
};

class SolveError : public Error {
  public:
    explicit SolveError(const std::string& m) : Error("solve", m) {}
};

class ReconcileError : public Error {
  public:
    explicit ReconcileError(const std::string& m) : Error("reconcile", m) {}
};

class ImageViolationError : public Error {
  public:
    explicit ImageViolationError(const std::string& m) : Error("image_violation", m) {}
};

class NotIdentifiableError : public Error {
  public:
    explicit NotIdentifiableError(const std::string& m) : Error("not_identifiable", m) {}
};

class JetError : public Error {
  public:
    explicit JetError(const std::string& m) : Error("jet", m) {}
};

/// Output value and its time derivatives at one instant.
/// values[i][k] holds y_i^(k); channel i carries orders 0..d_i.
struct OutputJet {
    double t = 0.0;
    std::vector<std::vector<double>> values;

    double value(int channel, int order) const { return values.at(channel).at(order); }
    double y(int channel) const { return value(channel, 0); }
    double dy(int channel) const { return value(channel, 1); }
    int channels() const { return static_cast<int>(values.size()); }
};

/// Per-block sigma vectors accumulated while the pipeline runs.
/// Later blocks read components of earlier blocks through this store.
class SigmaStore {
  public:
    SigmaStore() = default;
    explicit SigmaStore(int block_count) : slots_(block_count) {}

    void set(int block, Vec sigma) {
        if (block >= static_cast<int>(slots_.size())) slots_.resize(block + 1);
        slots_[block] = std::move(sigma);
    }
    bool has(int block) const {
        return block >= 0 && block < static_cast<int>(slots_.size()) && slots_[block].has_value();
    }
    double at(int block, int component) const {
        if (!has(block))
            throw SolveError("sigma for block " + std::to_string(block + 1) + " not yet available");
        return (*slots_[block])(component);
    }
    const Vec& block(int index) const { return *slots_.at(index); }

  private:
    std::vector<std::optional<Vec>> slots_;
};

struct InverseOutputResult {
    Vec state;
    std::vector<bool> recoverable;
};

/// An autonomous ODE system with an observation map and the evaluators the
/// identification pipeline needs. All callables must be pure; instances are
/// immutable after construction and safe to share across threads.
struct SystemSpec {
    int state_dim = 0;
    int param_dim = 0;
    int output_dim = 0;

    /// Highest derivative order needed per output channel.
    std::vector<int> output_derivative_orders;

    /// dx/dt = f(x, theta).
    std::function<Vec(const Vec&, const Vec&)> f;
    /// y = h(x, theta).
    std::function<Vec(const Vec&, const Vec&)> h;
    /// Closed-form output jet at a state (t is filled in by the caller).
    /// Optional; required for the analytic derivative path.
    std::function<OutputJet(const Vec&, const Vec&)> analytic_jet;
    /// Admissible state set. Takes theta as well: the excluded equilibria of
    /// several systems depend on the parameter values.
    std::function<bool(const Vec&, const Vec&)> omega_member;
    /// Admissible parameter set.
    std::function<bool(const Vec&)> theta_member;
    /// Reconstructs the state from one output jet, marking coordinates the
    /// outputs cannot see. Optional; required for initial-state recovery.
    std::function<InverseOutputResult(const OutputJet&, const Vec&)> inverse_output_map;
    /// Optional dataset-level admissibility check run before any block is
    /// solved (e.g. an output channel that must not be constant). Throws on
    /// violation.
    std::function<void(const std::vector<OutputJet>&)> data_guard;

    int max_derivative_order() const {
        int m = 0;
        for (int d : output_derivative_orders) m = std::max(m, d);
        return m;
    }
};

/// One linear relation between jet functionals: target = sum_l sigma_l * basis_l.
struct RegressionBlock {
    std::string label;
    int basis_size = 0;
    /// Left-hand side; may consume sigma components of earlier blocks.
    std::function<double(const OutputJet&, const SigmaStore&)> target;
    std::function<double(const OutputJet&)> target_simple;  // convenience, no store access
    std::vector<std::function<double(const OutputJet&)>> basis;
    /// (block index, sigma component) pairs this block's target reads.
    std::vector<std::pair<int, int>> depends_on;
    /// Single-basis blocks may be estimated as a guarded median of
    /// target/basis over the jets instead of a linear solve.
    bool pointwise_ratio = false;

    double eval_target(const OutputJet& jet, const SigmaStore& store) const {
        return target ? target(jet, store) : target_simple(jet);
    }
};

/// The map r between parameter space and sigma space, with its inverse.
struct ParameterMap {
    int sigma_dim = 0;
    std::function<Vec(const Vec&)> forward;  // theta -> sigma
    std::function<Vec(const Vec&)> inverse;  // sigma -> theta
    /// Flat sigma index pairs that represent the same quantity and must agree.
    std::vector<std::pair<int, int>> redundancy_pairs;
};

struct BlockReport {
    int index = 0;  // 1-based, matches documentation
    std::string label;
    Vec sigma;      // after redundancy reconciliation
    Vec sigma_raw;  // as solved
    double residual = 0.0;
    double condition_number = 0.0;
    double smallest_singular_value = 0.0;
    std::vector<double> times_used;
    bool pointwise = false;
};

struct IdentificationReport {
    Vec theta_hat;
    Vec x0_hat;
    std::vector<bool> x0_recoverable;
    std::vector<BlockReport> blocks;
    double t_tilde = 0.0;
    bool backward_integrated = false;
    int distinct_times = 0;  // distinct selected times across linear blocks, plus t_tilde
    double window_a = 0.0;
    double window_b = 0.0;
    int jets_used = 0;
    std::string derivative_mode;  // "analytic" | "numeric"
    std::string solve_mode;       // "square" | "oversampled"
    std::string selection_strategy;

    Vec sigma_flat() const {
        int q = 0;
        for (const auto& b : blocks) q += static_cast<int>(b.sigma.size());
        Vec out(q);
        int at = 0;
        for (const auto& b : blocks) {
            out.segment(at, b.sigma.size()) = b.sigma;
            at += static_cast<int>(b.sigma.size());
        }
        return out;
    }
};

}  // namespace odeident
