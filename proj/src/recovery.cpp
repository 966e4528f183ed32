#include "odeident/recovery.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace odeident::recovery {

namespace {

double relative_residual(const Mat& basis, const Vec& sigma, const Vec& target) {
    double denom = std::max(target.norm(), 1e-300);
    return (basis * sigma - target).norm() / denom;
}

}  // namespace

BlockSolve solve_block(const timeselect::BasisEvaluation& ev, const timeselect::TimeSelection& sel,
                       SolveMode mode, const std::string& label) {
    const int q = static_cast<int>(ev.basis.cols());
    BlockSolve out;
    if (mode == SolveMode::square) {
        if (static_cast<int>(sel.rows.size()) != q)
            throw SolveError("block '" + label + "': square solve needs exactly " +
                             std::to_string(q) + " selected rows");
        Mat sub(q, q);
        Vec rhs(q);
        for (int i = 0; i < q; ++i) {
            sub.row(i) = ev.basis.row(sel.rows[i]);
            rhs(i) = ev.target(sel.rows[i]);
        }
        Eigen::FullPivLU<Mat> lu(sub);
        if (!lu.isInvertible())
            throw SolveError("block '" + label + "': selected time matrix is singular");
        out.sigma = lu.solve(rhs);
        out.residual = relative_residual(sub, out.sigma, rhs);
    } else {
        if (ev.basis.rows() < q)
            throw SolveError("block '" + label + "': fewer grid rows than basis functions");
        Eigen::JacobiSVD<Mat> svd(ev.basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec& sv = svd.singularValues();
        if (sv(q - 1) <= 0.0)
            throw SolveError("block '" + label + "': grid basis matrix is rank deficient");
        out.sigma = svd.solve(ev.target);
        out.residual = relative_residual(ev.basis, out.sigma, ev.target);
    }
    return out;
}

Vec reconcile_sigma(const Vec& sigma, const std::vector<std::pair<int, int>>& pairs, double tol) {
    Vec out = sigma;
    for (const auto& [i, j] : pairs) {
        double a = out(i), b = out(j);
        double scale = std::max({1.0, std::abs(a), std::abs(b)});
        if (std::abs(a - b) > tol * scale)
            throw ReconcileError("redundant sigma components " + std::to_string(i + 1) + " and " +
                                 std::to_string(j + 1) + " disagree: " + std::to_string(a) +
                                 " vs " + std::to_string(b));
        double mean = 0.5 * (a + b);
        out(i) = mean;
        out(j) = mean;
    }
    return out;
}

Vec recover_theta(const Vec& sigma, const ParameterMap& pmap,
                  const std::function<bool(const Vec&)>& theta_member, double image_tol) {
    if (sigma.size() != pmap.sigma_dim)
        throw SolveError("sigma has dimension " + std::to_string(sigma.size()) + ", expected " +
                         std::to_string(pmap.sigma_dim));
    Vec theta = pmap.inverse(sigma);
    if (theta_member && !theta_member(theta))
        throw ImageViolationError("recovered parameters lie outside the admissible set");
    Vec back = pmap.forward(theta);
    double err = (back - sigma).norm() / std::max(1.0, sigma.norm());
    if (err > image_tol)
        throw ImageViolationError("sigma is not in the image of the parameter map (closure error " +
                                  std::to_string(err) + ")");
    return theta;
}

RatioEstimate estimate_ratio(const RegressionBlock& block, const std::vector<OutputJet>& jets,
                             const SigmaStore& prior_sigma, double guard) {
    if (block.basis_size != 1)
        throw SolveError("block '" + block.label + "': ratio estimation needs a single basis");
    RatioEstimate est;
    std::vector<double> ratios;
    for (const auto& jet : jets) {
        double denom = block.basis[0](jet);
        if (!std::isfinite(denom) || std::abs(denom) <= guard) continue;
        double num = block.eval_target(jet, prior_sigma);
        if (!std::isfinite(num))
            throw EvaluationError(jet.t, "block '" + block.label + "': target non-finite at t = " +
                                             std::to_string(jet.t));
        ratios.push_back(num / denom);
        est.times_used.push_back(jet.t);
    }
    if (ratios.empty())
        throw SolveError("block '" + block.label + "': no jet time passes the denominator guard " +
                         std::to_string(guard));
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    std::size_t n = sorted.size();
    est.value = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double spread = 0.0;
    for (double r : ratios) spread = std::max(spread, std::abs(r - est.value));
    est.residual = spread / std::max(1.0, std::abs(est.value));
    return est;
}

std::map<std::string, double> recover_pointwise_ratios(const Model& model,
                                                       const std::vector<OutputJet>& jets,
                                                       double guard) {
    std::map<std::string, double> out;
    SigmaStore empty(model.block_count());
    for (const auto& block : model.blocks) {
        if (!block.pointwise_ratio || !block.depends_on.empty()) continue;
        out[block.label] = estimate_ratio(block, jets, empty, guard).value;
    }
    return out;
}

InitialState recover_initial_state(const SystemSpec& spec, const OutputJet& jet_at_t_tilde,
                                   const Vec& theta, ode::IntegrationTolerances tol) {
    if (!spec.inverse_output_map)
        throw SolveError("system has no inverse output map; initial state not recoverable");
    InverseOutputResult inv = spec.inverse_output_map(jet_at_t_tilde, theta);
    InitialState out;
    out.t_tilde = jet_at_t_tilde.t;
    out.recoverable = inv.recoverable;
    if (std::abs(out.t_tilde) <= 1e-14) {
        out.x0 = inv.state;
        out.backward_integrated = false;
        return out;
    }
    bool partial = false;
    for (bool r : inv.recoverable)
        if (!r) partial = true;
    SystemSpec working = spec;
    if (partial && spec.omega_member) {
        // Unrecoverable coordinates hold placeholder values; keep the
        // admissibility check to the coordinates that are real.
        auto base = spec.omega_member;
        auto mask = inv.recoverable;
        auto ref = inv.state;
        working.omega_member = [base, mask, ref](const Vec& x, const Vec& th) {
            Vec patched = x;
            for (int i = 0; i < patched.size(); ++i)
                if (!mask[i]) patched(i) = ref(i);
            return base(patched, th);
        };
    }
    out.x0 = ode::integrate_backward(working, out.t_tilde, inv.state, theta, 0.0, tol);
    out.backward_integrated = true;
    return out;
}

IdentificationReport identify(const Model& model, std::vector<OutputJet> jets,
                              const IdentifyOptions& opts) {
    if (opts.window_b > opts.window_a) {
        std::vector<OutputJet> kept;
        kept.reserve(jets.size());
        for (auto& jet : jets)
            if (jet.t >= opts.window_a && jet.t < opts.window_b) kept.push_back(std::move(jet));
        jets = std::move(kept);
    }
    std::sort(jets.begin(), jets.end(),
              [](const OutputJet& a, const OutputJet& b) { return a.t < b.t; });
    if (jets.empty()) throw SolveError("no jets inside the configured window");
    if (model.spec.data_guard) model.spec.data_guard(jets);

    IdentificationReport report;
    report.window_a = opts.window_a;
    report.window_b = opts.window_b > opts.window_a ? opts.window_b : jets.back().t;
    report.jets_used = static_cast<int>(jets.size());
    report.derivative_mode = opts.derivative_mode == DerivativeMode::analytic ? "analytic"
                                                                              : "numeric";
    report.solve_mode = opts.solve_mode == SolveMode::square ? "square" : "oversampled";
    report.selection_strategy =
        opts.strategy == timeselect::Strategy::greedy ? "greedy" : "exhaustive";

    const int p = model.block_count();
    SigmaStore store(p);
    std::vector<BlockReport> block_reports(p);

    for (int j : model.topo_order) {
        const RegressionBlock& block = model.blocks[j];
        BlockReport& br = block_reports[j];
        br.index = j + 1;
        br.label = block.label;
        br.pointwise = block.pointwise_ratio;
        if (block.pointwise_ratio) {
            RatioEstimate est = estimate_ratio(block, jets, store, opts.ratio_guard);
            br.sigma_raw = Vec::Constant(1, est.value);
            br.residual = est.residual;
            br.condition_number = 1.0;
            br.smallest_singular_value = 0.0;
            br.times_used = est.times_used;
            store.set(j, br.sigma_raw);
        } else {
            timeselect::BasisEvaluation ev = timeselect::evaluate_basis(block, jets, store);
            timeselect::TimeSelection sel =
                timeselect::try_select_times(ev.basis, ev.times, opts.strategy,
                                             opts.selection_tol);
            if (!sel.passed)
                throw SelectionError("block '" + block.label +
                                     "': basis functions linearly dependent on grid");
            BlockSolve solved = solve_block(ev, sel, opts.solve_mode, block.label);
            br.sigma_raw = solved.sigma;
            br.residual = solved.residual;
            br.condition_number = sel.condition_number;
            br.smallest_singular_value = sel.smallest_singular_value;
            br.times_used = sel.times;
            store.set(j, solved.sigma);
        }
    }

    // flat sigma, reconciliation, and the slices back into block reports
    Vec sigma(model.pmap.sigma_dim);
    for (int j = 0; j < p; ++j)
        sigma.segment(model.sigma_offsets[j], model.blocks[j].basis_size) = store.block(j);
    Vec reconciled = reconcile_sigma(sigma, model.pmap.redundancy_pairs, opts.redundancy_tol);
    for (int j = 0; j < p; ++j)
        block_reports[j].sigma =
            reconciled.segment(model.sigma_offsets[j], model.blocks[j].basis_size);

    report.blocks = std::move(block_reports);
    report.theta_hat =
        recover_theta(reconciled, model.pmap, model.spec.theta_member, opts.image_tol);

    // initial state at the first jet time, then back to t = 0 if needed
    InitialState init =
        recover_initial_state(model.spec, jets.front(), report.theta_hat, opts.ode_tol);
    report.x0_hat = init.x0;
    report.x0_recoverable = init.recoverable;
    report.t_tilde = init.t_tilde;
    report.backward_integrated = init.backward_integrated;

    std::set<double> distinct;
    for (const auto& br : report.blocks)
        if (!br.pointwise)
            for (double t : br.times_used) distinct.insert(t);
    distinct.insert(report.t_tilde);
    report.distinct_times = static_cast<int>(distinct.size());
    return report;
}

IdentificationReport identify(const Model& model, const jets::SampleTable& samples,
                              IdentifyOptions opts) {
    if (samples.channels() != model.spec.output_dim)
        throw JetError("sample table has " + std::to_string(samples.channels()) +
                       " channels, model expects " + std::to_string(model.spec.output_dim));
    opts.derivative_mode = DerivativeMode::numeric;
    std::vector<OutputJet> jets =
        jets::numeric_jets(samples, model.spec.output_derivative_orders, opts.stencil);
    return identify(model, std::move(jets), opts);
}

}  // namespace odeident::recovery
