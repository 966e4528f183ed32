#include "odeident/timeselect.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>

namespace odeident::timeselect {

BasisEvaluation evaluate_basis(const RegressionBlock& block, const std::vector<OutputJet>& jets,
                               const SigmaStore& prior_sigma, Exec exec) {
    if (jets.empty()) throw EvaluationError(0.0, "block '" + block.label + "': no jets supplied");
    for (const auto& [dep_block, dep_comp] : block.depends_on)
        if (!prior_sigma.has(dep_block))
            throw SolveError("block '" + block.label + "' needs sigma of block " +
                             std::to_string(dep_block + 1) + " which is not solved yet");

    const int n = static_cast<int>(jets.size());
    const int q = block.basis_size;
    BasisEvaluation ev;
    ev.basis.resize(n, q);
    ev.target.resize(n);
    ev.times.resize(n);

    auto fill_row = [&](int k) {
        ev.times[k] = jets[k].t;
        for (int l = 0; l < q; ++l) ev.basis(k, l) = block.basis[l](jets[k]);
        ev.target(k) = block.eval_target(jets[k], prior_sigma);
    };

    if (exec == Exec::openmp) {
        // evaluator exceptions must not unwind across the parallel region
        std::string deferred;
#pragma omp parallel for schedule(static)
        for (int k = 0; k < n; ++k) {
            try {
                fill_row(k);
            } catch (const std::exception& e) {
#pragma omp critical
                if (deferred.empty()) deferred = e.what();
                ev.basis.row(k).setConstant(std::numeric_limits<double>::quiet_NaN());
                ev.target(k) = std::numeric_limits<double>::quiet_NaN();
            }
        }
        if (!deferred.empty()) throw SolveError("block '" + block.label + "': " + deferred);
    } else {
        for (int k = 0; k < n; ++k) fill_row(k);
    }

    for (int k = 0; k < n; ++k) {
        if (!std::isfinite(ev.target(k)))
            throw EvaluationError(ev.times[k], "block '" + block.label +
                                                   "': target non-finite at t = " +
                                                   std::to_string(ev.times[k]));
        for (int l = 0; l < q; ++l)
            if (!std::isfinite(ev.basis(k, l)))
                throw EvaluationError(ev.times[k], "block '" + block.label + "': basis " +
                                                       std::to_string(l + 1) +
                                                       " non-finite at t = " +
                                                       std::to_string(ev.times[k]));
    }
    return ev;
}

namespace {

std::vector<int> greedy_rows(const Mat& basis, int q) {
    const int n = static_cast<int>(basis.rows());
    Mat residual = basis;  // row i: component orthogonal to the span of chosen rows
    std::vector<bool> taken(n, false);
    std::vector<int> rows;
    rows.reserve(q);
    for (int step = 0; step < q; ++step) {
        int best = -1;
        double best_norm = 0.0;
        for (int i = 0; i < n; ++i) {
            if (taken[i]) continue;
            double nrm = residual.row(i).norm();
            if (nrm > best_norm) {  // strict: ties keep the lowest index
                best_norm = nrm;
                best = i;
            }
        }
        if (best < 0 || best_norm == 0.0) return {};  // rows span fewer than q directions
        taken[best] = true;
        rows.push_back(best);
        Eigen::RowVectorXd u = residual.row(best) / best_norm;
        for (int i = 0; i < n; ++i)
            if (!taken[i]) residual.row(i) -= (residual.row(i).dot(u)) * u;
    }
    return rows;
}

// Lexicographic combination enumeration; returns false when exhausted.
bool next_combination(std::vector<int>& idx, int n) {
    const int q = static_cast<int>(idx.size());
    for (int i = q - 1; i >= 0; --i) {
        if (idx[i] < n - (q - i)) {
            ++idx[i];
            for (int j = i + 1; j < q; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

std::vector<int> exhaustive_rows(const Mat& basis, int q) {
    const int n = static_cast<int>(basis.rows());
    double combos = 1.0;
    for (int i = 0; i < q; ++i) combos = combos * (n - i) / (i + 1);
    if (combos > 2e6)
        throw SelectionError("exhaustive selection over " + std::to_string(n) + " choose " +
                             std::to_string(q) + " subsets is infeasible; use greedy");

    std::vector<int> idx(q);
    for (int i = 0; i < q; ++i) idx[i] = i;
    std::vector<int> best = idx;
    double best_det = -1.0;
    Mat sub(q, q);
    do {
        for (int i = 0; i < q; ++i) sub.row(i) = basis.row(idx[i]);
        double det = std::abs(sub.determinant());
        if (det > best_det) {  // strict: lexicographic enumeration breaks ties
            best_det = det;
            best = idx;
        }
    } while (next_combination(idx, n));
    return best;
}

}  // namespace

TimeSelection try_select_times(const Mat& basis, const std::vector<double>& times,
                               Strategy strategy, double tol) {
    const int q = static_cast<int>(basis.cols());
    const int n = static_cast<int>(basis.rows());
    if (n != static_cast<int>(times.size()))
        throw SelectionError("basis rows and time list differ in length");
    if (n < q)
        throw SelectionError("grid has " + std::to_string(n) + " rows, need at least " +
                             std::to_string(q));

    TimeSelection sel;
    {
        Eigen::JacobiSVD<Mat> svd(basis);
        sel.full_sigma_max = svd.singularValues()(0);
    }

    std::vector<int> rows =
        strategy == Strategy::greedy ? greedy_rows(basis, q) : exhaustive_rows(basis, q);
    if (rows.empty()) {
        sel.passed = false;
        return sel;
    }

    Mat sub(q, q);
    for (int i = 0; i < q; ++i) sub.row(i) = basis.row(rows[i]);
    Eigen::JacobiSVD<Mat> svd(sub);
    const Vec& sv = svd.singularValues();
    sel.rows = rows;
    sel.times.reserve(q);
    for (int r : rows) sel.times.push_back(times[r]);
    sel.smallest_singular_value = sv(q - 1);
    sel.condition_number =
        sv(q - 1) > 0 ? sv(0) / sv(q - 1) : std::numeric_limits<double>::infinity();
    sel.passed = sel.smallest_singular_value > tol * sel.full_sigma_max;
    return sel;
}

TimeSelection select_times(const Mat& basis, const std::vector<double>& times, Strategy strategy,
                           double tol) {
    TimeSelection sel = try_select_times(basis, times, strategy, tol);
    if (!sel.passed)
        throw SelectionError(
            "basis functions linearly dependent on grid (no time subset reaches the rank "
            "tolerance); the functions may be dependent or the grid too coarse");
    return sel;
}

IndependenceReport independence_report(const Mat& basis, double tol) {
    for (int i = 0; i < basis.rows(); ++i)
        for (int j = 0; j < basis.cols(); ++j)
            if (!std::isfinite(basis(i, j)))
                throw SelectionError("independence report requires a finite matrix");
    Eigen::JacobiSVD<Mat> svd(basis);
    IndependenceReport rep;
    rep.singular_values = svd.singularValues();
    double smax = rep.singular_values.size() ? rep.singular_values(0) : 0.0;
    for (int i = 0; i < rep.singular_values.size(); ++i)
        if (rep.singular_values(i) > tol * smax) ++rep.rank;
    return rep;
}

}  // namespace odeident::timeselect
