#pragma once

#include "odeident/jets.hpp"
#include "odeident/types.hpp"

#include <vector>

namespace odeident::timeselect {

using jets::Exec;

enum class Strategy { greedy, exhaustive };

/// Basis matrix (rows = jets, cols = basis functions) and target column of
/// one regression block evaluated along the jet list.
struct BasisEvaluation {
    Mat basis;
    Vec target;
    std::vector<double> times;
};

BasisEvaluation evaluate_basis(const RegressionBlock& block, const std::vector<OutputJet>& jets,
                               const SigmaStore& prior_sigma, Exec exec = Exec::openmp);

/// Rows picked to make the square basis submatrix full rank and well
/// conditioned, with its singular-value diagnostics.
struct TimeSelection {
    std::vector<int> rows;
    std::vector<double> times;
    double smallest_singular_value = 0.0;
    double condition_number = 0.0;
    double full_sigma_max = 0.0;  // largest singular value of the full basis matrix
    bool passed = false;
};

/// Selects q = basis.cols() rows. Greedy picks rows by pivoted
/// orthogonalization (largest orthogonal residual first, lowest index on
/// ties); exhaustive maximizes |det| over all row subsets, lexicographic on
/// ties. Never throws on rank failure: check `passed`.
TimeSelection try_select_times(const Mat& basis, const std::vector<double>& times,
                               Strategy strategy, double tol = 1e-8);

/// As try_select_times, but failure raises SelectionError
/// ("linearly dependent on grid").
TimeSelection select_times(const Mat& basis, const std::vector<double>& times, Strategy strategy,
                           double tol = 1e-8);

struct IndependenceReport {
    int rank = 0;
    Vec singular_values;
};

/// Numerical rank of the basis matrix: singular values above tol * sigma_max.
IndependenceReport independence_report(const Mat& basis, double tol = 1e-8);

}  // namespace odeident::timeselect
