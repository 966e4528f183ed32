#pragma once

#include "odeident/ode.hpp"
#include "odeident/types.hpp"

#include <vector>

namespace odeident::jets {

/// Kernel execution policy. The serial path is the reference implementation;
/// the OpenMP path must produce identical results element for element.
enum class Exec { serial, openmp };

/// Uniform half-open grid: n points a + k*(b-a)/n, k = 0..n-1.
std::vector<double> uniform_grid(double a, double b, int n);

/// Output jets at the grid times, from the closed-form jet evaluator of the
/// system applied at interpolated trajectory states.
std::vector<OutputJet> analytic_jets(const SystemSpec& spec, const ode::Trajectory& traj,
                                     const Vec& theta, const std::vector<double>& grid,
                                     Exec exec = Exec::openmp);

/// Sampled output data: times (strictly increasing, uniformly spaced) and one
/// column per output channel.
struct SampleTable {
    std::vector<double> t;
    Mat y;  // rows = samples, cols = channels

    int samples() const { return static_cast<int>(t.size()); }
    int channels() const { return static_cast<int>(y.cols()); }
};

/// Output jets from uniformly sampled data via central finite differences of
/// the given odd stencil width. Jets are produced at interior points only
/// (half the stencil trimmed from both ends).
std::vector<OutputJet> numeric_jets(const SampleTable& samples, const std::vector<int>& orders,
                                    int stencil = 5, Exec exec = Exec::openmp);

/// Finite-difference weights on arbitrary nodes about x0, one column per
/// derivative order 0..max_order (Fornberg's recurrence).
Mat fd_weights(const std::vector<double>& nodes, double x0, int max_order);

}  // namespace odeident::jets
