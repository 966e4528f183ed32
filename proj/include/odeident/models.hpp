#pragma once

#include "odeident/registry.hpp"
#include "odeident/types.hpp"

#include <string>
#include <vector>

namespace odeident::models {

/// Everything register_model needs for one system.
struct ModelBundle {
    std::string name;
    SystemSpec spec;
    std::vector<RegressionBlock> blocks;
    ParameterMap pmap;
};

/// Predator-prey system observed through the predation and predator-death
/// terms. theta = (alpha, beta, gamma, delta).
ModelBundle make_lotka_volterra();

/// Non-isothermal reactor observed through concentration and temperature.
/// theta = (k10, h1, E). The temperature relation dy2 = h1 * dy1 follows from
/// the dynamics; the concentration of the product species is invisible to the
/// outputs and is reported as unrecoverable.
ModelBundle make_reactor();

/// Separable-Hamiltonian oscillator with full state observation.
/// theta = (a1..a6), all nonzero.
ModelBundle make_henon_heiles();

/// Analytic scalar control for the linearly parameterized family.
struct ControlDescriptor {
    enum class Kind { polynomial, sinusoid, exponential };
    Kind kind = Kind::polynomial;
    // polynomial: c0, c1, ... (empty = zero control)
    // sinusoid:   amp, omega, phase, offset
    // exponential: amp, lambda, offset
    Vec coeffs;

    double eval(double t) const;
};

struct LinparamOptions {
    Mat A;        // (s+1) x b monomial coefficients of the parameter basis
    Vec n_coeffs = Vec::Ones(1);
    std::vector<Vec> rho;  // control multipliers rho_0, rho_1, ...; may be empty
    ControlDescriptor u;
    double x_max = 1e6;  // admissibility bound on |x|
};

/// Linearly parameterized scalar rational system; time rides along as a known
/// second state so the control stays evaluable in autonomous form.
/// Construction fails when A is column-rank deficient (the family is then not
/// identifiable) or the degree condition s >= b-1 is violated.
ModelBundle make_linparam(const LinparamOptions& options);

const Model& register_bundle(ModelRegistry& registry, ModelBundle bundle);

/// Registry preloaded with the three fixed systems.
ModelRegistry make_builtin_registry();

}  // namespace odeident::models
