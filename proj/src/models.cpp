#include "odeident/models.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace odeident::models {

namespace {

constexpr double kEquilibriumRadius = 1e-9;

double horner(const Vec& coeffs, double x) {
    double acc = 0.0;
    for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i) acc = acc * x + coeffs(i);
    return acc;
}

}  // namespace

ModelBundle make_lotka_volterra() {
    ModelBundle b;
    b.name = "lotka_volterra";

    SystemSpec s;
    s.state_dim = 2;
    s.param_dim = 4;
    s.output_dim = 2;
    s.output_derivative_orders = {1, 1};
    s.f = [](const Vec& x, const Vec& th) {
        double alpha = th(0), beta = th(1), gamma = th(2), delta = th(3);
        Vec dx(2);
        dx(0) = alpha * x(0) - beta * x(0) * x(1);
        dx(1) = gamma * x(0) * x(1) - delta * x(1);
        return dx;
    };
    s.h = [](const Vec& x, const Vec& th) {
        Vec y(2);
        y(0) = th(1) * x(0) * x(1);
        y(1) = th(3) * x(1);
        return y;
    };
    s.analytic_jet = [f = s.f](const Vec& x, const Vec& th) {
        double beta = th(1), delta = th(3);
        Vec dx = f(x, th);
        OutputJet jet;
        jet.values = {{beta * x(0) * x(1), beta * (dx(0) * x(1) + x(0) * dx(1))},
                      {delta * x(1), delta * dx(1)}};
        return jet;
    };
    s.omega_member = [](const Vec& x, const Vec& th) {
        if (!(x(0) > 0.0 && x(1) > 0.0)) return false;
        double eq1 = th(3) / th(2);  // delta / gamma
        double eq2 = th(0) / th(1);  // alpha / beta
        return std::hypot(x(0) - eq1, x(1) - eq2) > kEquilibriumRadius;
    };
    s.theta_member = [](const Vec& th) {
        return th(0) > 0 && th(1) > 0 && th(2) > 0 && th(3) > 0;
    };
    s.inverse_output_map = [](const OutputJet& jet, const Vec& th) {
        double beta = th(1), delta = th(3);
        double y1 = jet.y(0), y2 = jet.y(1);
        if (!(y2 > 0.0))
            throw SolveError("predator output must be positive to invert the observation");
        InverseOutputResult r;
        r.state = Vec(2);
        r.state(1) = y2 / delta;
        r.state(0) = delta * y1 / (beta * y2);
        r.recoverable = {true, true};
        return r;
    };
    b.spec = std::move(s);

    RegressionBlock b1;
    b1.label = "y1_rate";
    b1.basis_size = 3;
    b1.target_simple = [](const OutputJet& jet) { return jet.dy(0); };
    b1.basis = {[](const OutputJet& j) { return j.y(0); },
                [](const OutputJet& j) { return j.y(0) * j.y(1); },
                [](const OutputJet& j) { return j.y(0) * j.y(0) / j.y(1); }};

    RegressionBlock b2;
    b2.label = "y2_rate";
    b2.basis_size = 2;
    b2.target_simple = [](const OutputJet& jet) { return jet.dy(1); };
    b2.basis = {[](const OutputJet& j) { return j.y(0); },
                [](const OutputJet& j) { return j.y(1); }};
    b.blocks = {std::move(b1), std::move(b2)};

    ParameterMap pm;
    pm.sigma_dim = 5;
    pm.forward = [](const Vec& th) {
        double alpha = th(0), beta = th(1), gamma = th(2), delta = th(3);
        Vec sigma(5);
        sigma << alpha - delta, -beta / delta, gamma * delta / beta, gamma * delta / beta, -delta;
        return sigma;
    };
    pm.inverse = [](const Vec& sigma) {
        double delta = -sigma(4);
        double alpha = sigma(0) + delta;
        double beta = -delta * sigma(1);
        double gamma = beta * sigma(2) / delta;
        Vec th(4);
        th << alpha, beta, gamma, delta;
        return th;
    };
    pm.redundancy_pairs = {{2, 3}};
    b.pmap = std::move(pm);
    return b;
}

ModelBundle make_reactor() {
    ModelBundle b;
    b.name = "reactor";

    SystemSpec s;
    s.state_dim = 3;  // (c_A, c_B, T)
    s.param_dim = 3;  // (k10, h1, E)
    s.output_dim = 2;
    s.output_derivative_orders = {1, 1};
    s.f = [](const Vec& x, const Vec& th) {
        double rate = th(0) * std::exp(-th(2) / x(2)) * x(0);
        Vec dx(3);
        dx << -rate, rate, -th(1) * rate;
        return dx;
    };
    s.h = [](const Vec& x, const Vec&) {
        Vec y(2);
        y << x(0), x(2);
        return y;
    };
    s.analytic_jet = [](const Vec& x, const Vec& th) {
        double rate = th(0) * std::exp(-th(2) / x(2)) * x(0);
        OutputJet jet;
        jet.values = {{x(0), -rate}, {x(2), -th(1) * rate}};
        return jet;
    };
    s.omega_member = [](const Vec& x, const Vec&) {
        return x(0) > 0.0 && x(1) >= 0.0 && x(2) > 0.0;
    };
    s.theta_member = [](const Vec& th) { return th(0) > 0 && th(1) > 0 && th(2) > 0; };
    s.inverse_output_map = [](const OutputJet& jet, const Vec&) {
        InverseOutputResult r;
        r.state = Vec(3);
        r.state << jet.y(0), 0.0, jet.y(1);  // c_B is invisible to the outputs
        r.recoverable = {true, false, true};
        return r;
    };
    b.spec = std::move(s);

    RegressionBlock b1;
    b1.label = "arrhenius_log";
    b1.basis_size = 2;
    // log(-dy1) - log(y1); non-finite outside the decay regime, which the
    // evaluation layer reports with the offending time
    b1.target_simple = [](const OutputJet& jet) {
        return std::log(-jet.dy(0)) - std::log(jet.y(0));
    };
    b1.basis = {[](const OutputJet&) { return 1.0; },
                [](const OutputJet& j) { return 1.0 / j.y(1); }};

    RegressionBlock b2;
    b2.label = "heat_release_ratio";
    b2.basis_size = 1;
    b2.pointwise_ratio = true;
    b2.target_simple = [](const OutputJet& jet) { return jet.dy(1); };
    b2.basis = {[](const OutputJet& j) { return j.dy(0); }};
    b.blocks = {std::move(b1), std::move(b2)};

    ParameterMap pm;
    pm.sigma_dim = 3;
    pm.forward = [](const Vec& th) {
        Vec sigma(3);
        sigma << std::log(th(0)), -th(2), th(1);
        return sigma;
    };
    pm.inverse = [](const Vec& sigma) {
        Vec th(3);
        th << std::exp(sigma(0)), sigma(2), -sigma(1);
        return th;
    };
    b.pmap = std::move(pm);
    return b;
}

ModelBundle make_henon_heiles() {
    ModelBundle b;
    b.name = "henon_heiles";

    SystemSpec s;
    s.state_dim = 4;  // (q1, q2, p1, p2)
    s.param_dim = 6;
    s.output_dim = 4;
    s.output_derivative_orders = {1, 1, 1, 1};
    s.f = [](const Vec& x, const Vec& a) {
        Vec dx(4);
        dx(0) = -2.0 * a(2) * x(2);
        dx(1) = -2.0 * a(3) * x(3);
        dx(2) = 2.0 * a(0) * x(0) + 2.0 * a(4) * x(0) * x(1);
        dx(3) = 2.0 * a(1) * x(1) + a(4) * x(0) * x(0) + 3.0 * a(5) * x(1) * x(1);
        return dx;
    };
    s.h = [](const Vec& x, const Vec&) { return x; };
    s.analytic_jet = [f = s.f](const Vec& x, const Vec& a) {
        Vec dx = f(x, a);
        OutputJet jet;
        jet.values.resize(4);
        for (int i = 0; i < 4; ++i) jet.values[i] = {x(i), dx(i)};
        return jet;
    };
    s.omega_member = [](const Vec& x, const Vec& a) {
        // the four rest points of the flow, which depend on the coefficients
        std::vector<std::pair<double, double>> eq = {{0.0, 0.0},
                                                     {0.0, -2.0 * a(1) / (3.0 * a(5))}};
        double q2s = -a(0) / a(4);
        double q1sq = (2.0 * a(0) * a(1) * a(4) - 3.0 * a(5) * a(0) * a(0)) /
                      (a(4) * a(4) * a(4));
        if (q1sq > 0.0) {
            double q1s = std::sqrt(q1sq);
            eq.push_back({q1s, q2s});
            eq.push_back({-q1s, q2s});
        }
        for (const auto& [q1, q2] : eq) {
            double d = std::sqrt((x(0) - q1) * (x(0) - q1) + (x(1) - q2) * (x(1) - q2) +
                                 x(2) * x(2) + x(3) * x(3));
            if (d <= kEquilibriumRadius) return false;
        }
        return true;
    };
    s.theta_member = [](const Vec& a) {
        for (int i = 0; i < 6; ++i)
            if (a(i) == 0.0) return false;
        return true;
    };
    s.inverse_output_map = [](const OutputJet& jet, const Vec&) {
        InverseOutputResult r;
        r.state = Vec(4);
        for (int i = 0; i < 4; ++i) r.state(i) = jet.y(i);
        r.recoverable = {true, true, true, true};
        return r;
    };
    s.data_guard = [](const std::vector<OutputJet>& jets) {
        // solutions with a frozen second coordinate carry no information
        // about the staged block; reject them up front
        double mean = 0.0;
        for (const auto& j : jets) mean += j.y(1);
        mean /= static_cast<double>(jets.size());
        double var = 0.0;
        for (const auto& j : jets) var += (j.y(1) - mean) * (j.y(1) - mean);
        var /= static_cast<double>(jets.size());
        if (var <= 1e-12)
            throw SelectionError("second output coordinate is constant over the data "
                                 "(sample variance " +
                                 std::to_string(var) + "); solution is inadmissible");
    };
    b.spec = std::move(s);

    RegressionBlock r1;
    r1.label = "q1_rate_ratio";
    r1.basis_size = 1;
    r1.pointwise_ratio = true;
    r1.target_simple = [](const OutputJet& jet) { return jet.dy(0); };
    r1.basis = {[](const OutputJet& j) { return j.y(2); }};

    RegressionBlock r2;
    r2.label = "q2_rate_ratio";
    r2.basis_size = 1;
    r2.pointwise_ratio = true;
    r2.target_simple = [](const OutputJet& jet) { return jet.dy(1); };
    r2.basis = {[](const OutputJet& j) { return j.y(3); }};

    RegressionBlock r3;
    r3.label = "p1_rate";
    r3.basis_size = 2;
    r3.target_simple = [](const OutputJet& jet) { return jet.dy(2); };
    r3.basis = {[](const OutputJet& j) { return j.y(0); },
                [](const OutputJet& j) { return j.y(0) * j.y(1); }};

    RegressionBlock r4;
    r4.label = "p2_rate_staged";
    r4.basis_size = 2;
    r4.depends_on = {{2, 1}};  // the y1*y2 coefficient solved in block 3
    r4.target = [](const OutputJet& jet, const SigmaStore& store) {
        return jet.dy(3) - 0.5 * store.at(2, 1) * jet.y(0) * jet.y(0);
    };
    r4.basis = {[](const OutputJet& j) { return j.y(1); },
                [](const OutputJet& j) { return j.y(1) * j.y(1); }};
    b.blocks = {std::move(r1), std::move(r2), std::move(r3), std::move(r4)};

    ParameterMap pm;
    pm.sigma_dim = 6;
    pm.forward = [](const Vec& a) {
        Vec sigma(6);
        sigma << -2.0 * a(2), -2.0 * a(3), 2.0 * a(0), 2.0 * a(4), 2.0 * a(1), 3.0 * a(5);
        return sigma;
    };
    pm.inverse = [](const Vec& sigma) {
        Vec a(6);
        a << sigma(2) / 2.0, sigma(4) / 2.0, -sigma(0) / 2.0, -sigma(1) / 2.0, sigma(3) / 2.0,
            sigma(5) / 3.0;
        return a;
    };
    b.pmap = std::move(pm);
    return b;
}

double ControlDescriptor::eval(double t) const {
    switch (kind) {
        case Kind::polynomial:
            return horner(coeffs, t);
        case Kind::sinusoid:
            return coeffs(0) * std::sin(coeffs(1) * t + coeffs(2)) + coeffs(3);
        case Kind::exponential:
            return coeffs(0) * std::exp(coeffs(1) * t) + coeffs(2);
    }
    return 0.0;
}

ModelBundle make_linparam(const LinparamOptions& options) {
    const Mat A = options.A;
    const int rows = static_cast<int>(A.rows());
    const int cols = static_cast<int>(A.cols());
    if (rows < 1 || cols < 1) throw ConfigError("linparam matrix A must be non-empty");
    const int s = rows - 1;
    const int dim = cols;
    if (s < dim - 1)
        throw Error("assumption", "linparam needs monomial degree s >= b-1 (got s = " +
                                      std::to_string(s) + ", b = " + std::to_string(dim) + ")");

    Eigen::ColPivHouseholderQR<Mat> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < dim)
        throw NotIdentifiableError(
            "linparam coefficient matrix A is rank deficient (rank " +
            std::to_string(qr.rank()) + " < " + std::to_string(dim) +
            "); distinct parameter vectors produce identical dynamics");

    // pick the b most independent rows of A for the inversion
    Eigen::ColPivHouseholderQR<Mat> qr_rows(A.transpose());
    qr_rows.setThreshold(1e-10);
    auto perm = qr_rows.colsPermutation().indices();
    std::vector<int> pivot_rows(dim);
    for (int i = 0; i < dim; ++i) pivot_rows[i] = perm(i);
    Mat A_tilde(dim, dim);
    for (int i = 0; i < dim; ++i) A_tilde.row(i) = A.row(pivot_rows[i]);
    Eigen::PartialPivLU<Mat> lu(A_tilde);

    ModelBundle b;
    b.name = "linparam";

    const Vec n_coeffs = options.n_coeffs;
    const std::vector<Vec> rho = options.rho;
    const ControlDescriptor u = options.u;
    const double x_max = options.x_max;

    auto forcing = [rho, u](double x, double t) {
        double acc = 0.0;
        if (!rho.empty()) {
            double uc = u.eval(t);
            double upow = 1.0;
            for (const Vec& r : rho) {
                acc += horner(r, x) * upow;
                upow *= uc;
            }
        }
        return acc;
    };

    SystemSpec spec;
    spec.state_dim = 2;  // (x, t): time rides along so the system stays autonomous
    spec.param_dim = dim;
    spec.output_dim = 1;
    spec.output_derivative_orders = {1};
    spec.f = [A, n_coeffs, forcing, s](const Vec& x, const Vec& th) {
        Vec monomials(s + 1);
        double p = 1.0;
        for (int i = 0; i <= s; ++i) {
            monomials(i) = p;
            p *= x(0);
        }
        double drive = monomials.dot(A * th) + forcing(x(0), x(1));
        Vec dx(2);
        dx << drive / horner(n_coeffs, x(0)), 1.0;
        return dx;
    };
    spec.h = [](const Vec& x, const Vec&) { return Vec::Constant(1, x(0)); };
    spec.analytic_jet = [f = spec.f](const Vec& x, const Vec& th) {
        Vec dx = f(x, th);
        OutputJet jet;
        jet.values = {{x(0), dx(0)}};
        return jet;
    };
    spec.omega_member = [n_coeffs, x_max](const Vec& x, const Vec&) {
        return horner(n_coeffs, x(0)) > 0.0 && std::abs(x(0)) <= x_max;
    };
    spec.theta_member = [](const Vec&) { return true; };
    spec.inverse_output_map = [](const OutputJet& jet, const Vec&) {
        InverseOutputResult r;
        r.state = Vec(2);
        r.state << jet.y(0), jet.t;
        r.recoverable = {true, true};
        return r;
    };
    b.spec = std::move(spec);

    RegressionBlock blk;
    blk.label = "monomial_balance";
    blk.basis_size = s + 1;
    blk.target_simple = [n_coeffs, forcing](const OutputJet& jet) {
        return horner(n_coeffs, jet.y(0)) * jet.dy(0) - forcing(jet.y(0), jet.t);
    };
    for (int i = 0; i <= s; ++i)
        blk.basis.push_back([i](const OutputJet& j) { return std::pow(j.y(0), i); });
    b.blocks = {std::move(blk)};

    ParameterMap pm;
    pm.sigma_dim = s + 1;
    pm.forward = [A](const Vec& th) { return Vec(A * th); };
    pm.inverse = [lu, pivot_rows, dim](const Vec& sigma) {
        Vec sub(dim);
        for (int i = 0; i < dim; ++i) sub(i) = sigma(pivot_rows[i]);
        return Vec(lu.solve(sub));
    };
    b.pmap = std::move(pm);
    return b;
}

const Model& register_bundle(ModelRegistry& registry, ModelBundle bundle) {
    return registry.register_model(bundle.name, std::move(bundle.spec), std::move(bundle.blocks),
                                   std::move(bundle.pmap));
}

ModelRegistry make_builtin_registry() {
    ModelRegistry reg;
    register_bundle(reg, make_lotka_volterra());
    register_bundle(reg, make_reactor());
    register_bundle(reg, make_henon_heiles());
    return reg;
}

}  // namespace odeident::models
