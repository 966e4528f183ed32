#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <cmath>

using namespace odeident;
using namespace odeident::testing;

namespace {

jets::SampleTable tabulate(double t0, double dt, int n, const std::function<double(double)>& f) {
    jets::SampleTable tab;
    tab.t.resize(n);
    tab.y.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        tab.t[i] = t0 + i * dt;
        tab.y(i, 0) = f(tab.t[i]);
    }
    return tab;
}

const OutputJet* jet_at(const std::vector<OutputJet>& js, double t) {
    for (const auto& j : js)
        if (std::abs(j.t - t) < 1e-12) return &j;
    return nullptr;
}

}  // namespace

TEST_CASE("finite difference weights differentiate polynomials exactly") {
    // width-w stencil must be exact on degrees 0..w-1
    for (int width : {3, 5, 7}) {
        std::vector<double> nodes(width);
        for (int i = 0; i < width; ++i) nodes[i] = (i - width / 2) * 0.1;
        Mat w = jets::fd_weights(nodes, 0.0, 2);
        for (int deg = 0; deg < width; ++deg) {
            double d0 = 0.0, d1 = 0.0, d2 = 0.0;
            for (int i = 0; i < width; ++i) {
                double p = std::pow(nodes[i], deg);
                d0 += w(i, 0) * p;
                d1 += w(i, 1) * p;
                d2 += w(i, 2) * p;
            }
            CHECK(d0 == doctest::Approx(deg == 0 ? 1.0 : 0.0).epsilon(1e-12));
            CHECK(d1 == doctest::Approx(deg == 1 ? 1.0 : 0.0).epsilon(1e-11).scale(10.0));
            CHECK(d2 == doctest::Approx(deg == 2 ? 2.0 : 0.0).epsilon(1e-10).scale(100.0));
        }
    }
}

TEST_CASE("quadratic sample differentiates exactly") {
    auto tab = tabulate(0.0, 1e-3, 2001, [](double t) { return t * t; });
    auto js = jets::numeric_jets(tab, {1}, 5);
    const OutputJet* j = jet_at(js, 1.0);
    REQUIRE(j != nullptr);
    CHECK(j->dy(0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("sine sample matches the closed-form derivative") {
    auto tab = tabulate(0.0, 1e-3, 1001, [](double t) { return std::sin(t); });
    auto js = jets::numeric_jets(tab, {1}, 5);
    const OutputJet* j = jet_at(js, 0.5);
    REQUIRE(j != nullptr);
    CHECK(std::abs(j->dy(0) - std::cos(0.5)) < 1e-6);
}

TEST_CASE("numeric jets trim the stencil half-width at both ends") {
    auto tab = tabulate(0.0, 0.1, 11, [](double t) { return t; });
    auto js = jets::numeric_jets(tab, {1}, 5);
    CHECK(js.size() == 7);
    CHECK(js.front().t == doctest::Approx(0.2));
    CHECK(js.back().t == doctest::Approx(0.8));
}

TEST_CASE("numeric jets validate their input") {
    auto tab3 = tabulate(0.0, 0.1, 3, [](double t) { return t; });
    CHECK_THROWS_WITH_AS(jets::numeric_jets(tab3, {1}, 5), doctest::Contains("too few samples"),
                         JetError);

    auto tab = tabulate(0.0, 0.1, 20, [](double t) { return t; });
    tab.t[7] += 0.03;  // break uniformity
    CHECK_THROWS_WITH_AS(jets::numeric_jets(tab, {1}, 5), doctest::Contains("non-uniform"),
                         JetError);

    auto even = tabulate(0.0, 0.1, 20, [](double t) { return t; });
    CHECK_THROWS_AS(jets::numeric_jets(even, {1}, 4), JetError);
    CHECK_THROWS_AS(jets::numeric_jets(even, {2}, 3), JetError);  // width < 2*order+1
}

TEST_CASE("analytic jets require the evaluator and an in-span grid") {
    SystemSpec s;
    s.state_dim = 1;
    s.param_dim = 0;
    s.output_dim = 1;
    s.output_derivative_orders = {0};
    s.f = [](const Vec& x, const Vec&) { return Vec(-x); };
    s.h = [](const Vec& x, const Vec&) { return x; };
    ode::Trajectory traj = ode::integrate(s, Vec::Ones(1), Vec(), 0.0, 1.0);
    CHECK_THROWS_WITH_AS(jets::analytic_jets(s, traj, Vec(), {0.5}),
                         doctest::Contains("no closed-form jet"), JetError);

    models::ModelBundle lv = models::make_lotka_volterra();
    Vec theta(4), xi(2);
    theta << 1.0, 1.0, 1.0, 1.0;
    xi << 1.0, 2.0;
    ode::Trajectory lvtraj = ode::integrate(lv.spec, xi, theta, 0.0, 1.0);
    CHECK_THROWS_WITH_AS(jets::analytic_jets(lv.spec, lvtraj, theta, {1.5}),
                         doctest::Contains("outside trajectory span"), JetError);
}

TEST_CASE("constant output has vanishing derivatives") {
    SystemSpec s;
    s.state_dim = 2;
    s.param_dim = 0;
    s.output_dim = 1;
    s.output_derivative_orders = {2};
    s.f = [](const Vec& x, const Vec&) {  // rotation: states move, output does not
        Vec dx(2);
        dx << -x(1), x(0);
        return dx;
    };
    s.h = [](const Vec&, const Vec&) { return Vec(Vec::Constant(1, 3.25)); };
    s.analytic_jet = [](const Vec&, const Vec&) {
        OutputJet jet;
        jet.values = {{3.25, 0.0, 0.0}};
        return jet;
    };
    Vec xi(2);
    xi << 1.0, 0.0;
    ode::Trajectory traj = ode::integrate(s, xi, Vec(), 0.0, 1.0);
    auto js = jets::analytic_jets(s, traj, Vec(), jets::uniform_grid(0.0, 1.0, 10));
    for (const auto& j : js) {
        CHECK(j.values[0][1] == 0.0);
        CHECK(j.values[0][2] == 0.0);
    }
}

// the first jet relation of the predator-prey system, written two ways: the
// dynamics route used by the evaluator against the substituted output form
TEST_CASE("predator-prey jet matches the substituted output relation") {
    models::ModelBundle lv = models::make_lotka_volterra();
    Vec theta(4), xi(2);
    theta << 2.0 / 3.0, 4.0 / 3.0, 1.0, 1.0;
    xi << 1.0, 2.0;
    double alpha = theta(0), beta = theta(1), gamma = theta(2), delta = theta(3);
    ode::Trajectory traj = ode::integrate(lv.spec, xi, theta, 0.0, 10.0);
    for (double t : jets::uniform_grid(0.0, 10.0, 25)) {
        OutputJet jet = lv.spec.analytic_jet(traj.state_at(t), theta);
        double y1 = jet.y(0), y2 = jet.y(1);
        double dy1 = (alpha - delta) * y1 - (beta / delta) * y1 * y2 +
                     (gamma * delta / beta) * y1 * y1 / y2;
        double dy2 = (gamma * delta / beta) * y1 - delta * y2;
        CHECK(jet.dy(0) == doctest::Approx(dy1).epsilon(1e-12));
        CHECK(jet.dy(1) == doctest::Approx(dy2).epsilon(1e-12));
    }
}

TEST_CASE("oscillator jet matches a central-difference oracle") {
    models::ModelBundle hh = models::make_henon_heiles();
    Vec a(6), xi(4);
    a << 0.5, 0.5, 0.5, 0.5, 1.0, -1.0 / 3.0;
    xi << 0.1, -0.1, 0.05, 0.05;
    ode::Trajectory traj = ode::integrate(hh.spec, xi, a, 0.0, 10.0);

    jets::SampleTable tab;
    int n = 10001;
    double dt = 1e-3;
    tab.t.resize(n);
    tab.y.resize(n, 4);
    for (int i = 0; i < n; ++i) {
        tab.t[i] = i * dt;
        tab.y.row(i) = traj.state_at(tab.t[i]);
    }
    auto numeric = jets::numeric_jets(tab, {1, 1, 1, 1}, 5);

    for (int i = 500; i < 10000; i += 1000) {
        const OutputJet& nj = numeric[i - 2];  // trimmed two leading samples
        OutputJet aj = hh.spec.analytic_jet(traj.state_at(nj.t), a);
        // dq1/dt = -2 a3 p1
        CHECK(aj.dy(0) == doctest::Approx(-2.0 * a(2) * aj.y(2)).epsilon(1e-12));
        CHECK(std::abs(nj.dy(0) - aj.dy(0)) < 1e-6);
    }
}

TEST_CASE("numeric and analytic first derivatives agree on every model") {
    ModelRegistry reg = models::make_builtin_registry();
    models::register_bundle(reg, make_linparam_test_bundle());
    Rng rng(5);
    for (const std::string name :
         {"lotka_volterra", "reactor", "henon_heiles", "linparam"}) {
        const Model& model = reg.get(name);
        double t_end = default_t_end(name);
        ode::Trajectory traj;
        Draw d = admissible_draw(model, rng, t_end, &traj);

        int n = static_cast<int>(t_end / 1e-3) + 1;
        jets::SampleTable tab;
        tab.t.resize(n);
        tab.y.resize(n, model.spec.output_dim);
        for (int i = 0; i < n; ++i) {
            tab.t[i] = i * 1e-3;
            tab.y.row(i) = model.spec.h(traj.state_at(tab.t[i]), d.theta);
        }
        auto numeric = jets::numeric_jets(tab, model.spec.output_derivative_orders, 5);
        double worst = 0.0;
        for (std::size_t k = 0; k < numeric.size(); k += 97) {
            OutputJet aj = model.spec.analytic_jet(traj.state_at(numeric[k].t), d.theta);
            for (int c = 0; c < model.spec.output_dim; ++c)
                worst = std::max(worst, std::abs(numeric[k].dy(c) - aj.values[c][1]));
        }
        CAPTURE(name);
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("openmp kernels reproduce the serial reference bit for bit") {
    models::ModelBundle lv = models::make_lotka_volterra();
    Vec theta(4), xi(2);
    theta << 2.0 / 3.0, 4.0 / 3.0, 1.0, 1.0;
    xi << 1.0, 2.0;
    ode::Trajectory traj = ode::integrate(lv.spec, xi, theta, 0.0, 10.0);
    auto grid = jets::uniform_grid(0.0, 10.0, 777);

    auto serial = jets::analytic_jets(lv.spec, traj, theta, grid, jets::Exec::serial);
    auto parallel = jets::analytic_jets(lv.spec, traj, theta, grid, jets::Exec::openmp);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t k = 0; k < serial.size(); ++k) {
        CHECK(serial[k].t == parallel[k].t);
        for (int c = 0; c < 2; ++c)
            for (int o = 0; o <= 1; ++o)
                CHECK(serial[k].values[c][o] == parallel[k].values[c][o]);
    }

    auto tab = tabulate(0.0, 1e-3, 4001, [](double t) { return std::sin(3 * t) + t * t; });
    auto ns = jets::numeric_jets(tab, {1}, 5, jets::Exec::serial);
    auto np = jets::numeric_jets(tab, {1}, 5, jets::Exec::openmp);
    REQUIRE(ns.size() == np.size());
    for (std::size_t k = 0; k < ns.size(); ++k) CHECK(ns[k].dy(0) == np[k].dy(0));
}
