#include "odeident/runner.hpp"

#include "odeident/csv.hpp"
#include "odeident/report.hpp"

#include <fstream>
#include <iostream>
#include <random>

namespace odeident::cli {

namespace {

jets::SampleTable simulate_samples(const Model& model, const Vec& x0, const Vec& theta,
                                   const RunConfig::Sim& sim) {
    ode::IntegrationTolerances tol{sim.rtol, sim.atol};
    ode::Trajectory traj = ode::integrate(model.spec, x0, theta, 0.0, sim.t_end, tol);
    int n = static_cast<int>(std::floor(sim.t_end / sim.sample_dt + 1e-9)) + 1;
    jets::SampleTable table;
    table.t.resize(n);
    table.y.resize(n, model.spec.output_dim);
    for (int i = 0; i < n; ++i) {
        double t = std::min(i * sim.sample_dt, sim.t_end);
        table.t[i] = t;
        Vec y = model.spec.h(traj.state_at(t), theta);
        table.y.row(i) = y;
    }
    return table;
}

void add_noise(jets::SampleTable& table, const RunConfig::Noise& noise) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int c = 0; c < table.channels(); ++c) {
        double sigma = noise.sigma.size() == 1 ? noise.sigma[0]
                                               : noise.sigma.at(static_cast<std::size_t>(c));
        if (sigma <= 0) continue;
        for (int i = 0; i < table.samples(); ++i) table.y(i, c) += sigma * gauss(rng);
    }
}

Vec extend_linparam_state(const RunConfig& cfg, const Model& model, Vec x0) {
    // the time coordinate rides along as a known state starting at 0
    if (cfg.model == "linparam" && x0.size() == model.spec.state_dim - 1) {
        Vec full(model.spec.state_dim);
        full.head(x0.size()) = x0;
        full(x0.size()) = 0.0;
        return full;
    }
    return x0;
}

}  // namespace

RunResult run_config(const RunConfig& config) {
    ModelRegistry registry = models::make_builtin_registry();
    if (config.linparam) models::register_bundle(registry, models::make_linparam(*config.linparam));
    const Model& model = registry.get(config.model);

    recovery::IdentifyOptions opts = config.identify_options();

    std::optional<Vec> theta_true = config.theta_true;
    std::optional<Vec> x0_true;

    IdentificationReport report;
    if (config.sim) {
        if (!theta_true || !config.x0_true)
            throw ConfigError("[sim] requires [theta] and [x0]");
        if (theta_true->size() != model.spec.param_dim)
            throw ConfigError("theta.values has " + std::to_string(theta_true->size()) +
                              " entries, model expects " + std::to_string(model.spec.param_dim));
        Vec x0 = extend_linparam_state(config, model, *config.x0_true);
        if (x0.size() != model.spec.state_dim)
            throw ConfigError("x0.values has " + std::to_string(config.x0_true->size()) +
                              " entries, model expects " + std::to_string(model.spec.state_dim));
        x0_true = x0;

        if (!config.window.b) opts.window_b = config.sim->t_end;

        if (config.derivatives.mode == "analytic") {
            ode::IntegrationTolerances tol{config.sim->rtol, config.sim->atol};
            ode::Trajectory traj =
                ode::integrate(model.spec, x0, *theta_true, 0.0, config.sim->t_end, tol);
            double a = opts.window_a;
            double b = opts.window_b > a ? opts.window_b : config.sim->t_end;
            std::vector<double> grid = jets::uniform_grid(a, b, config.window.grid_n);
            std::vector<OutputJet> jet_list =
                jets::analytic_jets(model.spec, traj, *theta_true, grid);
            opts.derivative_mode = recovery::DerivativeMode::analytic;
            report = recovery::identify(model, std::move(jet_list), opts);
        } else {
            jets::SampleTable samples = simulate_samples(model, x0, *theta_true, *config.sim);
            if (config.noise) add_noise(samples, *config.noise);
            report = recovery::identify(model, samples, opts);
        }
    } else {
        jets::SampleTable samples = ingest_csv(config.data->csv);
        report = recovery::identify(model, samples, opts);
        if (config.x0_true) x0_true = extend_linparam_state(config, model, *config.x0_true);
    }

    RunResult result;
    result.report = std::move(report);
    result.report_path = config.output_path;
    result.report_json =
        report_to_json(result.report, config, theta_true, x0_true, utc_timestamp());
    return result;
}

int run_main(const std::string& config_path) {
    try {
        RunConfig config = parse_config(config_path);
        RunResult result = run_config(config);
        std::ofstream out(result.report_path);
        if (!out) throw Error("io", "cannot write report to '" + result.report_path + "'");
        out << result.report_json;
        out.close();
        std::cout << "{\"status\":\"ok\",\"report\":\"" << result.report_path << "\"}"
                  << std::endl;
        return 0;
    } catch (const Error& e) {
        std::cout << error_to_json(e.kind(), e.what()) << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cout << error_to_json("internal", e.what()) << std::endl;
        return 1;
    }
}

int validate_main(const std::string& config_path) {
    try {
        parse_config(config_path);
        std::cout << "{\"status\":\"ok\"}" << std::endl;
        return 0;
    } catch (const Error& e) {
        std::cout << error_to_json(e.kind(), e.what()) << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cout << error_to_json("internal", e.what()) << std::endl;
        return 1;
    }
}

int list_models_main() {
    ModelRegistry registry = models::make_builtin_registry();
    for (const auto& name : registry.names()) std::cout << name << "\n";
    std::cout << "linparam (configured per run via the [linparam] section)" << std::endl;
    return 0;
}

}  // namespace odeident::cli
