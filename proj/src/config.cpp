#include "odeident/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace odeident::cli {

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t");
    auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        throw ConfigError(key + ": cannot parse '" + value + "' as a number");
    return v;
}

int to_int(const std::string& key, const std::string& value) {
    double v = to_double(key, value);
    if (v != std::floor(v)) throw ConfigError(key + ": expected an integer, got '" + value + "'");
    return static_cast<int>(v);
}

Vec to_vec(const std::string& key, const std::string& value) {
    std::vector<double> vals;
    std::istringstream in(value);
    std::string field;
    while (std::getline(in, field, ',')) {
        field = trim(field);
        if (field.empty()) throw ConfigError(key + ": empty entry in list '" + value + "'");
        vals.push_back(to_double(key, field));
    }
    if (vals.empty()) throw ConfigError(key + ": empty list");
    Vec out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) out(i) = vals[i];
    return out;
}

Mat to_mat(const std::string& key, const std::string& value) {
    std::vector<Vec> rows;
    std::istringstream in(value);
    std::string row;
    while (std::getline(in, row, ';')) {
        row = trim(row);
        if (row.empty()) continue;
        rows.push_back(to_vec(key, row));
    }
    if (rows.empty()) throw ConfigError(key + ": empty matrix");
    Mat out(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != out.cols())
            throw ConfigError(key + ": rows of different lengths");
        out.row(i) = rows[i];
    }
    return out;
}

models::ControlDescriptor to_control(const std::string& key, const std::string& value) {
    auto colon = value.find(':');
    std::string kind = colon == std::string::npos ? value : trim(value.substr(0, colon));
    std::string rest = colon == std::string::npos ? "" : trim(value.substr(colon + 1));
    models::ControlDescriptor u;
    if (kind == "poly") {
        u.kind = models::ControlDescriptor::Kind::polynomial;
        u.coeffs = rest.empty() ? Vec::Zero(1) : to_vec(key, rest);
    } else if (kind == "sin") {
        u.kind = models::ControlDescriptor::Kind::sinusoid;
        u.coeffs = to_vec(key, rest);
        if (u.coeffs.size() != 4)
            throw ConfigError(key + ": sin control needs amp,omega,phase,offset");
    } else if (kind == "exp") {
        u.kind = models::ControlDescriptor::Kind::exponential;
        u.coeffs = to_vec(key, rest);
        if (u.coeffs.size() != 3)
            throw ConfigError(key + ": exp control needs amp,lambda,offset");
    } else {
        throw ConfigError(key + ": unknown control kind '" + kind + "' (poly | sin | exp)");
    }
    return u;
}

struct RawConfig {
    // section -> key -> value; top-level keys live under section ""
    std::map<std::string, std::map<std::string, std::string>> values;
    std::set<std::string> consumed;

    bool has_section(const std::string& s) const { return values.count(s) > 0; }

    std::optional<std::string> find(const std::string& section, const std::string& key) {
        auto sec = values.find(section);
        if (sec == values.end()) return std::nullopt;
        auto it = sec->second.find(key);
        if (it == sec->second.end()) return std::nullopt;
        consumed.insert(section + "." + key);
        return it->second;
    }
};

RawConfig parse_raw(const std::string& text, const std::string& origin) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            raw.values[section];  // a present-but-empty section still counts
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!raw.values[section].emplace(key, value).second)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "'");
    }
    return raw;
}

}  // namespace

recovery::IdentifyOptions RunConfig::identify_options() const {
    recovery::IdentifyOptions opts;
    opts.window_a = window.a.value_or(0.0);
    if (window.b) opts.window_b = *window.b;
    opts.strategy = selection.strategy == "exhaustive" ? timeselect::Strategy::exhaustive
                                                       : timeselect::Strategy::greedy;
    opts.selection_tol = selection.tol;
    opts.solve_mode = selection.mode == "square" ? recovery::SolveMode::square
                                                 : recovery::SolveMode::oversampled;
    opts.stencil = derivatives.stencil;
    if (sim) {
        opts.ode_tol.rtol = sim->rtol;
        opts.ode_tol.atol = sim->atol;
    }
    if (derivatives.mode == "numeric") {
        opts.derivative_mode = recovery::DerivativeMode::numeric;
        // numeric sigma carries finite-difference error; loosen the closure checks
        opts.image_tol = 1e-3;
        opts.redundancy_tol = 1e-2;
    }
    return opts;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RawConfig raw = parse_raw(text, origin);
    RunConfig cfg;

    if (auto v = raw.find("", "model"))
        cfg.model = *v;
    else
        throw ConfigError("missing required key 'model'");
    static const std::set<std::string> known_models = {"lotka_volterra", "reactor",
                                                       "henon_heiles", "linparam"};
    if (!known_models.count(cfg.model))
        throw ConfigError("unknown model '" + cfg.model +
                          "' (lotka_volterra | reactor | henon_heiles | linparam)");

    if (auto v = raw.find("theta", "values")) cfg.theta_true = to_vec("theta.values", *v);
    if (auto v = raw.find("x0", "values")) cfg.x0_true = to_vec("x0.values", *v);

    if (raw.has_section("sim")) {
        RunConfig::Sim sim;
        if (auto v = raw.find("sim", "t_end")) sim.t_end = to_double("sim.t_end", *v);
        if (auto v = raw.find("sim", "rtol")) sim.rtol = to_double("sim.rtol", *v);
        if (auto v = raw.find("sim", "atol")) sim.atol = to_double("sim.atol", *v);
        if (auto v = raw.find("sim", "sample_dt")) sim.sample_dt = to_double("sim.sample_dt", *v);
        if (!(sim.t_end > 0)) throw ConfigError("sim.t_end must be positive");
        if (!(sim.sample_dt > 0)) throw ConfigError("sim.sample_dt must be positive");
        cfg.sim = sim;
    }
    if (raw.has_section("data")) {
        RunConfig::Data data;
        if (auto v = raw.find("data", "csv"))
            data.csv = *v;
        else
            throw ConfigError("data section needs 'csv = <path>'");
        cfg.data = data;
    }
    if (cfg.sim && cfg.data)
        throw ConfigError("exactly one of [sim] and [data] may be present, found both");
    if (!cfg.sim && !cfg.data) throw ConfigError("one of [sim] or [data] is required");

    if (auto v = raw.find("window", "a")) cfg.window.a = to_double("window.a", *v);
    if (auto v = raw.find("window", "b")) cfg.window.b = to_double("window.b", *v);
    if (auto v = raw.find("window", "grid_n")) cfg.window.grid_n = to_int("window.grid_n", *v);
    if (cfg.window.grid_n < 2) throw ConfigError("window.grid_n must be at least 2");
    if (cfg.window.a && cfg.window.b && !(*cfg.window.a < *cfg.window.b))
        throw ConfigError("window requires a < b");

    if (auto v = raw.find("derivatives", "mode")) cfg.derivatives.mode = *v;
    if (cfg.derivatives.mode != "analytic" && cfg.derivatives.mode != "numeric")
        throw ConfigError("derivatives.mode must be analytic or numeric");
    if (auto v = raw.find("derivatives", "stencil"))
        cfg.derivatives.stencil = to_int("derivatives.stencil", *v);
    if (cfg.derivatives.stencil < 3 || cfg.derivatives.stencil % 2 == 0)
        throw ConfigError("derivatives.stencil must be odd and at least 3");

    if (auto v = raw.find("selection", "strategy")) cfg.selection.strategy = *v;
    if (cfg.selection.strategy != "greedy" && cfg.selection.strategy != "exhaustive")
        throw ConfigError("selection.strategy must be greedy or exhaustive");
    if (auto v = raw.find("selection", "tol")) cfg.selection.tol = to_double("selection.tol", *v);
    if (auto v = raw.find("selection", "mode")) cfg.selection.mode = *v;
    if (cfg.selection.mode != "oversampled" && cfg.selection.mode != "square")
        throw ConfigError("selection.mode must be oversampled or square");

    if (raw.has_section("noise")) {
        RunConfig::Noise noise;
        if (auto v = raw.find("noise", "sigma")) {
            Vec s = to_vec("noise.sigma", *v);
            for (int i = 0; i < s.size(); ++i) {
                if (s(i) < 0) throw ConfigError("noise.sigma must be non-negative");
                noise.sigma.push_back(s(i));
            }
        }
        if (auto v = raw.find("noise", "seed")) noise.seed = to_int("noise.seed", *v);
        bool any = false;
        for (double s : noise.sigma) any = any || s > 0;
        if (any && cfg.derivatives.mode != "numeric")
            throw ConfigError("noise injection requires derivatives.mode = numeric");
        if (any) cfg.noise = noise;
    }

    if (auto v = raw.find("output", "path")) cfg.output_path = *v;

    if (cfg.model == "linparam") {
        if (!raw.has_section("linparam"))
            throw ConfigError("model = linparam requires a [linparam] section");
        models::LinparamOptions lp;
        if (auto v = raw.find("linparam", "A"))
            lp.A = to_mat("linparam.A", *v);
        else
            throw ConfigError("linparam.A is required");
        if (auto v = raw.find("linparam", "n")) lp.n_coeffs = to_vec("linparam.n", *v);
        if (auto v = raw.find("linparam", "rho")) {
            std::istringstream in(*v);
            std::string part;
            while (std::getline(in, part, ';')) {
                part = trim(part);
                if (!part.empty()) lp.rho.push_back(to_vec("linparam.rho", part));
            }
        }
        if (auto v = raw.find("linparam", "u")) lp.u = to_control("linparam.u", *v);
        if (auto v = raw.find("linparam", "x_max")) lp.x_max = to_double("linparam.x_max", *v);
        cfg.linparam = std::move(lp);
    } else if (raw.has_section("linparam")) {
        throw ConfigError("[linparam] section is only valid with model = linparam");
    }

    if (cfg.sim) {
        if (!cfg.theta_true) throw ConfigError("[sim] requires [theta] with the true parameters");
        if (!cfg.x0_true) throw ConfigError("[sim] requires [x0] with the true initial state");
        double b = cfg.window.b.value_or(cfg.sim->t_end);
        if (b > cfg.sim->t_end + 1e-12)
            throw ConfigError("window.b exceeds sim.t_end");
    }
    if (cfg.data && cfg.derivatives.mode == "analytic")
        throw ConfigError("derivatives.mode = analytic requires [sim]; sampled data supports "
                          "only the numeric mode");

    // reject unknown keys so typos surface during --validate
    for (const auto& [section, kv] : raw.values)
        for (const auto& [key, value] : kv) {
            std::string full = section + "." + key;
            if (!raw.consumed.count(full))
                throw ConfigError("unknown key '" + (section.empty() ? key : full) + "'");
        }

    for (const auto& [section, kv] : raw.values)
        for (const auto& [key, value] : kv)
            cfg.echo[(section.empty() ? key : section + "." + key)] = value;
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

}  // namespace odeident::cli
