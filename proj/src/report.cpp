#include "odeident/report.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>

namespace odeident::cli {

namespace {

using json = nlohmann::ordered_json;

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json relative_errors(const Vec& estimate, const Vec& truth) {
    json arr = json::array();
    for (int i = 0; i < estimate.size() && i < truth.size(); ++i) {
        double denom = std::max(std::abs(truth(i)), 1e-300);
        arr.push_back(std::abs(estimate(i) - truth(i)) / denom);
    }
    return arr;
}

}  // namespace

std::string report_to_json(const IdentificationReport& report, const RunConfig& config,
                           const std::optional<Vec>& theta_true, const std::optional<Vec>& x0_true,
                           const std::string& timestamp) {
    json j;
    j["version"] = kToolVersion;
    j["timestamp"] = timestamp;
    j["model"] = config.model;
    j["mode"] = {{"derivatives", report.derivative_mode},
                 {"solve", report.solve_mode},
                 {"selection", report.selection_strategy},
                 {"window", {report.window_a, report.window_b}},
                 {"jets_used", report.jets_used}};
    j["theta_hat"] = vec_to_json(report.theta_hat);
    j["x0_hat"] = {{"values", vec_to_json(report.x0_hat)},
                   {"recoverable", report.x0_recoverable},
                   {"t_tilde", report.t_tilde},
                   {"backward_integrated", report.backward_integrated}};

    json blocks = json::array();
    for (const auto& b : report.blocks) {
        json jb;
        jb["index"] = b.index;
        jb["label"] = b.label;
        jb["pointwise"] = b.pointwise;
        jb["sigma"] = vec_to_json(b.sigma);
        jb["sigma_raw"] = vec_to_json(b.sigma_raw);
        jb["residual"] = b.residual;
        jb["condition_number"] = b.condition_number;
        jb["smallest_singular_value"] = b.smallest_singular_value;
        if (b.pointwise && b.times_used.size() > 16) {
            jb["times_used_count"] = b.times_used.size();
        } else {
            jb["times_used"] = b.times_used;
        }
        blocks.push_back(std::move(jb));
    }
    j["blocks"] = std::move(blocks);
    j["distinct_times_used"] = report.distinct_times;

    if (theta_true) {
        j["theta_true"] = vec_to_json(*theta_true);
        j["theta_relative_error"] = relative_errors(report.theta_hat, *theta_true);
    }
    if (x0_true) {
        j["x0_true"] = vec_to_json(*x0_true);
        json errs = json::array();
        for (int i = 0; i < report.x0_hat.size() && i < x0_true->size(); ++i) {
            if (i < static_cast<int>(report.x0_recoverable.size()) &&
                !report.x0_recoverable[i]) {
                errs.push_back(nullptr);  // structurally invisible coordinate
                continue;
            }
            double denom = std::max(std::abs((*x0_true)(i)), 1e-300);
            errs.push_back(std::abs(report.x0_hat(i) - (*x0_true)(i)) / denom);
        }
        j["x0_relative_error"] = std::move(errs);
    }

    json echo = json::object();
    for (const auto& [k, v] : config.echo) echo[k] = v;
    j["config"] = std::move(echo);
    return j.dump(2) + "\n";
}

std::string error_to_json(const std::string& kind, const std::string& message) {
    json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    return j.dump();
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace odeident::cli
