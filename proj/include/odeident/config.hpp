#pragma once

#include "odeident/models.hpp"
#include "odeident/recovery.hpp"
#include "odeident/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace odeident::cli {

/// One experiment description, parsed from the sectioned key = value format
/// documented in the README.
struct RunConfig {
    std::string model;

    std::optional<Vec> theta_true;
    std::optional<Vec> x0_true;

    struct Sim {
        double t_end = 10.0;
        double rtol = 1e-10;
        double atol = 1e-12;
        double sample_dt = 1e-3;  // numeric derivative mode only
    };
    std::optional<Sim> sim;

    struct Data {
        std::string csv;
    };
    std::optional<Data> data;

    struct Window {
        std::optional<double> a;
        std::optional<double> b;
        int grid_n = 200;
    };
    Window window;

    struct Derivatives {
        std::string mode = "analytic";  // analytic | numeric
        int stencil = 5;
    };
    Derivatives derivatives;

    struct Selection {
        std::string strategy = "greedy";    // greedy | exhaustive
        double tol = 1e-8;
        std::string mode = "oversampled";  // oversampled | square
    };
    Selection selection;

    struct Noise {
        std::vector<double> sigma;  // one entry, or one per channel
        unsigned seed = 0;
    };
    std::optional<Noise> noise;

    std::string output_path = "report.json";

    std::optional<models::LinparamOptions> linparam;

    /// Raw section.key -> value pairs, echoed into the report.
    std::map<std::string, std::string> echo;

    recovery::IdentifyOptions identify_options() const;
};

/// Parses and validates; throws ConfigError naming the offending key.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

}  // namespace odeident::cli
