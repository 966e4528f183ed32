#pragma once

#include "odeident/config.hpp"

#include <string>

namespace odeident::cli {

struct RunResult {
    IdentificationReport report;
    std::string report_json;
    std::string report_path;
};

/// Executes one configured experiment: simulate or ingest, differentiate,
/// identify, and serialize the report. Throws Error subclasses on failure.
RunResult run_config(const RunConfig& config);

/// `run <config>` entry point used by the executable: writes the report file,
/// prints a one-line status object, returns the process exit code.
int run_main(const std::string& config_path);

int validate_main(const std::string& config_path);
int list_models_main();

}  // namespace odeident::cli
