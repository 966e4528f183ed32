#pragma once

#include "odeident/config.hpp"
#include "odeident/types.hpp"

#include <optional>
#include <string>

namespace odeident::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// JSON serialization of one finished run. Deterministic for a fixed config
/// except the timestamp field.
std::string report_to_json(const IdentificationReport& report, const RunConfig& config,
                           const std::optional<Vec>& theta_true, const std::optional<Vec>& x0_true,
                           const std::string& timestamp);

std::string error_to_json(const std::string& kind, const std::string& message);

std::string utc_timestamp();

}  // namespace odeident::cli
