#pragma once

#include "odeident/jets.hpp"

#include <string>

namespace odeident::cli {

/// Reads a sample table from CSV with header exactly `t,y1,...,ym`.
/// Rows must be strictly increasing in t; failures name the offending row.
jets::SampleTable ingest_csv(const std::string& path);

void write_csv(const std::string& path, const jets::SampleTable& table);

}  // namespace odeident::cli
