#pragma once
// CSV trace format: first column time, remaining columns values, optional
// single header row. Numbers are written with enough digits to round-trip.

#include <string>
#include <string_view>

#include "skoro/trace.hpp"

namespace skoro {

/// Parse CSV text into a SampledTrace. Errors report the 1-based row number.
SampledTrace parse_csv(std::string_view text);

/// Read a CSV trace from a file path.
SampledTrace read_csv_file(const std::string& path);

/// Serialize with full round-trip precision; `header` may be empty.
std::string write_csv(const SampledTrace& tr, const std::string& header = "");

void write_csv_file(const SampledTrace& tr, const std::string& path,
                    const std::string& header = "");

}  // namespace skoro
