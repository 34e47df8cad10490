#pragma once

// Plain-text trace files: '#'-prefixed "key: value" header lines, one optional
// column-name line, then comma-separated frequency_hz, power_watt, re_r, im_r.

#include <filesystem>
#include <string>
#include <string_view>

#include "mwthermo/trace.hpp"

namespace mwthermo {

inline constexpr std::string_view kTraceColumns = "frequency_hz,power_watt,re_r,im_r";

std::string format_trace(const ReflectionTrace& trace);

/// Throws ParseError naming the 1-based line of the first malformed record.
ReflectionTrace parse_trace(std::string_view text);

ReflectionTrace read_trace_file(const std::filesystem::path& path);
void write_trace_file(const std::filesystem::path& path, const ReflectionTrace& trace);

/// Round-trippable text for a double (%.17g).
std::string format_double(double x);

/// Parses a whole field as a double; throws InvalidArgument otherwise. Accepts nan/inf.
double parse_double(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace mwthermo
