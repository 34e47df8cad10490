#include "mwthermo/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "mwthermo/errors.hpp"

namespace mwthermo {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delimiter)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        fields.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return fields;
}

} // namespace

std::string to_string(ReferenceMode mode)
{
    switch (mode) {
    case ReferenceMode::none:
        return "none";
    case ReferenceMode::detuned:
        return "detuned";
    case ReferenceMode::saturated:
        return "saturated";
    }
    return "none";
}

ReferenceMode reference_mode_from_string(const std::string& text)
{
    if (text == "none")
        return ReferenceMode::none;
    if (text == "detuned")
        return ReferenceMode::detuned;
    if (text == "saturated")
        return ReferenceMode::saturated;
    throw InvalidArgument("unknown reference mode '" + text + "'");
}

void ReflectionTrace::validate() const
{
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (!std::isfinite(p.frequency_hz) || p.frequency_hz <= 0.0)
            throw InvalidArgument("trace point " + std::to_string(i) + " has a non-positive frequency");
        if (!std::isfinite(p.power_watt) || p.power_watt <= 0.0)
            throw InvalidArgument("trace point " + std::to_string(i) + " has a non-positive power");
    }
}

std::string format_double(double x)
{
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", x);
    return buffer;
}

double parse_double(std::string_view text)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw InvalidArgument("'" + std::string(text) + "' is not a number");
    return value;
}

std::string format_trace(const ReflectionTrace& trace)
{
    std::ostringstream out;
    out << "# reference_mode: " << to_string(trace.reference_mode) << '\n';
    for (const auto& [key, value] : trace.metadata)
        if (key != "reference_mode")
            out << "# " << key << ": " << value << '\n';
    out << kTraceColumns << '\n';
    for (const auto& p : trace.points)
        out << format_double(p.frequency_hz) << ',' << format_double(p.power_watt) << ','
            << format_double(p.r.real()) << ',' << format_double(p.r.imag()) << '\n';
    return out.str();
}

ReflectionTrace parse_trace(std::string_view text)
{
    ReflectionTrace trace;
    std::size_t line_number = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        const std::string_view raw = text.substr(start, end == std::string_view::npos ? end : end - start);
        start = end == std::string_view::npos ? text.size() : end + 1;
        ++line_number;

        const std::string_view line = trim(raw);
        if (line.empty())
            continue;
        if (line.front() == '#') {
            const std::string_view body = trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string_view::npos)
                continue;
            const std::string key(trim(body.substr(0, colon)));
            const std::string value(trim(body.substr(colon + 1)));
            if (key == "reference_mode") {
                try {
                    trace.reference_mode = reference_mode_from_string(value);
                } catch (const InvalidArgument& e) {
                    throw ParseError(e.what(), line_number);
                }
            } else if (!key.empty()) {
                trace.metadata[key] = value;
            }
            continue;
        }
        if (line == kTraceColumns)
            continue;

        const auto fields = split(line, ',');
        if (fields.size() != 4)
            throw ParseError("expected 4 comma-separated columns, found " + std::to_string(fields.size()),
                             line_number);
        double values[4];
        for (std::size_t k = 0; k < 4; ++k) {
            try {
                values[k] = parse_double(fields[k]);
            } catch (const InvalidArgument& e) {
                throw ParseError(e.what(), line_number);
            }
        }
        if (!std::isfinite(values[0]) || values[0] <= 0.0)
            throw ParseError("frequency must be positive and finite", line_number);
        if (!std::isfinite(values[1]) || values[1] <= 0.0)
            throw ParseError("power must be positive and finite", line_number);
        trace.points.push_back({values[0], values[1], {values[2], values[3]}});
    }
    return trace;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad())
        throw IoError("error while reading '" + path.string() + "'");
    return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    std::filesystem::path temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open '" + temp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out)
            throw IoError("error while writing '" + temp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::filesystem::remove(temp, ec);
        throw IoError("cannot move output into place at '" + path.string() + "'");
    }
}

ReflectionTrace read_trace_file(const std::filesystem::path& path)
{
    const std::string text = read_text_file(path);
    try {
        return parse_trace(text);
    } catch (const ParseError& e) {
        throw ParseError(path.string(), e);
    }
}

void write_trace_file(const std::filesystem::path& path, const ReflectionTrace& trace)
{
    write_file_atomic(path, format_trace(trace));
}

} // namespace mwthermo
