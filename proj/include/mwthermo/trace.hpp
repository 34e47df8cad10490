#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

namespace mwthermo {

enum class ReferenceMode
{
    none,
    detuned,
    saturated,
};

std::string to_string(ReferenceMode mode);
ReferenceMode reference_mode_from_string(const std::string& text);

struct TracePoint
{
    double frequency_hz = 0.0;
    double power_watt = 0.0;
    std::complex<double> r;
};

/// Sampled complex reflection versus drive frequency and source-plane power.
struct ReflectionTrace
{
    std::vector<TracePoint> points;
    ReferenceMode reference_mode = ReferenceMode::none;
    /// Free-form header data carried through file I/O (key: value).
    std::map<std::string, std::string> metadata;

    bool empty() const noexcept { return points.empty(); }
    std::size_t size() const noexcept { return points.size(); }

    /// Throws InvalidArgument on non-finite frequencies or non-positive powers.
    void validate() const;
};

} // namespace mwthermo
