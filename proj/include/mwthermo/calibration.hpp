#pragma once

// Drive-rate conversion, trace referencing, the shared-parameter spectroscopy fit
// and exponential relaxation-tail fits.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mwthermo/lindblad.hpp"
#include "mwthermo/trace.hpp"

namespace mwthermo {

/// Omega = 2 sqrt(A Gamma P_in / (hbar omega_ge)), rad/s.
double drive_rate_from_power(double power_watt, double attenuation, double gamma_rad,
                             double omega_ge);

/// Inverse of drive_rate_from_power.
double power_from_drive_rate(double rabi_rate, double attenuation, double gamma_rad,
                             double omega_ge);

struct NormalizedTrace
{
    ReflectionTrace trace;
    /// Indices whose reference magnitude fell below 1e-6; their r is NaN.
    std::vector<std::size_t> flagged;
};

/// Pointwise raw / reference. The reference is linearly interpolated in frequency
/// (real and imaginary parts) and must cover the raw frequency range.
NormalizedTrace normalize_trace(const ReflectionTrace& raw, const ReflectionTrace& reference,
                                ReferenceMode mode = ReferenceMode::detuned);

struct FitResult
{
    double omega_ge = 0.0;    ///< rad/s
    double gamma_rad = 0.0;   ///< rad/s
    double alpha = 0.0;       ///< rad/s
    double attenuation = 0.0; ///< linear power factor between source plane and sample
    double residual_norm = 0.0;
    double initial_residual_norm = 0.0;
    double gradient_norm = 0.0;
    /// 95% half-widths from the diagonal of the Gauss-Newton covariance,
    /// same order and units as the four parameters above.
    std::array<double, 4> confidence{};
    int iterations = 0;
    std::size_t residual_count = 0;
    std::string loss = "complex";
    std::string stop_reason;
};

struct InitialGuess
{
    TransmonParams params;
    double attenuation = 1.0;
};

struct GlobalFitOptions
{
    /// Fixed thermal occupation per transition; defaults to zero when unset.
    std::optional<BathOccupation> bath;
    /// Starting attenuation; estimated from the resonant response when unset.
    std::optional<double> initial_attenuation;
    bool include_cross_terms = true;
    int max_iterations = 100;
    double gradient_tolerance = 1e-8;
};

/// Data-driven starting point: omega_ge from the low-power phase crossing, Gamma from
/// the low-power phase slope, A from the resonant reflection of each trace through the
/// two-level law, and alpha as the lowest-cost candidate among the red-side dips and a
/// coarse grid. `fallback` supplies the truncation and the fixed decoherence rates.
InitialGuess estimate_initial_guess(std::span<const ReflectionTrace> traces,
                                    const TransmonParams& fallback);

/// Shared (omega_ge, Gamma, alpha, A) least-squares fit of the steady-state model to all
/// traces, using stacked real and imaginary residuals. gamma_phi, gamma_nr and the bath
/// are held fixed at the values in `initial` / `options`.
/// Throws InvalidArgument for fewer than two distinct powers or levels outside {3, 4},
/// ConvergenceError when the optimizer stops without meeting its criteria.
FitResult global_fit(std::span<const ReflectionTrace> traces, const TransmonParams& initial,
                     int levels, const GlobalFitOptions& options = {});

/// Forward model used by global_fit, evaluated on the points of `like`.
ReflectionTrace model_trace(const ReflectionTrace& like, const TransmonParams& p,
                            double attenuation, const BathOccupation& bath,
                            bool include_cross_terms = true);

struct TimePoint
{
    double time = 0.0;
    double value = 0.0;
};

struct ExponentialFit
{
    double asymptote = 0.0;
    double amplitude = 0.0;
    double time_constant = 0.0; ///< NaN when not identifiable
    bool time_constant_identifiable = true;
    double residual_norm = 0.0;
};

/// Least-squares v(t) = v_inf + a exp(-(t - t_0)/tau), t_0 being the first sample time.
/// Requires >= 5 strictly increasing samples. A flat series returns amplitude 0 and
/// flags tau as unidentifiable.
ExponentialFit exponential_tail_fit(std::span<const TimePoint> series);

/// The trailing `fraction` of a segment, used as the relaxation tail.
std::vector<TimePoint> tail_window(std::span<const TimePoint> segment, double fraction = 0.7);

} // namespace mwthermo
