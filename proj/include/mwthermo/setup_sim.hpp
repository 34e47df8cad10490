#pragma once

// Synthetic experiment generation: band-limited digital noise, Lorentzian noise
// spectroscopy, the imperfect-circulator referencing distortion and noisy
// spectroscopy traces for exercising the fits.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mwthermo/lindblad.hpp"
#include "mwthermo/thermometry.hpp"
#include "mwthermo/trace.hpp"

namespace mwthermo {

/// Lossless symmetric circulator with leakage amplitude gamma, followed by a line of
/// electrical delay tau and phase phi between the circulator and the sample.
struct CirculatorParams
{
    double gamma = 0.0;
    double delay = 0.0; ///< s
    double phase = 0.0; ///< rad
    double pre_attenuation = 1.0;
    double post_gain = 1.0;

    void validate() const;
};

/// Transmission t = A G (s31 + s21 G_L s32 / (1 - s22 G_L)) with G_L = r exp(i(omega tau + phi)),
/// referenced to the same network terminated by r = 1.
/// Throws InvalidArgument when a denominator vanishes or |r_ideal| > 1.
Complex referenced_reflection_with_circulator(const CirculatorParams& c, Complex r_ideal,
                                              double omega);

/// Small-parameter expansion of the real-part error for r_ideal = -1 + delta_r.
double circulator_real_error_series(double gamma, double delta_r, double theta);

struct CirculatorErrorScan
{
    double max_real_error = 0.0;
    double max_magnitude_error = 0.0;
    double max_imag_error = 0.0;
    double theta_real = 0.0;      ///< omega tau + phi at the real-part extremum
    double theta_magnitude = 0.0; ///< omega tau + phi at the magnitude extremum
};

/// Dense scan of omega tau + phi over [0, 2 pi).
CirculatorErrorScan circulator_worst_case(double gamma, Complex r_ideal, int samples = 10000);

/// Frequency-dependent amplitude gain g(omega), linearly interpolated, zero outside.
struct GainProfile
{
    std::vector<double> omega;
    std::vector<double> gain;

    double at(double w) const;
};

struct NoiseRealization
{
    double sample_rate = 0.0; ///< Hz
    std::vector<Complex> samples;
    NoiseSpectrum profile;
    std::uint64_t seed = 0;
};

/// Filtered white noise whose spectral density at positive baseband angular frequency
/// omega is profile(omega), so that E|x|^2 = integral of S d(omega)/2pi. The record is
/// generated at the next power-of-two length and truncated. The optional gain is applied
/// to the filter amplitude. Throws InvalidArgument for profiles with content at negative
/// frequencies or beyond Nyquist, and for records shorter than 1024 samples.
NoiseRealization synthesize_band_noise(const NoiseSpectrum& profile, double sample_rate,
                                       double duration, std::uint64_t seed,
                                       const GainProfile* gain = nullptr);

/// Multiplies the spectrum of `samples` by transfer(omega) (angular baseband frequency).
std::vector<Complex> apply_transfer(std::span<const Complex> samples, double sample_rate,
                                    const std::function<Complex(double)>& transfer);

/// Averaged periodogram over non-overlapping segments of `segment_length` samples
/// (power of two), returned at bin centres from -Nyquist to Nyquist. Same density
/// convention as synthesize_band_noise.
NoiseSpectrum estimate_psd(std::span<const Complex> samples, double sample_rate,
                           std::size_t segment_length);

/// g = sqrt(target / measured) wherever target > 0, 0 elsewhere.
/// Throws InvalidArgument if measured vanishes where target does not.
GainProfile mixer_transfer_compensation(const NoiseSpectrum& measured, const NoiseSpectrum& target);

/// Per-transition occupation of a noise profile: transition j samples S through a
/// Lorentzian of width j Gamma centred on omega_j.
BathOccupation transition_occupations(const TransmonParams& p, const NoiseSpectrum& spectrum);

/// Same rule for a Lorentzian profile of total area `amplitude` (photons) and FWHM `width`,
/// evaluated in closed form.
BathOccupation lorentzian_transition_occupations(const TransmonParams& p, double center,
                                                 double width, double amplitude);

struct SweepPoint
{
    double center = 0.0; ///< rad/s
    Complex r;
};

/// Resonant reflection under Lorentzian noise for each centre frequency.
std::vector<SweepPoint> noise_spectroscopy_sweep(const TransmonParams& p,
                                                 std::span<const double> centers, double width,
                                                 double amplitude, double rabi_ratio,
                                                 bool include_cross_terms = true);

struct SyntheticExperimentOptions
{
    std::optional<CirculatorParams> circulator;
    std::optional<BathOccupation> bath;
    bool include_cross_terms = true;
};

/// One trace per power: steady-state model, optional circulator distortion, then
/// additive complex Gaussian noise with standard deviation noise_level per quadrature.
std::vector<ReflectionTrace> generate_synthetic_experiment(const TransmonParams& truth,
                                                           double attenuation,
                                                           std::span<const double> powers_watt,
                                                           std::span<const double> detunings,
                                                           double noise_level, std::uint64_t seed,
                                                           const SyntheticExperimentOptions& options = {});

} // namespace mwthermo
