#pragma once

// Conversions between reflection, thermal occupation and radiation temperature,
// finite-band noise windowing, and the attenuator-chain occupancy estimate.

#include <complex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mwthermo/lindblad.hpp"

namespace mwthermo {

/// n(omega, T) = 1 / (exp(hbar omega / k_B T) - 1). Underflows to 0 deep in the quantum regime.
double bose_occupation(double omega, double temperature);

/// Occupation sensed by the thermometer: (2/3) n(omega_ge, T) + (1/3) n(omega_ef, T).
double effective_occupation(double omega_ge, double omega_ef, double temperature);

/// Inverts effective_occupation on [1 mK, 10 K] to 1e-9 relative in T.
/// Throws InvalidArgument for n_target <= 0 and RangeError outside the bracket.
double temperature_from_occupation(double omega_ge, double omega_ef, double n_target);

/// Unit-area Lorentzian whose full width at half maximum is `width`.
double lorentzian(double x, double width);

/// Occupation per mode S(omega) sampled at strictly increasing angular frequencies and
/// interpolated linearly in between; zero outside the sampled support.
class NoiseSpectrum
{
public:
    NoiseSpectrum() = default;
    NoiseSpectrum(std::vector<double> omega, std::vector<double> density);

    /// Constant density over [omega_low, omega_high].
    static NoiseSpectrum flat(double omega_low, double omega_high, double density);

    std::span<const double> omega() const noexcept { return omega_; }
    std::span<const double> density() const noexcept { return density_; }
    bool empty() const noexcept { return omega_.empty(); }
    std::size_t size() const noexcept { return omega_.size(); }

    double at(double omega) const;

private:
    std::vector<double> omega_;
    std::vector<double> density_;
};

/// Exact integral of lorentzian(omega - center, width) * S(omega) over the spectrum support.
double lorentzian_overlap(const NoiseSpectrum& spectrum, double center, double width);

/// Effective added occupation integral of w(omega) S(omega) with
/// w = (8/12) f_L(omega - omega_ge, Gamma) + (4/12) f_L(omega - omega_ef, 2 Gamma).
/// A flat unit spectrum returns the windowing coefficient w_win.
double windowing_weight(const NoiseSpectrum& spectrum, const TransmonParams& p);

struct AttenuatorStage
{
    double attenuation = 1.0; ///< linear power attenuation, >= 1 (infinity allowed)
    double temperature = 0.0; ///< stage temperature, K
};

/// Beam-splitter model of a line: each stage mixes the incoming occupation with the
/// thermal occupation of its own stage.
struct AttenuatorChain
{
    std::vector<AttenuatorStage> stages;
    /// Source temperature; when unset, `source_occupation` is used instead.
    std::optional<double> source_temperature;
    double source_occupation = 0.0;

    void validate() const;
    double input_occupation(double omega) const;
};

/// Occupation after each stage: n_i = n_{i-1}/A_i + (1 - 1/A_i) n(omega, T_i).
std::vector<double> chain_occupation(const AttenuatorChain& chain, double omega);

enum class InversionMode
{
    real_part, ///< match Re r(0), valid over the full monotone range
    magnitude, ///< match |r(0)| on the branch Re r(0) < 0
};

struct InversionOptions
{
    InversionMode mode = InversionMode::real_part;
    bool include_cross_terms = true;
    double max_occupation = 10.0;
    double tolerance = 1e-12; ///< absolute, in photons
};

/// Uniform thermal occupation whose resonant forward-model reflection at
/// Omega = rabi_ratio * Gamma reproduces the measured value.
/// Throws RangeError if the value lies outside [-1, 1] or the root is not bracketed.
double occupation_from_reflection(std::complex<double> r_measured, const TransmonParams& p,
                                  double rabi_ratio, const InversionOptions& options = {});

} // namespace mwthermo
