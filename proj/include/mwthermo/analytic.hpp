#pragma once

// Closed-form results for the waveguide thermometer: reflection to first order in
// the small decoherence channels, the two-level solution, the cancellation
// detuning, and the responsivity / sensitivity figures of merit.

#include <complex>

namespace mwthermo {

/// r(0) = -1 + (8 n_ge + 4 n_ef)/(1 + 3i G/2|a|) + 4 gphi/G + 2 Gnr/G + 4 (W/G)^2/(1 + i G/|a|).
/// All ratios are dimensionless; throws InvalidArgument on negative input.
std::complex<double> r0_first_order(double n_ge, double n_ef, double gamma_phi_ratio,
                                    double gamma_nr_ratio, double rabi_ratio,
                                    double gamma_over_alpha);

/// Resonant reflection of a driven two-level emitter with thermal occupation n.
double r_two_level(double n, double rabi_ratio);

/// Detuning Gamma^2 / (2 alpha) of full coherent cancellation, first order in Gamma/|alpha|.
double cancellation_detuning(double gamma_rad, double alpha);

/// |dr/dn| at n -> 0 in the Gamma/|alpha| -> 0 limit: 2 (6 + W^2) / (1 + 2 W^2)^2.
double responsivity(double rabi_ratio);

struct SensitivityInput
{
    double rabi_ratio = 0.42;
    double gamma_rad = 0.0; ///< rad/s; enters sqrt(2 Gamma eta) in angular units
    double eta = 1.0;       ///< amplification-chain quantum efficiency, 0 < eta <= 1
    double omega_ge = 0.0;  ///< rad/s

    void validate() const;
};

/// Noise-equivalent thermal photons, photons/sqrt(Hz).
double netp(const SensitivityInput& input);

/// Drive ratio minimizing NETP on [0.01, 3]; independent of Gamma and eta.
double netp_argmin();

/// Noise-equivalent power, W/sqrt(Hz): hbar omega_ge Gamma NETP.
double nep(const SensitivityInput& input, double netp_value);

} // namespace mwthermo
