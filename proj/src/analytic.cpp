#include "mwthermo/analytic.hpp"

#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "mwthermo/constants.hpp"
#include "mwthermo/errors.hpp"

namespace mwthermo {

namespace {

void require_non_negative(double x, const char* name)
{
    if (!std::isfinite(x) || x < 0.0)
        throw InvalidArgument(std::string(name) + " must be non-negative and finite");
}

// NETP without the 1/sqrt(2 Gamma eta) prefactor.
double netp_shape(double w)
{
    const double s = 1.0 + 2.0 * w * w;
    return s * s / (w * (6.0 + w * w));
}

} // namespace

std::complex<double> r0_first_order(double n_ge, double n_ef, double gamma_phi_ratio,
                                    double gamma_nr_ratio, double rabi_ratio,
                                    double gamma_over_alpha)
{
    require_non_negative(n_ge, "n_ge");
    require_non_negative(n_ef, "n_ef");
    require_non_negative(gamma_phi_ratio, "gamma_phi_ratio");
    require_non_negative(gamma_nr_ratio, "gamma_nr_ratio");
    require_non_negative(rabi_ratio, "rabi_ratio");
    require_non_negative(gamma_over_alpha, "gamma_over_alpha");

    using C = std::complex<double>;
    const C thermal = (8.0 * n_ge + 4.0 * n_ef) / C(1.0, 1.5 * gamma_over_alpha);
    const C saturation = 4.0 * rabi_ratio * rabi_ratio / C(1.0, gamma_over_alpha);
    return -1.0 + thermal + 4.0 * gamma_phi_ratio + 2.0 * gamma_nr_ratio + saturation;
}

double r_two_level(double n, double rabi_ratio)
{
    require_non_negative(n, "n");
    require_non_negative(rabi_ratio, "rabi_ratio");
    const double w2 = rabi_ratio * rabi_ratio;
    return -1.0 + 4.0 * (2.0 * n + 2.0 * n * n + w2) / (1.0 + 4.0 * n + 4.0 * n * n + 2.0 * w2);
}

double cancellation_detuning(double gamma_rad, double alpha)
{
    if (!(alpha < 0.0))
        throw InvalidArgument("alpha must be negative");
    require_non_negative(gamma_rad, "gamma_rad");
    return gamma_rad * gamma_rad / (2.0 * alpha);
}

double responsivity(double rabi_ratio)
{
    require_non_negative(rabi_ratio, "rabi_ratio");
    const double w2 = rabi_ratio * rabi_ratio;
    const double s = 1.0 + 2.0 * w2;
    return 2.0 * (6.0 + w2) / (s * s);
}

void SensitivityInput::validate() const
{
    if (!std::isfinite(rabi_ratio) || rabi_ratio <= 0.0)
        throw InvalidArgument("rabi_ratio must be positive");
    if (!std::isfinite(eta) || eta <= 0.0 || eta > 1.0)
        throw InvalidArgument("eta must lie in (0, 1]");
    if (!std::isfinite(gamma_rad) || gamma_rad <= 0.0)
        throw InvalidArgument("gamma_rad must be positive");
    if (!std::isfinite(omega_ge) || omega_ge <= 0.0)
        throw InvalidArgument("omega_ge must be positive");
}

double netp(const SensitivityInput& input)
{
    input.validate();
    return netp_shape(input.rabi_ratio) / std::sqrt(2.0 * input.gamma_rad * input.eta);
}

double netp_argmin()
{
    // ~1e-7 absolute resolution on the drive ratio.
    constexpr int bits = 24;
    const auto [argmin, value] = boost::math::tools::brent_find_minima(netp_shape, 0.01, 3.0, bits);
    (void)value;
    return argmin;
}

double nep(const SensitivityInput& input, double netp_value)
{
    input.validate();
    if (!std::isfinite(netp_value) || netp_value <= 0.0)
        throw InvalidArgument("netp_value must be positive");
    return constants::hbar * input.omega_ge * input.gamma_rad * netp_value;
}

} // namespace mwthermo
