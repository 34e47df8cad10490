#include "mwthermo/thermometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "mwthermo/constants.hpp"
#include "mwthermo/errors.hpp"

namespace mwthermo {

namespace {

constexpr double kMinTemperature = 1e-3;
constexpr double kMaxTemperature = 10.0;
constexpr std::uintmax_t kMaxRootIterations = 200;

double reduced_energy(double omega, double temperature)
{
    return constants::hbar * omega / (constants::k_boltzmann * temperature);
}

// log n(x) for x = hbar omega / k_B T, stable for large x.
double log_bose(double x)
{
    if (x > 30.0)
        return -x - std::log1p(-std::exp(-x));
    return -std::log(std::expm1(x));
}

double log_effective_occupation(double omega_ge, double omega_ef, double temperature)
{
    const double a = std::log(2.0 / 3.0) + log_bose(reduced_energy(omega_ge, temperature));
    const double b = std::log(1.0 / 3.0) + log_bose(reduced_energy(omega_ef, temperature));
    const double hi = std::max(a, b);
    return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

template <class F>
double bracketed_root(F f, double lo, double hi, double abs_tolerance)
{
    std::uintmax_t iterations = kMaxRootIterations;
    const auto tolerance = [abs_tolerance](double a, double b) {
        return std::abs(b - a) <= abs_tolerance;
    };
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tolerance, iterations);
    if (iterations >= kMaxRootIterations)
        throw ConvergenceError("root finder did not converge");
    return 0.5 * (a + b);
}

// Integral over [x0, x1] of f_L(x, 2h) * (s_mid + slope * (x - x_mid)), x relative to the line centre.
double lorentzian_segment(double x0, double x1, double h, double s0, double s1)
{
    const double dx = x1 - x0;
    if (!(dx > 0.0))
        return 0.0;
    const double slope = (s1 - s0) / dx;
    const double xm = 0.5 * (x0 + x1);
    const double sm = 0.5 * (s0 + s1);
    const double atan_diff = std::atan2(dx * h, h * h + x0 * x1);
    const double log_diff = std::log1p(dx * (x1 + x0) / (x0 * x0 + h * h));
    const double zeroth = atan_diff / std::numbers::pi;
    const double first = h * log_diff / (2.0 * std::numbers::pi);
    return sm * zeroth + slope * (first - xm * zeroth);
}

} // namespace

double bose_occupation(double omega, double temperature)
{
    if (!(omega > 0.0) || !(temperature > 0.0))
        throw InvalidArgument("bose_occupation requires positive frequency and temperature");
    const double x = reduced_energy(omega, temperature);
    if (x > 700.0)
        return 0.0;
    return 1.0 / std::expm1(x);
}

double effective_occupation(double omega_ge, double omega_ef, double temperature)
{
    return (2.0 / 3.0) * bose_occupation(omega_ge, temperature)
           + (1.0 / 3.0) * bose_occupation(omega_ef, temperature);
}

double temperature_from_occupation(double omega_ge, double omega_ef, double n_target)
{
    if (!std::isfinite(n_target) || n_target <= 0.0)
        throw InvalidArgument("target occupation must be positive");
    if (!(omega_ge > 0.0) || !(omega_ef > 0.0))
        throw InvalidArgument("transition frequencies must be positive");

    const double log_target = std::log(n_target);
    const auto residual = [&](double log_t) {
        return log_effective_occupation(omega_ge, omega_ef, std::exp(log_t)) - log_target;
    };
    const double lo = std::log(kMinTemperature);
    const double hi = std::log(kMaxTemperature);
    if (residual(lo) > 0.0 || residual(hi) < 0.0) {
        std::ostringstream msg;
        msg << "occupation " << n_target << " corresponds to a temperature outside ["
            << kMinTemperature << ", " << kMaxTemperature << "] K";
        throw RangeError(msg.str());
    }
    // 1e-12 in log T is well inside the 1e-9 relative target.
    return std::exp(bracketed_root(residual, lo, hi, 1e-12));
}

double lorentzian(double x, double width)
{
    const double h = 0.5 * width;
    return (h / std::numbers::pi) / (x * x + h * h);
}

NoiseSpectrum::NoiseSpectrum(std::vector<double> omega, std::vector<double> density)
    : omega_(std::move(omega)), density_(std::move(density))
{
    if (omega_.size() != density_.size())
        throw InvalidArgument("noise spectrum frequency and density lengths differ");
    for (std::size_t i = 0; i < omega_.size(); ++i) {
        if (!std::isfinite(omega_[i]) || !std::isfinite(density_[i]))
            throw InvalidArgument("noise spectrum entries must be finite");
        if (density_[i] < 0.0)
            throw InvalidArgument("noise spectral density must be non-negative");
        if (i > 0 && !(omega_[i] > omega_[i - 1]))
            throw InvalidArgument("noise spectrum frequencies must be strictly increasing");
    }
}

NoiseSpectrum NoiseSpectrum::flat(double omega_low, double omega_high, double density)
{
    return NoiseSpectrum({omega_low, omega_high}, {density, density});
}

double NoiseSpectrum::at(double omega) const
{
    if (omega_.empty() || omega < omega_.front() || omega > omega_.back())
        return 0.0;
    const auto it = std::upper_bound(omega_.begin(), omega_.end(), omega);
    if (it == omega_.end())
        return density_.back();
    const std::size_t i = static_cast<std::size_t>(it - omega_.begin());
    const double t = (omega - omega_[i - 1]) / (omega_[i] - omega_[i - 1]);
    return density_[i - 1] + t * (density_[i] - density_[i - 1]);
}

double lorentzian_overlap(const NoiseSpectrum& spectrum, double center, double width)
{
    if (!(width > 0.0))
        throw InvalidArgument("Lorentzian width must be positive");
    const auto w = spectrum.omega();
    const auto s = spectrum.density();
    const double h = 0.5 * width;
    double total = 0.0;
    for (std::size_t i = 1; i < w.size(); ++i)
        total += lorentzian_segment(w[i - 1] - center, w[i] - center, h, s[i - 1], s[i]);
    return total;
}

double windowing_weight(const NoiseSpectrum& spectrum, const TransmonParams& p)
{
    p.validate();
    const double omega_ef = p.omega_ge + p.alpha;
    return (8.0 / 12.0) * lorentzian_overlap(spectrum, p.omega_ge, p.gamma_rad)
           + (4.0 / 12.0) * lorentzian_overlap(spectrum, omega_ef, 2.0 * p.gamma_rad);
}

void AttenuatorChain::validate() const
{
    for (const auto& stage : stages) {
        if (std::isnan(stage.attenuation) || stage.attenuation < 1.0)
            throw InvalidArgument("stage attenuation must be >= 1 (linear)");
        if (!std::isfinite(stage.temperature) || stage.temperature <= 0.0)
            throw InvalidArgument("stage temperature must be positive");
    }
    if (source_temperature && !(*source_temperature > 0.0))
        throw InvalidArgument("source temperature must be positive");
    if (!source_temperature && (!std::isfinite(source_occupation) || source_occupation < 0.0))
        throw InvalidArgument("source occupation must be non-negative");
}

double AttenuatorChain::input_occupation(double omega) const
{
    return source_temperature ? bose_occupation(omega, *source_temperature) : source_occupation;
}

std::vector<double> chain_occupation(const AttenuatorChain& chain, double omega)
{
    chain.validate();
    std::vector<double> out;
    out.reserve(chain.stages.size());
    double n = chain.input_occupation(omega);
    for (const auto& stage : chain.stages) {
        const double thermal = bose_occupation(omega, stage.temperature);
        if (std::isinf(stage.attenuation))
            n = thermal;
        else
            n = n / stage.attenuation + (1.0 - 1.0 / stage.attenuation) * thermal;
        out.push_back(n);
    }
    return out;
}

double occupation_from_reflection(std::complex<double> r_measured, const TransmonParams& p,
                                  double rabi_ratio, const InversionOptions& options)
{
    p.validate();
    if (!(rabi_ratio > 0.0))
        throw InvalidArgument("rabi_ratio must be positive");
    if (!std::isfinite(r_measured.real()) || !std::isfinite(r_measured.imag()))
        throw RangeError("measured reflection is not finite");
    const double re = r_measured.real();
    if (re < -1.0 || re > 1.0) {
        std::ostringstream msg;
        msg << "Re r = " << re << " lies outside the attainable range [-1, 1]";
        throw RangeError(msg.str());
    }

    const auto forward = [&](double n) {
        return resonant_reflection(p, BathOccupation::uniform(p.levels, n), rabi_ratio,
                                   options.include_cross_terms);
    };
    const auto not_bracketed = [](double lo, double hi, double target) {
        std::ostringstream msg;
        msg << "measured value " << target << " is not bracketed by the forward model range ["
            << lo << ", " << hi << "]";
        return RangeError(msg.str());
    };

    const double n_max = options.max_occupation;
    if (options.mode == InversionMode::real_part) {
        const auto f = [&](double n) { return forward(n).real() - re; };
        const double lo = f(0.0);
        const double hi = f(n_max);
        if (lo > 0.0 || hi < 0.0)
            throw not_bracketed(lo + re, hi + re, re);
        if (lo == 0.0)
            return 0.0;
        return bracketed_root(f, 0.0, n_max, options.tolerance);
    }

    // |r| decreases monotonically with n only while Re r < 0.
    double branch_end = n_max;
    if (forward(n_max).real() > 0.0)
        branch_end = bracketed_root([&](double n) { return forward(n).real(); }, 0.0, n_max,
                                    options.tolerance);
    const double target = -std::abs(r_measured);
    const auto g = [&](double n) { return -std::abs(forward(n)) - target; };
    const double lo = g(0.0);
    const double hi = g(branch_end);
    if (lo > 0.0 || hi < 0.0)
        throw not_bracketed(lo + target, hi + target, target);
    if (lo == 0.0)
        return 0.0;
    return bracketed_root(g, 0.0, branch_end, options.tolerance);
}

} // namespace mwthermo
