#include "mwthermo/setup_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "mwthermo/calibration.hpp"
#include "mwthermo/constants.hpp"
#include "mwthermo/errors.hpp"
#include "mwthermo/random.hpp"

namespace mwthermo {

namespace {

constexpr double kDenominatorFloor = 1e-9;
constexpr std::size_t kMinNoiseSamples = 1024;

std::size_t next_power_of_two(std::size_t n)
{
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

// Angular frequency of FFT bin k for a record of length n.
double bin_frequency(std::size_t k, std::size_t n, double sample_rate)
{
    const double index = k < n / 2 ? static_cast<double>(k)
                                   : static_cast<double>(k) - static_cast<double>(n);
    return constants::two_pi * index * sample_rate / static_cast<double>(n);
}

Complex circulator_transmission(double gamma, Complex load)
{
    const double s21 = 1.0 - gamma * gamma;
    const Complex denominator = 1.0 + gamma * load; // 1 - s22 G_L with s22 = -gamma
    if (std::abs(denominator) < kDenominatorFloor)
        throw InvalidArgument("circulator network denominator 1 - s22 G_L vanishes");
    return gamma + s21 * load * s21 / denominator;
}

} // namespace

double NormalGenerator::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

void CirculatorParams::validate() const
{
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw InvalidArgument("circulator isolation gamma must lie in [0, 1)");
    if (!std::isfinite(delay) || !std::isfinite(phase))
        throw InvalidArgument("circulator delay and phase must be finite");
    if (!(pre_attenuation > 0.0) || !(post_gain > 0.0))
        throw InvalidArgument("circulator attenuation and gain must be positive");
}

Complex referenced_reflection_with_circulator(const CirculatorParams& c, Complex r_ideal, double omega)
{
    c.validate();
    if (!(std::abs(r_ideal) <= 1.0 + 1e-12))
        throw InvalidArgument("ideal reflection must satisfy |r| <= 1");
    const Complex rotation = std::polar(1.0, omega * c.delay + c.phase);
    const double ag = c.pre_attenuation * c.post_gain;
    const Complex reference = ag * circulator_transmission(c.gamma, rotation);
    if (std::abs(reference) < kDenominatorFloor)
        throw InvalidArgument("circulator reference transmission vanishes");
    return ag * circulator_transmission(c.gamma, r_ideal * rotation) / reference;
}

double circulator_real_error_series(double gamma, double delta_r, double theta)
{
    const double s = std::sin(theta);
    return 8.0 * gamma * gamma * s * s + 2.0 * gamma * delta_r * std::cos(theta);
}

CirculatorErrorScan circulator_worst_case(double gamma, Complex r_ideal, int samples)
{
    if (samples < 1)
        throw InvalidArgument("scan needs at least one sample");
    CirculatorErrorScan scan;
    CirculatorParams c;
    c.gamma = gamma;
    for (int k = 0; k < samples; ++k) {
        c.phase = 2.0 * std::numbers::pi * k / samples;
        const Complex r = referenced_reflection_with_circulator(c, r_ideal, 0.0);
        const double re = std::abs(r.real() - r_ideal.real());
        const double mag = std::abs(std::abs(r) - std::abs(r_ideal));
        if (re > scan.max_real_error) {
            scan.max_real_error = re;
            scan.theta_real = c.phase;
        }
        if (mag > scan.max_magnitude_error) {
            scan.max_magnitude_error = mag;
            scan.theta_magnitude = c.phase;
        }
        scan.max_imag_error = std::max(scan.max_imag_error, std::abs(r.imag() - r_ideal.imag()));
    }
    return scan;
}

double GainProfile::at(double w) const
{
    if (omega.empty() || w < omega.front() || w > omega.back())
        return 0.0;
    const auto it = std::upper_bound(omega.begin(), omega.end(), w);
    if (it == omega.end())
        return gain.back();
    const std::size_t i = static_cast<std::size_t>(it - omega.begin());
    const double t = (w - omega[i - 1]) / (omega[i] - omega[i - 1]);
    return gain[i - 1] + t * (gain[i] - gain[i - 1]);
}

NoiseRealization synthesize_band_noise(const NoiseSpectrum& profile, double sample_rate, double duration,
                                       std::uint64_t seed, const GainProfile* gain)
{
    if (!(sample_rate > 0.0) || !(duration > 0.0))
        throw InvalidArgument("sample rate and duration must be positive");
    const double nyquist = std::numbers::pi * sample_rate;
    const auto w = profile.omega();
    const auto s = profile.density();
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (s[i] > 0.0 && (w[i] < 0.0 || w[i] > nyquist)) {
            std::ostringstream msg;
            msg << "noise profile has content at " << w[i] / constants::two_pi
                << " Hz, outside the positive Nyquist band [0, " << sample_rate / 2.0 << "] Hz";
            throw InvalidArgument(msg.str());
        }
    }
    const double requested = std::floor(duration * sample_rate + 0.5);
    if (requested < static_cast<double>(kMinNoiseSamples))
        throw InvalidArgument("noise record must contain at least 1024 samples");
    const auto count = static_cast<std::size_t>(requested);
    const std::size_t n = next_power_of_two(count);

    NormalGenerator rng(seed);
    std::vector<Complex> white(n);
    for (auto& x : white)
        x = rng.normal();

    Eigen::FFT<double> fft;
    std::vector<Complex> spectrum;
    fft.fwd(spectrum, white);
    for (std::size_t k = 0; k < n; ++k) {
        const double omega = bin_frequency(k, n, sample_rate);
        double amplitude = 0.0;
        if (k > 0 && k < n / 2) {
            amplitude = std::sqrt(sample_rate * profile.at(omega));
            if (gain)
                amplitude *= gain->at(omega);
        }
        spectrum[k] *= amplitude;
    }
    std::vector<Complex> record;
    fft.inv(record, spectrum);
    record.resize(count);

    return {sample_rate, std::move(record), profile, seed};
}

std::vector<Complex> apply_transfer(std::span<const Complex> samples, double sample_rate,
                                    const std::function<Complex(double)>& transfer)
{
    if (samples.empty())
        return {};
    const std::size_t n = samples.size();
    Eigen::FFT<double> fft;
    std::vector<Complex> input(samples.begin(), samples.end());
    std::vector<Complex> spectrum;
    fft.fwd(spectrum, input);
    for (std::size_t k = 0; k < n; ++k)
        spectrum[k] *= transfer(bin_frequency(k, n, sample_rate));
    std::vector<Complex> out;
    fft.inv(out, spectrum);
    return out;
}

NoiseSpectrum estimate_psd(std::span<const Complex> samples, double sample_rate, std::size_t segment_length)
{
    if (segment_length < 2 || (segment_length & (segment_length - 1)) != 0)
        throw InvalidArgument("segment length must be a power of two");
    const std::size_t segments = samples.size() / segment_length;
    if (segments == 0)
        throw InvalidArgument("record shorter than one segment");

    std::vector<double> window(segment_length);
    double window_power = 0.0;
    for (std::size_t i = 0; i < segment_length; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i)
                                         / static_cast<double>(segment_length));
        window_power += window[i] * window[i];
    }

    Eigen::FFT<double> fft;
    std::vector<double> accum(segment_length, 0.0);
    std::vector<Complex> buffer(segment_length);
    std::vector<Complex> spectrum;
    for (std::size_t s = 0; s < segments; ++s) {
        for (std::size_t i = 0; i < segment_length; ++i)
            buffer[i] = samples[s * segment_length + i] * window[i];
        fft.fwd(spectrum, buffer);
        for (std::size_t k = 0; k < segment_length; ++k)
            accum[k] += std::norm(spectrum[k]);
    }

    const double norm = 1.0 / (static_cast<double>(segments) * sample_rate * window_power);
    std::vector<double> omega(segment_length);
    std::vector<double> density(segment_length);
    const std::size_t half = segment_length / 2;
    for (std::size_t j = 0; j < segment_length; ++j) {
        const std::size_t k = (j + half) % segment_length;
        omega[j] = bin_frequency(k, segment_length, sample_rate);
        density[j] = accum[k] * norm;
    }
    return NoiseSpectrum(std::move(omega), std::move(density));
}

GainProfile mixer_transfer_compensation(const NoiseSpectrum& measured, const NoiseSpectrum& target)
{
    std::vector<double> grid(measured.omega().begin(), measured.omega().end());
    grid.insert(grid.end(), target.omega().begin(), target.omega().end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    GainProfile out;
    for (const double w : grid) {
        const double t = target.at(w);
        double g = 0.0;
        if (t > 0.0) {
            const double m = measured.at(w);
            if (!(m > 0.0)) {
                std::ostringstream msg;
                msg << "measured density vanishes at " << w / constants::two_pi
                    << " Hz inside the target band";
                throw InvalidArgument(msg.str());
            }
            g = std::sqrt(t / m);
        }
        out.omega.push_back(w);
        out.gain.push_back(g);
    }
    return out;
}

BathOccupation transition_occupations(const TransmonParams& p, const NoiseSpectrum& spectrum)
{
    p.validate();
    std::vector<double> n(static_cast<std::size_t>(p.levels - 1));
    for (int j = 1; j < p.levels; ++j)
        n[static_cast<std::size_t>(j - 1)] =
            lorentzian_overlap(spectrum, p.transition_frequency(j), j * p.gamma_rad);
    return BathOccupation(std::move(n));
}

BathOccupation lorentzian_transition_occupations(const TransmonParams& p, double center, double width,
                                                 double amplitude)
{
    p.validate();
    if (!(width > 0.0))
        throw InvalidArgument("Lorentzian noise width must be positive");
    if (!(amplitude >= 0.0))
        throw InvalidArgument("Lorentzian noise amplitude must be non-negative");
    // Two Lorentzians convolve into one whose width is the sum of both.
    std::vector<double> n(static_cast<std::size_t>(p.levels - 1));
    for (int j = 1; j < p.levels; ++j)
        n[static_cast<std::size_t>(j - 1)] =
            amplitude * lorentzian(center - p.transition_frequency(j), j * p.gamma_rad + width);
    return BathOccupation(std::move(n));
}

std::vector<SweepPoint> noise_spectroscopy_sweep(const TransmonParams& p, std::span<const double> centers,
                                                 double width, double amplitude, double rabi_ratio,
                                                 bool include_cross_terms)
{
    std::vector<SweepPoint> out;
    out.reserve(centers.size());
    for (const double c : centers) {
        const BathOccupation bath = lorentzian_transition_occupations(p, c, width, amplitude);
        out.push_back({c, resonant_reflection(p, bath, rabi_ratio, include_cross_terms)});
    }
    return out;
}

std::vector<ReflectionTrace> generate_synthetic_experiment(const TransmonParams& truth, double attenuation,
                                                           std::span<const double> powers_watt,
                                                           std::span<const double> detunings,
                                                           double noise_level, std::uint64_t seed,
                                                           const SyntheticExperimentOptions& options)
{
    truth.validate();
    if (!(noise_level >= 0.0) || !std::isfinite(noise_level))
        throw InvalidArgument("noise level must be non-negative");
    if (options.circulator)
        options.circulator->validate();
    const BathOccupation bath = options.bath ? *options.bath : BathOccupation::zero(truth.levels);

    NormalGenerator rng(seed);
    std::vector<ReflectionTrace> traces;
    traces.reserve(powers_watt.size());
    for (const double power : powers_watt) {
        const double single[] = {power};
        ReflectionTrace trace = reflection_spectrum(truth, bath, single, detunings, attenuation,
                                                    options.include_cross_terms);
        for (auto& point : trace.points) {
            if (options.circulator)
                point.r = referenced_reflection_with_circulator(*options.circulator, point.r,
                                                                hz_to_angular(point.frequency_hz));
            if (noise_level > 0.0) {
                const double re = rng.normal();
                const double im = rng.normal();
                point.r += noise_level * Complex(re, im);
            }
        }
        trace.reference_mode = ReferenceMode::detuned;
        std::ostringstream power_text;
        power_text.precision(17);
        power_text << power;
        trace.metadata["power_watt"] = power_text.str();
        trace.metadata["seed"] = std::to_string(seed);
        traces.push_back(std::move(trace));
    }
    return traces;
}

} // namespace mwthermo
