#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mwthermo/constants.hpp"
#include "mwthermo/errors.hpp"
#include "mwthermo/lindblad.hpp"
#include "mwthermo/thermometry.hpp"
#include "oracles.hpp"

using namespace mwthermo;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

TransmonParams device_transmon()
{
    TransmonParams p;
    p.omega_ge = kTwoPi * 5.332e9;
    p.gamma_rad = kTwoPi * 38e6;
    p.alpha = -kTwoPi * 217e6;
    p.levels = 4;
    return p;
}

double omega_ef() { return device_transmon().omega_ge + device_transmon().alpha; }

// Oracle Lorentzian, written independently of the library.
double lorentz(double x, double fwhm)
{
    return fwhm / (2 * std::numbers::pi) / (x * x + fwhm * fwhm / 4);
}

} // namespace

TEST_CASE("Bose occupation")
{
    const double omega = 1e10;
    const double t = constants::hbar * omega / constants::k_boltzmann;
    CHECK(bose_occupation(omega, t) == doctest::Approx(1 / (std::exp(1.0) - 1)).epsilon(1e-14));
    CHECK(bose_occupation(omega, t) == doctest::Approx(0.5820).epsilon(1e-4));
    CHECK(bose_occupation(kTwoPi * 5.332e9, 0.037) == doctest::Approx(1.0e-3).epsilon(0.05));
    CHECK(bose_occupation(omega, 1e-9) == 0.0);
    CHECK_THROWS_AS(bose_occupation(omega, 0.0), InvalidArgument);
    CHECK_THROWS_AS(bose_occupation(-1.0, 1.0), InvalidArgument);
}

TEST_CASE("effective occupation weighting")
{
    const double w = kTwoPi * 5e9;
    CHECK(effective_occupation(w, w, 0.1) == doctest::Approx(bose_occupation(w, 0.1)).epsilon(1e-15));
    const double n = effective_occupation(device_transmon().omega_ge, kTwoPi * 5.115e9, 0.210);
    CHECK(n == doctest::Approx(0.4).epsilon(0.1));
    double previous = 0.0;
    for (int k = 1; k <= 500; ++k) {
        const double value = effective_occupation(device_transmon().omega_ge, omega_ef(), 0.002 * k);
        CHECK(value > previous);
        previous = value;
    }
}

TEST_CASE("temperature inversion round-trips")
{
    const double wge = device_transmon().omega_ge;
    for (const double t0 : {0.010, 0.037, 0.210, 1.0}) {
        CAPTURE(t0);
        const double t = temperature_from_occupation(wge, omega_ef(), effective_occupation(wge, omega_ef(), t0));
        CHECK(std::abs(t - t0) < 1e-9 * t0);
    }
    for (int k = 0; k <= 100; ++k) {
        const double t0 = 0.005 * std::pow(400.0, k / 100.0);
        const double t = temperature_from_occupation(wge, omega_ef(), effective_occupation(wge, omega_ef(), t0));
        CHECK(std::abs(t - t0) < 1e-9 * t0);
    }
}

TEST_CASE("temperature at the measured occupations")
{
    const double wge = device_transmon().omega_ge;
    CHECK(temperature_from_occupation(wge, omega_ef(), 1.0e-3) == doctest::Approx(0.037).epsilon(0.03));
    CHECK(temperature_from_occupation(wge, omega_ef(), 0.4) == doctest::Approx(0.210).epsilon(0.05));
    CHECK_THROWS_AS(temperature_from_occupation(wge, omega_ef(), 0.0), InvalidArgument);
    CHECK_THROWS_AS(temperature_from_occupation(wge, omega_ef(), -1.0), InvalidArgument);
    CHECK_THROWS_AS(temperature_from_occupation(wge, omega_ef(), 1e-200), RangeError);
    CHECK_THROWS_AS(temperature_from_occupation(wge, omega_ef(), 1e6), RangeError);
}

TEST_CASE("reflection inversion round-trips over the thermometry range")
{
    const auto p = device_transmon();
    for (const double w : {0.07, 0.33}) {
        for (const double n : {1e-4, 1e-3, 0.01, 0.1, 0.5}) {
            CAPTURE(w);
            CAPTURE(n);
            const auto r = resonant_reflection(p, BathOccupation::uniform(4, n), w);
            CHECK(std::abs(occupation_from_reflection(r, p, w) - n) < 1e-6);
        }
    }
}

TEST_CASE("magnitude-mode inversion on the reflecting branch")
{
    const auto p = device_transmon();
    InversionOptions options;
    options.mode = InversionMode::magnitude;
    for (const double n : {1e-4, 1e-3, 0.01, 0.05}) {
        const auto r = resonant_reflection(p, BathOccupation::uniform(4, n), 1e-3);
        CHECK(std::abs(occupation_from_reflection(r, p, 1e-3, options) - n) < 1e-6);
    }
}

TEST_CASE("Re r sweep maps monotonically onto the measured occupation range")
{
    const auto p = device_transmon();
    double previous = -1.0;
    for (int k = 0; k <= 40; ++k) {
        const double re = -0.99 + 1.59 * k / 40.0;
        const double n = occupation_from_reflection({re, 0.0}, p, 1e-3);
        CHECK(n > previous);
        previous = n;
    }
    CHECK(occupation_from_reflection({-0.99, 0.0}, p, 1e-3) == doctest::Approx(1e-3).epsilon(0.15));
    const double top = occupation_from_reflection({0.6, 0.0}, p, 1e-3);
    CHECK(top > 0.35);
    CHECK(top < 0.5);
}

TEST_CASE("weak-occupation inversion agrees with the series inversion")
{
    const auto p = device_transmon();
    const double w = 1e-3;
    const double g = p.gamma_rad / std::abs(p.alpha);
    const double linear = 12.0 * (1.0 / std::complex<double>(1.0, 1.5 * g)).real();
    for (const double n : {1e-4, 5e-4, 1e-3, 2e-3}) {
        CAPTURE(n);
        const auto r = resonant_reflection(p, BathOccupation::uniform(4, n), w);
        const double series = (r.real() + 1.0 - 4 * w * w / (1 + g * g)) / linear;
        CHECK(std::abs(occupation_from_reflection(r, p, w) - series) < 0.01 * n);
    }
}

TEST_CASE("unattainable reflections are reported")
{
    const auto p = device_transmon();
    CHECK_THROWS_AS(occupation_from_reflection({1.2, 0.0}, p, 1e-3), RangeError);
    CHECK_THROWS_AS(occupation_from_reflection({-1.5, 0.0}, p, 1e-3), RangeError);
    CHECK_THROWS_AS(occupation_from_reflection({-1.0, 0.0}, p, 1e-3), RangeError);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(occupation_from_reflection({nan, 0.0}, p, 1e-3), RangeError);
    CHECK_THROWS_AS(occupation_from_reflection({-0.5, 0.0}, p, 0.0), InvalidArgument);
}

TEST_CASE("Lorentzian normalization")
{
    CHECK(lorentzian(0.0, 2.0) == doctest::Approx(1 / std::numbers::pi).epsilon(1e-15));
    CHECK(lorentzian(1.0, 2.0) == doctest::Approx(0.5 / std::numbers::pi).epsilon(1e-15));
    CHECK(oracle::simpson([](double x) { return lorentzian(x, 1.0); }, -2e3, 2e3, 2000000)
          == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("noise spectrum validation")
{
    CHECK_THROWS_AS(NoiseSpectrum({1.0, 2.0}, {1.0}), InvalidArgument);
    CHECK_THROWS_AS(NoiseSpectrum({2.0, 1.0}, {1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(NoiseSpectrum({1.0, 2.0}, {1.0, -1.0}), InvalidArgument);
    const NoiseSpectrum s({0.0, 2.0}, {1.0, 3.0});
    CHECK(s.at(1.0) == doctest::Approx(2.0));
    CHECK(s.at(-1.0) == 0.0);
    CHECK(s.at(3.0) == 0.0);
}

TEST_CASE("overlap integral agrees with quadrature on piecewise-linear spectra")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> w = {-3.0};
        std::vector<double> s = {u(rng)};
        for (int k = 0; k < 12; ++k) {
            w.push_back(w.back() + 0.05 + 0.6 * u(rng));
            s.push_back(2.0 * u(rng));
        }
        const NoiseSpectrum spectrum(w, s);
        const double center = 2.0 * (u(rng) - 0.5);
        const double width = 0.1 + u(rng);
        const double exact = lorentzian_overlap(spectrum, center, width);
        double quad = 0.0;
        for (std::size_t i = 1; i < w.size(); ++i)
            quad += oracle::simpson([&](double x) { return lorentz(x - center, width) * spectrum.at(x); },
                                    w[i - 1], w[i], 4000);
        CHECK(std::abs(exact - quad) < 1e-10);
    }
}

TEST_CASE("windowing coefficient for a flat 400 MHz band")
{
    const auto p = device_transmon();
    const double mid = 0.5 * (p.omega_ge + omega_ef());
    const auto band = NoiseSpectrum::flat(mid - kTwoPi * 200e6, mid + kTwoPi * 200e6, 1.0);
    CHECK(windowing_weight(band, p) == doctest::Approx(0.89).epsilon(0.01 / 0.89));
    const auto wide = NoiseSpectrum::flat(p.omega_ge - 1e6 * p.gamma_rad, p.omega_ge + 1e6 * p.gamma_rad, 1.0);
    CHECK(windowing_weight(wide, p) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("narrow peak at the fundamental weighs by the line shapes at the peak")
{
    const auto p = device_transmon();
    const double half = 1e-4 * p.gamma_rad;
    const double area = 2.5;
    const NoiseSpectrum peak({p.omega_ge - half, p.omega_ge, p.omega_ge + half}, {0.0, area / half, 0.0});
    const auto weight = [&](double x) {
        return (8.0 / 12.0) * lorentz(x - p.omega_ge, p.gamma_rad) + (4.0 / 12.0) * lorentz(x - omega_ef(), 2 * p.gamma_rad);
    };
    const double quad = oracle::simpson([&](double x) { return weight(x) * peak.at(x); }, p.omega_ge - half,
                                        p.omega_ge, 2000)
                        + oracle::simpson([&](double x) { return weight(x) * peak.at(x); }, p.omega_ge,
                                          p.omega_ge + half, 2000);
    const double value = windowing_weight(peak, p);
    CHECK(value == doctest::Approx(quad).epsilon(1e-9));
    const double expected = area * ((8.0 / 12.0) * lorentz(0.0, p.gamma_rad) + (4.0 / 12.0) * lorentz(p.alpha, 2 * p.gamma_rad));
    CHECK(value == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("windowing is linear in the spectrum and splits 2:1 between the lines")
{
    const auto p = device_transmon();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> grid;
    for (int k = 0; k <= 60; ++k)
        grid.push_back(p.omega_ge + p.alpha * 2.0 * (k / 60.0 - 0.25));
    std::sort(grid.begin(), grid.end());
    std::vector<double> s1, s2, mix;
    const double a = 0.7, b = 1.9;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        s1.push_back(u(rng));
        s2.push_back(u(rng));
        mix.push_back(a * s1.back() + b * s2.back());
    }
    const double lhs = windowing_weight(NoiseSpectrum(grid, mix), p);
    const double rhs = a * windowing_weight(NoiseSpectrum(grid, s1), p) + b * windowing_weight(NoiseSpectrum(grid, s2), p);
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));

    const auto wide = NoiseSpectrum::flat(p.omega_ge - 1e7 * p.gamma_rad, p.omega_ge + 1e7 * p.gamma_rad, 1.0);
    const double ge = lorentzian_overlap(wide, p.omega_ge, p.gamma_rad);
    const double ef = lorentzian_overlap(wide, omega_ef(), 2 * p.gamma_rad);
    CHECK(((8.0 / 12.0) * ge) / ((4.0 / 12.0) * ef) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("attenuator chain limits")
{
    const double omega = kTwoPi * 5.332e9;
    AttenuatorChain identity;
    identity.source_occupation = 0.37;
    identity.stages = {{1.0, 4.0}, {1.0, 0.1}};
    for (const double n : chain_occupation(identity, omega))
        CHECK(n == doctest::Approx(0.37).epsilon(1e-15));

    AttenuatorChain thermalizing;
    thermalizing.source_temperature = 300.0;
    thermalizing.stages = {{std::numeric_limits<double>::infinity(), 0.05}};
    CHECK(chain_occupation(thermalizing, omega).front() == doctest::Approx(oracle::bose(omega, 0.05)).epsilon(1e-14));
}

TEST_CASE("three 20 dB stages from room temperature")
{
    const double omega = kTwoPi * 5.332e9;
    AttenuatorChain chain;
    chain.source_temperature = 300.0;
    chain.stages = {{100.0, 4.0}, {100.0, 0.1}, {100.0, 0.01}};
    double n = oracle::bose(omega, 300.0);
    for (const double t : {4.0, 0.1, 0.01})
        n = n / 100.0 + 0.99 * oracle::bose(omega, t);
    const auto result = chain_occupation(chain, omega);
    REQUIRE(result.size() == 3);
    CHECK(result.back() == doctest::Approx(n).epsilon(5e-4));
    CHECK(result.back() == doctest::Approx(n).epsilon(1e-14));
}

TEST_CASE("chain occupation stays within its inputs")
{
    const double omega = kTwoPi * 6e9;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        AttenuatorChain chain;
        chain.source_temperature = 0.01 + 300.0 * u(rng);
        double lo = bose_occupation(omega, *chain.source_temperature);
        double hi = lo;
        const int stages = 1 + trial % 5;
        for (int s = 0; s < stages; ++s) {
            const double t = 0.005 + 5.0 * u(rng);
            chain.stages.push_back({std::pow(10.0, 3.0 * u(rng)), t});
            lo = std::min(lo, bose_occupation(omega, t));
            hi = std::max(hi, bose_occupation(omega, t));
        }
        for (const double n : chain_occupation(chain, omega)) {
            CHECK(n >= lo * (1 - 1e-12));
            CHECK(n <= hi * (1 + 1e-12));
        }
    }
}

TEST_CASE("invalid chains are rejected")
{
    AttenuatorChain chain;
    chain.stages = {{0.5, 1.0}};
    CHECK_THROWS_AS(chain_occupation(chain, 1e10), InvalidArgument);
    chain.stages = {{2.0, 0.0}};
    CHECK_THROWS_AS(chain_occupation(chain, 1e10), InvalidArgument);
    chain.stages = {{2.0, 1.0}};
    chain.source_occupation = -1.0;
    CHECK_THROWS_AS(chain_occupation(chain, 1e10), InvalidArgument);
}
