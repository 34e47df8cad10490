// Acceptance report: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "mwthermo/analytic.hpp"
#include "mwthermo/calibration.hpp"
#include "mwthermo/constants.hpp"
#include "mwthermo/errors.hpp"
#include "mwthermo/lindblad.hpp"
#include "mwthermo/setup_sim.hpp"
#include "mwthermo/thermometry.hpp"

using namespace mwthermo;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

TransmonParams device_transmon(int levels = 4)
{
    TransmonParams p;
    p.omega_ge = kTwoPi * 5.332e9;
    p.gamma_rad = kTwoPi * 38e6;
    p.alpha = -kTwoPi * 217e6;
    p.levels = levels;
    return p;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Report
{
    int failures = 0;

    void line(int id, bool pass, const std::string& detail)
    {
        std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
        if (!pass)
            ++failures;
    }
};

std::string fmt(const char* format, auto... args)
{
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, format, args...);
    return buffer;
}

double brent_min(const std::function<double(double)>& f, double lo, double hi, double* where = nullptr)
{
    const auto [x, fx] = boost::math::tools::brent_find_minima(f, lo, hi, 40);
    if (where)
        *where = x;
    return fx;
}

void criterion_1(Report& report)
{
    const auto start = Clock::now();
    const TransmonParams p = device_transmon(2);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double n = i / 19.0;
        for (int j = 0; j < 20; ++j) {
            // The drive cannot vanish exactly, so the ratio grid starts one step above zero.
            const double x = (j + 1) / 20.0;
            const Complex r = resonant_reflection(p, BathOccupation::uniform(2, n), x);
            worst = std::max(worst, std::abs(r - Complex(r_two_level(n, x), 0.0)));
        }
    }
    const double elapsed = seconds_since(start);
    report.line(1, worst < 1e-8 && elapsed < 10.0,
                fmt("max |r_numeric - r_TLS| = %.3g (tol 1e-8) over 20x20 grid, n in [0,1], W/G in [0.05,1]; %.2f s (limit 10 s)",
                    worst, elapsed));
}

void criterion_2(Report& report)
{
    const auto start = Clock::now();
    TransmonParams p;
    p.omega_ge = 100.0;
    p.gamma_rad = 1.0;
    p.alpha = -1.0 / 0.18;
    p.levels = 3;
    const double x = 1e-3;
    const int points = 40;
    Eigen::MatrixXd design(points, 2);
    Eigen::VectorXcd residual(points);
    for (int k = 0; k < points; ++k) {
        const double n = 1e-4 * std::pow(100.0, k / double(points - 1));
        const Complex numeric = resonant_reflection(p, BathOccupation::uniform(3, n), x);
        residual(k) = numeric - r0_first_order(n, n, 0.0, 0.0, x, 0.18);
        design(k, 0) = n;
        design(k, 1) = n * n;
    }
    const auto qr = design.colPivHouseholderQr();
    const Eigen::VectorXd re = qr.solve(residual.real().eval());
    const Eigen::VectorXd im = qr.solve(residual.imag().eval());
    const double slope = std::abs(Complex(re(0), im(0)));
    const double limit = 0.01 * std::abs(12.0 / Complex(1.0, 1.5 * 0.18));

    // Straight-line regression on n alone, reported for reference: it absorbs the n^2 term.
    Eigen::MatrixXd line(points, 2);
    line.col(0).setOnes();
    line.col(1) = design.col(0);
    const auto lqr = line.colPivHouseholderQr();
    const double naive = std::abs(Complex(lqr.solve(residual.real().eval())(1), lqr.solve(residual.imag().eval())(1)));
    const double elapsed = seconds_since(start);
    report.line(2, slope < limit && elapsed < 30.0,
                fmt("linear-in-n residual coefficient %.3g (limit %.3g) from a joint n, n^2 fit; quadratic "
                    "coefficient (%.1f%+.1fi); straight-line slope %.3g; %.2f s",
                    slope, limit, re(1), im(1), naive, elapsed));
}

void criterion_3(Report& report)
{
    const TransmonParams p = device_transmon();
    const LiouvillianTerms terms(p.levels, BathOccupation::zero(p.levels));
    const auto magnitude = [&](double detuning, double ratio) {
        DriveParams d;
        d.detuning = detuning;
        d.rabi_rate = ratio * p.gamma_rad;
        return std::abs(reflection_at(terms, p, d));
    };
    double best_ratio = 0.0;
    const double minimum = brent_min([&](double w) { return magnitude(0.0, w); }, 0.3, 1.2, &best_ratio);
    const bool depth_ok = std::abs(minimum - 0.1) <= 0.05;
    const bool ratio_ok = std::abs(best_ratio / (1 / std::numbers::sqrt2) - 1.0) < 0.1;

    double cancel_detuning = 0.0;
    const double residual = brent_min(
        [&](double delta) { return brent_min([&](double w) { return magnitude(delta, w); }, 0.3, 1.2); },
        -kTwoPi * 20e6, kTwoPi * 10e6, &cancel_detuning);
    const double expected = cancellation_detuning(p.gamma_rad, p.alpha);
    const double rel = std::abs(cancel_detuning / expected - 1.0);
    report.line(3, depth_ok && ratio_ok && rel < 0.15 && residual < 1e-3,
                fmt("resonant min |r| = %.4f (target 0.1 +/- 0.05) at W/G = %.4f (1/sqrt2 = 0.7071, tol 10%%); "
                    "full cancellation |r| = %.2g at detuning %.3f MHz vs G^2/2a = %.3f MHz (rel %.1f%%, tol 15%%)",
                    minimum, best_ratio, residual, cancel_detuning / kTwoPi / 1e6, expected / kTwoPi / 1e6,
                    100 * rel));
}

void criterion_4(Report& report)
{
    const TransmonParams p = device_transmon();
    double worst = 0.0;
    for (const double x : {0.07, 0.33})
        for (int k = 0; k < 30; ++k) {
            const double n = 1e-4 * std::pow(5000.0, k / 29.0);
            const Complex r = resonant_reflection(p, BathOccupation::uniform(4, n), x);
            worst = std::max(worst, std::abs(occupation_from_reflection(r, p, x) - n));
        }
    InversionOptions magnitude_mode;
    magnitude_mode.mode = InversionMode::magnitude;
    const double n_drop = occupation_from_reflection({-(1.0 - 0.012), 0.0}, p, 1e-3, magnitude_mode);
    const double omega_ef = p.omega_ge + p.alpha;
    const double t_low = temperature_from_occupation(p.omega_ge, omega_ef, 1.0e-3);
    const double t_high = temperature_from_occupation(p.omega_ge, omega_ef, 0.4);
    const bool pass = worst < 1e-6 && std::abs(n_drop / 1e-3 - 1.0) < 0.1 && std::abs(t_low - 0.037) < 0.002
                      && std::abs(t_high - 0.210) < 0.002;
    report.line(4, pass,
                fmt("round-trip max |dn| = %.2g (tol 1e-6); drop 0.012 -> n = %.4g (1.0e-3 +/- 10%%); "
                    "T(n=1.0e-3) = %.2f mK (37 +/- 2); T(n=0.4) = %.2f mK (210 +/- 2)",
                    worst, n_drop, 1e3 * t_low, 1e3 * t_high));
}

void criterion_5(Report& report)
{
    const TransmonParams p = device_transmon();
    const double omega_ef = p.omega_ge + p.alpha;
    const double mid = 0.5 * (p.omega_ge + omega_ef);
    const double w_win = windowing_weight(NoiseSpectrum::flat(mid - kTwoPi * 200e6, mid + kTwoPi * 200e6, 1.0), p);

    const double width = kTwoPi * 10e6;
    const double amplitude = 1e-4 * std::numbers::pi * (p.gamma_rad + width) / 2;
    std::vector<double> centers;
    for (int k = 0; k <= 300; ++k)
        centers.push_back(p.omega_ge + p.alpha * (2.0 - 3.0 * k / 300.0));
    const auto sweep = noise_spectroscopy_sweep(p, centers, width, amplitude, 1e-3);
    const Complex base = resonant_reflection(p, BathOccupation::zero(4), 1e-3);
    Eigen::MatrixXd m(centers.size(), 2);
    Eigen::VectorXd y(centers.size());
    for (std::size_t k = 0; k < centers.size(); ++k) {
        m(k, 0) = amplitude * lorentzian(centers[k] - p.omega_ge, p.gamma_rad + width);
        m(k, 1) = amplitude * lorentzian(centers[k] - omega_ef, 2 * p.gamma_rad + width);
        y(k) = sweep[k].r.real() - base.real();
    }
    const Eigen::VectorXd ab = m.colPivHouseholderQr().solve(y);
    const double ratio = ab(0) / ab(1);
    report.line(5, std::abs(w_win - 0.89) <= 0.01 && std::abs(ratio / 2.0 - 1.0) < 0.01,
                fmt("w_win = %.4f (0.89 +/- 0.01); Lorentzian sweep ge:ef = %.4f (2 +/- 1%%)", w_win, ratio));
}

void criterion_6(Report& report)
{
    const double argmin = netp_argmin();
    const double r0 = responsivity(0.0);
    SensitivityInput in;
    in.rabi_ratio = argmin;
    in.eta = 0.014;
    in.gamma_rad = kTwoPi * 38e6;
    in.omega_ge = kTwoPi * 5.332e9;
    const double value = netp(in);
    const double power = nep(in, value);
    const bool pass = std::abs(argmin - 0.42) <= 0.01 && r0 == 12.0 && value > 2e-4 && value < 8e-4
                      && power > 200e-21 && power < 800e-21;
    report.line(6, pass,
                fmt("argmin W/G = %.4f (0.42 +/- 0.01); R(0) = %.15g (12); NETP(eta=0.014) = %.3g photons/rtHz "
                    "(4e-4 within x2); NEP = %.0f zW/rtHz (400 within x2)",
                    argmin, r0, value, power * 1e21));
}

void criterion_7(Report& report)
{
    const auto scan = circulator_worst_case(0.08, {-1.0 + 0.06, 0.0});
    const auto ideal = circulator_worst_case(0.0, {-1.0 + 0.06, 0.0});
    const double re_rel = std::abs(scan.max_real_error / 0.05 - 1.0);
    const double mag_rel = std::abs(scan.max_magnitude_error / 0.01 - 1.0);
    const bool exact = std::max({ideal.max_real_error, ideal.max_magnitude_error, ideal.max_imag_error}) < 1e-15;
    report.line(7, re_rel < 0.05 && mag_rel < 0.05 && exact,
                fmt("gamma=0.08, dr=0.06: max Re error %.5f (0.05 +/- 5%%, off %.1f%%); max |r| error %.5f "
                    "(0.01 +/- 5%%, off %.1f%%); gamma=0 distortion %.1g (tol 1e-15)",
                    scan.max_real_error, 100 * re_rel, scan.max_magnitude_error, 100 * mag_rel,
                    std::max(ideal.max_real_error, ideal.max_imag_error)));
}

void criterion_8(Report& report)
{
    const auto start = Clock::now();
    const TransmonParams truth = device_transmon();
    const double attenuation = 1e-7;
    std::vector<double> powers;
    for (const double x : {0.05, 0.5, 5.0, 50.0})
        powers.push_back(power_from_drive_rate(x * truth.gamma_rad, attenuation, truth.gamma_rad, truth.omega_ge));
    std::vector<double> detunings;
    for (int k = 0; k < 201; ++k)
        detunings.push_back(truth.gamma_rad * (-8.0 + 10.0 * k / 200.0));

    int success = 0;
    double worst = 0.0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        const auto traces = generate_synthetic_experiment(truth, attenuation, powers, detunings, 0.01, 1000 + seed);
        try {
            const auto guess = estimate_initial_guess(traces, truth);
            const auto fit = global_fit(traces, guess.params, 4);
            const double e = std::max({std::abs(fit.omega_ge / truth.omega_ge - 1.0),
                                       std::abs(fit.gamma_rad / truth.gamma_rad - 1.0),
                                       std::abs(fit.alpha / truth.alpha - 1.0),
                                       std::abs(fit.attenuation / attenuation - 1.0)});
            worst = std::max(worst, e);
            if (e < 0.01)
                ++success;
            else
                std::printf("  seed %d: relative errors omega %.2g, Gamma %.2g, alpha %.2g, A %.2g (ci95 A %.2g)\n", seed,
                            fit.omega_ge / truth.omega_ge - 1.0, fit.gamma_rad / truth.gamma_rad - 1.0,
                            fit.alpha / truth.alpha - 1.0, fit.attenuation / attenuation - 1.0,
                            fit.confidence[3] / attenuation);
        } catch (const Error& e) {
            std::printf("  seed %d: %s\n", seed, e.what());
        }
    }
    const double elapsed = seconds_since(start);
    report.line(8, success >= 19 && elapsed < 300.0,
                fmt("%d/%d seeds within 1%% on all four parameters (need >= 95%%); worst relative error %.3g; "
                    "4 powers over 4 decades, 201 detunings, 1%% noise; %.1f s (limit 300 s)",
                    success, seeds, worst, elapsed));
}

bool density_invariants(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        TransmonParams p;
        p.omega_ge = 100.0;
        p.gamma_rad = 1.0;
        p.alpha = -(1.5 + 20 * u(rng));
        p.gamma_phi = 0.2 * u(rng);
        p.gamma_nr = 0.2 * u(rng);
        p.levels = 2 + trial % 4;
        std::vector<double> n;
        for (int j = 1; j < p.levels; ++j)
            n.push_back(u(rng));
        DriveParams d;
        d.detuning = 4 * (u(rng) - 0.5);
        d.rabi_rate = 3 * u(rng) + 1e-3;
        const auto rho = steady_state(build_liouvillian(p, BathOccupation(n), d)).matrix();
        const Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (rho + rho.adjoint()));
        if ((rho - rho.adjoint()).norm() > 1e-12 || std::abs(rho.trace() - 1.0) > 1e-10
            || eig.eigenvalues().minCoeff() < -1e-10)
            return false;
    }
    return true;
}

double detailed_balance()
{
    TransmonParams p;
    p.omega_ge = 100.0;
    p.gamma_rad = 1.0;
    p.alpha = -5.0;
    p.levels = 2;
    double worst = 0.0;
    for (const double n : {0.0, 0.1, 1.0, 10.0}) {
        const auto rho = steady_state(build_liouvillian(p, BathOccupation::uniform(2, n), {0.0, 0.0}));
        worst = std::max(worst, std::abs(rho.population(1) - n / (1 + 2 * n)));
    }
    return worst;
}

double windowing_linearity(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const TransmonParams p = device_transmon();
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> grid, s1, s2, mix;
        for (int k = 0; k <= 40; ++k)
            grid.push_back(p.omega_ge + p.alpha * 1.5 - p.alpha * 2.5 * k / 40.0);
        const double a = 3 * u(rng), b = 3 * u(rng);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            s1.push_back(u(rng));
            s2.push_back(u(rng));
            mix.push_back(a * s1.back() + b * s2.back());
        }
        const double lhs = windowing_weight(NoiseSpectrum(grid, mix), p);
        const double rhs = a * windowing_weight(NoiseSpectrum(grid, s1), p) + b * windowing_weight(NoiseSpectrum(grid, s2), p);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    return worst;
}

bool chain_bounds(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double omega = kTwoPi * 5.332e9;
    for (int trial = 0; trial < 200; ++trial) {
        AttenuatorChain chain;
        chain.source_temperature = 0.01 + 300 * u(rng);
        double lo = bose_occupation(omega, *chain.source_temperature);
        double hi = lo;
        for (int s = 0; s <= trial % 5; ++s) {
            const double t = 0.005 + 5 * u(rng);
            chain.stages.push_back({std::pow(10.0, 3 * u(rng)), t});
            lo = std::min(lo, bose_occupation(omega, t));
            hi = std::max(hi, bose_occupation(omega, t));
        }
        for (const double n : chain_occupation(chain, omega))
            if (n < lo * (1 - 1e-12) || n > hi * (1 + 1e-12))
                return false;
    }
    return true;
}

double responsivity_agreement()
{
    TransmonParams p;
    p.omega_ge = 100.0;
    p.gamma_rad = 1.0;
    p.alpha = -1e4;
    p.levels = 3;
    const double h = 1e-6;
    double worst = 0.0;
    for (const double x : {0.05, 0.2, 0.42, 0.7, 1.0, 2.0}) {
        const Complex up = resonant_reflection(p, BathOccupation::uniform(3, h), x);
        const Complex down = resonant_reflection(p, BathOccupation::uniform(3, 0.0), x);
        const double numeric = std::abs((up - down) / h);
        worst = std::max(worst, std::abs(numeric / responsivity(x) - 1.0));
    }
    return worst;
}

double tail_recovery(std::mt19937_64& rng, int* identified)
{
    std::normal_distribution<double> noise(0.0, 0.01);
    double worst = 0.0;
    *identified = 0;
    const double taus[] = {270.0, 900.0, 2700.0, 7200.0};
    for (int trial = 0; trial < 8; ++trial) {
        const double tau = taus[trial % 4];
        std::vector<TimePoint> series;
        for (int k = 0; k < 400; ++k) {
            const double t = 5 * tau * k / 399.0;
            series.push_back({t, -0.95 + 0.4 * std::exp(-t / tau) + noise(rng)});
        }
        const auto fit = exponential_tail_fit(tail_window(series, 1.0));
        if (fit.time_constant_identifiable) {
            ++*identified;
            worst = std::max(worst, std::abs(fit.time_constant / tau - 1.0));
        } else {
            worst = std::max(worst, 1.0);
        }
    }
    return worst;
}

void criterion_9(Report& report)
{
    std::mt19937_64 rng(2024);
    const bool density = density_invariants(rng);
    const double balance = detailed_balance();
    const double linearity = windowing_linearity(rng);
    const bool bounds = chain_bounds(rng);
    const double resp = responsivity_agreement();
    int identified = 0;
    const double tau = tail_recovery(rng, &identified);
    const bool pass = density && balance < 1e-10 && linearity < 1e-12 && bounds && resp < 0.005 && tau < 0.05;
    report.line(9, pass,
                fmt("density invariants %s; detailed balance %.1g; windowing linearity %.1g; chain bounds %s; "
                    "responsivity vs finite difference %.2g%% (tol 0.5%%); tail tau worst %.2f%% at 1%% noise, "
                    "%d/8 identified (tol 5%%)",
                    density ? "ok" : "violated", balance, linearity, bounds ? "ok" : "violated", 100 * resp,
                    100 * tau, identified));
}

} // namespace

int main()
{
    Report report;
    const std::vector<std::function<void(Report&)>> criteria = {criterion_1, criterion_2, criterion_3,
                                                                criterion_4, criterion_5, criterion_6,
                                                                criterion_7, criterion_8, criterion_9};
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        try {
            criteria[i](report);
        } catch (const std::exception& e) {
            report.line(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d of %zu criteria failed\n", report.failures, criteria.size());
    return report.failures == 0 ? 0 : 1;
}
