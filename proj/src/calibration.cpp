#include "mwthermo/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "mwthermo/constants.hpp"
#include "mwthermo/errors.hpp"
#include "mwthermo/least_squares.hpp"

namespace mwthermo {

namespace {

constexpr double kReferenceFloor = 1e-6;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_positive(double x, const char* name)
{
    if (!std::isfinite(x) || x <= 0.0)
        throw InvalidArgument(std::string(name) + " must be positive and finite");
}

double median(std::vector<double> v)
{
    if (v.empty())
        return kNaN;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1)
        return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

// Points grouped by power, each group sorted by frequency.
std::map<double, std::vector<TracePoint>> group_by_power(std::span<const ReflectionTrace> traces)
{
    std::map<double, std::vector<TracePoint>> groups;
    for (const auto& trace : traces)
        for (const auto& point : trace.points)
            if (std::isfinite(point.r.real()) && std::isfinite(point.r.imag()))
                groups[point.power_watt].push_back(point);
    for (auto& [power, points] : groups)
        std::sort(points.begin(), points.end(), [](const TracePoint& a, const TracePoint& b) {
            return a.frequency_hz < b.frequency_hz;
        });
    return groups;
}

std::size_t distinct_powers(std::span<const ReflectionTrace> traces)
{
    std::vector<double> powers;
    for (const auto& trace : traces)
        for (const auto& point : trace.points)
            powers.push_back(point.power_watt);
    std::sort(powers.begin(), powers.end());
    std::size_t count = 0;
    for (std::size_t i = 0; i < powers.size(); ++i)
        if (i == 0 || powers[i] > powers[i - 1] * (1.0 + 1e-12))
            ++count;
    return count;
}

double estimate_center(const std::vector<TracePoint>& low)
{
    const auto it = std::min_element(low.begin(), low.end(), [](const auto& a, const auto& b) {
        return a.r.real() < b.r.real();
    });
    const std::size_t i = static_cast<std::size_t>(it - low.begin());
    const auto crossing = [&](std::size_t a, std::size_t b) -> std::optional<double> {
        const double ya = low[a].r.imag();
        const double yb = low[b].r.imag();
        if (ya == yb || (ya > 0.0) == (yb > 0.0))
            return std::nullopt;
        const double t = ya / (ya - yb);
        return low[a].frequency_hz + t * (low[b].frequency_hz - low[a].frequency_hz);
    };
    if (i > 0)
        if (const auto f = crossing(i - 1, i))
            return hz_to_angular(*f);
    if (i + 1 < low.size())
        if (const auto f = crossing(i, i + 1))
            return hz_to_angular(*f);
    return hz_to_angular(low[i].frequency_hz);
}

double estimate_linewidth(const std::vector<TracePoint>& low, double omega_ge)
{
    std::vector<double> estimates;
    for (const auto& point : low) {
        const double phase = std::arg(-point.r);
        if (std::abs(phase) < 0.2 || std::abs(phase) > 2.8)
            continue;
        const double detuning = hz_to_angular(point.frequency_hz) - omega_ge;
        const double gamma = 2.0 * detuning / std::tan(0.5 * phase);
        if (gamma > 0.0 && std::isfinite(gamma))
            estimates.push_back(gamma);
    }
    return median(std::move(estimates));
}

struct Dip
{
    double detuning;
    double magnitude;
};

// Deepest red-detuned local minimum of the smoothed |r| in one power group.
std::optional<Dip> deepest_red_dip(const std::vector<TracePoint>& points, double omega_ge, double gamma)
{
    const std::size_t n = points.size();
    if (n < 7)
        return std::nullopt;
    std::vector<double> smooth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        const std::size_t hi = std::min(n - 1, i + 2);
        double sum = 0.0;
        for (std::size_t k = lo; k <= hi; ++k)
            sum += std::abs(points[k].r);
        smooth[i] = sum / static_cast<double>(hi - lo + 1);
    }
    std::optional<Dip> best;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double detuning = hz_to_angular(points[i].frequency_hz) - omega_ge;
        if (detuning > -1.5 * gamma)
            continue;
        if (smooth[i] < smooth[i - 1] && smooth[i] <= smooth[i + 1])
            if (!best || smooth[i] < best->magnitude)
                best = Dip{detuning, smooth[i]};
    }
    return best;
}

// Candidate anharmonicities: each power's deepest red-side dip read as either the
// two-photon line (alpha/2) or the e-f line (alpha), plus a coarse log grid.
std::vector<double> anharmonicity_candidates(const std::map<double, std::vector<TracePoint>>& groups,
                                             double omega_ge, double gamma)
{
    std::vector<double> candidates;
    for (const auto& [power, points] : groups)
        if (const auto dip = deepest_red_dip(points, omega_ge, gamma)) {
            candidates.push_back(2.0 * dip->detuning);
            candidates.push_back(dip->detuning);
        }
    constexpr int grid = 40;
    for (int k = 0; k < grid; ++k)
        candidates.push_back(-gamma * 1.5 * std::pow(40.0 / 1.5, static_cast<double>(k) / (grid - 1)));
    return candidates;
}

double model_cost(const LiouvillianTerms& terms, const std::map<double, std::vector<TracePoint>>& groups,
                  const TransmonParams& p, double attenuation)
{
    double cost = 0.0;
    try {
        for (const auto& [power, points] : groups) {
            const double rabi = drive_rate_from_power(power, attenuation, p.gamma_rad, p.omega_ge);
            for (const auto& point : points)
                cost += std::norm(reflection_at(terms, p, {hz_to_angular(point.frequency_hz) - p.omega_ge, rabi})
                                  - point.r);
        }
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
    return cost;
}

double estimate_attenuation(const std::map<double, std::vector<TracePoint>>& groups,
                            double omega_ge, double gamma)
{
    std::vector<double> log_estimates;
    double fallback = kNaN;
    double fallback_distance = std::numeric_limits<double>::infinity();
    for (const auto& [power, points] : groups) {
        const auto it = std::min_element(points.begin(), points.end(), [&](const auto& a, const auto& b) {
            return std::abs(hz_to_angular(a.frequency_hz) - omega_ge)
                   < std::abs(hz_to_angular(b.frequency_hz) - omega_ge);
        });
        const double r = it->r.real();
        if (!(r > -1.0 && r < 1.0))
            continue;
        // Two-level resonant law r = -1 + 4x/(1 + 2x), x = (Omega/Gamma)^2.
        const double x = (1.0 + r) / (2.0 * (1.0 - r));
        const double attenuation = x * gamma * constants::hbar * omega_ge / (4.0 * power);
        if (!(attenuation > 0.0) || !std::isfinite(attenuation))
            continue;
        if (r > -0.8 && r < 0.8)
            log_estimates.push_back(std::log(attenuation));
        if (std::abs(r) < fallback_distance) {
            fallback_distance = std::abs(r);
            fallback = attenuation;
        }
    }
    if (!log_estimates.empty())
        return std::exp(median(std::move(log_estimates)));
    return std::isfinite(fallback) ? fallback : 1.0;
}

} // namespace

double drive_rate_from_power(double power_watt, double attenuation, double gamma_rad, double omega_ge)
{
    require_positive(power_watt, "power");
    require_positive(attenuation, "attenuation");
    require_positive(gamma_rad, "gamma_rad");
    require_positive(omega_ge, "omega_ge");
    return 2.0 * std::sqrt(attenuation * gamma_rad * power_watt / (constants::hbar * omega_ge));
}

double power_from_drive_rate(double rabi_rate, double attenuation, double gamma_rad, double omega_ge)
{
    require_positive(rabi_rate, "rabi_rate");
    require_positive(attenuation, "attenuation");
    require_positive(gamma_rad, "gamma_rad");
    require_positive(omega_ge, "omega_ge");
    return rabi_rate * rabi_rate * constants::hbar * omega_ge / (4.0 * attenuation * gamma_rad);
}

NormalizedTrace normalize_trace(const ReflectionTrace& raw, const ReflectionTrace& reference,
                                ReferenceMode mode)
{
    if (reference.empty())
        throw InvalidArgument("reference trace is empty");

    NormalizedTrace out;
    out.trace = raw;
    out.trace.reference_mode = mode;

    const auto divide = [&](std::size_t i, std::complex<double> ref) {
        auto& point = out.trace.points[i];
        if (std::abs(ref) < kReferenceFloor) {
            out.flagged.push_back(i);
            point.r = {kNaN, kNaN};
        } else {
            point.r /= ref;
        }
    };

    const bool same_grid =
        raw.size() == reference.size()
        && std::equal(raw.points.begin(), raw.points.end(), reference.points.begin(),
                      [](const TracePoint& a, const TracePoint& b) {
                          return a.frequency_hz == b.frequency_hz && a.power_watt == b.power_watt;
                      });
    if (same_grid) {
        for (std::size_t i = 0; i < raw.size(); ++i)
            divide(i, reference.points[i].r);
        return out;
    }

    std::vector<TracePoint> ref = reference.points;
    std::sort(ref.begin(), ref.end(), [](const TracePoint& a, const TracePoint& b) {
        return a.frequency_hz < b.frequency_hz;
    });
    for (std::size_t i = 1; i < ref.size(); ++i)
        if (!(ref[i].frequency_hz > ref[i - 1].frequency_hz))
            throw InvalidArgument("reference trace must have distinct frequencies for interpolation");

    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double f = raw.points[i].frequency_hz;
        if (f < ref.front().frequency_hz || f > ref.back().frequency_hz) {
            std::ostringstream msg;
            msg << "reference does not cover frequency " << f << " Hz";
            throw InvalidArgument(msg.str());
        }
        const auto upper = std::lower_bound(ref.begin(), ref.end(), f,
                                            [](const TracePoint& p, double x) { return p.frequency_hz < x; });
        std::complex<double> value;
        if (upper->frequency_hz == f || upper == ref.begin()) {
            value = upper->r;
        } else {
            const auto lower = upper - 1;
            const double t = (f - lower->frequency_hz) / (upper->frequency_hz - lower->frequency_hz);
            value = lower->r + t * (upper->r - lower->r);
        }
        divide(i, value);
    }
    return out;
}

InitialGuess estimate_initial_guess(std::span<const ReflectionTrace> traces, const TransmonParams& fallback)
{
    const auto groups = group_by_power(traces);
    if (groups.empty())
        throw InvalidArgument("no usable trace points");
    const auto& low = groups.begin()->second;

    InitialGuess guess;
    guess.params = fallback;
    guess.params.omega_ge = estimate_center(low);
    const double gamma = estimate_linewidth(low, guess.params.omega_ge);
    if (std::isfinite(gamma) && gamma > 0.0)
        guess.params.gamma_rad = gamma;
    guess.attenuation = estimate_attenuation(groups, guess.params.omega_ge, guess.params.gamma_rad);

    const LiouvillianTerms terms(fallback.levels, BathOccupation::zero(fallback.levels));
    double best_cost = std::numeric_limits<double>::infinity();
    TransmonParams trial = guess.params;
    for (const double alpha : anharmonicity_candidates(groups, guess.params.omega_ge, guess.params.gamma_rad)) {
        trial.alpha = alpha;
        const double cost = model_cost(terms, groups, trial, guess.attenuation);
        if (cost < best_cost) {
            best_cost = cost;
            guess.params.alpha = alpha;
        }
    }
    return guess;
}

ReflectionTrace model_trace(const ReflectionTrace& like, const TransmonParams& p, double attenuation,
                            const BathOccupation& bath, bool include_cross_terms)
{
    p.validate();
    const LiouvillianTerms terms(p.levels, bath, include_cross_terms);
    ReflectionTrace out = like;
    for (auto& point : out.points) {
        const DriveParams d{hz_to_angular(point.frequency_hz) - p.omega_ge,
                            drive_rate_from_power(point.power_watt, attenuation, p.gamma_rad, p.omega_ge)};
        point.r = reflection_at(terms, p, d);
    }
    return out;
}

FitResult global_fit(std::span<const ReflectionTrace> traces, const TransmonParams& initial, int levels,
                     const GlobalFitOptions& options)
{
    if (levels != 3 && levels != 4)
        throw InvalidArgument("global fit supports 3 or 4 levels");
    for (const auto& trace : traces)
        trace.validate();
    if (distinct_powers(traces) < 2)
        throw InvalidArgument(
            "global fit needs traces at two or more distinct powers; A and Omega are not "
            "separately identifiable from a single power");

    TransmonParams start = initial;
    start.levels = levels;
    start.validate();
    const BathOccupation bath = options.bath ? *options.bath : BathOccupation::zero(levels);
    const LiouvillianTerms terms(levels, bath, options.include_cross_terms);

    struct Sample
    {
        double omega_d;
        double power;
        std::complex<double> r;
    };
    std::vector<Sample> samples;
    for (const auto& trace : traces)
        for (const auto& point : trace.points)
            if (std::isfinite(point.r.real()) && std::isfinite(point.r.imag()))
                samples.push_back({hz_to_angular(point.frequency_hz), point.power_watt, point.r});

    const double attenuation0 = options.initial_attenuation
                                    ? *options.initial_attenuation
                                    : estimate_initial_guess(traces, start).attenuation;
    require_positive(attenuation0, "initial attenuation");

    // x = [(omega_ge - centre)/scale, ln(Gamma/scale), alpha/scale, ln A]
    const double centre = start.omega_ge;
    const double scale = start.gamma_rad;
    const auto unpack = [&](const Eigen::VectorXd& x) {
        TransmonParams p = start;
        p.omega_ge = centre + scale * x(0);
        p.gamma_rad = scale * std::exp(x(1));
        p.alpha = scale * x(2);
        return std::pair{p, std::exp(x(3))};
    };

    const auto residuals = [&](const Eigen::VectorXd& x) {
        const auto [p, attenuation] = unpack(x);
        Eigen::VectorXd r(2 * static_cast<Eigen::Index>(samples.size()));
        try {
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const auto& s = samples[i];
                const DriveParams d{s.omega_d - p.omega_ge,
                                    drive_rate_from_power(s.power, attenuation, p.gamma_rad, p.omega_ge)};
                const std::complex<double> diff = reflection_at(terms, p, d) - s.r;
                r(2 * static_cast<Eigen::Index>(i)) = diff.real();
                r(2 * static_cast<Eigen::Index>(i) + 1) = diff.imag();
            }
        } catch (const Error&) {
            r.setConstant(kNaN);
        }
        return r;
    };
    const auto feasible = [&](const Eigen::VectorXd& x) {
        return x.allFinite() && x(2) < 0.0 && std::abs(x(1)) < 50.0 && std::abs(x(3)) < 700.0;
    };

    Eigen::VectorXd x0(4);
    x0 << 0.0, 0.0, start.alpha / scale, std::log(attenuation0);

    lsq::Options lm;
    lm.max_iterations = options.max_iterations;
    lm.gradient_tolerance = options.gradient_tolerance;
    const lsq::Result fit = lsq::levenberg_marquardt(residuals, x0, lm, feasible);
    if (!fit.converged) {
        std::ostringstream msg;
        msg << "global fit did not converge after " << fit.iterations << " iterations ("
            << fit.stop_reason << "), residual norm " << fit.residual_norm;
        throw ConvergenceError(msg.str());
    }

    const auto [p, attenuation] = unpack(fit.x);
    if (!(p.alpha < 0.0) || !(p.gamma_rad > 0.0) || !(attenuation > 0.0))
        throw ConvergenceError("global fit converged outside the physical parameter bounds");

    FitResult out;
    out.omega_ge = p.omega_ge;
    out.gamma_rad = p.gamma_rad;
    out.alpha = p.alpha;
    out.attenuation = attenuation;
    out.residual_norm = fit.residual_norm;
    out.initial_residual_norm = fit.initial_residual_norm;
    out.gradient_norm = fit.gradient_norm;
    out.iterations = fit.iterations;
    out.residual_count = static_cast<std::size_t>(fit.residual.size());
    out.stop_reason = fit.stop_reason;
    const Eigen::VectorXd se = fit.standard_errors();
    if (se.size() == 4) {
        constexpr double z95 = 1.959963984540054;
        out.confidence = {z95 * scale * se(0), z95 * p.gamma_rad * se(1), z95 * scale * se(2),
                          z95 * attenuation * se(3)};
    } else {
        out.confidence.fill(kNaN);
    }
    return out;
}

std::vector<TimePoint> tail_window(std::span<const TimePoint> segment, double fraction)
{
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw InvalidArgument("tail fraction must lie in (0, 1]");
    const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(segment.size())));
    return {segment.end() - static_cast<std::ptrdiff_t>(std::min(keep, segment.size())), segment.end()};
}

ExponentialFit exponential_tail_fit(std::span<const TimePoint> series)
{
    if (series.size() < 5)
        throw InvalidArgument("exponential fit needs at least 5 samples");
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!std::isfinite(series[i].time) || !std::isfinite(series[i].value))
            throw InvalidArgument("exponential fit samples must be finite");
        if (i > 0 && !(series[i].time > series[i - 1].time))
            throw InvalidArgument("exponential fit times must be strictly increasing");
    }

    const std::size_t n = series.size();
    const double t0 = series.front().time;
    const double span = series.back().time - t0;
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        u(static_cast<Eigen::Index>(i)) = series[i].time - t0;
        v(static_cast<Eigen::Index>(i)) = series[i].value;
    }

    const double mean = v.mean();
    const double spread = v.maxCoeff() - v.minCoeff();
    if (spread <= 1e-12 * std::max(1.0, std::abs(mean))) {
        ExponentialFit flat;
        flat.asymptote = mean;
        flat.amplitude = 0.0;
        flat.time_constant = kNaN;
        flat.time_constant_identifiable = false;
        flat.residual_norm = (v.array() - mean).matrix().norm();
        return flat;
    }

    // Variable projection scan over tau: for fixed tau the model is linear in (v_inf, a).
    const auto linear_fit = [&](double tau) {
        Eigen::MatrixXd basis(static_cast<Eigen::Index>(n), 2);
        basis.col(0).setOnes();
        basis.col(1) = (-u.array() / tau).exp().matrix();
        const Eigen::Vector2d coef = basis.colPivHouseholderQr().solve(v);
        const double sse = (basis * coef - v).squaredNorm();
        return std::pair{coef, sse};
    };
    const double log_lo = std::log(span * 1e-3);
    const double log_hi = std::log(span * 1e2);
    constexpr int grid = 241;
    double best_log_tau = log_lo;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid; ++k) {
        const double log_tau = log_lo + (log_hi - log_lo) * k / (grid - 1);
        const double sse = linear_fit(std::exp(log_tau)).second;
        if (sse < best_sse) {
            best_sse = sse;
            best_log_tau = log_tau;
        }
    }
    const Eigen::Vector2d coef = linear_fit(std::exp(best_log_tau)).first;

    const auto residuals = [&](const Eigen::VectorXd& x) {
        return ((x(0) + x(1) * (-u.array() * std::exp(-x(2))).exp()) - v.array()).matrix().eval();
    };
    Eigen::VectorXd x0(3);
    x0 << coef(0), coef(1), best_log_tau;
    lsq::Options lm;
    lm.max_iterations = 200;
    lm.difference_step = 1e-6;
    const lsq::Result fit = lsq::levenberg_marquardt(residuals, x0, lm);
    if (!fit.converged)
        throw ConvergenceError("exponential fit did not converge (" + fit.stop_reason + ")");

    ExponentialFit out;
    out.asymptote = fit.x(0);
    out.time_constant = std::exp(fit.x(2));
    if (!(out.time_constant > 0.0) || !std::isfinite(out.time_constant))
        throw RangeError("exponential fit produced a non-positive time constant");
    out.amplitude = fit.x(1);
    out.residual_norm = fit.residual_norm;
    out.time_constant_identifiable =
        fit.x(2) > log_lo && fit.x(2) < log_hi && std::abs(fit.x(1)) > 1e-12 * spread;
    if (!out.time_constant_identifiable)
        out.time_constant = kNaN;
    return out;
}

} // namespace mwthermo
