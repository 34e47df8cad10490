#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "mwthermo/analytic.hpp"
#include "mwthermo/calibration.hpp"
#include "mwthermo/constants.hpp"
#include "mwthermo/errors.hpp"
#include "mwthermo/lindblad.hpp"
#include "mwthermo/setup_sim.hpp"
#include "mwthermo/thermometry.hpp"
#include "mwthermo/trace_io.hpp"

namespace mwthermo::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Invocation
{
    std::string command;
    Config config;
    std::vector<std::string> inputs;
    std::optional<fs::path> output;
};

std::string fmt(double x)
{
    return format_double(x);
}

void emit(const Invocation& inv, const std::string& content, std::ostream& out)
{
    if (inv.output)
        write_file_atomic(*inv.output, content);
    else
        out << content;
}

std::string manifest_text(const Invocation& inv, const std::vector<std::string>& outputs)
{
    std::ostringstream m;
    m << "# command: " << inv.command << '\n';
    m << "# version: " << kVersion << '\n';
    for (const auto& input : inv.inputs)
        m << "input = " << input << '\n';
    for (const auto& [key, value] : inv.config.resolved())
        m << key << " = " << value << '\n';
    for (const auto& file : outputs)
        m << "output = " << file << '\n';
    for (const auto& key : inv.config.unused_keys())
        m << "# unused: " << key << '\n';
    return m.str();
}

void write_manifest(const Invocation& inv, const fs::path& path, const std::vector<std::string>& outputs)
{
    write_file_atomic(path, manifest_text(inv, outputs));
}

fs::path sidecar(const fs::path& output, const std::string& suffix)
{
    fs::path p = output;
    p += suffix;
    return p;
}

TransmonParams transmon_from(const Config& c)
{
    TransmonParams p;
    p.omega_ge = hz_to_angular(c.positive("omega_ge_hz", 5.332e9));
    p.gamma_rad = hz_to_angular(c.positive("gamma_hz", 38e6));
    const double alpha = c.number("alpha_hz", -217e6);
    if (!(alpha < 0.0))
        throw ConfigError("config key 'alpha_hz' must be negative");
    p.alpha = hz_to_angular(alpha);
    const double gphi = c.number("gamma_phi_hz", 0.0);
    const double gnr = c.number("gamma_nr_hz", 0.0);
    if (gphi < 0.0)
        throw ConfigError("config key 'gamma_phi_hz' must be non-negative");
    if (gnr < 0.0)
        throw ConfigError("config key 'gamma_nr_hz' must be non-negative");
    p.gamma_phi = hz_to_angular(gphi);
    p.gamma_nr = hz_to_angular(gnr);
    const long long levels = c.integer("levels", kDefaultLevels);
    if (levels < kMinLevels || levels > kMaxLevels)
        throw ConfigError("config key 'levels' must lie in [2, 10]");
    p.levels = static_cast<int>(levels);
    return p;
}

BathOccupation bath_from(const Config& c, int levels)
{
    const double n = c.number("n_thermal", 0.0);
    if (!(n >= 0.0))
        throw ConfigError("config key 'n_thermal' must be non-negative");
    return BathOccupation::uniform(levels, n);
}

std::uint64_t seed_from(const Config& c)
{
    const long long seed = c.integer("seed", 0);
    if (seed < 0)
        throw ConfigError("config key 'seed' must be non-negative");
    return static_cast<std::uint64_t>(seed);
}

const fs::path& require_output(const Invocation& inv)
{
    if (!inv.output)
        throw ConfigError("--output is required for '" + inv.command + "'");
    return *inv.output;
}

int cmd_simulate(const Invocation& inv, std::ostream& out)
{
    const Config& c = inv.config;
    const TransmonParams p = transmon_from(c);
    const double attenuation = c.positive("attenuation", 1e-7);
    const bool cross = c.on_off("cross_terms", true);

    std::vector<double> powers = c.numbers("powers_watt");
    const std::vector<double> ratios = c.numbers("rabi_ratios");
    if (!powers.empty() && !ratios.empty())
        throw ConfigError("config keys 'powers_watt' and 'rabi_ratios' are mutually exclusive");
    if (powers.empty()) {
        const std::vector<double> use = ratios.empty() ? std::vector<double>{0.03, 0.1, 0.3, 1.0, 3.0} : ratios;
        for (const double x : use) {
            if (!(x > 0.0))
                throw ConfigError("config key 'rabi_ratios' entries must be positive");
            powers.push_back(power_from_drive_rate(x * p.gamma_rad, attenuation, p.gamma_rad, p.omega_ge));
        }
    }
    std::string power_list;
    for (const double w : powers) {
        if (!(w > 0.0))
            throw ConfigError("config key 'powers_watt' entries must be positive");
        power_list += (power_list.empty() ? "" : ",") + fmt(w);
    }
    c.note("powers_watt", power_list);

    const double lo = c.number("detuning_min_hz", -300e6);
    const double hi = c.number("detuning_max_hz", 100e6);
    const long long count = c.integer("detuning_points", 401);
    if (count < 1)
        throw ConfigError("config key 'detuning_points' must be at least 1");
    if (count > 1 && !(hi > lo))
        throw ConfigError("config key 'detuning_max_hz' must exceed 'detuning_min_hz'");
    std::vector<double> detunings;
    for (long long k = 0; k < count; ++k)
        detunings.push_back(hz_to_angular(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1)));

    const double noise = c.number("noise_level", 0.0);
    if (!(noise >= 0.0))
        throw ConfigError("config key 'noise_level' must be non-negative");

    SyntheticExperimentOptions options;
    options.include_cross_terms = cross;
    options.bath = bath_from(c, p.levels);
    if (c.has("circulator_gamma")) {
        CirculatorParams circ;
        circ.gamma = c.number("circulator_gamma");
        if (!(circ.gamma >= 0.0 && circ.gamma < 1.0))
            throw ConfigError("config key 'circulator_gamma' must lie in [0, 1)");
        circ.delay = c.number("circulator_delay_s", 0.0);
        circ.phase = c.number("circulator_phase_rad", 0.0);
        options.circulator = circ;
    }

    const std::uint64_t seed = seed_from(c);
    const fs::path& dir = require_output(inv);
    const auto traces = generate_synthetic_experiment(p, attenuation, powers, detunings, noise, seed, options);

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + dir.string() + "'");
    std::vector<std::string> written;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "trace_%03zu.csv", i);
        write_trace_file(dir / name, traces[i]);
        written.emplace_back(name);
    }
    write_manifest(inv, dir / "manifest.txt", written);
    out << "wrote " << traces.size() << " traces to " << dir.string() << '\n';
    return exit_ok;
}

int cmd_fit(const Invocation& inv, std::ostream& out)
{
    const Config& c = inv.config;
    std::vector<std::string> files = inv.inputs;
    for (const auto& f : c.list("traces"))
        files.push_back(f);
    if (files.empty())
        throw ConfigError("fit needs trace files (positional or config key 'traces')");

    std::vector<ReflectionTrace> traces;
    for (const auto& f : files)
        traces.push_back(read_trace_file(f));

    TransmonParams fallback = transmon_from(c);
    GlobalFitOptions options;
    options.include_cross_terms = c.on_off("cross_terms", true);
    options.bath = bath_from(c, fallback.levels);
    if (c.has("initial_attenuation"))
        options.initial_attenuation = c.positive("initial_attenuation");
    options.max_iterations = static_cast<int>(c.integer("max_iterations", 100));
    options.gradient_tolerance = c.positive("gradient_tolerance", 1e-8);

    const InitialGuess guess = estimate_initial_guess(traces, fallback);
    const FitResult fit = global_fit(traces, guess.params, fallback.levels, options);

    std::ostringstream r;
    r << "omega_ge_hz: " << fmt(angular_to_hz(fit.omega_ge)) << '\n'
      << "gamma_hz: " << fmt(angular_to_hz(fit.gamma_rad)) << '\n'
      << "alpha_hz: " << fmt(angular_to_hz(fit.alpha)) << '\n'
      << "attenuation: " << fmt(fit.attenuation) << '\n'
      << "ci95_omega_ge_hz: " << fmt(angular_to_hz(fit.confidence[0])) << '\n'
      << "ci95_gamma_hz: " << fmt(angular_to_hz(fit.confidence[1])) << '\n'
      << "ci95_alpha_hz: " << fmt(angular_to_hz(fit.confidence[2])) << '\n'
      << "ci95_attenuation: " << fmt(fit.confidence[3]) << '\n'
      << "residual_norm: " << fmt(fit.residual_norm) << '\n'
      << "initial_residual_norm: " << fmt(fit.initial_residual_norm) << '\n'
      << "gradient_norm: " << fmt(fit.gradient_norm) << '\n'
      << "iterations: " << fit.iterations << '\n'
      << "residual_count: " << fit.residual_count << '\n'
      << "loss: " << fit.loss << '\n'
      << "stop_reason: " << fit.stop_reason << '\n'
      << "levels: " << fallback.levels << '\n'
      << "cross_terms: " << (options.include_cross_terms ? "on" : "off") << '\n';
    emit(inv, r.str(), out);
    if (inv.output)
        write_manifest(inv, sidecar(*inv.output, ".manifest"), {inv.output->string()});
    return exit_ok;
}

std::map<std::string, std::string> read_key_values(const fs::path& path)
{
    std::map<std::string, std::string> kv;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line[0] == '#')
            continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw ParseError(path.string() + ": expected 'key: value'", number);
        std::string value = line.substr(colon + 1);
        value.erase(0, value.find_first_not_of(' '));
        kv[line.substr(0, colon)] = value;
    }
    return kv;
}

struct SeriesRow
{
    double time;
    Complex r;
    long long segment;
};

std::vector<SeriesRow> read_series(const fs::path& path)
{
    std::vector<SeriesRow> rows;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#' || line.rfind("time_s", 0) == 0)
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
            fields.push_back(field);
        if (fields.size() != 3 && fields.size() != 4)
            throw ParseError(path.string() + ": expected time_s,re_r,im_r[,segment]", number);
        SeriesRow row{};
        try {
            row.time = parse_double(fields[0]);
            row.r = {parse_double(fields[1]), parse_double(fields[2])};
            row.segment = fields.size() == 4 ? static_cast<long long>(parse_double(fields[3])) : 0;
        } catch (const InvalidArgument& e) {
            throw ParseError(path.string() + ": " + e.what(), number);
        }
        rows.push_back(row);
    }
    return rows;
}

int cmd_thermometer(const Invocation& inv, std::ostream& out)
{
    const Config& c = inv.config;
    if (inv.inputs.size() != 1)
        throw ConfigError("thermometer takes exactly one series file");

    TransmonParams p = transmon_from(c);
    if (const auto fit_file = c.text("fit_result")) {
        const auto kv = read_key_values(*fit_file);
        const auto get = [&](const char* key) {
            const auto it = kv.find(key);
            if (it == kv.end())
                throw ParseError(*fit_file + ": missing '" + key + "'", 0);
            return parse_double(it->second);
        };
        p.omega_ge = hz_to_angular(get("omega_ge_hz"));
        p.gamma_rad = hz_to_angular(get("gamma_hz"));
        p.alpha = hz_to_angular(get("alpha_hz"));
    }
    p.validate();

    InversionOptions options;
    options.include_cross_terms = c.on_off("cross_terms", true);
    const std::string mode = c.text("mode", "real");
    if (mode == "real")
        options.mode = InversionMode::real_part;
    else if (mode == "magnitude")
        options.mode = InversionMode::magnitude;
    else
        throw ConfigError("config key 'mode' must be 'real' or 'magnitude'");
    const double rabi_ratio = c.positive("rabi_ratio", 1e-3);
    const bool tails = c.on_off("tail_fits", false);
    const double tail_fraction = c.number("tail_fraction", 0.7);
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw ConfigError("config key 'tail_fraction' must lie in (0, 1]");

    const auto rows = read_series(inv.inputs.front());
    const double omega_ef = p.omega_ge + p.alpha;

    std::ostringstream table;
    table << "time_s,re_r,im_r,segment,n_r,t_r_k,status\n";
    std::map<long long, std::vector<TimePoint>> segments;
    for (const auto& row : rows) {
        double n = kNaN;
        double t = kNaN;
        std::string status = "ok";
        try {
            n = occupation_from_reflection(row.r, p, rabi_ratio, options);
            t = n > 0.0 ? temperature_from_occupation(p.omega_ge, omega_ef, n) : 0.0;
        } catch (const RangeError&) {
            status = std::isnan(n) ? "out_of_range" : "temperature_out_of_range";
        }
        if (std::isfinite(n))
            segments[row.segment].push_back({row.time, n});
        table << fmt(row.time) << ',' << fmt(row.r.real()) << ',' << fmt(row.r.imag()) << ','
              << row.segment << ',' << fmt(n) << ',' << fmt(t) << ',' << status << '\n';
    }
    emit(inv, table.str(), out);

    std::vector<std::string> outputs;
    if (inv.output)
        outputs.push_back(inv.output->string());
    if (tails) {
        std::ostringstream tail;
        tail << "segment,n_asymptote,amplitude,tau_s,t_asymptote_k,status\n";
        for (const auto& [segment, series] : segments) {
            const auto window = tail_window(series, tail_fraction);
            std::string status = "ok";
            ExponentialFit fit{kNaN, kNaN, kNaN, false, kNaN};
            double t_inf = kNaN;
            try {
                fit = exponential_tail_fit(window);
                if (!fit.time_constant_identifiable)
                    status = "tau_unidentifiable";
                if (fit.asymptote > 0.0)
                    t_inf = temperature_from_occupation(p.omega_ge, omega_ef, fit.asymptote);
            } catch (const Error&) {
                status = "fit_failed";
            }
            tail << segment << ',' << fmt(fit.asymptote) << ',' << fmt(fit.amplitude) << ','
                 << fmt(fit.time_constant) << ',' << fmt(t_inf) << ',' << status << '\n';
        }
        if (inv.output) {
            const fs::path tail_path = sidecar(*inv.output, ".tails");
            write_file_atomic(tail_path, tail.str());
            outputs.push_back(tail_path.string());
        } else {
            out << tail.str();
        }
    }
    if (inv.output)
        write_manifest(inv, sidecar(*inv.output, ".manifest"), outputs);
    return exit_ok;
}

int cmd_sensitivity(const Invocation& inv, std::ostream& out)
{
    const Config& c = inv.config;
    SensitivityInput input;
    input.eta = c.number("eta", 1.0);
    if (!(input.eta > 0.0 && input.eta <= 1.0))
        throw ConfigError("config key 'eta' must lie in (0, 1]");
    input.gamma_rad = hz_to_angular(c.positive("gamma_hz", 38e6));
    input.omega_ge = hz_to_angular(c.positive("omega_ge_hz", 5.332e9));
    const double lo = c.positive("ratio_min", 0.01);
    const double hi = c.positive("ratio_max", 3.0);
    const long long points = c.integer("points", 300);
    if (!(hi > lo))
        throw ConfigError("config key 'ratio_max' must exceed 'ratio_min'");
    if (points < 2)
        throw ConfigError("config key 'points' must be at least 2");

    std::ostringstream table;
    table << "kind,rabi_ratio,responsivity,netp_per_rthz,nep_w_per_rthz\n";
    const auto row = [&](const char* kind, double x) {
        input.rabi_ratio = x;
        const double value = netp(input);
        table << kind << ',' << fmt(x) << ',' << fmt(responsivity(x)) << ',' << fmt(value) << ','
              << fmt(nep(input, value)) << '\n';
    };
    for (long long k = 0; k < points; ++k)
        row("grid", lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(points - 1)));
    row("argmin", netp_argmin());
    emit(inv, table.str(), out);
    if (inv.output)
        write_manifest(inv, sidecar(*inv.output, ".manifest"), {inv.output->string()});
    return exit_ok;
}

double attenuation_from_db(const std::string& text, const std::string& where, std::size_t line)
{
    double db = 0.0;
    try {
        db = parse_double(text);
    } catch (const InvalidArgument& e) {
        throw ParseError(where + ": " + e.what(), line);
    }
    if (std::isinf(db) && db > 0.0)
        return std::numeric_limits<double>::infinity();
    if (!std::isfinite(db) || db < 0.0)
        throw ParseError(where + ": attenuation must be >= 0 dB", line);
    return std::pow(10.0, db / 10.0);
}

AttenuatorChain read_chain(const fs::path& path)
{
    AttenuatorChain chain;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t number = 0;
    const std::string where = path.string();
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::string keyword;
        if (!(fields >> keyword))
            continue;
        std::vector<std::string> args;
        for (std::string a; fields >> a;)
            args.push_back(a);
        const auto value = [&](const std::string& text) {
            try {
                return parse_double(text);
            } catch (const InvalidArgument& e) {
                throw ParseError(where + ": " + e.what(), number);
            }
        };
        if (keyword == "stage" && args.size() == 2) {
            chain.stages.push_back({attenuation_from_db(args[0], where, number), value(args[1])});
        } else if (keyword == "source_temperature_k" && args.size() == 1) {
            chain.source_temperature = value(args[0]);
        } else if (keyword == "source_occupation" && args.size() == 1) {
            chain.source_occupation = value(args[0]);
        } else {
            throw ParseError(where + ": expected 'stage <dB> <K>', 'source_temperature_k <K>' or "
                             "'source_occupation <n>'", number);
        }
    }
    try {
        chain.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(where + ": " + e.what(), 0);
    }
    return chain;
}

double equivalent_temperature(double omega, double n)
{
    if (!(n > 0.0))
        return 0.0;
    return constants::hbar * omega / (constants::k_boltzmann * std::log1p(1.0 / n));
}

int cmd_chain(const Invocation& inv, std::ostream& out)
{
    const Config& c = inv.config;
    if (inv.inputs.size() != 1)
        throw ConfigError("chain takes exactly one chain description file");
    const double omega = hz_to_angular(c.positive("frequency_hz", c.positive("omega_ge_hz", 5.332e9)));
    const AttenuatorChain chain = read_chain(inv.inputs.front());
    const auto n = chain_occupation(chain, omega);

    std::ostringstream table;
    table << "stage,attenuation_db,temperature_k,occupation,equivalent_temperature_k\n";
    const double n0 = chain.input_occupation(omega);
    table << "source,0," << fmt(chain.source_temperature ? *chain.source_temperature : kNaN) << ','
          << fmt(n0) << ',' << fmt(equivalent_temperature(omega, n0)) << '\n';
    for (std::size_t i = 0; i < n.size(); ++i) {
        const auto& s = chain.stages[i];
        table << i + 1 << ',' << fmt(10.0 * std::log10(s.attenuation)) << ',' << fmt(s.temperature) << ','
              << fmt(n[i]) << ',' << fmt(equivalent_temperature(omega, n[i])) << '\n';
    }
    emit(inv, table.str(), out);
    if (inv.output)
        write_manifest(inv, sidecar(*inv.output, ".manifest"), {inv.output->string()});
    return exit_ok;
}

int cmd_noise(const Invocation& inv, std::ostream& out)
{
    const Config& c = inv.config;
    const double fs_hz = c.positive("sample_rate_hz", 1e9);
    const double duration = c.positive("duration_s", 1.31072e-4);
    const double f_lo = c.number("band_low_hz", 20e6);
    const double f_hi = c.number("band_high_hz", 420e6);
    const double density = c.number("density", 1e-3);
    if (!(f_hi > f_lo) || f_lo < 0.0)
        throw ConfigError("config keys 'band_low_hz' < 'band_high_hz' must bound a positive band");
    if (!(density >= 0.0))
        throw ConfigError("config key 'density' must be non-negative");
    const long long segment = c.integer("psd_segment", 1024);
    if (segment < 2 || (segment & (segment - 1)) != 0)
        throw ConfigError("config key 'psd_segment' must be a power of two");
    const std::uint64_t seed = seed_from(c);

    const NoiseSpectrum profile = NoiseSpectrum::flat(hz_to_angular(f_lo), hz_to_angular(f_hi), density);
    const NoiseRealization noise = synthesize_band_noise(profile, fs_hz, duration, seed);
    const fs::path& path = require_output(inv);

    std::ostringstream samples;
    samples << "# sample_rate_hz: " << fmt(fs_hz) << '\n'
            << "# seed: " << seed << '\n'
            << "re,im\n";
    for (const auto& x : noise.samples)
        samples << fmt(x.real()) << ',' << fmt(x.imag()) << '\n';
    write_file_atomic(path, samples.str());

    const NoiseSpectrum psd = estimate_psd(noise.samples, fs_hz, static_cast<std::size_t>(segment));
    std::ostringstream table;
    table << "frequency_hz,density\n";
    for (std::size_t i = 0; i < psd.size(); ++i)
        table << fmt(angular_to_hz(psd.omega()[i])) << ',' << fmt(psd.density()[i]) << '\n';
    const fs::path psd_path = sidecar(path, ".psd");
    write_file_atomic(psd_path, table.str());
    write_manifest(inv, sidecar(path, ".manifest"), {path.string(), psd_path.string()});

    double power = 0.0;
    for (const auto& x : noise.samples)
        power += std::norm(x);
    power /= static_cast<double>(noise.samples.size());
    out << "samples: " << noise.samples.size() << '\n'
        << "mean_power: " << fmt(power) << '\n'
        << "expected_power: " << fmt(density * (f_hi - f_lo)) << '\n';
    return exit_ok;
}

// Options that CLI11 handles itself; everything else of the form --key value is an override.
bool is_builtin(const std::string& name)
{
    static const std::set<std::string> names = {"--config", "--seed", "--output", "--levels", "--cross-terms",
                                                "--help", "-h", "-c", "-o"};
    return names.count(name) > 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Waveguide transmon thermometry toolkit", "mwthermo"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::string output;
    std::optional<long long> seed;
    std::optional<int> levels;
    std::string cross;
    std::vector<std::string> inputs;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "generate synthetic spectroscopy traces"},
        {"fit", "global fit of trace files"},
        {"thermometer", "convert a reflection time series into occupation and temperature"},
        {"sensitivity", "responsivity, NETP and NEP versus drive ratio"},
        {"chain", "per-stage occupation of an attenuator chain"},
        {"noise", "synthesize band-limited noise"},
    };
    for (const auto& [name, description] : commands) {
        auto* sub = app.add_subcommand(name, description);
        sub->add_option("-c,--config", config_path, "flat key = value configuration file");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("-o,--output", output, "output file or directory");
        sub->add_option("--levels", levels, "transmon truncation");
        sub->add_option("--cross-terms", cross, "on or off")->check(CLI::IsMember({"on", "off"}));
        sub->add_option("inputs", inputs, "input files");
    }

    // Split off free-form overrides before CLI11 sees them.
    std::vector<std::string> passed;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) == 0 && a.size() > 2) {
            const auto eq = a.find('=');
            const std::string name = a.substr(0, eq);
            if (!is_builtin(name) && name != "--version") {
                std::string key = name.substr(2);
                std::replace(key.begin(), key.end(), '-', '_');
                if (eq != std::string::npos) {
                    overrides.emplace_back(key, a.substr(eq + 1));
                } else if (i + 1 < args.size()) {
                    overrides.emplace_back(key, args[++i]);
                } else {
                    err << "error: override " << a << " has no value\n";
                    return exit_config;
                }
                continue;
            }
        }
        passed.push_back(a);
    }

    try {
        std::vector<std::string> reversed(passed.rbegin(), passed.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    Invocation inv;
    inv.command = app.get_subcommands().front()->get_name();
    inv.inputs = inputs;
    if (!output.empty())
        inv.output = output;

    try {
        if (!config_path.empty()) {
            try {
                inv.config = Config::load(config_path);
            } catch (const IoError&) {
                throw ConfigError("cannot read config file '" + config_path + "'");
            }
        }
        for (const auto& [key, value] : overrides)
            inv.config.set(key, value);
        if (seed)
            inv.config.set("seed", std::to_string(*seed));
        if (levels)
            inv.config.set("levels", std::to_string(*levels));
        if (!cross.empty())
            inv.config.set("cross_terms", cross);

        if (inv.command == "simulate")
            return cmd_simulate(inv, out);
        if (inv.command == "fit")
            return cmd_fit(inv, out);
        if (inv.command == "thermometer")
            return cmd_thermometer(inv, out);
        if (inv.command == "sensitivity")
            return cmd_sensitivity(inv, out);
        if (inv.command == "chain")
            return cmd_chain(inv, out);
        return cmd_noise(inv, out);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return exit_io;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return exit_io;
    } catch (const ConvergenceError& e) {
        err << "not converged: " << e.what() << '\n';
        return exit_convergence;
    } catch (const RangeError& e) {
        err << "out of range: " << e.what() << '\n';
        return exit_range;
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
}

} // namespace mwthermo::cli
