#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "config.hpp"
#include "mwthermo/errors.hpp"
#include "mwthermo/trace_io.hpp"

using namespace mwthermo;

namespace {

std::filesystem::path scratch_dir()
{
    const auto dir = std::filesystem::temp_directory_path() / "mwthermo_trace_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::size_t parse_error_line(std::string_view text)
{
    try {
        parse_trace(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST_CASE("trace text round-trips bit for bit")
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ReflectionTrace t;
    t.reference_mode = ReferenceMode::saturated;
    t.metadata["seed"] = "12";
    t.metadata["note"] = "cooldown 3";
    for (int k = 0; k < 100; ++k)
        t.points.push_back({5e9 + 1e5 * k + u(rng), 1e-12 * (2 + u(rng)), {u(rng), u(rng) * 1e-17}});
    const auto back = parse_trace(format_trace(t));
    CHECK(back.reference_mode == ReferenceMode::saturated);
    CHECK(back.metadata == t.metadata);
    REQUIRE(back.size() == t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        CHECK(back.points[k].frequency_hz == t.points[k].frequency_hz);
        CHECK(back.points[k].power_watt == t.points[k].power_watt);
        CHECK(back.points[k].r == t.points[k].r);
    }
    CHECK(format_trace(back) == format_trace(t));
}

TEST_CASE("trace files are written and read back")
{
    const auto path = scratch_dir() / "trace.csv";
    ReflectionTrace t;
    t.points.push_back({5.3e9, 1e-13, {-0.5, 0.25}});
    write_trace_file(path, t);
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    const auto back = read_trace_file(path);
    REQUIRE(back.size() == 1);
    CHECK(back.points[0].r == t.points[0].r);
    CHECK(back.reference_mode == ReferenceMode::none);
    CHECK_THROWS_AS(read_trace_file(scratch_dir() / "missing.csv"), IoError);
}

TEST_CASE("blank lines, comments and the column line are optional")
{
    const auto t = parse_trace("\n# just a comment\n5e9, 1e-12, -1, 0\r\n\n+6e9,2e-12,0.5,-0.5\n");
    REQUIRE(t.size() == 2);
    CHECK(t.points[1].frequency_hz == 6e9);
    CHECK(t.points[1].r == std::complex<double>(0.5, -0.5));
    CHECK(parse_trace("").empty());
}

TEST_CASE("malformed records name their line")
{
    CHECK(parse_error_line("frequency_hz,power_watt,re_r,im_r\n5e9,1e-12,0,0\n5e9,1e-12,0\n") == 3);
    CHECK(parse_error_line("5e9,1e-12,0,0,1\n") == 1);
    CHECK(parse_error_line("# a: b\n\n5e9,1e-12,abc,0\n") == 3);
    CHECK(parse_error_line("5e9,1e-12,1.0x,0\n") == 1);
    CHECK(parse_error_line("5e9,,0,0\n") == 1);
    CHECK(parse_error_line("5e9,1e-12,0,0\n-5e9,1e-12,0,0\n") == 2);
    CHECK(parse_error_line("5e9,0,0,0\n") == 1);
    CHECK(parse_error_line("# reference_mode: sideways\n") == 1);

    const auto path = scratch_dir() / "bad.csv";
    write_file_atomic(path, "5e9,1e-12,0,0\n5e9,1e-12,x,0\n");
    try {
        read_trace_file(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("number formatting")
{
    for (const double x : {0.1, 1.0 / 3.0, 5.332e9, -2.5e-300, 1e308})
        CHECK(parse_double(format_double(x)) == x);
    CHECK(std::isnan(parse_double("nan")));
    CHECK(parse_double("inf") == std::numeric_limits<double>::infinity());
    CHECK(parse_double(" 2.5 ") == 2.5);
    CHECK_THROWS_AS(parse_double(""), InvalidArgument);
    CHECK_THROWS_AS(parse_double("1 2"), InvalidArgument);
}

TEST_CASE("reference modes")
{
    for (const auto m : {ReferenceMode::none, ReferenceMode::detuned, ReferenceMode::saturated})
        CHECK(reference_mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(reference_mode_from_string("Detuned"), InvalidArgument);
}

TEST_CASE("trace validation")
{
    ReflectionTrace t;
    t.points.push_back({5e9, 1e-12, {0.0, 0.0}});
    CHECK_NOTHROW(t.validate());
    t.points.push_back({std::numeric_limits<double>::quiet_NaN(), 1e-12, {0.0, 0.0}});
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
    t.points.back() = {5e9, -1.0, {0.0, 0.0}};
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
}

TEST_CASE("configuration parsing")
{
    using cli::Config;
    const auto c = Config::parse("# run\nlevels = 4\n gamma_hz=38e6 # trailing\nname = two words\n"
                                 "ratios = 0.1, 1, 10\ncross_terms = off\n\n");
    CHECK(c.integer("levels", 3) == 4);
    CHECK(c.number("gamma_hz") == 38e6);
    CHECK(c.text("name", "") == "two words");
    CHECK(c.numbers("ratios") == std::vector<double>{0.1, 1.0, 10.0});
    CHECK_FALSE(c.on_off("cross_terms", true));
    CHECK(c.number("missing", 2.5) == 2.5);
    CHECK(c.resolved().at("missing") == "2.5");
    CHECK(c.unused_keys().empty());
    CHECK_THROWS_AS(c.number("absent"), cli::ConfigError);
    CHECK_THROWS_AS(c.number("name"), cli::ConfigError);
    CHECK_THROWS_AS(c.on_off("name", true), cli::ConfigError);

    Config later = c;
    later.set("levels", "3");
    CHECK(later.integer("levels", 4) == 3);

    try {
        Config::parse("a = 1\nnot a pair\n");
        FAIL("expected a config error");
    } catch (const cli::ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    const auto unused = Config::parse("x = 1\ny = 2\n");
    CHECK(unused.number("x") == 1.0);
    CHECK(unused.unused_keys() == std::vector<std::string>{"y"});
    CHECK_THROWS_AS(Config::parse("a = 0\n").positive("a"), cli::ConfigError);
    CHECK_THROWS_AS(Config::load(scratch_dir() / "no_such.cfg"), IoError);
}
