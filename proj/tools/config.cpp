#include "config.hpp"

#include <cmath>

#include "mwthermo/trace_io.hpp"

namespace mwthermo::cli {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double to_number(const std::string& key, const std::string& value)
{
    try {
        const double x = parse_double(value);
        if (std::isnan(x))
            throw InvalidArgument("nan");
        return x;
    } catch (const InvalidArgument&) {
        throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
    }
}

} // namespace

Config Config::parse(std::string_view text)
{
    Config config;
    std::size_t line_number = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
        start = end == std::string_view::npos ? text.size() : end + 1;
        ++line_number;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos || trim(body.substr(0, eq)).empty())
            throw ConfigError("config line " + std::to_string(line_number) + ": expected key = value");
        config.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    }
    return config;
}

Config Config::load(const std::filesystem::path& path)
{
    return parse(read_text_file(path));
}

void Config::set(const std::string& key, std::string value)
{
    values_[key] = std::move(value);
}

const std::string* Config::find(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        return nullptr;
    used_.insert(key);
    resolved_[key] = it->second;
    return &it->second;
}

void Config::note(const std::string& key, std::string value) const
{
    resolved_.emplace(key, std::move(value));
}

std::string Config::text(const std::string& key, const std::string& fallback) const
{
    const auto* v = find(key);
    if (!v)
        note(key, fallback);
    return v ? *v : fallback;
}

std::optional<std::string> Config::text(const std::string& key) const
{
    const auto* v = find(key);
    if (!v)
        return std::nullopt;
    return *v;
}

double Config::number(const std::string& key, double fallback) const
{
    const auto* v = find(key);
    if (!v)
        note(key, format_double(fallback));
    return v ? to_number(key, *v) : fallback;
}

double Config::number(const std::string& key) const
{
    const auto* v = find(key);
    if (!v)
        throw ConfigError("missing required config key '" + key + "'");
    return to_number(key, *v);
}

double Config::positive(const std::string& key, double fallback) const
{
    const double x = number(key, fallback);
    if (!(x > 0.0))
        throw ConfigError("config key '" + key + "' must be positive");
    return x;
}

double Config::positive(const std::string& key) const
{
    const double x = number(key);
    if (!(x > 0.0))
        throw ConfigError("config key '" + key + "' must be positive");
    return x;
}

long long Config::integer(const std::string& key, long long fallback) const
{
    const auto* v = find(key);
    if (!v) {
        note(key, std::to_string(fallback));
        return fallback;
    }
    try {
        std::size_t used = 0;
        const long long x = std::stoll(*v, &used);
        if (used != v->size())
            throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + *v + "' is not an integer");
    }
}

bool Config::on_off(const std::string& key, bool fallback) const
{
    const auto* v = find(key);
    if (!v) {
        note(key, fallback ? "on" : "off");
        return fallback;
    }
    if (*v == "on" || *v == "true" || *v == "1")
        return true;
    if (*v == "off" || *v == "false" || *v == "0")
        return false;
    throw ConfigError("config key '" + key + "' must be on or off");
}

std::vector<std::string> Config::list(const std::string& key) const
{
    std::vector<std::string> out;
    const auto* v = find(key);
    if (!v)
        return out;
    std::size_t start = 0;
    while (start <= v->size()) {
        const auto comma = v->find(',', start);
        const std::string item = trim(std::string_view(*v).substr(start, comma - start));
        if (!item.empty())
            out.push_back(item);
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

std::vector<double> Config::numbers(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& item : list(key))
        out.push_back(to_number(key, item));
    return out;
}

std::vector<std::string> Config::unused_keys() const
{
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
        if (!used_.count(key))
            out.push_back(key);
    return out;
}

} // namespace mwthermo::cli
