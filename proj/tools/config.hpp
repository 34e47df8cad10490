#pragma once

// Flat "key = value" run configuration. Later sets win, so command-line
// overrides are applied after the file is loaded.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mwthermo/errors.hpp"

namespace mwthermo::cli {

/// Bad or missing configuration value; the message names the key.
class ConfigError : public InvalidArgument
{
public:
    using InvalidArgument::InvalidArgument;
};

class Config
{
public:
    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, std::string value);
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string text(const std::string& key, const std::string& fallback) const;
    std::optional<std::string> text(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    double number(const std::string& key) const;
    /// Same as number() but rejects values <= 0.
    double positive(const std::string& key, double fallback) const;
    double positive(const std::string& key) const;
    long long integer(const std::string& key, long long fallback) const;
    bool on_off(const std::string& key, bool fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<std::string> list(const std::string& key) const;

    const std::map<std::string, std::string>& values() const noexcept { return values_; }
    std::vector<std::string> unused_keys() const;
    /// Every key read so far with the value actually used, defaults included.
    const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }
    /// Records a derived or default value for the manifest unless the key was given.
    void note(const std::string& key, std::string value) const;

private:
    const std::string* find(const std::string& key) const;

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
    mutable std::map<std::string, std::string> resolved_;
};

} // namespace mwthermo::cli
