#pragma once

/// @file config.hpp
/// @brief Typed engine configuration with layered loading.
///
/// Values are resolved with precedence flags > environment > config file >
/// built-in defaults. Every source uses the same key names as the command-line
/// flags (without the leading dashes), e.g. `tick-seconds`.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace citypulse {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Geometry constants for the city layout, in abstract units.
struct LayoutConstants {
    double min_height = 1.0;
    double max_height = 6.0;
    double class_footprint = 1.0;
    double padding = 0.3;
    double tile_thickness = 0.2;
};

std::vector<Rgb> default_gradient();

struct EngineConfig {
    double tick_seconds = 10.0;
    std::size_t window_size = 10;
    double decay = 0.5;
    std::uint16_t http_port = 8080;
    std::uint16_t ingest_tcp_port = 9000;
    std::set<std::string> constructor_names{"<init>", "new"};
    LayoutConstants layout;
    std::vector<Rgb> gradient = default_gradient();
    /// Directory served under `/` by the HTTP server; empty disables static files.
    std::string ui_dir;

    /// Throws ConfigError naming the first offending field.
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message);
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Raw key/value sources, already split by origin.
struct ConfigSources {
    std::map<std::string, std::string> flags;
    std::map<std::string, std::string> env;
    std::map<std::string, std::string> file;
    /// Unknown keys are an error instead of being ignored.
    bool strict = false;
};

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
/// Values may be wrapped in double quotes.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Reads CITYPULSE_* variables from the process environment and maps them to
/// flag keys (CITYPULSE_TICK_SECONDS -> tick-seconds).
std::map<std::string, std::string> read_env(char** environ_begin);

EngineConfig load_config(const ConfigSources& sources);

/// Keys recognised by load_config.
const std::vector<std::string>& config_keys();

}  // namespace citypulse
