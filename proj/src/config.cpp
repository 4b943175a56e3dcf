#include "citypulse/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace citypulse {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    }
    return v;
}

std::uint16_t parse_port(const std::string& key, const std::string& value) {
    auto v = parse_unsigned(key, value);
    if (v > 65535) throw ConfigError(key, "port out of range: " + value);
    return static_cast<std::uint16_t>(v);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

// "r,g,b;r,g,b;..."
std::vector<Rgb> parse_gradient(const std::string& key, const std::string& value) {
    std::vector<Rgb> stops;
    for (const auto& stop : split(value, ';')) {
        auto parts = split(stop, ',');
        if (parts.size() != 3) throw ConfigError(key, "gradient stop must be r,g,b: '" + stop + "'");
        std::uint8_t c[3];
        for (int i = 0; i < 3; ++i) {
            auto v = parse_unsigned(key, parts[i]);
            if (v > 255) throw ConfigError(key, "color channel out of range: " + parts[i]);
            c[i] = static_cast<std::uint8_t>(v);
        }
        stops.push_back({c[0], c[1], c[2]});
    }
    return stops;
}

void apply(EngineConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "tick-seconds") {
        cfg.tick_seconds = parse_double(key, value);
    } else if (key == "window-size") {
        cfg.window_size = parse_unsigned(key, value);
    } else if (key == "decay") {
        cfg.decay = parse_double(key, value);
    } else if (key == "http-port") {
        cfg.http_port = parse_port(key, value);
    } else if (key == "ingest-tcp-port") {
        cfg.ingest_tcp_port = parse_port(key, value);
    } else if (key == "constructor-names") {
        auto names = split(value, ',');
        cfg.constructor_names = {names.begin(), names.end()};
    } else if (key == "min-height") {
        cfg.layout.min_height = parse_double(key, value);
    } else if (key == "max-height") {
        cfg.layout.max_height = parse_double(key, value);
    } else if (key == "class-footprint") {
        cfg.layout.class_footprint = parse_double(key, value);
    } else if (key == "padding") {
        cfg.layout.padding = parse_double(key, value);
    } else if (key == "tile-thickness") {
        cfg.layout.tile_thickness = parse_double(key, value);
    } else if (key == "gradient") {
        cfg.gradient = parse_gradient(key, value);
    } else if (key == "ui-dir") {
        cfg.ui_dir = value;
    }
}

bool is_known(const std::string& key) {
    const auto& keys = config_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

std::vector<Rgb> default_gradient() {
    return {{0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0}};
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "tick-seconds", "window-size",       "decay",       "http-port",
        "ingest-tcp-port", "constructor-names", "min-height", "max-height",
        "class-footprint", "padding",          "tile-thickness", "gradient",
        "ui-dir"};
    return keys;
}

void EngineConfig::validate() const {
    if (!(tick_seconds > 0.0) || !std::isfinite(tick_seconds)) {
        throw ConfigError("tick-seconds", "must be > 0");
    }
    if (window_size < 1) throw ConfigError("window-size", "must be >= 1");
    if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("decay", "must be in [0, 1)");
    if (!(layout.min_height > 0.0)) throw ConfigError("min-height", "must be > 0");
    if (!(layout.max_height > layout.min_height)) {
        throw ConfigError("max-height", "must be greater than min-height");
    }
    if (!(layout.class_footprint > 0.0)) throw ConfigError("class-footprint", "must be > 0");
    if (!(layout.padding > 0.0)) throw ConfigError("padding", "must be > 0");
    if (!(layout.tile_thickness > 0.0)) throw ConfigError("tile-thickness", "must be > 0");
    if (gradient.size() < 2) throw ConfigError("gradient", "needs at least 2 stops");
    if (constructor_names.empty()) throw ConfigError("constructor-names", "must not be empty");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        }
        auto key = trim(t.substr(0, eq));
        auto value = trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        out[key] = value;
    }
    return out;
}

std::map<std::string, std::string> read_env(char** environ_begin) {
    static constexpr std::string_view prefix = "CITYPULSE_";
    std::map<std::string, std::string> out;
    if (environ_begin == nullptr) return out;
    for (char** e = environ_begin; *e != nullptr; ++e) {
        std::string_view entry(*e);
        if (!entry.starts_with(prefix)) continue;
        auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        std::string key(entry.substr(prefix.size(), eq - prefix.size()));
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
            return c == '_' ? '-' : static_cast<char>(std::tolower(c));
        });
        out[key] = std::string(entry.substr(eq + 1));
    }
    return out;
}

EngineConfig load_config(const ConfigSources& sources) {
    EngineConfig cfg;
    // Lowest precedence first so later layers overwrite.
    for (const auto* layer : {&sources.file, &sources.env, &sources.flags}) {
        for (const auto& [key, value] : *layer) {
            if (!is_known(key)) {
                if (sources.strict) throw ConfigError(key, "unknown key");
                continue;
            }
            apply(cfg, key, value);
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace citypulse
