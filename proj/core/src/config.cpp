#include "gqkd/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>

namespace gqkd {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view value, const std::string& key, int line) {
    const std::string s(value);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("invalid numeric value '" + s + "' for key '" + key + "'", key, line);
    return v;
}

std::uint64_t parse_u64(std::string_view value, const std::string& key, int line) {
    const std::string s(value);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || s.find('-') != std::string::npos)
        throw ConfigError("invalid count value '" + s + "' for key '" + key + "'", key, line);
    return v;
}

struct KeySpec {
    const char* name;
    std::function<std::string(const ParsedConfig&)> get;
    std::function<void(ParsedConfig&, std::string_view, int)> set;
};

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = [] {
        std::vector<KeySpec> t;
        const auto num = [&t](const char* name, auto accessor) {
            t.push_back({name,
                         [accessor](const ParsedConfig& c) {
                             return format_double(accessor(const_cast<ParsedConfig&>(c)));
                         },
                         [accessor, name](ParsedConfig& c, std::string_view v, int line) {
                             accessor(c) = parse_double(v, name, line);
                         }});
        };
        const auto count = [&t](const char* name, auto accessor) {
            t.push_back({name,
                         [accessor](const ParsedConfig& c) {
                             return std::to_string(accessor(const_cast<ParsedConfig&>(c)));
                         },
                         [accessor, name](ParsedConfig& c, std::string_view v, int line) {
                             accessor(c) = parse_u64(v, name, line);
                         }});
        };

        num("clock_hz", [](ParsedConfig& c) -> double& { return c.system.clock.frequency_hz; });
        num("mu", [](ParsedConfig& c) -> double& { return c.system.source.mean_photon_number; });
        num("pulse_fwhm_ps", [](ParsedConfig& c) -> double& { return c.system.source.pulse_fwhm_ps; });
        num("wavelength_nm", [](ParsedConfig& c) -> double& { return c.system.source.wavelength_nm; });
        num("loss_db_per_km", [](ParsedConfig& c) -> double& { return c.system.channel.loss_db_per_km; });
        num("distance_km", [](ParsedConfig& c) -> double& { return c.system.channel.length_km; });
        num("extra_loss_db", [](ParsedConfig& c) -> double& { return c.system.channel.extra_loss_db; });
        num("angle_deg", [](ParsedConfig& c) -> double& { return c.system.receiver.state_separation_deg; });
        num("extinction_db", [](ParsedConfig& c) -> double& { return c.system.receiver.extinction_db; });
        num("coupling_loss_db", [](ParsedConfig& c) -> double& { return c.system.receiver.coupling_loss_db; });
        num("window_offset_ps", [](ParsedConfig& c) -> double& { return c.system.receiver.window_offset_ps; });

        // window_width_ps doubles as the "auto" switch.
        t.push_back({"window_width_ps",
                     [](const ParsedConfig& c) {
                         return c.window_auto ? std::string("auto")
                                              : format_double(c.system.receiver.window_width_ps);
                     },
                     [](ParsedConfig& c, std::string_view v, int line) {
                         if (v == "auto") {
                             c.window_auto = true;
                             return;
                         }
                         c.window_auto = false;
                         c.system.receiver.window_width_ps =
                             parse_double(v, "window_width_ps", line);
                     }});

        num("det0_efficiency", [](ParsedConfig& c) -> double& { return c.system.detector0.efficiency; });
        num("det0_dark_hz", [](ParsedConfig& c) -> double& { return c.system.detector0.dark_rate_hz; });
        num("det0_jitter_fwhm_ps", [](ParsedConfig& c) -> double& { return c.system.detector0.jitter_fwhm_ps; });
        t.push_back({"det0_dead_ns",
                     [](const ParsedConfig& c) {
                         return format_double(c.system.detector0.dead_time_ps / 1000.0);
                     },
                     [](ParsedConfig& c, std::string_view v, int line) {
                         c.system.detector0.dead_time_ps =
                             1000.0 * parse_double(v, "det0_dead_ns", line);
                     }});
        num("det1_efficiency", [](ParsedConfig& c) -> double& { return c.system.detector1.efficiency; });
        num("det1_dark_hz", [](ParsedConfig& c) -> double& { return c.system.detector1.dark_rate_hz; });
        num("det1_jitter_fwhm_ps", [](ParsedConfig& c) -> double& { return c.system.detector1.jitter_fwhm_ps; });
        t.push_back({"det1_dead_ns",
                     [](const ParsedConfig& c) {
                         return format_double(c.system.detector1.dead_time_ps / 1000.0);
                     },
                     [](ParsedConfig& c, std::string_view v, int line) {
                         c.system.detector1.dead_time_ps =
                             1000.0 * parse_double(v, "det1_dead_ns", line);
                     }});
        num("i_ae", [](ParsedConfig& c) -> double& { return c.system.i_ae; });
        count("seed", [](ParsedConfig& c) -> std::uint64_t& { return c.run.seed; });
        count("cycles", [](ParsedConfig& c) -> std::uint64_t& { return c.run.cycles; });
        count("block_size", [](ParsedConfig& c) -> std::uint64_t& { return c.run.block_size; });
        return t;
    }();
    return table;
}

const KeySpec* find_key(std::string_view name) {
    for (const KeySpec& k : key_table())
        if (name == k.name) return &k;
    return nullptr;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const KeySpec& k : key_table()) keys.emplace_back(k.name);
    return keys;
}

ParsedConfig config_from_preset(std::string_view preset_name) {
    const auto preset = preset_by_name(preset_name);
    if (!preset)
        throw ConfigError("unknown preset '" + std::string(preset_name) + "'",
                          std::string(preset_name), 0);
    ParsedConfig c;
    c.system = *preset;
    return c;
}

void apply_override(ParsedConfig& config, std::string_view key, std::string_view value) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError("unknown config key '" + std::string(key) + "'",
                                 std::string(key), 0);
    spec->set(config, trim(value), 0);
}

ParsedConfig parse_config(std::string_view text, const ParsedConfig& base) {
    ParsedConfig config = base;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t sep = line.find('=');
        if (sep == std::string_view::npos)
            throw ConfigError("expected 'key = value'", std::string(line), line_no);
        const std::string_view key = trim(line.substr(0, sep));
        const std::string_view value = trim(line.substr(sep + 1));
        const KeySpec* spec = find_key(key);
        if (!spec)
            throw ConfigError("unknown config key '" + std::string(key) + "'", std::string(key),
                              line_no);
        spec->set(config, value, line_no);
    }
    if (config.window_auto) {
        // The window is resolved later by the optimizer; validate the rest
        // against a stand-in full-period window.
        SystemConfig probe = config.system;
        probe.receiver.window_offset_ps = 0.0;
        probe.receiver.window_width_ps = probe.clock.period_ps();
        probe.validate();
    } else {
        config.system.validate();
    }
    return config;
}

std::string emit_config(const ParsedConfig& config) {
    std::string out;
    for (const KeySpec& k : key_table()) {
        out += k.name;
        out += " = ";
        out += k.get(config);
        out += '\n';
    }
    return out;
}

}  // namespace gqkd
