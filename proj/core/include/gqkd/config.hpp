#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gqkd/model.hpp"

namespace gqkd {

struct RunParams {
    std::uint64_t seed = 1;
    std::uint64_t cycles = 1'000'000;
    std::uint64_t block_size = 65'536;
};

/// A SystemConfig plus the run bookkeeping carried in the same flat
/// key-value document. window_auto records a window_width_ps of "auto",
/// to be resolved by the window optimizer before any analysis.
struct ParsedConfig {
    SystemConfig system;
    RunParams run;
    bool window_auto = false;
};

class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& what, std::string key, int line)
        : std::runtime_error(what), key_(std::move(key)), line_(line) {}
    const std::string& key() const { return key_; }
    int line() const { return line_; }

  private:
    std::string key_;
    int line_;
};

/// Canonical flat keys, in emit order.
std::vector<std::string> config_keys();

ParsedConfig config_from_preset(std::string_view preset_name);

/// Parse "key = value" lines over the given base; '#' starts a comment.
/// Unknown keys are hard errors carrying the key name and line number.
/// The merged config is validated before being returned.
ParsedConfig parse_config(std::string_view text, const ParsedConfig& base);

/// Apply one override; key must be canonical. Validation is the caller's
/// responsibility (overrides are usually applied in batches).
void apply_override(ParsedConfig& config, std::string_view key, std::string_view value);

/// Canonical document: every key, one per line, round-trips exactly.
std::string emit_config(const ParsedConfig& config);

}  // namespace gqkd
