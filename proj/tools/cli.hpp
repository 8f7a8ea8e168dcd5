#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gqkd/analysis.hpp"
#include "gqkd/config.hpp"

namespace gqkd::cli {

/// One resolved invocation: subcommand, config source, overrides, outputs.
struct Manifest {
    std::string subcommand;
    std::string preset = "SSPD_3G3";
    std::string config_path;  // empty: preset only
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string output_dir;  // empty: $GQKD_OUTPUT_DIR or "."

    std::vector<double> distances;  // sweep / compare rows
    double i_ae = 0.29;             // threshold subcommand
    std::vector<Observation> observations;  // calibrate subcommand
    std::string objective = "max_nbr";      // window-opt subcommand
    unsigned workers = 1;

    // histogram subcommand
    double hist_signal_hz = 1e4;
    double hist_dark_hz = 0.0;
    double hist_duration_s = 1.0;
    double hist_bin_ps = 0.0;  // 0: period / 64
};

struct DispatchResult {
    int exit_code = 0;
    std::string output_text;            // for stdout
    std::string error_json;             // for stderr, non-empty on failure
    std::vector<std::string> artifacts; // files written
};

/// Resolve preset/config-file/overrides into a validated config, including
/// the "auto" window.
ParsedConfig resolve_config(const Manifest& manifest);

/// Run one subcommand and write its artifacts. Never throws; failures come
/// back as a nonzero exit code plus machine-readable error JSON.
DispatchResult dispatch(const Manifest& manifest);

/// "1:25:1" (start:stop:step, inclusive) or "1,5,10,25".
std::vector<double> parse_distances(const std::string& text);

/// "25:qber=0.036" or "25:rate_hz=13.0".
Observation parse_observation(const std::string& text);

/// Full argv entry point used by the gqkd binary.
int run_main(int argc, char** argv);

}  // namespace gqkd::cli
