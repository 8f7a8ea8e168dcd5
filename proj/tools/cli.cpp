#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gqkd/montecarlo.hpp"
#include "gqkd/rng.hpp"
#include "gqkd/timing.hpp"

namespace gqkd::cli {

namespace {

using nlohmann::json;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::filesystem::path output_dir(const Manifest& m) {
    if (!m.output_dir.empty()) return m.output_dir;
    if (const char* env = std::getenv("GQKD_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

std::filesystem::path prepare_output_dir(const Manifest& m) {
    const std::filesystem::path dir = output_dir(m);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

json config_json(const ParsedConfig& config) {
    json j;
    std::istringstream lines(emit_config(config));
    std::string line;
    while (std::getline(lines, line)) {
        const auto sep = line.find(" = ");
        if (sep == std::string::npos) continue;
        const std::string key = line.substr(0, sep);
        const std::string value = line.substr(sep + 3);
        char* end = nullptr;
        if (value.find_first_of(".eE") == std::string::npos) {
            const unsigned long long u = std::strtoull(value.c_str(), &end, 10);
            if (end && *end == '\0') {
                j[key] = u;
                continue;
            }
        }
        const double v = std::strtod(value.c_str(), &end);
        if (end && *end == '\0')
            j[key] = v;
        else
            j[key] = value;
    }
    return j;
}

json breakdown_json(const QberBreakdown& b) {
    return {{"qber_opt", b.opt},
            {"qber_det", b.det},
            {"qber_int", b.isi},
            {"qber_total", b.total},
            {"degenerate", b.degenerate}};
}

json report_json(const SecrecyReport& r) {
    return {{"qber", r.qber},
            {"secrecy_efficiency", r.secrecy_efficiency},
            {"raw_rate_hz", r.raw_rate_hz},
            {"net_bit_rate_hz", r.net_bit_rate_hz},
            {"secure", r.secure}};
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string csv =
        "distance_km,raw_rate_hz,qber_opt,qber_det,qber_int,qber_total,secrecy_eff,nbr_hz,"
        "secure_flag\n";
    for (const SweepRow& r : rows) {
        csv += num(r.distance_km) + ',' + num(r.report.raw_rate_hz) + ',' + num(r.qber.opt) +
               ',' + num(r.qber.det) + ',' + num(r.qber.isi) + ',' + num(r.qber.total) + ',' +
               num(r.report.secrecy_efficiency) + ',' + num(r.report.net_bit_rate_hz) + ',' +
               (r.report.secure ? "1" : "0") + '\n';
    }
    return csv;
}

std::vector<double> default_distances() {
    std::vector<double> d;
    for (int km = 1; km <= 25; ++km) d.push_back(km);
    return d;
}

WindowChoice auto_window(const SystemConfig& system, WindowObjective objective) {
    // Rate the optimizer sees: the full-capture conclusive rate and the
    // total dark rate; the extinction floor shifts the NBR objective.
    SystemConfig probe = system;
    probe.receiver.window_offset_ps = 0.0;
    probe.receiver.window_width_ps = probe.clock.period_ps();
    const TimingResponse response{
        0.5 * (combined_sigma(system.source, system.detector0) +
               combined_sigma(system.source, system.detector1)),
        0.5 * system.clock.period_ps(), system.clock.period_ps()};
    const double full_window_capture = window_capture(response, 0.0, response.period_ps);
    const double s0 =
        full_window_capture > 0 ? raw_click_rate(probe) / full_window_capture : 0.0;
    const double d0 = system.detector0.dark_rate_hz + system.detector1.dark_rate_hz;
    WindowOptOptions options;
    options.qber_floor = qber_opt(system.receiver.extinction_db);
    options.i_ae = system.i_ae;
    return optimize_window(response, s0, d0, system.clock, objective, options);
}

void run_subcommand(const Manifest& m, DispatchResult& result);

}  // namespace

std::vector<double> parse_distances(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double start = 0, stop = 0, step = 1;
        if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0)
            throw std::invalid_argument("bad distance range '" + text + "'; want start:stop:step");
        for (double d = start; d <= stop + 1e-9; d += step) out.push_back(d);
        return out;
    }
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::invalid_argument("no distances in '" + text + "'");
    return out;
}

Observation parse_observation(const std::string& text) {
    const auto colon = text.find(':');
    const auto eq = text.find('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon)
        throw std::invalid_argument("bad observation '" + text +
                                    "'; want distance:qber=V or distance:rate_hz=V");
    Observation obs;
    obs.distance_km = std::stod(text.substr(0, colon));
    const std::string kind = text.substr(colon + 1, eq - colon - 1);
    if (kind == "qber")
        obs.kind = Observation::Kind::qber;
    else if (kind == "rate_hz")
        obs.kind = Observation::Kind::raw_rate;
    else
        throw std::invalid_argument("bad observation kind '" + kind + "'");
    obs.value = std::stod(text.substr(eq + 1));
    return obs;
}

ParsedConfig resolve_config(const Manifest& manifest) {
    ParsedConfig config = config_from_preset(manifest.preset);
    if (!manifest.config_path.empty()) {
        std::ifstream in(manifest.config_path, std::ios::binary);
        if (!in)
            throw ConfigError("cannot read config file '" + manifest.config_path + "'",
                              manifest.config_path, 0);
        std::stringstream buf;
        buf << in.rdbuf();
        config = parse_config(buf.str(), config);
    }
    for (const auto& [key, value] : manifest.overrides) apply_override(config, key, value);

    if (config.window_auto) {
        const WindowChoice choice = auto_window(config.system, WindowObjective::max_nbr);
        config.system.receiver.window_offset_ps = choice.offset_ps;
        config.system.receiver.window_width_ps = choice.width_ps;
        config.window_auto = false;
    }
    config.system.validate();
    return config;
}

namespace {

void cmd_analyze(const Manifest& m, DispatchResult& result) {
    const ParsedConfig config = resolve_config(m);
    json j;
    j["config"] = config_json(config);
    j["qber"] = breakdown_json(total_qber(config.system));
    j["secrecy"] = report_json(secrecy_report(config.system));
    const auto dir = prepare_output_dir(m);
    const auto path = dir / "analyze.json";
    write_file(path, j.dump(2) + "\n");
    result.artifacts.push_back(path.string());
    result.output_text = j.dump(2) + "\n";
}

void cmd_sweep(const Manifest& m, DispatchResult& result) {
    const ParsedConfig config = resolve_config(m);
    const std::vector<double> distances =
        m.distances.empty() ? default_distances() : m.distances;
    const auto rows = sweep(config.system, distances);
    const auto dir = prepare_output_dir(m);

    const auto csv_path = dir / "sweep.csv";
    write_file(csv_path, sweep_csv(rows));
    result.artifacts.push_back(csv_path.string());

    std::string qber_dat = "# distance_km qber_total\n";
    std::string nbr_dat = "# distance_km nbr_hz\n";
    for (const SweepRow& r : rows) {
        qber_dat += num(r.distance_km) + ' ' + num(r.qber.total) + '\n';
        nbr_dat += num(r.distance_km) + ' ' + num(r.report.net_bit_rate_hz) + '\n';
    }
    const auto qber_path = dir / "sweep_qber.dat";
    const auto nbr_path = dir / "sweep_nbr.dat";
    write_file(qber_path, qber_dat);
    write_file(nbr_path, nbr_dat);
    result.artifacts.push_back(qber_path.string());
    result.artifacts.push_back(nbr_path.string());
    result.output_text = "wrote " + csv_path.string() + " (" +
                         std::to_string(rows.size()) + " rows)\n";
}

void cmd_montecarlo(const Manifest& m, DispatchResult& result) {
    const ParsedConfig config = resolve_config(m);
    RunSpec spec{config.system, config.run.cycles, config.run.seed, config.run.block_size};
    const auto t0 = std::chrono::steady_clock::now();
    const TallyCounts tally = run(spec, m.workers);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const Estimate est = estimate(tally, config.system.clock);
    const CrossCheckReport check = cross_check(config.system, tally);

    json j;
    j["config"] = config_json(config);
    j["seed"] = spec.seed;
    j["block_size"] = spec.block_size;
    j["rng"] = kRngAlgorithm;
    j["workers"] = m.workers;
    j["wall_time_s"] = wall;
    j["tally"] = {{"cycles", tally.cycles},
                  {"sifted", tally.sifted},
                  {"errors_total", tally.errors_total},
                  {"errors_optical", tally.errors_optical},
                  {"errors_dark", tally.errors_dark},
                  {"errors_isi", tally.errors_isi},
                  {"darks_accepted", tally.darks_accepted},
                  {"leaked", tally.leaked},
                  {"deadtime_losses", tally.deadtime_losses},
                  {"multiclick_discards", tally.multiclick_discards}};
    j["estimate"] = {{"qber", est.qber},
                     {"qber_stderr", est.qber_stderr},
                     {"rate_hz", est.rate_hz},
                     {"frac_optical", est.frac_optical},
                     {"frac_dark", est.frac_dark},
                     {"frac_isi", est.frac_isi},
                     {"degenerate", est.degenerate}};
    json entries = json::array();
    for (const CheckEntry& e : check.entries)
        entries.push_back({{"name", e.name},
                           {"observed", e.observed},
                           {"predicted", e.predicted},
                           {"sigma", e.sigma},
                           {"z", e.z},
                           {"flagged", e.flagged}});
    j["cross_check"] = {{"ok", check.ok}, {"entries", entries}};

    const auto dir = prepare_output_dir(m);
    const auto path = dir / "montecarlo.json";
    write_file(path, j.dump(2) + "\n");
    result.artifacts.push_back(path.string());
    result.output_text = j.dump(2) + "\n";
}

void cmd_window_opt(const Manifest& m, DispatchResult& result) {
    const ParsedConfig config = resolve_config(m);
    SystemConfig system = config.system;
    const WindowChoice choice = auto_window(
        system, m.objective == "min_qber" ? WindowObjective::min_qber : WindowObjective::max_nbr);
    system.receiver.window_offset_ps = choice.offset_ps;
    system.receiver.window_width_ps = choice.width_ps;

    json j;
    j["objective"] = m.objective;
    j["offset_ps"] = choice.offset_ps;
    j["width_ps"] = choice.width_ps;
    j["objective_value"] = choice.objective_value;
    j["degenerate"] = choice.degenerate;
    if (choice.width_ps > 0) {
        j["qber_total"] = total_qber(system).total;
        j["nbr_hz"] = secrecy_report(system).net_bit_rate_hz;
    }
    const auto dir = prepare_output_dir(m);
    const auto path = dir / "window.json";
    write_file(path, j.dump(2) + "\n");
    result.artifacts.push_back(path.string());
    result.output_text = j.dump(2) + "\n";
}

void cmd_calibrate(const Manifest& m, DispatchResult& result) {
    if (m.observations.empty())
        throw std::invalid_argument("calibrate: provide at least one --observe");
    ParsedConfig config = resolve_config(m);
    const CalibrationResult fit = calibrate(config.system, m.observations);
    config.system = fit.config;

    const auto dir = prepare_output_dir(m);
    const auto conf_path = dir / "calibrated.conf";
    write_file(conf_path, emit_config(config));
    result.artifacts.push_back(conf_path.string());

    json j;
    j["residual_sum_sq"] = fit.residual_sum_sq;
    j["residuals"] = fit.residuals;
    j["sweeps"] = fit.sweeps;
    j["fitted"] = {{"coupling_loss_db", fit.config.receiver.coupling_loss_db},
                   {"dark_rate_hz", fit.config.detector0.dark_rate_hz},
                   {"extinction_db", fit.config.receiver.extinction_db}};
    const auto json_path = dir / "calibration.json";
    write_file(json_path, j.dump(2) + "\n");
    result.artifacts.push_back(json_path.string());
    result.output_text = j.dump(2) + "\n";
}

void cmd_compare(const Manifest& m, DispatchResult& result) {
    const std::vector<double> distances =
        m.distances.empty() ? default_distances() : m.distances;
    Manifest sspd = m;
    sspd.preset = "SSPD_3G3";
    Manifest sispad = m;
    sispad.preset = "SISPAD_2G";
    const auto rows_sspd = sweep(resolve_config(sspd).system, distances);
    const auto rows_sispad = sweep(resolve_config(sispad).system, distances);

    std::string csv =
        "distance_km,sspd_raw_rate_hz,sspd_qber_total,sspd_nbr_hz,sspd_secure_flag,"
        "sispad_raw_rate_hz,sispad_qber_total,sispad_nbr_hz,sispad_secure_flag\n";
    for (std::size_t i = 0; i < distances.size(); ++i) {
        const SweepRow& a = rows_sspd[i];
        const SweepRow& b = rows_sispad[i];
        csv += num(a.distance_km) + ',' + num(a.report.raw_rate_hz) + ',' +
               num(a.qber.total) + ',' + num(a.report.net_bit_rate_hz) + ',' +
               (a.report.secure ? "1" : "0") + ',' + num(b.report.raw_rate_hz) + ',' +
               num(b.qber.total) + ',' + num(b.report.net_bit_rate_hz) + ',' +
               (b.report.secure ? "1" : "0") + '\n';
    }
    const auto dir = prepare_output_dir(m);
    const auto path = dir / "compare.csv";
    write_file(path, csv);
    result.artifacts.push_back(path.string());
    result.output_text = "wrote " + path.string() + "\n";
}

void cmd_threshold(const Manifest& m, DispatchResult& result) {
    const double q = security_threshold(m.i_ae);
    result.output_text = num(q) + "\n";
}

void cmd_histogram(const Manifest& m, DispatchResult& result) {
    const ParsedConfig config = resolve_config(m);
    const TimingResponse response = response_for(config.system, config.system.detector0);
    const double bin =
        m.hist_bin_ps > 0 ? m.hist_bin_ps : config.system.clock.period_ps() / 64.0;
    const Histogram h =
        synth_histogram(response, m.hist_signal_hz, m.hist_dark_hz, config.system.clock,
                        m.hist_duration_s, bin, config.run.seed);
    std::string csv = "bin_start_ps,counts\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        csv += num(i * h.bin_width_ps) + ',' + std::to_string(h.counts[i]) + '\n';
    const auto dir = prepare_output_dir(m);
    const auto path = dir / "histogram.csv";
    write_file(path, csv);
    result.artifacts.push_back(path.string());
    result.output_text = "wrote " + path.string() + " (" +
                         std::to_string(h.counts.size()) + " bins, total " +
                         std::to_string(h.total()) + ")\n";
}

void run_subcommand(const Manifest& m, DispatchResult& result) {
    if (m.subcommand == "analyze")
        cmd_analyze(m, result);
    else if (m.subcommand == "sweep")
        cmd_sweep(m, result);
    else if (m.subcommand == "montecarlo")
        cmd_montecarlo(m, result);
    else if (m.subcommand == "window-opt")
        cmd_window_opt(m, result);
    else if (m.subcommand == "calibrate")
        cmd_calibrate(m, result);
    else if (m.subcommand == "compare")
        cmd_compare(m, result);
    else if (m.subcommand == "threshold")
        cmd_threshold(m, result);
    else if (m.subcommand == "histogram")
        cmd_histogram(m, result);
    else
        throw std::invalid_argument("unknown subcommand '" + m.subcommand + "'");
}

}  // namespace

DispatchResult dispatch(const Manifest& manifest) {
    DispatchResult result;
    try {
        run_subcommand(manifest, result);
    } catch (const ConfigError& e) {
        json err = {{"error",
                     {{"message", e.what()}, {"key", e.key()}, {"line", e.line()}}}};
        result.exit_code = 1;
        result.error_json = err.dump() + "\n";
    } catch (const std::exception& e) {
        json err = {{"error", {{"message", e.what()}}}};
        result.exit_code = 1;
        result.error_json = err.dump() + "\n";
    }
    return result;
}

int run_main(int argc, char** argv) {
    CLI::App app{"B92 quantum key distribution link simulator"};
    app.require_subcommand(1);

    Manifest manifest;
    std::string distances_text;
    std::vector<std::string> observe_text;
    std::vector<std::string> set_text;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--preset", manifest.preset, "SSPD_3G3 or SISPAD_2G");
        sub->add_option("--config", manifest.config_path, "key-value config document");
        sub->add_option("--output", manifest.output_dir,
                        "output directory (default $GQKD_OUTPUT_DIR or .)");
        sub->add_option("--set", set_text, "override, key=value (repeatable)")
            ->type_name("KEY=VALUE");
        for (const std::string& key : config_keys()) {
            // every canonical config key doubles as --key VALUE
            sub->add_option_function<std::string>(
                   "--" + key,
                   [&manifest, key](const std::string& v) {
                       manifest.overrides.emplace_back(key, v);
                   })
                ->type_name("VALUE");
        }
    };

    CLI::App* analyze = app.add_subcommand("analyze", "single-point QBER + secrecy report");
    add_common(analyze);

    CLI::App* sw = app.add_subcommand("sweep", "QBER/NBR vs distance table");
    add_common(sw);
    sw->add_option("--distances", distances_text, "start:stop:step or comma list");

    CLI::App* mc = app.add_subcommand("montecarlo", "event-level simulation + cross-check");
    add_common(mc);
    mc->add_option("--workers", manifest.workers, "worker threads");

    CLI::App* wopt = app.add_subcommand("window-opt", "optimal coincidence window");
    add_common(wopt);
    wopt->add_option("--objective", manifest.objective, "max_nbr or min_qber")
        ->check(CLI::IsMember({"max_nbr", "min_qber"}));

    CLI::App* cal = app.add_subcommand("calibrate", "fit unknown receiver parameters");
    add_common(cal);
    cal->add_option("--observe", observe_text,
                    "observation, distance:qber=V or distance:rate_hz=V (repeatable)");

    CLI::App* cmp = app.add_subcommand("compare", "side-by-side preset sweep");
    add_common(cmp);
    cmp->add_option("--distances", distances_text, "start:stop:step or comma list");

    CLI::App* thr = app.add_subcommand("threshold", "security threshold Q*");
    thr->add_option("--i-ae,--i_ae", manifest.i_ae, "Alice-Eve information bound");

    CLI::App* hist = app.add_subcommand("histogram", "synthesize a TCSPC histogram");
    add_common(hist);
    hist->add_option("--signal-rate", manifest.hist_signal_hz, "signal rate, Hz");
    hist->add_option("--dark-rate", manifest.hist_dark_hz, "total dark rate, Hz");
    hist->add_option("--duration", manifest.hist_duration_s, "acquisition time, s");
    hist->add_option("--bin-width", manifest.hist_bin_ps, "bin width, ps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    manifest.subcommand = app.get_subcommands().front()->get_name();
    try {
        if (!distances_text.empty()) manifest.distances = parse_distances(distances_text);
        for (const std::string& o : observe_text)
            manifest.observations.push_back(parse_observation(o));
        for (const std::string& s : set_text) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("bad --set '" + s + "'; want key=value");
            manifest.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "{\"error\":{\"message\":\"%s\"}}\n", e.what());
        return 1;
    }

    const DispatchResult result = dispatch(manifest);
    if (!result.output_text.empty()) std::fputs(result.output_text.c_str(), stdout);
    if (!result.error_json.empty()) std::fputs(result.error_json.c_str(), stderr);
    return result.exit_code;
}

}  // namespace gqkd::cli
