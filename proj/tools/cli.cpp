#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qdm/analysis.hpp"
#include "qdm/instrument.hpp"
#include "qdm/io/config.hpp"
#include "qdm/io/heatmap.hpp"
#include "qdm/io/map_file.hpp"
#include "qdm/io/report_table.hpp"
#include "qdm/parallel.hpp"

namespace fs = std::filesystem;

namespace qdm {

double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw InvalidArgument("percentile of an empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("percentile rank must be in [0, 1]");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

// values given on the command line, applied on top of the config file
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> threads;

    std::string b_dc, ac_amplitude, ac_frequency, standoff, field_noise, applied;
    std::string detuning;  // on | off
    std::string pulses;    // finite | ideal
    std::optional<int> delta_points;

    std::string input;
    std::string rabi_detuning;
    bool hyperfine = false;
    bool symmetric = false;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

bool parse_switch(const std::string& v, const std::string& on, const std::string& off, const std::string& flag) {
    if (v == on) return true;
    if (v == off) return false;
    throw ConfigError("--" + flag + " expects '" + on + "' or '" + off + "', got '" + v + "'");
}

RunConfig resolve_config(const Overrides& o) {
    RunConfig cfg = o.config.empty() ? default_config() : load_config(o.config);
    ExperimentConfig& ex = cfg.experiment;
    if (o.seed) ex.seed = *o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.threads) ex.threads = *o.threads;
    if (!o.b_dc.empty()) ex.b_dc = parse_quantity(o.b_dc, Dimension::field);
    if (!o.ac_amplitude.empty()) ex.ac.amplitude = parse_quantity(o.ac_amplitude, Dimension::field);
    if (!o.ac_frequency.empty()) ex.ac.frequency = parse_quantity(o.ac_frequency, Dimension::frequency);
    if (!o.standoff.empty()) ex.standoff = parse_quantity(o.standoff, Dimension::length);
    if (!o.field_noise.empty()) {
        ex.noise.field_sigma = parse_quantity(o.field_noise, Dimension::field);
        ex.noise.signal_sigma.reset();
    }
    if (!o.detuning.empty()) ex.detuning = parse_switch(o.detuning, "on", "off", "detuning");
    if (!o.pulses.empty()) cfg.finite_pulses = parse_switch(o.pulses, "finite", "ideal", "pulses");
    if (!o.applied.empty()) {
        cfg.applied_fields.clear();
        for (const auto& item : split_list(o.applied)) cfg.applied_fields.push_back(parse_quantity(item, Dimension::field));
        if (cfg.applied_fields.empty()) throw ConfigError("--applied needs at least one field");
    }
    if (o.delta_points) {
        if (*o.delta_points < 8) throw ConfigError("--delta-points must be at least 8");
        cfg.analysis.delta_points = *o.delta_points;
    }
    if (!o.rabi_detuning.empty()) cfg.analysis.rabi_detuning = parse_quantity(o.rabi_detuning, Dimension::frequency);
    if (o.hyperfine) cfg.analysis.rabi_hyperfine = true;
    try {
        cfg.rebuild_sequence();
        ex.validate();
        cfg.scene.build().validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    ex.threads = resolve_threads(ex.threads);
    return cfg;
}

fs::path out_dir(const RunConfig& cfg) {
    fs::path p(cfg.output_dir);
    fs::create_directories(p);
    return p;
}

fs::path input_dir(const Overrides& o, const RunConfig& cfg) {
    return o.input.empty() ? fs::path(cfg.output_dir) : fs::path(o.input);
}

std::string map_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "dc_%03zu", i);
    return buf;
}

void print_warnings(const Diagnostics& d) {
    for (const auto& w : d.warnings) std::cerr << "warning: " << w << "\n";
}

CalibrationGeometry calibration_for(const RunConfig& cfg, const GridSpec& grid, const MagnetScene& scene, std::size_t k) {
    CalibrationGeometry cal;
    cal.diameter = cfg.scene.diameter;
    cal.thickness = cfg.scene.thickness;
    cal.reference_moment = cfg.analysis.reference_moment;
    cal.grid = grid;
    cal.frame = cfg.experiment.frame;
    cal.linecut.search_radius = cfg.analysis.linecut_radius;
    const GaussianKernel kernel = cfg.analysis.kernel;
    cal.preprocess = [kernel](const FieldMap& m) { return background_subtract(m, kernel); };
    cal.threads = cfg.experiment.threads;
    cal.cx = scene.magnets[k].center.x();
    cal.cy = scene.magnets[k].center.y();
    if (cfg.analysis.array_reference)
        for (const auto& m : scene.magnets) cal.layout.push_back(m.center);
    return cal;
}

// ---- commands ----

int cmd_synth_dc(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const MagnetScene scene = cfg.scene.build();
    const auto maps = synth_dc_stack(scene, cfg.experiment, cfg.applied_fields);
    const fs::path dir = out_dir(cfg);

    ReportTable stack({"file", "applied_field", "moment"}, {"", "T", "J/T"});
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const std::string name = map_name(i);
        write_map((dir / (name + ".qdm")).string(), maps[i]);
        write_heatmap((dir / (name + ".pgm")).string(), maps[i], "T");
        stack.add_row({name + ".qdm", cfg.applied_fields[i], cfg.experiment.law.moment_at(cfg.applied_fields[i])});
    }
    stack.save((dir / "dc_stack.csv").string());
    std::cout << "synth-dc: wrote " << maps.size() << " maps (" << maps.front().width << "x" << maps.front().height
              << ") to " << dir.string() << "\n";
    return exit_ok;
}

int cmd_synth_ac(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const MagnetScene scene = cfg.scene.build();
    const DatacubeResult res = synth_ac_datacube(scene, cfg.experiment, cfg.analysis.deltas());
    print_warnings(res.diagnostics);
    const fs::path dir = out_dir(cfg);

    CubeManifest info;
    info.deltas = res.cube.deltas;
    info.kappa = res.kappa;
    info.ac_amplitude = cfg.experiment.ac.amplitude;
    info.ac_frequency = cfg.experiment.ac.frequency;
    info.signal_sigma = res.signal_sigma;
    write_cube(dir.string(), "ac_cube", res.cube, info);

    // ground truth for checking the inverse pipeline
    const LocalFields lf = local_fields(scene, cfg.experiment);
    ReportTable truth({"magnet", "x", "y", "delta_m_real", "delta_m_imag", "volume"}, {"", "m", "m", "J/T", "J/T", "m^3"});
    for (std::size_t i = 0; i < scene.magnets.size(); ++i) {
        const auto& m = scene.magnets[i];
        truth.add_row({static_cast<long long>(i), m.center.x(), m.center.y(), lf.delta_m[i].real(), lf.delta_m[i].imag(),
                       m.response_volume});
    }
    truth.save((dir / "ac_truth.csv").string());
    std::cout << "synth-ac: " << res.cube.width << "x" << res.cube.height << " px, " << res.cube.deltas.size()
              << " phase steps, kappa " << res.kappa << " rad/T, contrast noise " << res.signal_sigma << "\n";
    return exit_ok;
}

int cmd_analyze_dc(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const fs::path in = input_dir(o, cfg);
    const ReportTable stack = ReportTable::load((in / "dc_stack.csv").string());
    std::vector<FieldMap> maps;
    std::vector<double> applied;
    const std::size_t file_col = stack.column_index("file");
    for (std::size_t i = 0; i < stack.rows(); ++i) {
        maps.push_back(read_map((in / stack.cell(i, file_col)).string()));
        applied.push_back(stack.number(i, "applied_field"));
    }
    if (maps.size() < 2) throw DataError("analyze-dc needs at least two maps in dc_stack.csv");

    const MagnetScene scene = cfg.scene.build();
    const fs::path dir = out_dir(cfg);
    ReportTable calib({"magnet", "standoff", "y_pkpk", "y_pkpk_fit"}, {"", "m", "m", "m"});
    ReportTable moments({"magnet", "x", "y", "applied_field", "moment", "y_pkpk", "standoff_estimate"},
                        {"", "m", "m", "T", "J/T", "m", "m"});
    ReportTable summary({"magnet", "x", "y", "slope", "intercept", "standoff", "chi_v", "volume", "conversion",
                         "calibration_slope", "calibration_intercept"},
                        {"", "m", "m", "J/T/T", "J/T", "m", "", "m^3", "", "", "m"});
    double center_slope = 0.0, center_intercept = 0.0;
    for (std::size_t k = 0; k < scene.magnets.size(); ++k) {
        const auto& mag = scene.magnets[k];
        MomentGeometry geom;
        geom.cx = mag.center.x();
        geom.cy = mag.center.y();
        geom.calibration = calibration_for(cfg, maps.front().grid(), scene, k);
        geom.standoff_fit = standoff_calibration(geom.calibration, cfg.analysis.calibration_grid());
        const StandoffFit& fit = geom.standoff_fit;
        for (std::size_t i = 0; i < fit.z0.size(); ++i)
            calib.add_row({static_cast<long long>(k), fit.z0[i], fit.y_pkpk[i], fit.intercept + fit.slope * fit.z0[i]});
        if (k == scene.magnets.size() / 2) {
            center_slope = fit.slope;
            center_intercept = fit.intercept;
        }
        const MomentSeries s = moment_series(maps, applied, geom);
        for (std::size_t i = 0; i < maps.size(); ++i)
            moments.add_row({static_cast<long long>(k), geom.cx, geom.cy, applied[i], s.moments[i], s.y_pkpk[i],
                             s.standoffs[i]});
        // the slope is per tesla of NV-axis field, the same convention as the AC excitation
        const SusceptibilityResult chi = susceptibility(s.slope, 1.0, mag.response_volume, cfg.experiment.frame);
        summary.add_row({static_cast<long long>(k), geom.cx, geom.cy, s.slope, s.intercept, s.standoff, chi.chi_v,
                         chi.volume, chi.conversion, fit.slope, fit.intercept});
    }
    calib.save((dir / "standoff_calibration.csv").string());
    moments.save((dir / "moments.csv").string());
    summary.save((dir / "summary.csv").string());
    std::cout << "analyze-dc: central calibration y_pkpk = " << center_slope << " z0 + " << center_intercept * 1e6
              << " um; " << scene.magnets.size() << " magnets\n";
    return exit_ok;
}

struct Spread {
    double mean = 0.0;
    double sigma = 0.0;   // sample standard deviation
    double robust = 0.0;  // 1.4826 * median absolute deviation, insensitive to aliased fits
};

Spread spread(const std::vector<double>& v) {
    Spread s;
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.sigma = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
    const double med = percentile(v, 0.5);
    std::vector<double> dev;
    for (double x : v) dev.push_back(std::abs(x - med));
    s.robust = 1.4826 * percentile(dev, 0.5);
    return s;
}

std::pair<int, int> nearest_pixel(const GridSpec& g, double x, double y) {
    const int c = std::clamp(static_cast<int>(std::lround(g.col_of(x))), 0, g.width - 1);
    const int r = std::clamp(static_cast<int>(std::lround(g.row_of(y))), 0, g.height - 1);
    return {c, r};
}

int cmd_analyze_ac(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    fs::path manifest = o.input.empty() ? fs::path(cfg.output_dir) / "ac_cube.manifest" : fs::path(o.input);
    if (fs::is_directory(manifest)) manifest /= "ac_cube.manifest";
    CubeManifest info;
    const PhaseSweepCube cube = read_cube(manifest.string(), &info);
    if (!(info.kappa > 0.0)) throw DataError("cube manifest has no usable kappa");

    AcMapOptions opt;
    opt.kappa = info.kappa;
    opt.kernel = cfg.analysis.kernel;
    opt.threads = cfg.experiment.threads;
    const AcMaps maps = ac_maps(cube, opt);
    const fs::path dir = out_dir(cfg);

    const std::pair<const char*, const FieldMap*> outputs[] = {
        {"ac_amplitude", &maps.amplitude}, {"ac_sample", &maps.sample}, {"ac_phase", &maps.phase},
        {"ac_min_field", &maps.min_field}, {"ac_contrast", &maps.contrast}};
    for (const auto& [name, map] : outputs) {
        const std::string unit = std::string(name) == "ac_phase" ? "rad" : std::string(name) == "ac_contrast" ? "" : "T";
        write_map((dir / (std::string(name) + ".qdm")).string(), *map);
        write_heatmap((dir / (std::string(name) + ".pgm")).string(), *map, unit);
    }

    const MagnetScene scene = cfg.scene.build();
    ReportTable table({"magnet", "x", "y", "delta_m", "chi_v", "delta_H_y", "volume", "frequency", "phase_pos_lobe",
                       "phase_neg_lobe", "y_pkpk", "slope", "standoff"},
                      {"", "m", "m", "J/T", "", "A/m", "m^3", "Hz", "rad", "rad", "m", "T/m", "m"});
    for (std::size_t k = 0; k < scene.magnets.size(); ++k) {
        const auto& mag = scene.magnets[k];
        MomentGeometry geom;
        geom.cx = mag.center.x();
        geom.cy = mag.center.y();
        geom.calibration = calibration_for(cfg, cube.grid(), scene, k);
        geom.estimate_standoff = false;
        geom.standoff = cfg.experiment.standoff;
        const MapMoment mm = map_moment(maps.amplitude, geom);
        const SusceptibilityResult chi =
            susceptibility(mm.moment, info.ac_amplitude, mag.response_volume, cfg.experiment.frame, info.ac_frequency);
        const double angle = geom.calibration.linecut.angle;
        const auto [pc, pr] = nearest_pixel(cube.grid(), geom.cx + mm.cut.pos_at * std::cos(angle),
                                            geom.cy + mm.cut.pos_at * std::sin(angle));
        const auto [nc, nr] = nearest_pixel(cube.grid(), geom.cx + mm.cut.neg_at * std::cos(angle),
                                            geom.cy + mm.cut.neg_at * std::sin(angle));
        table.add_row({static_cast<long long>(k), geom.cx, geom.cy, mm.moment, chi.chi_v, chi.delta_H_y, chi.volume,
                       info.ac_frequency, maps.phase.at(pc, pr), maps.phase.at(nc, nr), mm.cut.y_pkpk, mm.cut.slope,
                       mm.standoff});
    }
    table.save((dir / "ac_magnets.csv").string());

    std::vector<double> phase, floor, amp;
    for (std::size_t p = 0; p < maps.mask.size(); ++p) {
        if (maps.mask[p]) continue;
        phase.push_back(maps.phase.values[p]);
        floor.push_back(maps.min_field.values[p]);
        amp.push_back(maps.amplitude.values[p]);
    }
    const Spread ph = spread(phase);
    const Spread am = spread(amp);
    const double failed_fraction = static_cast<double>(maps.failed) / static_cast<double>(maps.mask.size());

    ReportTable summary({"pixels", "failed", "failed_fraction", "phase_mean", "phase_scatter", "phase_scatter_robust",
                         "amplitude_mean", "amplitude_sigma", "amplitude_sigma_robust", "min_field_median",
                         "min_field_p10", "min_field_p90", "kappa"},
                        {"", "", "", "rad", "rad", "rad", "T", "T", "T", "T", "T", "T", "rad/T"});
    summary.add_row({static_cast<long long>(maps.mask.size()), static_cast<long long>(maps.failed), failed_fraction,
                     ph.mean, ph.sigma, ph.robust, am.mean, am.sigma, am.robust, percentile(floor, 0.5),
                     percentile(floor, 0.1), percentile(floor, 0.9), info.kappa});
    summary.save((dir / "ac_summary.csv").string());

    std::cout << "analyze-ac: " << maps.failed << " of " << maps.mask.size() << " pixel fits failed; phase scatter "
              << ph.sigma * 180.0 / pi << " deg (robust " << ph.robust * 180.0 / pi << " deg)\n";
    if (failed_fraction > cfg.analysis.max_failed_fraction) {
        std::cerr << "error: failed-fit fraction " << failed_fraction << " exceeds " << cfg.analysis.max_failed_fraction
                  << "\n";
        return exit_fit_failures;
    }
    return exit_ok;
}

int cmd_rabi(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const AnalysisConfig& an = cfg.analysis;
    std::vector<double> times(an.rabi_points);
    for (int i = 0; i < an.rabi_points; ++i) times[i] = an.rabi_duration * i / (an.rabi_points - 1);
    RabiOptions ropt;
    ropt.hyperfine = an.rabi_hyperfine;
    ropt.hyperfine_split = two_pi * an.hyperfine_split;
    const RabiTrace trace = simulate_rabi(cfg.experiment.rabi_omega, two_pi * an.rabi_detuning, times, ropt);
    const RabiFit fit = fit_rabi(trace);
    const fs::path dir = out_dir(cfg);

    ReportTable tr({"time", "population", "fit"}, {"s", "", ""});
    for (std::size_t i = 0; i < times.size(); ++i) tr.add_row({times[i], trace.population[i], rabi_model(fit, times[i])});
    tr.save((dir / "rabi_trace.csv").string());

    const double expected = std::hypot(cfg.experiment.rabi_omega, two_pi * an.rabi_detuning);
    ReportTable res({"omega1", "omega2", "A1", "A2", "decay1", "decay2", "baseline", "residual_sigma",
                     "single_frequency", "generalized_rabi"},
                    {"Hz", "Hz", "", "", "s", "s", "", "", "", "Hz"});
    res.add_row({fit.omega1 / two_pi, fit.omega2 / two_pi, fit.A1, fit.A2, fit.T1_decay, fit.T2_decay, fit.baseline,
                 fit.residual_sigma, static_cast<long long>(fit.single_frequency), expected / two_pi});
    res.save((dir / "rabi_fit.csv").string());
    std::cout << "rabi: omega1/2pi = " << fit.omega1 / two_pi * 1e-6 << " MHz, omega2/2pi = " << fit.omega2 / two_pi * 1e-6
              << " MHz" << (fit.single_frequency ? " (single frequency)" : "") << "\n";
    return exit_ok;
}

int cmd_error_curve(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const AnalysisConfig& an = cfg.analysis;
    std::vector<double> det;
    const int n = an.error_curve_points;
    for (int i = 0; i < n; ++i) det.push_back(n == 1 ? an.error_curve_max : an.error_curve_max * i / (n - 1));
    if (o.symmetric)
        for (int i = 1; i < n; ++i) det.push_back(-det[i]);
    std::sort(det.begin(), det.end());
    for (double& d : det) d *= two_pi;

    DetuningCurveOptions opt;
    opt.deltas = an.deltas();
    opt.propagation = cfg.experiment.effective_propagation();
    const auto curve =
        detuning_error_curve(det, cfg.experiment.rabi_omega, cfg.experiment.sequence, cfg.experiment.ac, opt);
    const fs::path dir = out_dir(cfg);
    ReportTable t({"detuning", "b_fit", "b_true", "error"}, {"Hz", "T", "T", "%"});
    for (const auto& p : curve) t.add_row({p.detuning / two_pi, p.b_fit, cfg.experiment.ac.amplitude, 100.0 * p.error});
    t.save((dir / "error_curve.csv").string());
    std::cout << "error-curve: " << curve.size() << " points, error at the largest detuning "
              << 100.0 * curve.back().error << " %\n";
    return exit_ok;
}

int cmd_report(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const fs::path in = input_dir(o, cfg);
    const FieldMap floor = read_map((in / "ac_min_field.qdm").string());
    std::vector<double> v;
    for (double x : floor.values)
        if (std::isfinite(x) && x > 0.0) v.push_back(x);
    if (v.empty()) throw DataError("minimum-field map has no usable pixels");
    const fs::path dir = out_dir(cfg);

    const double p10 = percentile(v, 0.1), p50 = percentile(v, 0.5), p90 = percentile(v, 0.9);
    ReportTable stats({"statistic", "value"}, {"", "T"});
    stats.add_row({std::string("median"), p50});
    stats.add_row({std::string("p10"), p10});
    stats.add_row({std::string("p90"), p90});
    stats.add_row({std::string("min"), *std::min_element(v.begin(), v.end())});
    stats.add_row({std::string("max"), *std::max_element(v.begin(), v.end())});
    stats.save((dir / "report.csv").string());

    // histogram over the central 98 percent so single outliers do not set the bins
    const int bins = 40;
    const double lo = percentile(v, 0.01), hi = percentile(v, 0.99);
    const double w = hi > lo ? (hi - lo) / bins : 1.0;
    std::vector<long long> counts(bins, 0);
    for (double x : v) {
        const int b = static_cast<int>(std::floor((x - lo) / w));
        if (b >= 0 && b < bins) ++counts[b];
        else if (x == hi) ++counts[bins - 1];
    }
    ReportTable hist({"bin_low", "bin_high", "count"}, {"T", "T", ""});
    for (int b = 0; b < bins; ++b) hist.add_row({lo + b * w, lo + (b + 1) * w, counts[b]});
    hist.save((dir / "min_field_histogram.csv").string());
    std::cout << "report: min detectable field median " << p50 * 1e9 << " nT (p10 " << p10 * 1e9 << ", p90 "
              << p90 * 1e9 << ")\n";
    return exit_ok;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"qdm: widefield NV AC susceptometry simulator and analysis"};
    app.require_subcommand(1);
    Overrides o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--threads", o.threads, "worker threads (default QDM_THREADS or hardware)");
    };
    auto physics = [&](CLI::App* sub) {
        sub->add_option("--b-dc", o.b_dc, "static bias field along the NV axis, e.g. 0.8mT");
        sub->add_option("--ac-amplitude", o.ac_amplitude, "applied AC amplitude along the NV axis, e.g. 3.5uT");
        sub->add_option("--ac-frequency", o.ac_frequency, "AC frequency, e.g. 300kHz");
        sub->add_option("--standoff", o.standoff, "sensor stand-off, e.g. 6um");
        sub->add_option("--field-noise", o.field_noise, "per-pixel field noise, e.g. 120nT");
        sub->add_option("--detuning", o.detuning, "stray-field detuning of the drive: on|off");
        sub->add_option("--pulses", o.pulses, "pulse model: finite|ideal");
    };

    auto* synth_dc = app.add_subcommand("synth-dc", "synthesize DC stray-field maps");
    common(synth_dc);
    physics(synth_dc);
    synth_dc->add_option("--applied", o.applied, "applied fields, e.g. 1mT,2mT,3mT");

    auto* synth_ac = app.add_subcommand("synth-ac", "synthesize a phase-sweep datacube");
    common(synth_ac);
    physics(synth_ac);
    synth_ac->add_option("--delta-points", o.delta_points, "phase steps in the sweep");

    auto* analyze_dc = app.add_subcommand("analyze-dc", "moments and stand-off from a DC stack");
    common(analyze_dc);
    physics(analyze_dc);
    analyze_dc->add_option("--input", o.input, "directory holding dc_stack.csv");

    auto* analyze_ac = app.add_subcommand("analyze-ac", "AC amplitude/phase maps and susceptibility");
    common(analyze_ac);
    physics(analyze_ac);
    analyze_ac->add_option("--input", o.input, "cube manifest or its directory");

    auto* rabi = app.add_subcommand("rabi", "simulate and fit a Rabi trace");
    common(rabi);
    physics(rabi);
    rabi->add_option("--rabi-detuning", o.rabi_detuning, "drive detuning, e.g. 0.9MHz");
    rabi->add_flag("--hyperfine", o.hyperfine, "add the second hyperfine population");

    auto* error_curve = app.add_subcommand("error-curve", "amplitude error against drive detuning");
    common(error_curve);
    physics(error_curve);
    error_curve->add_flag("--symmetric", o.symmetric, "also sweep negative detunings");

    auto* report = app.add_subcommand("report", "minimum-detectable-field statistics");
    common(report);
    report->add_option("--input", o.input, "directory holding ac_min_field.qdm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*synth_dc) return cmd_synth_dc(o);
        if (*synth_ac) return cmd_synth_ac(o);
        if (*analyze_dc) return cmd_analyze_dc(o);
        if (*analyze_ac) return cmd_analyze_ac(o);
        if (*rabi) return cmd_rabi(o);
        if (*error_curve) return cmd_error_curve(o);
        if (*report) return cmd_report(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return exit_config;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return exit_data;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const ConvergenceError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return exit_fit_failures;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return exit_data;
    }
    return exit_config;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.push_back("qdm");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace qdm
