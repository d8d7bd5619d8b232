#include "qdm/io/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace qdm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

const std::map<std::string, double>& unit_table(Dimension d) {
    static const std::map<Dimension, std::map<std::string, double>> tables = {
        {Dimension::none, {}},
        {Dimension::field, {{"T", 1.0}, {"mT", 1e-3}, {"uT", 1e-6}, {"µT", 1e-6}, {"nT", 1e-9}, {"pT", 1e-12}, {"G", 1e-4}}},
        {Dimension::length, {{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"µm", 1e-6}, {"nm", 1e-9}}},
        {Dimension::frequency, {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}}},
        {Dimension::time, {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"µs", 1e-6}, {"ns", 1e-9}}},
        {Dimension::angle, {{"rad", 1.0}, {"deg", pi / 180.0}}},
        {Dimension::moment, {{"J/T", 1.0}, {"A*m^2", 1.0}, {"fJ/T", 1e-15}, {"aJ/T", 1e-18}}},
        {Dimension::volume, {{"m^3", 1.0}, {"um^3", 1e-18}, {"µm^3", 1e-18}, {"nm^3", 1e-27}}},
        {Dimension::moment_slope, {{"J/T/T", 1.0}, {"fJ/T/mT", 1e-12}}},
    };
    return tables.at(d);
}

bool parse_bool(const std::string& v, int line) {
    const std::string l = lower(v);
    if (l == "on" || l == "true" || l == "yes" || l == "1") return true;
    if (l == "off" || l == "false" || l == "no" || l == "0") return false;
    throw ConfigError("expected on/off, got '" + v + "'", line);
}

int parse_int(const std::string& v, int line) {
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || trim(end) != "") throw ConfigError("expected an integer, got '" + v + "'", line);
    return static_cast<int>(x);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// shortest text that parses back to the same double
std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

double parse_quantity(const std::string& text, Dimension dim) {
    const std::string t = trim(text);
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (end == t.c_str()) throw ConfigError("expected a number, got '" + text + "'");
    const std::string unit = trim(end);
    const auto& table = unit_table(dim);
    if (dim == Dimension::none) {
        if (!unit.empty()) throw ConfigError("unexpected unit '" + unit + "' on a dimensionless value");
        return x;
    }
    if (unit.empty()) throw ConfigError("missing unit in '" + text + "'");
    const auto it = table.find(unit);
    if (it == table.end()) throw ConfigError("unit '" + unit + "' does not fit this quantity");
    // decimal prefixes shift the exponent in the text so "5.8 um" reads exactly as 5.8e-6
    const int k = static_cast<int>(std::lround(std::log10(it->second)));
    const std::string num(t.c_str(), static_cast<const char*>(end));
    if (std::abs(it->second / std::pow(10.0, k) - 1.0) < 1e-12 &&
        num.find_first_not_of("+-.0123456789eE") == std::string::npos) {
        const auto e = num.find_first_of("eE");
        const int exp = e == std::string::npos ? 0 : std::stoi(num.substr(e + 1));
        return std::strtod((num.substr(0, e) + "e" + std::to_string(exp + k)).c_str(), nullptr);
    }
    return x * it->second;
}

MagnetScene SceneParams::build() const {
    return MagnetScene::grid_layout(rows, cols, pitch, diameter, thickness, {chi_real, chi_imag}, response_volume);
}

std::vector<double> AnalysisConfig::calibration_grid() const {
    std::vector<double> g;
    if (!(calibration_step > 0.0)) throw ConfigError("calibration step must be positive");
    for (double z = calibration_min; z <= calibration_max + 1e-9 * calibration_step; z += calibration_step) g.push_back(z);
    return g;
}

void RunConfig::rebuild_sequence() {
    const XYOrder order = experiment.sequence.order;
    const int n = experiment.sequence.n_pulses;
    const ReadoutSign sign = experiment.sequence.final_phase_sign;
    experiment.sequence = finite_pulses ? XYSequence::matched(order, n, experiment.ac.frequency, experiment.rabi_omega)
                                        : XYSequence::ideal(order, n, experiment.ac.frequency);
    experiment.sequence.final_phase_sign = sign;
}

RunConfig default_config() {
    RunConfig c;
    c.rebuild_sequence();
    return c;
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    struct Entry {
        std::string value;
        int line;
    };
    using Handler = std::function<void(const Entry&)>;

    auto q = [](double& target, Dimension d) {
        return Handler([&target, d](const Entry& e) {
            try {
                target = parse_quantity(e.value, d);
            } catch (const ConfigError& err) {
                throw ConfigError(err.what(), e.line);
            }
        });
    };
    auto integer = [](int& target) { return Handler([&target](const Entry& e) { target = parse_int(e.value, e.line); }); };
    auto boolean = [](bool& target) { return Handler([&target](const Entry& e) { target = parse_bool(e.value, e.line); }); };

    auto& ex = cfg.experiment;
    auto& an = cfg.analysis;
    double rabi_freq = ex.rabi_omega / two_pi;
    std::string signal_sigma = "auto";

    std::map<std::string, std::map<std::string, Handler>> handlers;
    handlers["scene"] = {
        {"rows", integer(cfg.scene.rows)},
        {"cols", integer(cfg.scene.cols)},
        {"pitch", q(cfg.scene.pitch, Dimension::length)},
        {"diameter", q(cfg.scene.diameter, Dimension::length)},
        {"thickness", q(cfg.scene.thickness, Dimension::length)},
        {"chi_real", q(cfg.scene.chi_real, Dimension::none)},
        {"chi_imag", q(cfg.scene.chi_imag, Dimension::none)},
        {"response_volume", q(cfg.scene.response_volume, Dimension::volume)},
    };
    handlers["experiment"] = {
        {"b_dc", q(ex.b_dc, Dimension::field)},
        {"b_dc_min", q(ex.b_dc_min, Dimension::field)},
        {"b_dc_max", q(ex.b_dc_max, Dimension::field)},
        {"applied_fields", Handler([&](const Entry& e) {
             cfg.applied_fields.clear();
             for (const auto& item : split_list(e.value)) {
                 try {
                     cfg.applied_fields.push_back(parse_quantity(item, Dimension::field));
                 } catch (const ConfigError& err) {
                     throw ConfigError(err.what(), e.line);
                 }
             }
             if (cfg.applied_fields.empty()) throw ConfigError("applied_fields is empty", e.line);
         })},
        {"ac_amplitude", q(ex.ac.amplitude, Dimension::field)},
        {"ac_frequency", q(ex.ac.frequency, Dimension::frequency)},
        {"sequence", Handler([&](const Entry& e) {
             const std::string v = lower(e.value);
             if (v == "xy4") ex.sequence.order = XYOrder::xy4;
             else if (v == "xy8") ex.sequence.order = XYOrder::xy8;
             else throw ConfigError("sequence must be xy4 or xy8", e.line);
         })},
        {"n_pulses", integer(ex.sequence.n_pulses)},
        {"rabi_frequency", q(rabi_freq, Dimension::frequency)},
        {"pulses", Handler([&](const Entry& e) {
             const std::string v = lower(e.value);
             if (v == "finite") cfg.finite_pulses = true;
             else if (v == "ideal") cfg.finite_pulses = false;
             else throw ConfigError("pulses must be finite or ideal", e.line);
         })},
        {"standoff", q(ex.standoff, Dimension::length)},
        {"width", integer(ex.grid.width)},
        {"height", integer(ex.grid.height)},
        {"pixel_size", q(ex.grid.pixel_size, Dimension::length)},
        {"detuning", boolean(ex.detuning)},
        {"ac_during_pulses", boolean(ex.propagation.ac_during_pulses)},
        {"pulse_slices", integer(ex.propagation.pulse_slices)},
        {"moment_slope", q(ex.law.slope, Dimension::moment_slope)},
        {"moment_intercept", q(ex.law.intercept, Dimension::moment)},
        {"moment_table", Handler([&](const Entry& e) {
             ex.law.table.clear();
             for (const auto& item : split_list(e.value)) {
                 const auto colon = item.find(':');
                 if (colon == std::string::npos) throw ConfigError("moment_table entries look like '1 mT : 107 fJ/T'", e.line);
                 try {
                     ex.law.table.emplace_back(parse_quantity(item.substr(0, colon), Dimension::field),
                                               parse_quantity(item.substr(colon + 1), Dimension::moment));
                 } catch (const ConfigError& err) {
                     throw ConfigError(err.what(), e.line);
                 }
             }
             for (std::size_t i = 1; i < ex.law.table.size(); ++i)
                 if (!(ex.law.table[i].first > ex.law.table[i - 1].first))
                     throw ConfigError("moment_table fields must increase", e.line);
         })},
        {"seed", Handler([&](const Entry& e) {
             char* end = nullptr;
             const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
             if (end == e.value.c_str() || trim(end) != "") throw ConfigError("seed must be an unsigned integer", e.line);
             ex.seed = v;
         })},
        {"threads", integer(ex.threads)},
    };
    handlers["noise"] = {
        {"field_sigma", q(ex.noise.field_sigma, Dimension::field)},
        {"signal_sigma", Handler([&](const Entry& e) { signal_sigma = e.value; })},
        {"t2", q(ex.noise.t2, Dimension::time)},
    };
    handlers["analysis"] = {
        {"kernel_window", integer(an.kernel.window)},
        {"kernel_sigma", q(an.kernel.sigma, Dimension::none)},
        {"delta_points", integer(an.delta_points)},
        {"delta_min", q(an.delta_min, Dimension::angle)},
        {"delta_max", q(an.delta_max, Dimension::angle)},
        {"calibration_min", q(an.calibration_min, Dimension::length)},
        {"calibration_max", q(an.calibration_max, Dimension::length)},
        {"calibration_step", q(an.calibration_step, Dimension::length)},
        {"reference_moment", q(an.reference_moment, Dimension::moment)},
        {"linecut_radius", q(an.linecut_radius, Dimension::length)},
        {"array_reference", boolean(an.array_reference)},
        {"max_failed_fraction", q(an.max_failed_fraction, Dimension::none)},
        {"error_curve_max", q(an.error_curve_max, Dimension::frequency)},
        {"error_curve_points", integer(an.error_curve_points)},
        {"rabi_duration", q(an.rabi_duration, Dimension::time)},
        {"rabi_points", integer(an.rabi_points)},
        {"rabi_detuning", q(an.rabi_detuning, Dimension::frequency)},
        {"rabi_hyperfine", boolean(an.rabi_hyperfine)},
        {"hyperfine_split", q(an.hyperfine_split, Dimension::frequency)},
    };
    handlers["output"] = {
        {"directory", Handler([&](const Entry& e) { cfg.output_dir = e.value; })},
    };

    std::string section;
    std::map<std::string, int> seen;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header", line_no);
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (!handlers.count(section)) throw ConfigError("unknown section [" + section + "]", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
        if (section.empty()) throw ConfigError("key outside of any section", line_no);
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        auto& table = handlers[section];
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line_no);
        const std::string full = section + "." + key;
        if (seen.count(full))
            throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(seen[full]) + ")", line_no);
        seen[full] = line_no;
        if (value.empty()) throw ConfigError("empty value for '" + key + "'", line_no);
        it->second({value, line_no});
    }

    auto where = [&](const std::string& k) { return seen.count(k) ? seen[k] : 0; };
    if (lower(signal_sigma) == "auto") {
        ex.noise.signal_sigma.reset();
    } else {
        try {
            ex.noise.signal_sigma = parse_quantity(signal_sigma, Dimension::none);
        } catch (const ConfigError& err) {
            throw ConfigError(err.what(), where("noise.signal_sigma"));
        }
    }
    if (!(rabi_freq > 0.0)) throw ConfigError("rabi_frequency must be positive", where("experiment.rabi_frequency"));
    ex.rabi_omega = two_pi * rabi_freq;
    if (!(ex.ac.frequency > 0.0)) throw ConfigError("ac_frequency must be positive", where("experiment.ac_frequency"));
    try {
        cfg.rebuild_sequence();
        ex.validate();
        cfg.scene.build().validate();
    } catch (const InvalidArgument& err) {
        throw ConfigError(err.what());
    }
    if (an.delta_points < 8) throw ConfigError("delta_points must be at least 8", where("analysis.delta_points"));
    if (an.kernel.window < 1 || !(an.kernel.sigma > 0.0))
        throw ConfigError("Gaussian kernel needs a positive window and sigma", where("analysis.kernel_window"));
    if (an.rabi_points < 16) throw ConfigError("rabi_points must be at least 16", where("analysis.rabi_points"));
    if (an.error_curve_points < 1) throw ConfigError("error_curve_points must be positive", where("analysis.error_curve_points"));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

std::string render_config(const RunConfig& c) {
    const auto& ex = c.experiment;
    const auto& an = c.analysis;
    std::ostringstream os;
    os << "[scene]\n"
       << "rows = " << c.scene.rows << "\n"
       << "cols = " << c.scene.cols << "\n"
       << "pitch = " << fmt(c.scene.pitch) << " m\n"
       << "diameter = " << fmt(c.scene.diameter) << " m\n"
       << "thickness = " << fmt(c.scene.thickness) << " m\n"
       << "chi_real = " << fmt(c.scene.chi_real) << "\n"
       << "chi_imag = " << fmt(c.scene.chi_imag) << "\n"
       << "response_volume = " << fmt(c.scene.response_volume) << " m^3\n\n";
    os << "[experiment]\n"
       << "b_dc = " << fmt(ex.b_dc) << " T\n"
       << "b_dc_min = " << fmt(ex.b_dc_min) << " T\n"
       << "b_dc_max = " << fmt(ex.b_dc_max) << " T\n"
       << "applied_fields = ";
    for (std::size_t i = 0; i < c.applied_fields.size(); ++i) os << (i ? ", " : "") << fmt(c.applied_fields[i]) << " T";
    os << "\n"
       << "ac_amplitude = " << fmt(ex.ac.amplitude) << " T\n"
       << "ac_frequency = " << fmt(ex.ac.frequency) << " Hz\n"
       << "sequence = " << (ex.sequence.order == XYOrder::xy4 ? "xy4" : "xy8") << "\n"
       << "n_pulses = " << ex.sequence.n_pulses << "\n"
       << "rabi_frequency = " << fmt(ex.rabi_omega / two_pi) << " Hz\n"
       << "pulses = " << (c.finite_pulses ? "finite" : "ideal") << "\n"
       << "standoff = " << fmt(ex.standoff) << " m\n"
       << "width = " << ex.grid.width << "\n"
       << "height = " << ex.grid.height << "\n"
       << "pixel_size = " << fmt(ex.grid.pixel_size) << " m\n"
       << "detuning = " << (ex.detuning ? "on" : "off") << "\n"
       << "ac_during_pulses = " << (ex.propagation.ac_during_pulses ? "on" : "off") << "\n"
       << "pulse_slices = " << ex.propagation.pulse_slices << "\n"
       << "moment_slope = " << fmt(ex.law.slope) << " J/T/T\n"
       << "moment_intercept = " << fmt(ex.law.intercept) << " J/T\n";
    if (!ex.law.table.empty()) {
        os << "moment_table = ";
        for (std::size_t i = 0; i < ex.law.table.size(); ++i)
            os << (i ? ", " : "") << fmt(ex.law.table[i].first) << " T : " << fmt(ex.law.table[i].second) << " J/T";
        os << "\n";
    }
    os << "seed = " << ex.seed << "\n"
       << "threads = " << ex.threads << "\n\n";
    os << "[noise]\n"
       << "field_sigma = " << fmt(ex.noise.field_sigma) << " T\n"
       << "signal_sigma = " << (ex.noise.signal_sigma ? fmt(*ex.noise.signal_sigma) : std::string("auto")) << "\n"
       << "t2 = " << fmt(ex.noise.t2) << " s\n\n";
    os << "[analysis]\n"
       << "kernel_window = " << an.kernel.window << "\n"
       << "kernel_sigma = " << fmt(an.kernel.sigma) << "\n"
       << "delta_points = " << an.delta_points << "\n"
       << "delta_min = " << fmt(an.delta_min) << " rad\n"
       << "delta_max = " << fmt(an.delta_max) << " rad\n"
       << "calibration_min = " << fmt(an.calibration_min) << " m\n"
       << "calibration_max = " << fmt(an.calibration_max) << " m\n"
       << "calibration_step = " << fmt(an.calibration_step) << " m\n"
       << "reference_moment = " << fmt(an.reference_moment) << " J/T\n"
       << "linecut_radius = " << fmt(an.linecut_radius) << " m\n"
       << "array_reference = " << (an.array_reference ? "on" : "off") << "\n"
       << "max_failed_fraction = " << fmt(an.max_failed_fraction) << "\n"
       << "error_curve_max = " << fmt(an.error_curve_max) << " Hz\n"
       << "error_curve_points = " << an.error_curve_points << "\n"
       << "rabi_duration = " << fmt(an.rabi_duration) << " s\n"
       << "rabi_points = " << an.rabi_points << "\n"
       << "rabi_detuning = " << fmt(an.rabi_detuning) << " Hz\n"
       << "rabi_hyperfine = " << (an.rabi_hyperfine ? "on" : "off") << "\n"
       << "hyperfine_split = " << fmt(an.hyperfine_split) << " Hz\n\n";
    os << "[output]\n"
       << "directory = " << c.output_dir << "\n";
    return os.str();
}

}  // namespace qdm
