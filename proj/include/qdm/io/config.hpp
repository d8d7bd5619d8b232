#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qdm/analysis.hpp"
#include "qdm/instrument.hpp"

namespace qdm {

enum class Dimension { none, field, length, frequency, time, angle, moment, volume, moment_slope };

// "0.8 mT" -> 8e-4; throws ConfigError naming the problem
double parse_quantity(const std::string& text, Dimension dim);

struct SceneParams {
    int rows = 3;
    int cols = 3;
    double pitch = 25e-6;
    double diameter = 5.8e-6;
    double thickness = 30e-9;
    double chi_real = 138.0;
    double chi_imag = 0.0;
    double response_volume = 3.17e-18;

    MagnetScene build() const;
};

struct AnalysisConfig {
    GaussianKernel kernel{};
    int delta_points = 33;
    double delta_min = -pi / 2;
    double delta_max = pi / 2;
    double calibration_min = 3e-6;
    double calibration_max = 10e-6;
    double calibration_step = 1e-6;
    double reference_moment = 107e-15;
    double linecut_radius = 12.5e-6;
    bool array_reference = true;  // reference maps model the whole array, not one isolated magnet
    double max_failed_fraction = 0.05;
    double error_curve_max = 2e6;  // Hz (cyclic detuning)
    int error_curve_points = 21;
    double rabi_duration = 2e-6;
    int rabi_points = 401;
    double rabi_detuning = 0.9e6;  // Hz (cyclic)
    bool rabi_hyperfine = false;
    double hyperfine_split = 3.03e6;  // Hz

    std::vector<double> deltas() const { return delta_grid(delta_points, delta_min, delta_max); }
    std::vector<double> calibration_grid() const;
};

struct RunConfig {
    SceneParams scene{};
    ExperimentConfig experiment{};
    AnalysisConfig analysis{};
    std::vector<double> applied_fields{1e-3, 2e-3, 3e-3};
    bool finite_pulses = true;
    std::string output_dir = "out";

    // recomputes tau and pulse widths from the AC frequency and Rabi rate
    void rebuild_sequence();
};

RunConfig default_config();
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
std::string render_config(const RunConfig& cfg);  // parseable text for the given configuration

}  // namespace qdm
