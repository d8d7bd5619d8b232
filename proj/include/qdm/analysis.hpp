#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "qdm/common.hpp"
#include "qdm/field_map.hpp"
#include "qdm/instrument.hpp"
#include "qdm/least_squares.hpp"
#include "qdm/magnetostatics.hpp"
#include "qdm/spin_dynamics.hpp"

namespace qdm {

// ---- background removal ----

// window is the truncation length in pixels (taps span -window/2..window/2)
struct GaussianKernel {
    int window = 50;
    double sigma = 50.0 / 6.0;
};

FieldMap gaussian_blur(const FieldMap& map, const GaussianKernel& k);
FieldMap background_subtract(const FieldMap& map, const GaussianKernel& k = {});

// ---- ODMR ----

struct ODMRFit {
    double b_nv = 0.0;         // T
    double uncertainty = 0.0;  // T
    double f_low = 0.0, f_high = 0.0;
    double linewidth = 0.0;
    bool unresolved = false;
    bool converged = false;
};

ODMRFit fit_odmr(const ODMRSpectrum& spectrum);

// ---- phase sweeps ----

struct PhaseSweepFitOptions {
    int coarse_points = 49;        // phi_amp seeds over [0, phi_max]
    double phi_max = 3.0 * pi;
    int restarts = 8;
    LmOptions lm{};
    double kappa = 0.0;            // rad/T; when > 0 the amplitude in tesla is reported
};

struct PhaseSweepFit {
    double C0 = 0.0;
    double C = 0.0;
    double phi_amp = 0.0;
    double delta_offset = 0.0;
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // order C0, C, phi_amp, delta_offset
    double residual_sigma = 0.0;
    double b_ac = 0.0;        // T, phi_amp / kappa
    double b_ac_sigma = 0.0;  // T
    int iterations = 0;
    bool converged = false;
};

PhaseSweepFit fit_phase_sweep(const PhaseSweep& sweep, const PhaseSweepFitOptions& opt = {});
PhaseSweepFit fit_phase_sweep(const double* deltas, const double* signal, std::size_t n,
                              const PhaseSweepFitOptions& opt = {});

// ---- Rabi ----

struct RabiFit {
    double A1 = 0.0, A2 = 0.0;
    double omega1 = 0.0, omega2 = 0.0;  // rad/s, omega2 >= omega1
    double T1_decay = std::numeric_limits<double>::infinity();
    double T2_decay = std::numeric_limits<double>::infinity();
    double baseline = 0.0;
    double residual_sigma = 0.0;
    bool single_frequency = false;  // second component unresolved
    bool converged = false;
};

double rabi_model(const RabiFit& p, double t);
RabiFit fit_rabi(const RabiTrace& trace);

// ---- AC maps ----

struct AcMapOptions {
    double kappa = 0.0;  // rad/T, required
    GaussianKernel kernel{};
    PhaseSweepFitOptions fit{};
    int threads = 0;
};

struct AcMaps {
    FieldMap amplitude;       // T, total AC amplitude along the NV axis
    FieldMap sample;          // T, amplitude minus its Gaussian background
    FieldMap phase;           // rad, relative to the applied excitation
    FieldMap contrast;        // fitted C
    FieldMap residual_sigma;  // sigma_S per pixel
    FieldMap min_field;       // T, sigma_S / (C kappa) per pixel
    std::vector<std::uint8_t> mask;  // 1 where the fit failed
    int failed = 0;
};

AcMaps ac_maps(const PhaseSweepCube& cube, const AcMapOptions& opt);

// ---- moments and susceptibility ----

struct MomentSeries {
    std::vector<double> applied_fields;  // T
    std::vector<double> moments;         // J/T
    std::vector<double> y_pkpk;          // m
    std::vector<double> standoffs;       // m, per-map estimates
    double standoff = 0.0;               // m, value used for all maps
    double slope = 0.0;                  // J/T per T
    double intercept = 0.0;              // J/T
};

struct MomentGeometry {
    double cx = 0.0, cy = 0.0;  // magnet position in the map
    CalibrationGeometry calibration{};  // preprocess is applied to measured and reference maps alike
    StandoffFit standoff_fit{};
    bool estimate_standoff = true;  // false: use `standoff`
    double standoff = 6e-6;
};

struct MapMoment {
    double moment = 0.0;
    double standoff = 0.0;
    LinecutResult cut;
};

// one map; the standoff comes from the calibration line unless fixed
MapMoment map_moment(const FieldMap& map, const MomentGeometry& geom);

MomentSeries moment_series(const std::vector<FieldMap>& maps, const std::vector<double>& applied,
                           const MomentGeometry& geom);

struct SusceptibilityResult {
    double chi_v = 0.0;
    double delta_m = 0.0;      // J/T
    double delta_H_y = 0.0;    // A/m
    double volume = 0.0;       // m^3
    double frequency = 0.0;    // Hz
    double phase = 0.0;        // rad
    double conversion = 0.0;   // B_y / B_nv used to obtain delta_H_y
};

SusceptibilityResult susceptibility(double delta_m, double b_ac_nv, double volume, const NVFrame& frame = {},
                                    double frequency = 0.0, double phase = 0.0);
SusceptibilityResult susceptibility_from_h(double delta_m, double delta_h_y, double volume);

// ---- detuning bias ----

struct DetuningErrorPoint {
    double detuning = 0.0;  // rad/s
    double b_fit = 0.0;     // T
    double error = 0.0;     // (b_fit - b_true) / b_true
};

struct DetuningCurveOptions {
    std::vector<double> deltas = delta_grid(25);
    PropagationOptions propagation{};
    PhaseSweepFitOptions fit{};
};

std::vector<DetuningErrorPoint> detuning_error_curve(const std::vector<double>& detunings, double rabi_omega,
                                                     const XYSequence& seq, const ACFieldSpec& ac,
                                                     const DetuningCurveOptions& opt = {});

// ---- sensitivity calculus ----

double min_detectable_field(double sigma_S, double C, double kappa);
double min_detectable_phase(double sigma_S, double C, double kappa, double B_ac);
double added_phase(double B_s, double B_a, double delta_s);
double added_phase_small_signal(double B_s, double B_a, double delta_s);
double off_axis_ac(double B_perp_dc, double B_perp_ac);

}  // namespace qdm
