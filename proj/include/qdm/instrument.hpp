#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qdm/common.hpp"
#include "qdm/field_map.hpp"
#include "qdm/magnetostatics.hpp"
#include "qdm/spin_dynamics.hpp"

namespace qdm {

struct SceneMagnet {
    Vec3 center = Vec3::Zero();
    double diameter = 5.8e-6;
    double thickness = 30e-9;
    std::complex<double> chi_v{138.0, 0.0};
    double response_volume = 3.17e-18;  // m^3 used in the susceptibility relation

    CylinderMagnet with_moment(const Vec3& moment) const { return {center, diameter, thickness, moment}; }
};

struct MagnetScene {
    std::vector<SceneMagnet> magnets;

    // rows x cols, centered on the origin
    static MagnetScene grid_layout(int rows = 3, int cols = 3, double pitch = 25e-6, double diameter = 5.8e-6,
                                   double thickness = 30e-9, std::complex<double> chi_v = {138.0, 0.0},
                                   double response_volume = 3.17e-18);
    void validate() const;  // chi' >= 0, positive geometry, no overlaps
};

// moment (J/T, in-plane along +y) as a function of applied field (T)
struct MomentLaw {
    double slope = 129e-15 / 1e-3;  // J/T per T
    double intercept = -14e-15;     // J/T
    std::vector<std::pair<double, double>> table;  // (B, m), piecewise linear when nonempty

    double moment_at(double B) const;
};

struct NoiseModel {
    double field_sigma = 120e-9;          // T
    std::optional<double> signal_sigma;   // contrast units; calibrated from field_sigma when unset
    double t2 = 21e-6;                    // s; 0 disables the decoherence envelope
};

struct ExperimentConfig {
    double b_dc = 0.8e-3;  // T along the NV axis
    ACFieldSpec ac{3.5e-6, 300e3, 0.0};
    double rabi_omega = two_pi * 2.7e6;
    XYSequence sequence = XYSequence::matched(XYOrder::xy8, 8, 300e3, two_pi * 2.7e6);
    double standoff = 6e-6;
    GridSpec grid{};
    NoiseModel noise{};
    std::uint64_t seed = 7;
    bool detuning = true;  // static stray field detunes the drive
    PropagationOptions propagation{};
    MomentLaw law{};
    NVFrame frame{};
    double b_dc_min = 0.8e-3;
    double b_dc_max = 5e-3;
    int threads = 0;

    void validate() const;
    PropagationOptions effective_propagation() const;  // propagation with t2 from the noise model
};

struct LocalFields {
    GridSpec grid;
    std::vector<double> b_dc_nv;         // T, applied + stray
    std::vector<double> detuning;        // rad/s, from the stray part
    std::vector<double> b_ac_nv;         // T, amplitude of applied + sample AC
    std::vector<double> ac_phase_shift;  // rad
    std::vector<double> b_ac_sample_nv;  // T, signed in-phase sample AC field
    std::vector<double> b_perp_dc;       // T, magnitude perpendicular to the NV axis
    std::vector<double> b_perp_ac;       // T
    std::vector<std::complex<double>> delta_m;  // J/T per magnet
};

// in-plane excitation for a field amplitude measured along the NV axis
double in_plane_conversion(const NVFrame& frame);  // B_y = factor * B_nv
double excitation_h_y(double b_ac_nv, const NVFrame& frame);  // A/m

LocalFields local_fields(const MagnetScene& scene, const ExperimentConfig& cfg);

std::vector<FieldMap> synth_dc_stack(const MagnetScene& scene, const ExperimentConfig& cfg,
                                     const std::vector<double>& applied_fields);

// contrast noise whose fitted-amplitude scatter equals field_sigma at the operating point
double calibrated_signal_sigma(double field_sigma, double kappa, double contrast, double phi,
                               const std::vector<double>& deltas);

struct DatacubeResult {
    PhaseSweepCube cube;
    double kappa = 0.0;         // rad/T
    double signal_sigma = 0.0;  // contrast noise actually injected
    double contrast = 1.0;      // decoherence-reduced contrast
    Diagnostics diagnostics;
};

DatacubeResult synth_ac_datacube(const MagnetScene& scene, const ExperimentConfig& cfg,
                                 const std::vector<double>& deltas);

struct AcquisitionSchedule {
    double sequence_duration = 0.0;  // s, 0 = no sequence
    double demod_rate = 8e3;         // Hz
    double photons = 1e4;            // counts per bin for a bright pixel
    double readout_contrast = 0.3;   // fractional dimming of |1>
    std::vector<double> p0_plus;     // P(|0>) with the +x closing pulse, per pixel
    std::vector<double> p0_minus;    // with -x
};

struct CameraFrames {
    double demod_rate = 8e3;
    double bin_duration = 31.25e-6;
    std::vector<double> i_frame;  // I2 - I1
    std::vector<double> q_frame;  // Q2 - Q1
};

CameraFrames camera_demodulate(const AcquisitionSchedule& schedule, std::size_t pixels);

struct ODMRConfig {
    double f_min = 2.81e9;
    double f_max = 2.93e9;
    int points = 601;
    double linewidth = 1e6;  // Hz FWHM
    double depth = 0.1;      // dip contrast
    bool hyperfine = false;
    double hyperfine_split = 3.03e6;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

struct ODMRSpectrum {
    std::vector<double> mw_freqs;
    std::vector<double> contrast;  // normalized fluorescence, 1 off resonance
    double linewidth = 0.0;
    double hyperfine_split = 0.0;  // 0 when off
};

double odmr_contrast_at(double f, double b_nv, const ODMRConfig& cfg);
ODMRSpectrum synth_odmr(double b_nv, const ODMRConfig& cfg = {});

}  // namespace qdm
