#pragma once

#include <complex>
#include <string>
#include <vector>

#include "qdm/common.hpp"

namespace qdm {

using cplx = std::complex<double>;

struct SpinState {
    cplx amp0{1.0, 0.0};
    cplx amp1{0.0, 0.0};

    static SpinState ground() { return {}; }
    double population0() const { return std::norm(amp0); }
    double population1() const { return std::norm(amp1); }
    double norm2() const { return std::norm(amp0) + std::norm(amp1); }
};

// phase 0 = x, pi/2 = y, pi = -x, ...
struct ControlPulse {
    double rabi_omega = 0.0;  // rad/s
    double phase = 0.0;       // rad
    double detuning = 0.0;    // rad/s
    double duration = 0.0;    // s
};

struct ACFieldSpec {
    double amplitude = 0.0;      // T, along the NV axis
    double frequency = 300e3;    // Hz
    double initial_phase = 0.0;  // rad

    double field_at(double t) const;
};

enum class XYOrder { xy4 = 4, xy8 = 8 };
enum class ReadoutSign { plus_x, minus_x };

// tau/2 - pi - tau - pi - ... - pi - tau/2 between the two pi/2 pulses.
// The opening pi/2 is centered at t = 0, pi pulse k at (k + 1/2)*tau and the
// closing pi/2 at n_pulses*tau. Zero durations mean ideal instantaneous pulses.
struct XYSequence {
    XYOrder order = XYOrder::xy8;
    int n_pulses = 8;
    double tau = 1.0 / 600e3;
    double pi_duration = 0.0;
    double pi2_duration = 0.0;
    ReadoutSign final_phase_sign = ReadoutSign::plus_x;

    static XYSequence matched(XYOrder order, int n_pulses, double f_ac, double rabi_omega);
    static XYSequence ideal(XYOrder order, int n_pulses, double f_ac);

    double pulse_phase(int k) const;   // phase of the k-th pi pulse
    double total_duration() const;     // first pi/2 leading edge to last trailing edge
    void validate() const;             // throws InvalidArgument
    // nonempty text when tau differs from 1/(2 f_ac)
    std::string timing_warning(const ACFieldSpec& ac) const;
};

struct PropagationOptions {
    bool ac_during_pulses = true;
    int pulse_slices = 16;  // 1 = field sampled once at the pulse midpoint
    double t2 = 0.0;        // s, decoherence envelope exp(-T/t2) when > 0
};

struct PhaseSweep {
    std::vector<double> deltas;
    std::vector<double> signal;
};

struct RabiTrace {
    std::vector<double> times;
    std::vector<double> population;
};

struct RabiOptions {
    bool hyperfine = false;
    double hyperfine_split = two_pi * 3.03e6;  // rad/s, second population at detuning + split
    double weight = 0.5;                        // weight of the second population
};

SpinState propagate_pulse(const SpinState& s, const ControlPulse& p);

// accumulated phase 2 pi gamma_e int b(t) dt + dc_detuning (t1 - t0)
double free_evolution_phase(const ACFieldSpec& ac, double dc_detuning, double t0, double t1);

// P(|0>) after the sequence with the given closing pi/2 sign
double run_xyn_single(const XYSequence& seq, const ACFieldSpec& ac, double dc_detuning, double rabi_omega,
                      ReadoutSign closing, const PropagationOptions& opt = {});

// S_norm = P_-x(|0>) - P_+x(|0>), equal to cos(Phi) for ideal pulses
double run_xyn(const XYSequence& seq, const ACFieldSpec& ac, double dc_detuning, double rabi_omega,
               const PropagationOptions& opt = {});

// ac.initial_phase is added to every grid value
PhaseSweep phase_sweep(const XYSequence& seq, const ACFieldSpec& ac, const std::vector<double>& delta_grid,
                       double dc_detuning, double rabi_omega, const PropagationOptions& opt = {});

std::vector<double> delta_grid(int n, double lo = -pi / 2, double hi = pi / 2);

double xyn_kappa(int n_pulses, double tau);  // rad/T
double analytic_xyn_phase(double B, double delta, int n_pulses, double tau);

struct SignalParams {
    double C0 = 0.0;
    double C = 1.0;
    double kappaB = 0.0;
    double delta_offset = 0.0;
};
double xyn_signal_model(const SignalParams& p, double delta);

RabiTrace simulate_rabi(double rabi_omega, double dc_detuning, const std::vector<double>& times,
                        const RabiOptions& opt = {});

}  // namespace qdm
