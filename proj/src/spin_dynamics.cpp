#include "qdm/spin_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qdm {

namespace {

// U = [[a, -conj(b)], [b, conj(a)]]
struct SU2 {
    cplx a{1.0, 0.0};
    cplx b{0.0, 0.0};
};

SpinState apply(const SU2& u, const SpinState& s) {
    return {u.a * s.amp0 - std::conj(u.b) * s.amp1, u.b * s.amp0 + std::conj(u.a) * s.amp1};
}

SU2 pulse_unitary(double omega, double phase, double detuning, double t) {
    const double w = std::hypot(omega, detuning);
    if (w == 0.0 || t == 0.0) return {};
    const double nx = omega * std::cos(phase) / w;
    const double ny = omega * std::sin(phase) / w;
    const double nz = detuning / w;
    const double c = std::cos(0.5 * w * t);
    const double s = std::sin(0.5 * w * t);
    return {cplx(c, -s * nz), cplx(0.0, -s) * cplx(nx, ny)};
}

SU2 ideal_rotation(double angle, double phase) {
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    return {cplx(c, 0.0), cplx(0.0, -s) * cplx(std::cos(phase), std::sin(phase))};
}

SU2 free_unitary(double phi) { return {std::polar(1.0, -0.5 * phi), cplx(0.0, 0.0)}; }

// finite pulse centered at tc; the AC field enters as extra detuning,
// sampled at the midpoint of each slice
SpinState finite_pulse(SpinState s, double tc, double duration, double angle_phase, double rabi_omega,
                       const ACFieldSpec& ac, double dc_detuning, const PropagationOptions& opt) {
    const int slices = opt.ac_during_pulses ? std::max(1, opt.pulse_slices) : 1;
    const double h = duration / slices;
    const double t_start = tc - 0.5 * duration;
    for (int i = 0; i < slices; ++i) {
        double det = dc_detuning;
        if (opt.ac_during_pulses) det += two_pi * constants.gamma_e * ac.field_at(t_start + (i + 0.5) * h);
        s = apply(pulse_unitary(rabi_omega, angle_phase, det, h), s);
    }
    return s;
}

SpinState apply_pulse(const SpinState& s, double tc, double duration, double angle, double phase, double rabi_omega,
                      const ACFieldSpec& ac, double dc_detuning, const PropagationOptions& opt) {
    if (duration == 0.0) return apply(ideal_rotation(angle, phase), s);
    return finite_pulse(s, tc, duration, phase, rabi_omega, ac, dc_detuning, opt);
}

}  // namespace

double ACFieldSpec::field_at(double t) const { return amplitude * std::cos(two_pi * frequency * t + initial_phase); }

XYSequence XYSequence::matched(XYOrder order, int n_pulses, double f_ac, double rabi_omega) {
    if (!(f_ac > 0.0)) throw InvalidArgument("AC frequency must be positive");
    if (!(rabi_omega > 0.0)) throw InvalidArgument("Rabi rate must be positive for finite pulses");
    XYSequence s;
    s.order = order;
    s.n_pulses = n_pulses;
    s.tau = 1.0 / (2.0 * f_ac);
    s.pi_duration = pi / rabi_omega;
    s.pi2_duration = pi / (2.0 * rabi_omega);
    return s;
}

XYSequence XYSequence::ideal(XYOrder order, int n_pulses, double f_ac) {
    if (!(f_ac > 0.0)) throw InvalidArgument("AC frequency must be positive");
    XYSequence s;
    s.order = order;
    s.n_pulses = n_pulses;
    s.tau = 1.0 / (2.0 * f_ac);
    return s;
}

double XYSequence::pulse_phase(int k) const {
    static constexpr int xy8[8] = {0, 1, 0, 1, 1, 0, 1, 0};
    const int idx = order == XYOrder::xy8 ? xy8[k % 8] : (k % 2);
    return idx * (pi / 2);
}

double XYSequence::total_duration() const { return n_pulses * tau + pi2_duration; }

void XYSequence::validate() const {
    const int ord = static_cast<int>(order);
    if (n_pulses <= 0 || n_pulses % ord != 0)
        throw InvalidArgument("pulse count must be a positive multiple of the XY order");
    if (!(tau > 0.0)) throw InvalidArgument("pulse spacing must be positive");
    if (pi_duration < 0.0 || pi2_duration < 0.0) throw InvalidArgument("pulse durations must be non-negative");
    const double eps = 1e-12 * tau;
    if (0.5 * tau - 0.5 * pi_duration - 0.5 * pi2_duration < -eps || tau - pi_duration < -eps)
        throw InvalidArgument("pulses overlap for the given spacing");
}

std::string XYSequence::timing_warning(const ACFieldSpec& ac) const {
    const double matched_tau = 1.0 / (2.0 * ac.frequency);
    if (std::abs(tau - matched_tau) <= 1e-9 * matched_tau) return {};
    std::ostringstream os;
    os << "pulse spacing " << tau << " s is not matched to 1/(2 f_ac) = " << matched_tau << " s";
    return os.str();
}

SpinState propagate_pulse(const SpinState& s, const ControlPulse& p) {
    if (p.duration < 0.0) throw InvalidArgument("pulse duration must be non-negative");
    if (p.rabi_omega < 0.0) throw InvalidArgument("Rabi rate must be non-negative");
    return apply(pulse_unitary(p.rabi_omega, p.phase, p.detuning, p.duration), s);
}

double free_evolution_phase(const ACFieldSpec& ac, double dc_detuning, double t0, double t1) {
    if (t1 < t0) throw InvalidArgument("free evolution interval must have t1 >= t0");
    if (!(ac.frequency > 0.0)) throw InvalidArgument("AC frequency must be positive");
    const double w = two_pi * ac.frequency;
    // sin(a) - sin(b) = 2 cos((a+b)/2) sin((a-b)/2), stable for short intervals
    const double mid = 0.5 * w * (t0 + t1) + ac.initial_phase;
    const double half = 0.5 * w * (t1 - t0);
    const double integral = 2.0 * std::cos(mid) * std::sin(half) / w;  // int cos(w t + d) dt
    return dc_detuning * (t1 - t0) + two_pi * constants.gamma_e * ac.amplitude * integral;
}

double run_xyn_single(const XYSequence& seq, const ACFieldSpec& ac, double dc_detuning, double rabi_omega,
                      ReadoutSign closing, const PropagationOptions& opt) {
    seq.validate();
    if (!(ac.frequency > 0.0)) throw InvalidArgument("AC frequency must be positive");
    if ((seq.pi_duration > 0.0 || seq.pi2_duration > 0.0) && !(rabi_omega > 0.0))
        throw InvalidArgument("finite pulses need a positive Rabi rate");

    const double tp = seq.pi_duration;
    const double tp2 = seq.pi2_duration;
    SpinState s = SpinState::ground();
    s = apply_pulse(s, 0.0, tp2, pi / 2, 0.0, rabi_omega, ac, dc_detuning, opt);
    double t = 0.5 * tp2;
    for (int k = 0; k < seq.n_pulses; ++k) {
        const double tc = (k + 0.5) * seq.tau;
        const double t_on = tc - 0.5 * tp;
        if (t_on > t) s = apply(free_unitary(free_evolution_phase(ac, dc_detuning, t, t_on)), s);
        s = apply_pulse(s, tc, tp, pi, seq.pulse_phase(k), rabi_omega, ac, dc_detuning, opt);
        t = tc + 0.5 * tp;
    }
    const double t_end = seq.n_pulses * seq.tau;
    const double t_on = t_end - 0.5 * tp2;
    if (t_on > t) s = apply(free_unitary(free_evolution_phase(ac, dc_detuning, t, t_on)), s);
    const double closing_phase = closing == ReadoutSign::plus_x ? 0.0 : pi;
    s = apply_pulse(s, t_end, tp2, pi / 2, closing_phase, rabi_omega, ac, dc_detuning, opt);

    double p0 = s.population0();
    if (opt.t2 > 0.0) p0 = 0.5 + (p0 - 0.5) * std::exp(-seq.total_duration() / opt.t2);
    return p0;
}

double run_xyn(const XYSequence& seq, const ACFieldSpec& ac, double dc_detuning, double rabi_omega,
               const PropagationOptions& opt) {
    const double p_minus = run_xyn_single(seq, ac, dc_detuning, rabi_omega, ReadoutSign::minus_x, opt);
    const double p_plus = run_xyn_single(seq, ac, dc_detuning, rabi_omega, ReadoutSign::plus_x, opt);
    return p_minus - p_plus;
}

PhaseSweep phase_sweep(const XYSequence& seq, const ACFieldSpec& ac, const std::vector<double>& grid,
                       double dc_detuning, double rabi_omega, const PropagationOptions& opt) {
    if (grid.empty()) throw InvalidArgument("phase sweep grid is empty");
    PhaseSweep out;
    out.deltas = grid;
    out.signal.reserve(grid.size());
    for (double d : grid) {
        ACFieldSpec a = ac;
        a.initial_phase = ac.initial_phase + d;
        out.signal.push_back(run_xyn(seq, a, dc_detuning, rabi_omega, opt));
    }
    return out;
}

std::vector<double> delta_grid(int n, double lo, double hi) {
    if (n < 1) throw InvalidArgument("delta grid needs at least one point");
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
}

double xyn_kappa(int n_pulses, double tau) { return 4.0 * constants.gamma_e * n_pulses * tau; }

double analytic_xyn_phase(double B, double delta, int n_pulses, double tau) {
    return xyn_kappa(n_pulses, tau) * B * std::cos(delta);
}

double xyn_signal_model(const SignalParams& p, double delta) {
    return p.C0 + p.C * std::cos(p.kappaB * std::cos(delta - p.delta_offset));
}

RabiTrace simulate_rabi(double rabi_omega, double dc_detuning, const std::vector<double>& times,
                        const RabiOptions& opt) {
    if (times.empty()) throw InvalidArgument("Rabi time grid is empty");
    RabiTrace tr;
    tr.times = times;
    tr.population.reserve(times.size());
    for (double t : times) {
        if (t < 0.0) throw InvalidArgument("Rabi times must be non-negative");
        auto p1 = [&](double det) {
            return propagate_pulse(SpinState::ground(), {rabi_omega, 0.0, det, t}).population1();
        };
        double p = p1(dc_detuning);
        if (opt.hyperfine) p = (1.0 - opt.weight) * p + opt.weight * p1(dc_detuning + opt.hyperfine_split);
        tr.population.push_back(p);
    }
    return tr;
}

}  // namespace qdm
