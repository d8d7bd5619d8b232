#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "qdm/spin_dynamics.hpp"

using namespace qdm;
using C = std::complex<double>;

namespace {

// adaptive Simpson quadrature, used as an independent check of closed-form integrals
double simpson(const std::function<double(double)>& f, double a, double b, double eps, int depth = 40) {
    auto step = [&](auto&& self, double a, double b, double fa, double fm, double fb, double whole, double eps,
                    int depth) -> double {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (b - a) / 12.0 * (fa + 4.0 * flm + fm);
        const double right = (b - a) / 12.0 * (fm + 4.0 * frm + fb);
        if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
        return self(self, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
               self(self, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
    };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return step(step, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), eps, depth);
}

// Schroedinger equation i dpsi/dt = H psi with
// H = 1/2 [Omega (cos phi sx + sin phi sy) + (Delta + 2 pi gamma B(t)) sz], integrated by RK4
struct Rk4Oracle {
    XYSequence seq;
    ACFieldSpec ac;
    double det = 0.0;
    double omega = 0.0;
    double closing = 0.0;

    // drive (amplitude, phase) at time t
    std::pair<double, double> drive(double t) const {
        const double tp2 = seq.pi2_duration, tp = seq.pi_duration;
        if (std::abs(t) < 0.5 * tp2) return {omega, 0.0};
        const double tend = seq.n_pulses * seq.tau;
        if (std::abs(t - tend) < 0.5 * tp2) return {omega, closing};
        for (int k = 0; k < seq.n_pulses; ++k)
            if (std::abs(t - (k + 0.5) * seq.tau) < 0.5 * tp) return {omega, seq.pulse_phase(k)};
        return {0.0, 0.0};
    }

    std::array<C, 2> deriv(double t, const std::array<C, 2>& psi, double om, double ph) const {
        const double dz = det + two_pi * constants.gamma_e * ac.field_at(t);
        const C off = 0.5 * om * std::polar(1.0, -ph);  // <0|H|1>
        const C I(0.0, 1.0);
        return {-I * (0.5 * dz * psi[0] + off * psi[1]), -I * (std::conj(off) * psi[0] - 0.5 * dz * psi[1])};
    }

    // steps are aligned with the pulse edges so the drive is smooth inside each step
    double p0(double dt) const {
        const double tend = seq.n_pulses * seq.tau;
        std::vector<double> edges{-0.5 * seq.pi2_duration, 0.5 * seq.pi2_duration};
        for (int k = 0; k < seq.n_pulses; ++k) {
            edges.push_back((k + 0.5) * seq.tau - 0.5 * seq.pi_duration);
            edges.push_back((k + 0.5) * seq.tau + 0.5 * seq.pi_duration);
        }
        edges.push_back(tend - 0.5 * seq.pi2_duration);
        edges.push_back(tend + 0.5 * seq.pi2_duration);
        std::array<C, 2> psi{C(1.0), C(0.0)};
        auto axpy = [](const std::array<C, 2>& a, const std::array<C, 2>& b, double s) {
            return std::array<C, 2>{a[0] + s * b[0], a[1] + s * b[1]};
        };
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            const double a = edges[e], b = edges[e + 1];
            if (b <= a) continue;
            const int n = static_cast<int>(std::ceil((b - a) / dt));
            const double h = (b - a) / n;
            const auto [om, ph] = drive(0.5 * (a + b));
            for (int i = 0; i < n; ++i) {
                const double t = a + i * h;
                const auto k1 = deriv(t, psi, om, ph);
                const auto k2 = deriv(t + 0.5 * h, axpy(psi, k1, 0.5 * h), om, ph);
                const auto k3 = deriv(t + 0.5 * h, axpy(psi, k2, 0.5 * h), om, ph);
                const auto k4 = deriv(t + h, axpy(psi, k3, h), om, ph);
                for (int j = 0; j < 2; ++j) psi[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        return std::norm(psi[0]);
    }
};

}  // namespace

TEST_CASE("ideal pi pulse inverts the spin") {
    const SpinState s = propagate_pulse(SpinState::ground(), {two_pi * 2.7e6, 0.0, 0.0, 1.0 / (2 * 2.7e6)});
    CHECK(s.population1() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("detuned pulse follows the generalized Rabi formula") {
    const double om = two_pi * 2.7e6, det = two_pi * 0.9e6;
    const double W = std::hypot(om, det);
    for (double t : {0.0, 50e-9, 123e-9, 400e-9, 1.3e-6}) {
        const SpinState s = propagate_pulse(SpinState::ground(), {om, 0.7, det, t});
        const double expect = om * om / (W * W) * std::pow(std::sin(0.5 * W * t), 2);
        CHECK(s.population1() == doctest::Approx(expect).epsilon(1e-12));
        CHECK(s.norm2() == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(propagate_pulse(SpinState::ground(), {om, 0.0, 0.0, -1.0}), InvalidArgument);
}

TEST_CASE("free evolution phase matches quadrature") {
    const ACFieldSpec ac{3.5e-6, 300e3, 0.4};
    const double det = two_pi * 0.37e6;
    for (auto [t0, t1] : {std::pair{0.0, 1.0e-6}, std::pair{0.3e-6, 0.30001e-6}, std::pair{1e-6, 9.7e-6}}) {
        const double ref = simpson([&](double t) { return det + two_pi * constants.gamma_e * ac.field_at(t); }, t0, t1, 1e-13);
        CHECK(free_evolution_phase(ac, det, t0, t1) == doctest::Approx(ref).epsilon(1e-9));
    }
    CHECK_THROWS_AS(free_evolution_phase(ac, 0.0, 2.0, 1.0), InvalidArgument);
}

TEST_CASE("ideal XY-8 reproduces cos(kappa B cos delta)") {
    const XYSequence seq = XYSequence::ideal(XYOrder::xy8, 8, 300e3);
    const double kappa = xyn_kappa(8, seq.tau);
    CHECK(kappa * 1e-6 == doctest::Approx(1.4946133).epsilon(1e-7));
    for (double d : {-1.2, -0.3, 0.0, 0.5, 1.4}) {
        const ACFieldSpec ac{3.5e-6, 300e3, d};
        CHECK(run_xyn(seq, ac, 0.0, 0.0) == doctest::Approx(std::cos(kappa * 3.5e-6 * std::cos(d))).epsilon(1e-9));
    }
    CHECK(run_xyn(seq, {3.5e-6, 300e3, 0.0}, 0.0, 0.0) == doctest::Approx(0.495802).epsilon(2e-6));
}

TEST_CASE("ideal sequence refocuses a static detuning") {
    const XYSequence seq = XYSequence::ideal(XYOrder::xy4, 8, 300e3);
    CHECK(run_xyn(seq, {0.0, 300e3, 0.0}, two_pi * 1.3e6, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("finite-pulse propagation agrees with direct integration") {
    const double om = two_pi * 2.7e6;
    const XYSequence seq = XYSequence::matched(XYOrder::xy8, 8, 300e3, om);
    PropagationOptions opt;
    opt.pulse_slices = 512;
    for (double det_mhz : {0.0, 0.9, -0.9}) {
        const double det = two_pi * det_mhz * 1e6;
        for (double d : {0.0, 0.8}) {
            const ACFieldSpec ac{3.5e-6, 300e3, d};
            for (ReadoutSign sign : {ReadoutSign::plus_x, ReadoutSign::minus_x}) {
                Rk4Oracle o{seq, ac, det, om, sign == ReadoutSign::plus_x ? 0.0 : pi};
                const double ref = o.p0(0.1e-9);
                CHECK(run_xyn_single(seq, ac, det, om, sign, opt) == doctest::Approx(ref).epsilon(2e-6));
            }
        }
    }
}

TEST_CASE("default pulse slicing is converged, a single midpoint sample is not") {
    // pi pulses sit on zero crossings of the AC field, so one midpoint sample sees no field
    // at all while the field accumulated across the pulse is first order
    const double om = two_pi * 2.7e6;
    const XYSequence seq = XYSequence::matched(XYOrder::xy8, 8, 300e3, om);
    PropagationOptions mid, fine;
    mid.pulse_slices = 1;
    fine.pulse_slices = 512;
    const ACFieldSpec ac{3.5e-6, 300e3, 0.0};
    const double converged = run_xyn(seq, ac, 0.0, om, fine);
    CHECK(std::abs(run_xyn(seq, ac, 0.0, om) - converged) < 5e-4);
    CHECK(std::abs(run_xyn(seq, ac, 0.0, om, mid) - converged) > 1e-2);
}

TEST_CASE("decoherence shrinks the contrast around one half") {
    const XYSequence seq = XYSequence::ideal(XYOrder::xy8, 8, 300e3);
    PropagationOptions opt;
    opt.t2 = 21e-6;
    const ACFieldSpec ac{3.5e-6, 300e3, 0.0};
    const double ideal = run_xyn(seq, ac, 0.0, 0.0);
    CHECK(run_xyn(seq, ac, 0.0, 0.0, opt) == doctest::Approx(ideal * std::exp(-seq.total_duration() / 21e-6)));
}

TEST_CASE("sequence validation") {
    XYSequence s = XYSequence::ideal(XYOrder::xy8, 12, 300e3);
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = XYSequence::matched(XYOrder::xy4, 4, 300e3, two_pi * 0.2e6);  // pi pulse longer than tau
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = XYSequence::matched(XYOrder::xy8, 8, 300e3, two_pi * 2.7e6);
    CHECK(s.timing_warning({3.5e-6, 300e3, 0}).empty());
    CHECK_FALSE(s.timing_warning({3.5e-6, 250e3, 0}).empty());
    CHECK(s.pulse_phase(1) == doctest::Approx(pi / 2));
    CHECK(s.pulse_phase(2) == 0.0);
    CHECK(s.pulse_phase(4) == doctest::Approx(pi / 2));
    CHECK(s.pulse_phase(13) == 0.0);
    CHECK(s.pulse_phase(11) == doctest::Approx(pi / 2));
    CHECK_THROWS_AS(XYSequence::matched(XYOrder::xy8, 8, 300e3, 0.0), InvalidArgument);
}

TEST_CASE("phase sweep grid and signal model") {
    const auto g = delta_grid(5);
    CHECK(g.front() == doctest::Approx(-pi / 2));
    CHECK(g[2] == doctest::Approx(0.0));
    CHECK(xyn_signal_model({0.1, 0.4, 2.0, 0.3}, 0.3) == doctest::Approx(0.1 + 0.4 * std::cos(2.0)));
    CHECK(analytic_xyn_phase(1e-6, 0.0, 8, 1.0 / 600e3) == doctest::Approx(1.4946133).epsilon(1e-7));
    CHECK_THROWS_AS(phase_sweep(XYSequence::ideal(XYOrder::xy8, 8, 300e3), {}, {}, 0.0, 0.0), InvalidArgument);
}

TEST_CASE("Rabi traces mix hyperfine populations") {
    std::vector<double> t{0.0, 100e-9, 250e-9};
    const double om = two_pi * 2.7e6;
    RabiOptions o;
    o.hyperfine = true;
    const RabiTrace tr = simulate_rabi(om, 0.0, t, o);
    const double split = o.hyperfine_split;
    const double W = std::hypot(om, split);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double a = std::pow(std::sin(0.5 * om * t[i]), 2);
        const double b = om * om / (W * W) * std::pow(std::sin(0.5 * W * t[i]), 2);
        CHECK(tr.population[i] == doctest::Approx(0.5 * a + 0.5 * b).epsilon(1e-12));
    }
}
