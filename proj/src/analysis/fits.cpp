#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "qdm/analysis.hpp"

namespace qdm {

// ---------------------------------------------------------------- ODMR

namespace {

struct Dip {
    std::size_t index;
    double value;
};

}  // namespace

ODMRFit fit_odmr(const ODMRSpectrum& sp) {
    const std::size_t n = sp.mw_freqs.size();
    if (n < 8 || sp.contrast.size() != n) throw InvalidArgument("ODMR spectrum needs at least 8 matching samples");
    if (!(sp.linewidth > 0.0)) throw InvalidArgument("ODMR spectrum linewidth must be positive");
    ODMRFit out;
    out.linewidth = sp.linewidth;

    // work in MHz relative to D0 for conditioning
    std::vector<double> x(n), y(sp.contrast);
    for (std::size_t i = 0; i < n; ++i) x[i] = (sp.mw_freqs[i] - constants.D0) * 1e-6;
    const double df = (x.back() - x.front()) / (n - 1);
    const double lw = sp.linewidth * 1e-6;
    const double split = sp.hyperfine_split * 1e-6;

    // smoothed copy for seeding only
    const int half = std::max(1, static_cast<int>(0.25 * lw / std::abs(df)));
    std::vector<double> sm(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        int cnt = 0;
        for (int k = -half; k <= half; ++k) {
            const long j = static_cast<long>(i) + k;
            if (j < 0 || j >= static_cast<long>(n)) continue;
            acc += y[j];
            ++cnt;
        }
        sm[i] = acc / cnt;
    }
    std::vector<double> sorted(sm);
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double base = sorted[n / 2];

    std::vector<Dip> minima;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (sm[i] < sm[i - 1] && sm[i] <= sm[i + 1]) minima.push_back({i, sm[i]});
    std::sort(minima.begin(), minima.end(), [](const Dip& a, const Dip& b) { return a.value < b.value; });

    const double unresolved_b = sp.linewidth / (2.0 * constants.gamma_e);
    if (minima.empty()) {
        out.unresolved = true;
        out.uncertainty = unresolved_b;
        return out;
    }
    const Dip first = minima.front();
    const double depth1 = base - first.value;
    const double min_sep = std::max(2.0 * lw, 1.5 * split);
    const Dip* second = nullptr;
    for (const auto& d : minima) {
        if (std::abs(x[d.index] - x[first.index]) < min_sep) continue;
        if (base - d.value < 0.3 * depth1) break;
        second = &d;
        break;
    }
    if (!second) {
        out.unresolved = true;
        out.uncertainty = unresolved_b;
        out.f_low = out.f_high = sp.mw_freqs[first.index];
        return out;
    }

    // line centers are doublet centers when the hyperfine split is set
    auto lines = [&](double xc, double& l, double& dl_dxc, double& dl_dhw, double xi, double hw) {
        l = dl_dxc = dl_dhw = 0.0;
        const int count = split > 0.0 ? 2 : 1;
        for (int h = 0; h < count; ++h) {
            const double c = split > 0.0 ? xc + (h == 0 ? -0.5 : 0.5) * split : xc;
            const double q = (xi - c) / hw;
            const double den = 1.0 + q * q;
            l += 1.0 / den;
            dl_dxc += 2.0 * q / (hw * den * den);
            dl_dhw += 2.0 * q * q / (hw * den * den);
        }
    };
    Eigen::VectorXd p(6);
    const double a0 = std::max(depth1, 1e-6);
    p << base, a0, x[first.index], a0, x[second->index], 0.5 * lw;
    auto fn = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        for (std::size_t i = 0; i < n; ++i) {
            double l1, d1c, d1w, l2, d2c, d2w;
            lines(q[2], l1, d1c, d1w, x[i], q[5]);
            lines(q[4], l2, d2c, d2w, x[i], q[5]);
            r[i] = q[0] - q[1] * l1 - q[3] * l2 - y[i];
            if (J) {
                (*J)(i, 0) = 1.0;
                (*J)(i, 1) = -l1;
                (*J)(i, 2) = -q[1] * d1c;
                (*J)(i, 3) = -l2;
                (*J)(i, 4) = -q[3] * d2c;
                (*J)(i, 5) = -q[1] * d1w - q[3] * d2w;
            }
        }
    };
    const LmResult res = levenberg_marquardt(fn, p, static_cast<int>(n));
    const Eigen::MatrixXd cov = lm_covariance(res);
    double xa = res.params[2], xb = res.params[4];
    if (xa > xb) std::swap(xa, xb);
    out.f_low = constants.D0 + xa * 1e6;
    out.f_high = constants.D0 + xb * 1e6;
    out.b_nv = (xb - xa) * 1e6 / (2.0 * constants.gamma_e);
    const double var = std::max(0.0, cov(2, 2) + cov(4, 4) - 2.0 * cov(2, 4));
    out.uncertainty = std::sqrt(var) * 1e6 / (2.0 * constants.gamma_e);
    out.linewidth = 2.0 * std::abs(res.params[5]) * 1e6;
    out.converged = res.converged;
    return out;
}

// ---------------------------------------------------------------- phase sweep

namespace {

struct SweepCandidate {
    double cost, c0, c, phi, d0;
};

// closed-form C0, C for fixed (phi, d0)
SweepCandidate linear_solve(const double* d, const double* y, std::size_t n, double phi, double d0) {
    double sg = 0, sgg = 0, sy = 0, sgy = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double g = std::cos(phi * std::cos(d[j] - d0));
        sg += g;
        sgg += g * g;
        sy += y[j];
        sgy += g * y[j];
    }
    const double det = n * sgg - sg * sg;
    double c0, c;
    if (std::abs(det) <= 1e-12 * n * sgg) {
        c = 0.0;
        c0 = sy / n;
    } else {
        c = (n * sgy - sg * sy) / det;
        c0 = (sy - c * sg) / n;
    }
    double cost = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double e = c0 + c * std::cos(phi * std::cos(d[j] - d0)) - y[j];
        cost += e * e;
    }
    return {cost, c0, c, phi, d0};
}

double wrap_half_pi(double a) {
    // cos(d - d0) changes sign under d0 -> d0 + pi, which the even cosine absorbs
    a = std::remainder(a, pi);  // (-pi/2, pi/2]
    if (a <= -pi / 2) a += pi;
    return a;
}

}  // namespace

PhaseSweepFit fit_phase_sweep(const double* d, const double* y, std::size_t n, const PhaseSweepFitOptions& opt) {
    if (n < 8) throw InvalidArgument("phase sweep fit needs at least 8 samples");
    const auto [lo, hi] = std::minmax_element(d, d + n);
    if (*hi - *lo < pi - 1e-9) throw InvalidArgument("phase sweep must span at least pi");

    std::vector<SweepCandidate> cands;
    const int K = std::max(2, opt.coarse_points);
    for (int k = 0; k < K; ++k) {
        const double phi = opt.phi_max * k / (K - 1);
        // offsets are pi-periodic; a large phi_amp needs a finer offset grid
        const int nd = std::max(4, static_cast<int>(std::ceil(2.0 * phi)));
        for (int i = 0; i < nd; ++i) {
            const auto c = linear_solve(d, y, n, phi, -pi / 2 + pi * (i + 0.5) / nd);
            if (c.c >= 0.0) cands.push_back(c);
        }
    }
    std::sort(cands.begin(), cands.end(), [](const SweepCandidate& a, const SweepCandidate& b) { return a.cost < b.cost; });
    std::vector<SweepCandidate> starts;
    const double dphi = opt.phi_max / (K - 1);
    for (const auto& c : cands) {
        bool near = false;
        for (const auto& s : starts)
            if (std::abs(s.phi - c.phi) < 1.5 * dphi && std::abs(s.d0 - c.d0) < 0.1) near = true;
        if (!near) starts.push_back(c);
        if (static_cast<int>(starts.size()) >= std::max(1, opt.restarts)) break;
    }
    if (starts.empty()) starts.push_back(linear_solve(d, y, n, 0.0, 0.0));

    auto fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        for (std::size_t j = 0; j < n; ++j) {
            const double cd = std::cos(d[j] - p[3]);
            const double sd = std::sin(d[j] - p[3]);
            const double u = p[2] * cd;
            const double cu = std::cos(u), su = std::sin(u);
            r[j] = p[0] + p[1] * cu - y[j];
            if (J) {
                (*J)(j, 0) = 1.0;
                (*J)(j, 1) = cu;
                (*J)(j, 2) = -p[1] * su * cd;
                (*J)(j, 3) = -p[1] * su * p[2] * sd;
            }
        }
    };

    LmResult best;
    bool have = false, best_valid = false;
    int total_iter = 0;
    for (const auto& s : starts) {
        Eigen::VectorXd p0(4);
        p0 << s.c0, s.c, s.phi, s.d0;
        LmResult r = levenberg_marquardt(fn, p0, static_cast<int>(n), opt.lm);
        total_iter += r.iterations;
        const bool valid = r.params[1] >= 0.0 && r.params.allFinite();
        if (!have || (valid && !best_valid) || (valid == best_valid && r.cost < best.cost)) {
            best = r;
            have = true;
            best_valid = valid;
        }
    }

    PhaseSweepFit out;
    Eigen::MatrixXd cov = lm_covariance(best);
    double phi = best.params[2];
    if (phi < 0.0) {
        phi = -phi;
        cov.row(2) *= -1.0;
        cov.col(2) *= -1.0;
    }
    out.C0 = best.params[0];
    out.C = best.params[1];
    out.phi_amp = phi;
    out.delta_offset = wrap_half_pi(best.params[3]);
    out.covariance = cov;
    out.residual_sigma = std::sqrt(best.cost / static_cast<double>(n - 4));
    out.iterations = total_iter;
    out.converged = best.converged && best_valid;
    if (opt.kappa > 0.0) {
        out.b_ac = phi / opt.kappa;
        out.b_ac_sigma = std::sqrt(std::max(0.0, cov(2, 2))) / opt.kappa;
    }
    return out;
}

PhaseSweepFit fit_phase_sweep(const PhaseSweep& sweep, const PhaseSweepFitOptions& opt) {
    if (sweep.deltas.size() != sweep.signal.size()) throw InvalidArgument("phase sweep arrays differ in length");
    return fit_phase_sweep(sweep.deltas.data(), sweep.signal.data(), sweep.deltas.size(), opt);
}

// ---------------------------------------------------------------- Rabi

double rabi_model(const RabiFit& p, double t) {
    auto decay = [t](double T) { return std::isinf(T) ? 1.0 : std::exp(-t / T); };
    return p.baseline + p.A1 * std::cos(p.omega1 * t) * decay(p.T1_decay) +
           p.A2 * std::cos(p.omega2 * t) * decay(p.T2_decay);
}

namespace {

struct Peak {
    double omega;  // scaled
    double amp;
};

// Hann-windowed periodogram peaks of the detrended trace, in scaled units
std::vector<Peak> spectral_peaks(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    const double omega_max = pi * (n - 1);  // Nyquist for unit span
    const std::size_t nf = 16 * n;
    std::vector<double> amp(nf);
    for (std::size_t k = 0; k < nf; ++k) {
        const double w = omega_max * k / (nf - 1);
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double hann = 0.5 - 0.5 * std::cos(two_pi * j / (n - 1));
            acc += hann * (y[j] - mean) * std::polar(1.0, -w * t[j]);
        }
        amp[k] = std::abs(acc);
    }
    std::vector<Peak> peaks;
    for (std::size_t k = 1; k + 1 < nf; ++k) {
        const double w = omega_max * k / (nf - 1);
        if (w < pi) continue;  // below half a cycle over the trace
        if (amp[k] > amp[k - 1] && amp[k] >= amp[k + 1]) peaks.push_back({w, amp[k]});
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.amp > b.amp; });
    return peaks;
}

}  // namespace

RabiFit fit_rabi(const RabiTrace& trace) {
    const std::size_t n = trace.times.size();
    if (n < 16 || trace.population.size() != n) throw InvalidArgument("Rabi trace needs at least 16 matching samples");
    const double span = trace.times.back() - trace.times.front();
    if (!(span > 0.0)) throw InvalidArgument("Rabi trace must span a positive time");
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = trace.times[i] / span;
    const auto& y = trace.population;

    const auto peaks = spectral_peaks(t, y);
    if (peaks.empty()) throw DataError("Rabi trace shows no oscillation");
    const Peak p1 = peaks.front();
    const Peak* p2 = nullptr;
    for (const auto& p : peaks) {
        if (std::abs(p.omega - p1.omega) < 2.0 * two_pi) continue;  // within the Hann main lobe
        if (p.amp >= 0.1 * p1.amp) p2 = &p;
        break;
    }

    auto linear_amplitudes = [&](const std::vector<double>& ws) {
        Eigen::MatrixXd A(n, ws.size() + 1);
        Eigen::VectorXd b(n);
        for (std::size_t i = 0; i < n; ++i) {
            A(i, 0) = 1.0;
            for (std::size_t k = 0; k < ws.size(); ++k) A(i, k + 1) = std::cos(ws[k] * t[i]);
            b[i] = y[i];
        }
        return Eigen::VectorXd(A.colPivHouseholderQr().solve(b));
    };

    // parameters: y0, then (A, w, s) per component with decay rate s^2 (scaled)
    auto make_fn = [&](int comps) {
        return [&, comps](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
            for (std::size_t i = 0; i < n; ++i) {
                double v = p[0];
                if (J) (*J)(i, 0) = 1.0;
                for (int k = 0; k < comps; ++k) {
                    const double A = p[1 + 3 * k], w = p[2 + 3 * k], s = p[3 + 3 * k];
                    const double e = std::exp(-s * s * t[i]);
                    const double c = std::cos(w * t[i]);
                    v += A * e * c;
                    if (J) {
                        (*J)(i, 1 + 3 * k) = e * c;
                        (*J)(i, 2 + 3 * k) = -A * e * t[i] * std::sin(w * t[i]);
                        (*J)(i, 3 + 3 * k) = -2.0 * s * t[i] * A * e * c;
                    }
                }
                r[i] = v - y[i];
            }
        };
    };

    RabiFit out;
    constexpr double s0 = 0.3;
    auto finish = [&](const LmResult& res, int comps) {
        out.baseline = res.params[0];
        out.residual_sigma = std::sqrt(res.cost / std::max<double>(1.0, n - res.params.size()));
        out.converged = res.converged;
        auto T_of = [&](double s) {
            const double rate = s * s;
            return rate > 0.0 ? span / rate : std::numeric_limits<double>::infinity();
        };
        out.A1 = res.params[1];
        out.omega1 = std::abs(res.params[2]) / span;
        out.T1_decay = T_of(res.params[3]);
        if (comps == 2) {
            out.A2 = res.params[4];
            out.omega2 = std::abs(res.params[5]) / span;
            out.T2_decay = T_of(res.params[6]);
            if (out.omega2 < out.omega1) {
                std::swap(out.A1, out.A2);
                std::swap(out.omega1, out.omega2);
                std::swap(out.T1_decay, out.T2_decay);
            }
        } else {
            out.single_frequency = true;
            out.A2 = 0.0;
            out.omega2 = out.omega1;
            out.T2_decay = out.T1_decay;
        }
    };

    if (p2) {
        const Eigen::VectorXd lin = linear_amplitudes({p1.omega, p2->omega});
        Eigen::VectorXd p0(7);
        p0 << lin[0], lin[1], p1.omega, s0, lin[2], p2->omega, s0;
        const LmResult res = levenberg_marquardt(make_fn(2), p0, static_cast<int>(n));
        const double w1 = std::abs(res.params[2]), w2 = std::abs(res.params[5]);
        const bool distinct = std::abs(w1 - w2) > 0.5 * two_pi && std::abs(res.params[4]) > 1e-3 * std::abs(res.params[1]) &&
                              std::abs(res.params[1]) > 1e-3 * std::abs(res.params[4]);
        if (distinct && res.params.allFinite()) {
            finish(res, 2);
            return out;
        }
    }
    const Eigen::VectorXd lin = linear_amplitudes({p1.omega});
    Eigen::VectorXd p0(4);
    p0 << lin[0], lin[1], p1.omega, s0;
    finish(levenberg_marquardt(make_fn(1), p0, static_cast<int>(n)), 1);
    return out;
}

}  // namespace qdm
