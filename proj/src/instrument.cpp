#include "qdm/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "qdm/parallel.hpp"
#include "qdm/rng.hpp"

namespace qdm {

MagnetScene MagnetScene::grid_layout(int rows, int cols, double pitch, double diameter, double thickness,
                                     std::complex<double> chi_v, double response_volume) {
    if (rows < 0 || cols < 0) throw InvalidArgument("scene layout dimensions must be non-negative");
    MagnetScene s;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            SceneMagnet m;
            m.center = Vec3((c - (cols - 1) / 2.0) * pitch, (r - (rows - 1) / 2.0) * pitch, 0.0);
            m.diameter = diameter;
            m.thickness = thickness;
            m.chi_v = chi_v;
            m.response_volume = response_volume;
            s.magnets.push_back(m);
        }
    }
    return s;
}

void MagnetScene::validate() const {
    for (std::size_t i = 0; i < magnets.size(); ++i) {
        const auto& a = magnets[i];
        if (!(a.diameter > 0.0) || !(a.thickness > 0.0)) throw InvalidArgument("magnet geometry must be positive");
        if (a.chi_v.real() < 0.0) throw InvalidArgument("magnet susceptibility must have chi' >= 0");
        if (a.response_volume < 0.0) throw InvalidArgument("magnet response volume must be non-negative");
        for (std::size_t j = 0; j < i; ++j) {
            const auto& b = magnets[j];
            const double dz = std::abs(a.center.z() - b.center.z());
            const double dxy = std::hypot(a.center.x() - b.center.x(), a.center.y() - b.center.y());
            if (dz < 0.5 * (a.thickness + b.thickness) && dxy < 0.5 * (a.diameter + b.diameter))
                throw InvalidArgument("magnets overlap");
        }
    }
}

double MomentLaw::moment_at(double B) const {
    if (table.empty()) return intercept + slope * B;
    if (table.size() == 1) return table.front().second;
    auto hi = std::lower_bound(table.begin(), table.end(), B,
                               [](const std::pair<double, double>& p, double b) { return p.first < b; });
    if (hi == table.begin()) hi = table.begin() + 1;
    if (hi == table.end()) hi = table.end() - 1;
    auto lo = hi - 1;
    const double t = (B - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

void ExperimentConfig::validate() const {
    if (b_dc < b_dc_min || b_dc > b_dc_max) {
        std::ostringstream os;
        os << "static field " << b_dc << " T outside the allowed range [" << b_dc_min << ", " << b_dc_max << "] T";
        throw InvalidArgument(os.str());
    }
    if (!(ac.frequency > 0.0)) throw InvalidArgument("AC frequency must be positive");
    if (ac.amplitude < 0.0) throw InvalidArgument("AC amplitude must be non-negative");
    if (!(standoff > 0.0)) throw InvalidArgument("standoff must be positive");
    if (noise.field_sigma < 0.0 || noise.signal_sigma.value_or(0.0) < 0.0 || noise.t2 < 0.0)
        throw InvalidArgument("noise parameters must be non-negative");
    grid.validate();
    sequence.validate();
    if ((sequence.pi_duration > 0.0 || sequence.pi2_duration > 0.0) && !(rabi_omega > 0.0))
        throw InvalidArgument("finite pulses need a positive Rabi rate");
}

PropagationOptions ExperimentConfig::effective_propagation() const {
    PropagationOptions p = propagation;
    p.t2 = noise.t2;
    return p;
}

double in_plane_conversion(const NVFrame& frame) {
    if (frame.axis.y() == 0.0) throw InvalidArgument("NV axis has no in-plane y component");
    return 1.0 / frame.axis.y();
}

double excitation_h_y(double b_ac_nv, const NVFrame& frame) {
    return b_ac_nv * in_plane_conversion(frame) / constants.mu0;
}

namespace {

// field of a unit +y moment at each magnet for one observation point
std::vector<Vec3> unit_fields(const MagnetScene& scene, const Vec3& obs) {
    std::vector<Vec3> out;
    out.reserve(scene.magnets.size());
    for (const auto& m : scene.magnets) out.push_back(cylinder_field(m.with_moment(Vec3(0.0, 1.0, 0.0)), obs));
    return out;
}

}  // namespace

LocalFields local_fields(const MagnetScene& scene, const ExperimentConfig& cfg) {
    scene.validate();
    const GridSpec& g = cfg.grid;
    g.validate();
    const std::size_t n = g.size();
    LocalFields lf;
    lf.grid = g;
    lf.b_dc_nv.assign(n, 0.0);
    lf.detuning.assign(n, 0.0);
    lf.b_ac_nv.assign(n, 0.0);
    lf.ac_phase_shift.assign(n, 0.0);
    lf.b_ac_sample_nv.assign(n, 0.0);
    lf.b_perp_dc.assign(n, 0.0);
    lf.b_perp_ac.assign(n, 0.0);

    const double m_dc = cfg.law.moment_at(cfg.b_dc);
    const double h_y = excitation_h_y(cfg.ac.amplitude, cfg.frame);
    for (const auto& m : scene.magnets) lf.delta_m.push_back(m.chi_v * m.response_volume * h_y);
    const Vec3 applied_ac = cfg.ac.amplitude * in_plane_conversion(cfg.frame) * Vec3::UnitY();

    parallel_for(n, cfg.threads, [&](std::size_t p) {
        const int c = static_cast<int>(p % g.width);
        const int r = static_cast<int>(p / g.width);
        const auto u = unit_fields(scene, Vec3(g.x_of(c), g.y_of(r), cfg.standoff));
        Vec3 dc = Vec3::Zero();
        Vec3 ac_re = Vec3::Zero();
        Vec3 ac_im = Vec3::Zero();
        for (std::size_t k = 0; k < u.size(); ++k) {
            dc += m_dc * u[k];
            ac_re += lf.delta_m[k].real() * u[k];
            ac_im += lf.delta_m[k].imag() * u[k];
        }
        const double stray_nv = cfg.frame.project(dc);
        lf.b_dc_nv[p] = cfg.b_dc + stray_nv;
        lf.detuning[p] = two_pi * constants.gamma_e * stray_nv;
        const std::complex<double> s_nv(cfg.frame.project(ac_re), cfg.frame.project(ac_im));
        const std::complex<double> total = cfg.ac.amplitude + s_nv;
        lf.b_ac_nv[p] = std::abs(total);
        lf.ac_phase_shift[p] = std::arg(total);
        lf.b_ac_sample_nv[p] = s_nv.real();
        lf.b_perp_dc[p] = cfg.frame.perpendicular(dc).norm();
        lf.b_perp_ac[p] = cfg.frame.perpendicular(applied_ac + ac_re).norm();
    });
    return lf;
}

std::vector<FieldMap> synth_dc_stack(const MagnetScene& scene, const ExperimentConfig& cfg,
                                     const std::vector<double>& applied) {
    if (applied.empty()) throw InvalidArgument("applied field list is empty");
    scene.validate();
    for (double b : applied) {
        if (b < cfg.b_dc_min || b > cfg.b_dc_max) {
            std::ostringstream os;
            os << "applied field " << b << " T outside the allowed range";
            throw InvalidArgument(os.str());
        }
    }
    if (cfg.noise.field_sigma < 0.0) throw InvalidArgument("noise sigma must be non-negative");
    std::vector<CylinderMagnet> unit;
    for (const auto& m : scene.magnets) unit.push_back(m.with_moment(Vec3(0.0, 1.0, 0.0)));
    const FieldMap unit_map = synth_field_map(unit, cfg.grid, cfg.standoff, MapAxis::nv, cfg.frame, cfg.threads);

    std::vector<FieldMap> out;
    for (std::size_t i = 0; i < applied.size(); ++i) {
        const double m = cfg.law.moment_at(applied[i]);
        FieldMap map = unit_map;
        parallel_for(map.size(), cfg.threads, [&](std::size_t p) {
            const auto c = static_cast<std::uint64_t>(p % map.width);
            const auto r = static_cast<std::uint64_t>(p / map.width);
            double v = applied[i] + m * unit_map.values[p];
            if (cfg.noise.field_sigma > 0.0) {
                CounterRng rng = pixel_stream(cfg.seed, StreamTag::dc_map, i, c, r);
                v += cfg.noise.field_sigma * rng.normal();
            }
            map.values[p] = v;
        });
        out.push_back(std::move(map));
    }
    return out;
}

double calibrated_signal_sigma(double field_sigma, double kappa, double contrast, double phi,
                               const std::vector<double>& deltas) {
    if (deltas.size() < 4) throw InvalidArgument("noise calibration needs at least 4 phase samples");
    Eigen::MatrixXd J(deltas.size(), 4);
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        const double d = deltas[j];
        const double arg = phi * std::cos(d);
        J(j, 0) = 1.0;
        J(j, 1) = std::cos(arg);
        J(j, 2) = -contrast * std::sin(arg) * std::cos(d);
        J(j, 3) = -contrast * std::sin(arg) * phi * std::sin(d);
    }
    const Eigen::MatrixXd A = J.transpose() * J;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw InvalidArgument("operating point does not constrain the AC amplitude");
    const double var_phi = lu.inverse()(2, 2);
    return field_sigma * kappa / std::sqrt(var_phi);
}

DatacubeResult synth_ac_datacube(const MagnetScene& scene, const ExperimentConfig& cfg,
                                 const std::vector<double>& deltas) {
    if (deltas.empty()) throw InvalidArgument("phase grid is empty");
    cfg.validate();
    DatacubeResult res;
    if (auto w = cfg.sequence.timing_warning(cfg.ac); !w.empty()) res.diagnostics.warn(w);

    const LocalFields lf = local_fields(scene, cfg);
    const PropagationOptions prop = cfg.effective_propagation();
    res.kappa = xyn_kappa(cfg.sequence.n_pulses, cfg.sequence.tau);
    res.contrast = prop.t2 > 0.0 ? std::exp(-cfg.sequence.total_duration() / prop.t2) : 1.0;
    if (cfg.noise.signal_sigma) {
        res.signal_sigma = *cfg.noise.signal_sigma;
    } else if (cfg.noise.field_sigma > 0.0) {
        res.signal_sigma = calibrated_signal_sigma(cfg.noise.field_sigma, res.kappa, res.contrast,
                                                   res.kappa * cfg.ac.amplitude, deltas);
    }

    PhaseSweepCube& cube = res.cube;
    cube.width = cfg.grid.width;
    cube.height = cfg.grid.height;
    cube.pixel_size = cfg.grid.pixel_size;
    cube.standoff = cfg.standoff;
    cube.deltas = deltas;
    cube.signal.assign(cube.pixels() * deltas.size(), 0.0);

    parallel_for(cube.pixels(), cfg.threads, [&](std::size_t p) {
        const ACFieldSpec ac{lf.b_ac_nv[p], cfg.ac.frequency, lf.ac_phase_shift[p]};
        const double det = cfg.detuning ? lf.detuning[p] : 0.0;
        const PhaseSweep sw = phase_sweep(cfg.sequence, ac, deltas, det, cfg.rabi_omega, prop);
        double* out = cube.sweep(p);
        CounterRng rng = pixel_stream(cfg.seed, StreamTag::ac_cube, 0, p % cube.width, p / cube.width);
        for (std::size_t j = 0; j < deltas.size(); ++j) {
            out[j] = sw.signal[j];
            if (res.signal_sigma > 0.0) out[j] += res.signal_sigma * rng.normal();
        }
    });
    return res;
}

CameraFrames camera_demodulate(const AcquisitionSchedule& s, std::size_t pixels) {
    if (!(s.demod_rate > 0.0)) throw InvalidArgument("demodulation rate must be positive");
    CameraFrames f;
    f.demod_rate = s.demod_rate;
    f.bin_duration = 1.0 / (4.0 * s.demod_rate);
    if (s.sequence_duration > f.bin_duration) {
        std::ostringstream os;
        os << "sequence of " << s.sequence_duration << " s does not fit the " << f.bin_duration << " s camera bin";
        throw InvalidArgument(os.str());
    }
    f.i_frame.assign(pixels, 0.0);
    f.q_frame.assign(pixels, 0.0);
    const bool has_sequence = s.sequence_duration > 0.0 && !s.p0_plus.empty();
    if (!has_sequence) return f;  // all four bins see the same fluorescence
    if (s.p0_plus.size() != pixels || s.p0_minus.size() != pixels)
        throw InvalidArgument("readout populations do not match the pixel count");
    auto fluor = [&](double p0) { return s.photons * (1.0 - s.readout_contrast * (1.0 - p0)); };
    for (std::size_t p = 0; p < pixels; ++p) f.i_frame[p] = fluor(s.p0_minus[p]) - fluor(s.p0_plus[p]);
    return f;
}

double odmr_contrast_at(double f, double b_nv, const ODMRConfig& cfg) {
    const double shift = constants.gamma_e * std::abs(b_nv);
    const double hw = 0.5 * cfg.linewidth;
    // lines absorb independently, so the depth at any line center is exactly cfg.depth
    double transmit = 1.0;
    for (double f0 : {constants.D0 - shift, constants.D0 + shift}) {
        for (int h = 0; h < (cfg.hyperfine ? 2 : 1); ++h) {
            const double fl = cfg.hyperfine ? f0 + (h == 0 ? -0.5 : 0.5) * cfg.hyperfine_split : f0;
            const double x = (f - fl) / hw;
            transmit *= 1.0 - 1.0 / (1.0 + x * x);
        }
    }
    return 1.0 - cfg.depth * (1.0 - transmit);
}

ODMRSpectrum synth_odmr(double b_nv, const ODMRConfig& cfg) {
    if (cfg.points < 2 || !(cfg.f_max > cfg.f_min)) throw InvalidArgument("invalid ODMR frequency grid");
    if (!(cfg.linewidth > 0.0)) throw InvalidArgument("ODMR linewidth must be positive");
    if (cfg.depth < 0.0 || cfg.depth > 1.0) throw InvalidArgument("ODMR depth must lie in [0, 1]");
    ODMRSpectrum sp;
    sp.linewidth = cfg.linewidth;
    sp.hyperfine_split = cfg.hyperfine ? cfg.hyperfine_split : 0.0;
    CounterRng rng = pixel_stream(cfg.seed, StreamTag::odmr, 0, 0, 0);
    for (int i = 0; i < cfg.points; ++i) {
        const double f = cfg.f_min + (cfg.f_max - cfg.f_min) * i / (cfg.points - 1);
        double v = odmr_contrast_at(f, b_nv, cfg);
        if (cfg.noise_sigma > 0.0) v = std::clamp(v + cfg.noise_sigma * rng.normal(), 0.0, 1.0);
        sp.mw_freqs.push_back(f);
        sp.contrast.push_back(v);
    }
    return sp;
}

}  // namespace qdm
