#include <algorithm>
#include <cmath>
#include <numeric>

#include "qdm/analysis.hpp"
#include "qdm/parallel.hpp"

namespace qdm {

AcMaps ac_maps(const PhaseSweepCube& cube, const AcMapOptions& opt) {
    if (!(opt.kappa > 0.0)) throw InvalidArgument("ac_maps needs a positive kappa");
    const GridSpec g = cube.grid();
    g.validate();
    const std::size_t n = cube.deltas.size();
    if (cube.signal.size() != cube.pixels() * n) throw DataError("cube payload does not match its dimensions");

    AcMaps out;
    out.amplitude = FieldMap(g, cube.standoff, MapAxis::nv);
    out.phase = FieldMap(g, cube.standoff, MapAxis::nv);
    out.contrast = FieldMap(g, cube.standoff, MapAxis::nv);
    out.residual_sigma = FieldMap(g, cube.standoff, MapAxis::nv);
    out.min_field = FieldMap(g, cube.standoff, MapAxis::nv);
    out.mask.assign(cube.pixels(), 0);

    PhaseSweepFitOptions fo = opt.fit;
    fo.kappa = opt.kappa;
    parallel_for(cube.pixels(), opt.threads, [&](std::size_t p) {
        const PhaseSweepFit f = fit_phase_sweep(cube.deltas.data(), cube.sweep(p), n, fo);
        const bool ok = f.converged && f.C > 0.0 && std::isfinite(f.phi_amp);
        out.mask[p] = ok ? 0 : 1;
        out.amplitude.values[p] = f.b_ac;
        // the fitted offset enters as cos(delta - offset); the field leads by -offset
        out.phase.values[p] = -f.delta_offset;
        out.contrast.values[p] = f.C;
        out.residual_sigma.values[p] = f.residual_sigma;
        out.min_field.values[p] = f.C > 0.0 ? f.residual_sigma / (f.C * opt.kappa) : 0.0;
    });

    out.failed = static_cast<int>(std::count(out.mask.begin(), out.mask.end(), std::uint8_t{1}));
    if (out.failed == static_cast<int>(cube.pixels())) throw DataError("every pixel fit failed");
    if (out.failed > 0) {
        // masked pixels take the median of the valid ones so the filters stay defined
        for (FieldMap* m : {&out.amplitude, &out.phase, &out.contrast, &out.residual_sigma, &out.min_field}) {
            std::vector<double> valid;
            for (std::size_t p = 0; p < m->values.size(); ++p)
                if (!out.mask[p] && std::isfinite(m->values[p])) valid.push_back(m->values[p]);
            std::nth_element(valid.begin(), valid.begin() + valid.size() / 2, valid.end());
            const double med = valid[valid.size() / 2];
            for (std::size_t p = 0; p < m->values.size(); ++p)
                if (out.mask[p] || !std::isfinite(m->values[p])) m->values[p] = med;
        }
    }
    out.sample = background_subtract(out.amplitude, opt.kernel);
    return out;
}

MapMoment map_moment(const FieldMap& map, const MomentGeometry& geom) {
    const FieldMap pre = geom.calibration.preprocess ? geom.calibration.preprocess(map) : map;
    MapMoment out;
    out.cut = linecut_peak_to_peak(pre, geom.cx, geom.cy, geom.calibration.linecut);
    if (geom.estimate_standoff) {
        if (!(geom.standoff_fit.slope > 0.0)) throw InvalidArgument("standoff estimation needs a calibration line");
        out.standoff = geom.standoff_fit.standoff_for(out.cut.y_pkpk);
    } else {
        out.standoff = geom.standoff;
    }
    if (!(out.standoff > 0.0)) throw DataError("estimated standoff is not positive");
    out.moment = moment_from_slope(out.cut.slope, out.standoff, geom.calibration);
    return out;
}

MomentSeries moment_series(const std::vector<FieldMap>& maps, const std::vector<double>& applied,
                           const MomentGeometry& geom) {
    if (maps.size() < 2) throw InvalidArgument("moment series needs at least 2 maps");
    if (applied.size() != maps.size()) throw InvalidArgument("one applied field per map is required");
    MomentSeries s;
    s.applied_fields = applied;
    std::vector<LinecutResult> cuts;
    for (const auto& m : maps) {
        const FieldMap pre = geom.calibration.preprocess ? geom.calibration.preprocess(m) : m;
        cuts.push_back(linecut_peak_to_peak(pre, geom.cx, geom.cy, geom.calibration.linecut));
        s.y_pkpk.push_back(cuts.back().y_pkpk);
        if (geom.estimate_standoff) {
            if (!(geom.standoff_fit.slope > 0.0)) throw InvalidArgument("standoff estimation needs a calibration line");
            s.standoffs.push_back(geom.standoff_fit.standoff_for(cuts.back().y_pkpk));
        } else {
            s.standoffs.push_back(geom.standoff);
        }
    }
    // one physical standoff for the whole stack
    s.standoff = std::accumulate(s.standoffs.begin(), s.standoffs.end(), 0.0) / s.standoffs.size();
    if (!(s.standoff > 0.0)) throw DataError("estimated standoff is not positive");
    const double ref = reference_slope(geom.calibration, s.standoff);
    for (const auto& c : cuts) s.moments.push_back(c.slope / ref * geom.calibration.reference_moment);

    const double n = static_cast<double>(maps.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        sx += applied[i];
        sy += s.moments[i];
        sxx += applied[i] * applied[i];
        sxy += applied[i] * s.moments[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw InvalidArgument("applied fields must not all be equal");
    s.slope = (n * sxy - sx * sy) / den;
    s.intercept = (sy - s.slope * sx) / n;
    return s;
}

SusceptibilityResult susceptibility_from_h(double delta_m, double delta_h_y, double volume) {
    if (!(volume > 0.0)) throw InvalidArgument("volume must be positive");
    if (delta_h_y == 0.0) throw InvalidArgument("excitation field must be nonzero");
    SusceptibilityResult r;
    r.delta_m = delta_m;
    r.delta_H_y = delta_h_y;
    r.volume = volume;
    r.chi_v = delta_m / (volume * delta_h_y);
    return r;
}

SusceptibilityResult susceptibility(double delta_m, double b_ac_nv, double volume, const NVFrame& frame,
                                    double frequency, double phase) {
    if (b_ac_nv == 0.0) throw InvalidArgument("excitation field must be nonzero");
    SusceptibilityResult r = susceptibility_from_h(delta_m, excitation_h_y(b_ac_nv, frame), volume);
    r.conversion = in_plane_conversion(frame);
    r.frequency = frequency;
    r.phase = phase;
    return r;
}

std::vector<DetuningErrorPoint> detuning_error_curve(const std::vector<double>& detunings, double rabi_omega,
                                                     const XYSequence& seq, const ACFieldSpec& ac,
                                                     const DetuningCurveOptions& opt) {
    if (!(ac.amplitude > 0.0)) throw InvalidArgument("error curve needs a positive AC amplitude");
    PhaseSweepFitOptions fo = opt.fit;
    fo.kappa = xyn_kappa(seq.n_pulses, seq.tau);
    std::vector<DetuningErrorPoint> out;
    for (double det : detunings) {
        const PhaseSweep sw = phase_sweep(seq, ac, opt.deltas, det, rabi_omega, opt.propagation);
        const PhaseSweepFit f = fit_phase_sweep(sw, fo);
        out.push_back({det, f.b_ac, (f.b_ac - ac.amplitude) / ac.amplitude});
    }
    return out;
}

}  // namespace qdm
