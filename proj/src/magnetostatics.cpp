#include "qdm/magnetostatics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qdm/parallel.hpp"

namespace qdm {

Vec3 CylinderMagnet::magnetization() const { return moment / volume(); }

void CylinderMagnet::validate() const {
    if (!(diameter > 0.0) || !(thickness > 0.0)) throw InvalidArgument("cylinder diameter and thickness must be positive");
    if (!moment.allFinite()) throw InvalidArgument("cylinder moment must be finite");
}

NVFrame NVFrame::from_tilt(double theta) {
    NVFrame f;
    f.axis = Vec3(0.0, std::sin(theta), std::cos(theta));
    return f;
}

Vec3 dipole_field(const Vec3& moment, const Vec3& source, const Vec3& obs) {
    const Vec3 r = obs - source;
    const double d = r.norm();
    if (d == 0.0) throw InvalidArgument("dipole field evaluated at the source point");
    const Vec3 rh = r / d;
    return constants.mu0 / (4.0 * pi) * (3.0 * moment.dot(rh) * rh - moment) / (d * d * d);
}

double cel(double kc, double p, double a, double b) {
    if (kc == 0.0) throw InvalidArgument("cel: kc must be nonzero");
    constexpr double tol = 1e-8;  // quadratic convergence: one more pass reaches roundoff
    double k = std::abs(kc);
    double em = 1.0;
    double pp, cc, ss;
    if (p > 0.0) {
        pp = std::sqrt(p);
        cc = a;
        ss = b / pp;
    } else {
        double f = kc * kc;
        double q = 1.0 - f;
        double g = 1.0 - p;
        f -= p;
        q *= (b - a * p);
        pp = std::sqrt(f / g);
        cc = (a - b) / g;
        ss = -q / (g * g * pp) + cc * pp;
    }
    double f = cc;
    cc += ss / pp;
    double g = k / pp;
    ss = 2.0 * (ss + f * g);
    pp += g;
    g = em;
    em += k;
    double kk = k;
    int it = 0;
    while (std::abs(g - k) > g * tol) {
        if (++it > 60) throw ConvergenceError("cel did not converge");
        k = 2.0 * std::sqrt(kk);
        kk = k * em;
        f = cc;
        cc += ss / pp;
        g = kk / pp;
        ss = 2.0 * (ss + f * g);
        pp += g;
        g = em;
        em += k;
    }
    return (pi / 2) * (ss + cc * em) / (em * (em + pp));
}

namespace {

// B_rho, B_z of an axially magnetized cylinder (surface-current form)
void axial_field(double Mz, double R, double L, double rho, double z, double& Br, double& Bz) {
    const double B0 = constants.mu0 * Mz / pi;
    const double gam = (R - rho) / (R + rho);
    double sr = 0.0, sz = 0.0;
    for (int sgn : {1, -1}) {
        const double zz = z + sgn * L;
        const double den = std::sqrt(zz * zz + (rho + R) * (rho + R));
        const double alpha = R / den;
        const double beta = zz / den;
        const double kc = std::sqrt((zz * zz + (R - rho) * (R - rho)) / (zz * zz + (R + rho) * (R + rho)));
        sr += sgn * alpha * cel(kc, 1.0, 1.0, -1.0);
        sz += sgn * beta * cel(kc, gam * gam, 1.0, gam);
    }
    Br = B0 * sr;
    Bz = B0 * R / (R + rho) * sz;
}

// shape factors of the H field of a diametrically magnetized cylinder;
// H_rho = h_rho cos(phi), H_phi = h_phi sin(phi), H_z = h_z cos(phi), phi from the magnetization
void diametric_factors(double Mp, double R, double L, double rho, double z, double& hr, double& hp, double& hz) {
    const double s = rho + R;
    const double m = 4.0 * rho * R / (s * s);
    const double g2 = (rho - R) * (rho - R) / (s * s);
    const double q1 = s * s / rho;
    const double q0 = (R * R - 2.0 * rho * R - rho * rho) * s * s / (4.0 * rho * rho * R);
    const double r = -s - q0;
    const double u1 = 4.0 / m;
    const double u0 = 4.0 * (1.0 - m) / (m * m);
    auto parts = [&](double zeta, double& I, double& T2, double& U2) {
        const double P = std::sqrt(zeta * zeta + s * s);
        const double kc = std::sqrt(zeta * zeta + (rho - R) * (rho - R)) / P;
        I = 4.0 / P * cel(kc, 1.0, -1.0, 1.0);
        const double pre = 4.0 / (s * s * P);
        T2 = pre * (cel(kc, 1.0, q0, q0 + q1) + cel(kc, g2, r, r));
        U2 = pre * (cel(kc, 1.0, u0, u0 + u1) + cel(kc, g2, -u0, -u0));
    };
    double Ip, Tp, Up, Im, Tm, Um;
    parts(z + L, Ip, Tp, Up);
    parts(z - L, Im, Tm, Um);
    hr = Mp * R / (4.0 * pi) * ((z + L) * Tp - (z - L) * Tm);
    hp = Mp * R * R / (4.0 * pi) * ((z + L) * Up - (z - L) * Um);
    hz = -Mp * R / (4.0 * pi) * (Ip - Im);
}

// H of the diametric part along the magnetization direction on the axis
double diametric_on_axis(double Mp, double R, double L, double z) {
    return -0.25 * Mp * ((z + L) / std::sqrt(R * R + (z + L) * (z + L)) - (z - L) / std::sqrt(R * R + (z - L) * (z - L)));
}

// local coordinates: magnet at origin
Vec3 cylinder_field_local(const Vec3& M, double R, double L, double x, double y, double z) {
    Vec3 B = Vec3::Zero();
    const double rho = std::hypot(x, y);
    if (M.z() != 0.0) {
        double Br, Bz;
        axial_field(M.z(), R, L, rho, z, Br, Bz);
        const double c = rho > 0.0 ? x / rho : 1.0;
        const double s = rho > 0.0 ? y / rho : 0.0;
        B += Vec3(Br * c, Br * s, Bz);
    }
    const double Mp = std::hypot(M.x(), M.y());
    if (Mp > 0.0) {
        const Vec3 mhat(M.x() / Mp, M.y() / Mp, 0.0);
        const Vec3 H0 = diametric_on_axis(Mp, R, L, z) * mhat;
        auto off_axis = [&](double r, double ph) {
            const double a = std::atan2(M.y(), M.x());
            const double phi = ph - a;
            double hr, hp, hz;
            diametric_factors(Mp, R, L, r, z, hr, hp, hz);
            const double Hr = hr * std::cos(phi);
            const double Hp = hp * std::sin(phi);
            const double Hz = hz * std::cos(phi);
            return Vec3(Hr * std::cos(ph) - Hp * std::sin(ph), Hr * std::sin(ph) + Hp * std::cos(ph), Hz);
        };
        // the closed form cancels terms of order 1/rho^2 near the axis, so
        // interpolate linearly between the axis and a safe radius there
        const double rho_safe = 1e-3 * R;
        Vec3 H;
        if (rho == 0.0) {
            H = H0;
        } else if (rho < rho_safe) {
            const double ph = std::atan2(y, x);
            H = H0 + (rho / rho_safe) * (off_axis(rho_safe, ph) - H0);
        } else {
            H = off_axis(rho, std::atan2(y, x));
        }
        B += constants.mu0 * H;
        if (rho < R && std::abs(z) < L) B += constants.mu0 * Vec3(M.x(), M.y(), 0.0);
    }
    return B;
}

}  // namespace

Vec3 cylinder_field(const CylinderMagnet& magnet, const Vec3& obs, FieldFlags* flags) {
    magnet.validate();
    const Vec3 M = magnet.magnetization();
    const double R = 0.5 * magnet.diameter;
    const double L = 0.5 * magnet.thickness;
    const Vec3 r = obs - magnet.center;
    const double rho = std::hypot(r.x(), r.y());
    const bool inside = rho < R && std::abs(r.z()) < L;
    const bool edge = std::abs(rho - R) <= 1e-9 * R && std::abs(std::abs(r.z()) - L) <= 1e-9 * R;
    if (flags) {
        flags->inside = inside;
        flags->edge = edge;
    }
    if (edge) {
        constexpr double eps = 1e-9;
        const double c = r.x() / rho;
        const double s = r.y() / rho;
        const Vec3 out = cylinder_field_local(M, R, L, (rho + eps) * c, (rho + eps) * s, r.z());
        const Vec3 in = cylinder_field_local(M, R, L, (rho - eps) * c, (rho - eps) * s, r.z());
        return 0.5 * (out + in);
    }
    return cylinder_field_local(M, R, L, r.x(), r.y(), r.z());
}

double nv_projection(const Vec3& B, const NVFrame& frame) { return frame.project(B); }

FieldMap synth_field_map(const std::vector<CylinderMagnet>& magnets, const GridSpec& grid, double standoff,
                         MapAxis axis, const NVFrame& frame, int threads, Diagnostics* diag) {
    if (!(standoff > 0.0)) throw InvalidArgument("standoff must be positive");
    grid.validate();
    FieldMap map(grid, standoff, axis);
    if (diag && !magnets.empty()) {
        const double x0 = grid.x_of(0) - 0.5 * grid.pixel_size, x1 = grid.x_of(grid.width - 1) + 0.5 * grid.pixel_size;
        const double y0 = grid.y_of(0) - 0.5 * grid.pixel_size, y1 = grid.y_of(grid.height - 1) + 0.5 * grid.pixel_size;
        bool any = false;
        for (const auto& m : magnets) {
            const double R = 0.5 * m.diameter;
            if (m.center.x() + R >= x0 && m.center.x() - R <= x1 && m.center.y() + R >= y0 && m.center.y() - R <= y1)
                any = true;
        }
        if (!any) diag->warn("grid does not contain any magnet footprint");
    }
    parallel_for(static_cast<std::size_t>(grid.height), threads, [&](std::size_t r) {
        const int row = static_cast<int>(r);
        for (int c = 0; c < grid.width; ++c) {
            const Vec3 obs(grid.x_of(c), grid.y_of(row), standoff);
            Vec3 B = Vec3::Zero();
            for (const auto& m : magnets) B += cylinder_field(m, obs);
            double v = 0.0;
            switch (axis) {
                case MapAxis::nv: v = frame.project(B); break;
                case MapAxis::x: v = B.x(); break;
                case MapAxis::y: v = B.y(); break;
                case MapAxis::z: v = B.z(); break;
            }
            map.at(c, row) = v;
        }
    });
    return map;
}

namespace {

double bilinear(const FieldMap& map, double col, double row, bool& ok) {
    ok = col >= -1e-9 && row >= -1e-9 && col <= map.width - 1 + 1e-9 && row <= map.height - 1 + 1e-9;
    if (!ok) return 0.0;
    col = std::clamp(col, 0.0, static_cast<double>(map.width - 1));
    row = std::clamp(row, 0.0, static_cast<double>(map.height - 1));
    const int c0 = std::min(static_cast<int>(std::floor(col)), std::max(map.width - 2, 0));
    const int r0 = std::min(static_cast<int>(std::floor(row)), std::max(map.height - 2, 0));
    const double fc = col - c0;
    const double fr = row - r0;
    const int c1 = std::min(c0 + 1, map.width - 1);
    const int r1 = std::min(r0 + 1, map.height - 1);
    // exact pixel values when the sample lands on a pixel center
    const double top = fc == 0.0 ? map.at(c0, r0) : (1.0 - fc) * map.at(c0, r0) + fc * map.at(c1, r0);
    const double bot = fc == 0.0 ? map.at(c0, r1) : (1.0 - fc) * map.at(c0, r1) + fc * map.at(c1, r1);
    return fr == 0.0 ? top : (1.0 - fr) * top + fr * bot;
}

struct Extremum {
    double at;
    double value;
};

Extremum refine(const std::vector<double>& s, const std::vector<double>& v, std::size_t i) {
    const double a = v[i - 1], b = v[i], c = v[i + 1];
    const double den = a - 2.0 * b + c;
    double d = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
    d = std::clamp(d, -0.5, 0.5);
    const double h = s[i + 1] - s[i];
    return {s[i] + d * h, b - 0.25 * (a - c) * d};
}

}  // namespace

LinecutResult linecut_peak_to_peak(const FieldMap& map, double cx, double cy, const LinecutOptions& opt) {
    const GridSpec g = map.grid();
    const double ux = std::cos(opt.angle);
    const double uy = std::sin(opt.angle);
    const int K = static_cast<int>(std::floor(opt.search_radius / map.pixel_size + 1e-9));
    std::vector<double> pos, val;
    for (int k = -K; k <= K; ++k) {
        const double s = k * map.pixel_size;
        bool ok;
        // snap to the pixel lattice to avoid 1e-16 interpolation offsets
        double col = g.col_of(cx + s * ux);
        double row = g.row_of(cy + s * uy);
        if (std::abs(col - std::round(col)) < 1e-9) col = std::round(col);
        if (std::abs(row - std::round(row)) < 1e-9) row = std::round(row);
        const double v = bilinear(map, col, row, ok);
        if (!ok) continue;
        pos.push_back(s);
        val.push_back(v);
    }
    if (pos.size() < 3) throw DataError("line-cut has fewer than three samples inside the map");

    std::vector<Extremum> maxima, minima;
    for (std::size_t i = 1; i + 1 < val.size(); ++i) {
        if (val[i] >= val[i - 1] && val[i] > val[i + 1]) maxima.push_back(refine(pos, val, i));
        if (val[i] <= val[i - 1] && val[i] < val[i + 1]) minima.push_back(refine(pos, val, i));
    }
    if (maxima.empty() || minima.empty())
        throw DataError("line-cut is monotone: no extremum pair, standoff too large for the field of view");

    bool have_opposite = false;
    for (const auto& a : maxima)
        for (const auto& b : minima)
            if (a.value > 0.0 && b.value < 0.0) have_opposite = true;

    const Extremum* best_max = nullptr;
    const Extremum* best_min = nullptr;
    double best_score = -1.0, best_dist = 0.0;
    for (const auto& a : maxima) {
        for (const auto& b : minima) {
            if (have_opposite && !(a.value > 0.0 && b.value < 0.0)) continue;
            const double score = a.value - b.value;
            const double dist = std::abs(a.at) + std::abs(b.at);
            const double tie = 1e-9 * std::max(std::abs(score), std::abs(best_score));
            if (!best_max || score > best_score + tie || (std::abs(score - best_score) <= tie && dist < best_dist)) {
                best_max = &a;
                best_min = &b;
                best_score = score;
                best_dist = dist;
            }
        }
    }
    LinecutResult out;
    out.pos_at = best_max->at;
    out.neg_at = best_min->at;
    out.pos_value = best_max->value;
    out.neg_value = best_min->value;
    out.y_pkpk = std::abs(out.pos_at - out.neg_at);
    if (out.y_pkpk == 0.0) throw DataError("line-cut extrema coincide");
    out.slope = (out.pos_value - out.neg_value) / (out.pos_at - out.neg_at);
    return out;
}

namespace {

FieldMap reference_map(const CalibrationGeometry& geom, double standoff) {
    CylinderMagnet m;
    m.diameter = geom.diameter;
    m.thickness = geom.thickness;
    m.moment = Vec3(0.0, geom.reference_moment, 0.0);
    std::vector<CylinderMagnet> mags;
    if (geom.layout.empty()) {
        m.center = Vec3(geom.cx, geom.cy, 0.0);
        mags.push_back(m);
    }
    for (const Vec3& p : geom.layout) {
        m.center = Vec3(p.x(), p.y(), 0.0);
        mags.push_back(m);
    }
    FieldMap map = synth_field_map(mags, geom.grid, standoff, MapAxis::nv, geom.frame, geom.threads);
    if (geom.preprocess) map = geom.preprocess(map);
    return map;
}

}  // namespace

StandoffFit standoff_calibration(const CalibrationGeometry& geom, const std::vector<double>& z0_grid) {
    if (z0_grid.size() < 4) throw InvalidArgument("standoff calibration needs at least 4 points");
    StandoffFit fit;
    for (double z0 : z0_grid) {
        if (!(z0 > 0.0)) throw InvalidArgument("standoff must be positive");
        const FieldMap map = reference_map(geom, z0);
        double y;
        try {
            y = linecut_peak_to_peak(map, geom.cx, geom.cy, geom.linecut).y_pkpk;
        } catch (const DataError&) {
            continue;  // lobes leave the field of view near the map edge; drop this standoff
        }
        fit.z0.push_back(z0);
        fit.y_pkpk.push_back(y);
    }
    if (fit.z0.size() < 4) throw DataError("fewer than 4 calibration standoffs give a usable line-cut");
    const double n = static_cast<double>(fit.z0.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < fit.z0.size(); ++i) {
        sx += fit.z0[i];
        sy += fit.y_pkpk[i];
        sxx += fit.z0[i] * fit.z0[i];
        sxy += fit.z0[i] * fit.y_pkpk[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw InvalidArgument("standoff calibration grid is degenerate");
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < fit.z0.size(); ++i) {
        const double e = fit.y_pkpk[i] - (fit.intercept + fit.slope * fit.z0[i]);
        ss += e * e;
        fit.max_residual = std::max(fit.max_residual, std::abs(e));
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

double StandoffFit::standoff_for(double y) const {
    const std::size_t n = z0.size();
    bool monotone = n >= 2 && y_pkpk.size() == n;
    for (std::size_t i = 1; monotone && i < n; ++i) monotone = z0[i] > z0[i - 1] && y_pkpk[i] > y_pkpk[i - 1];
    if (!monotone || y < y_pkpk.front() || y > y_pkpk.back()) return line_standoff(y);
    const auto hi = static_cast<std::size_t>(std::upper_bound(y_pkpk.begin(), y_pkpk.end(), y) - y_pkpk.begin());
    if (hi == n) return z0.back();
    const std::size_t lo = hi - 1;
    const double t = (y - y_pkpk[lo]) / (y_pkpk[hi] - y_pkpk[lo]);
    return z0[lo] + t * (z0[hi] - z0[lo]);
}

double reference_slope(const CalibrationGeometry& geom, double standoff) {
    if (!(standoff > 0.0)) throw InvalidArgument("standoff must be positive");
    return linecut_peak_to_peak(reference_map(geom, standoff), geom.cx, geom.cy, geom.linecut).slope;
}

double moment_from_slope(double slope, double standoff, const CalibrationGeometry& geom) {
    if (!(standoff > 0.0)) throw InvalidArgument("standoff must be positive");
    if (slope == 0.0) return 0.0;
    return slope / reference_slope(geom, standoff) * geom.reference_moment;
}

}  // namespace qdm
