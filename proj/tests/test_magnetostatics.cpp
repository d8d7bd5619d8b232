#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "qdm/magnetostatics.hpp"
#include "qdm/rng.hpp"

using namespace qdm;

namespace {

double rel_err(const Vec3& a, const Vec3& b) { return (a - b).norm() / b.norm(); }

double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) s += f(a + i * h);
    return s * h;
}

}  // namespace

TEST_CASE("cel reduces to the complete elliptic integrals") {
    for (double k : {0.1, 0.5, 0.8, 0.99, 0.999999}) {
        const double kc = std::sqrt(1.0 - k * k);
        CHECK(cel(kc, 1.0, 1.0, 1.0) == doctest::Approx(oracle::ellip_k(k)).epsilon(1e-13));
        CHECK(cel(kc, 1.0, 1.0, kc * kc) == doctest::Approx(oracle::ellip_e(k)).epsilon(1e-13));
    }
    CHECK(cel(0.6, 1.0, 1.0, 1.0) == doctest::Approx(1.995302777665).epsilon(1e-12));
    CHECK(cel(0.6, 1.0, 1.0, 0.36) == doctest::Approx(1.276349943170).epsilon(1e-12));
    CHECK_THROWS_AS(cel(0.0, 1.0, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("cel matches its defining integral for general p") {
    for (double kc : {0.3, 0.7, 1.4}) {
        for (double p : {0.25, 1.0, 3.0}) {
            for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{1.0, -1.0}, std::pair{0.2, 0.9}}) {
                auto f = [=](double t) {
                    const double c2 = std::cos(t) * std::cos(t), s2 = std::sin(t) * std::sin(t);
                    return (a * c2 + b * s2) / ((c2 + p * s2) * std::sqrt(c2 + kc * kc * s2));
                };
                // periodic smooth integrand on a quarter period: trapezoid converges spectrally
                const double ref = trapezoid(f, 0.0, pi / 2, 4000);
                CHECK(cel(kc, p, a, b) == doctest::Approx(ref).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("cylinder field matches a dipole-sum disk") {
    const double R = 2.9e-6, t = 30e-9;
    const oracle::DipoleSum fine(R, t, 48, 512, 2);
    const oracle::DipoleSum coarse(R, t, 32, 256, 2);
    CylinderMagnet m;
    for (const Vec3& moment : {Vec3(0, 107e-15, 0), Vec3(0, 0, 50e-15), Vec3(30e-15, -60e-15, 20e-15)}) {
        m.moment = moment;
        const Vec3 M = m.magnetization();
        for (const Vec3& obs : {Vec3(0, 0, 6e-6), Vec3(1e-6, 4e-6, 3e-6), Vec3(2.9e-6, 0, 1e-6), Vec3(-7e-6, 3e-6, 2e-6)}) {
            const Vec3 ref = fine.field(M, obs);
            CHECK(rel_err(coarse.field(M, obs), ref) < 1e-5);  // the oracle itself is converged
            CHECK(rel_err(cylinder_field(m, obs), ref) < 1e-4);
        }
    }
}

TEST_CASE("far field approaches the point dipole") {
    CylinderMagnet m;
    m.moment = Vec3(10e-15, 107e-15, -5e-15);
    const double d = 20 * m.diameter;
    for (const Vec3& dir : {Vec3(0, 0, 1), Vec3(1, 1, 1).normalized(), Vec3(0, 1, 0.2).normalized()}) {
        const Vec3 obs = d * dir;
        CHECK(rel_err(cylinder_field(m, obs), dipole_field(m.moment, m.center, obs)) < 1e-2);
    }
}

TEST_CASE("field inside the body and on the rim") {
    CylinderMagnet m;
    m.moment = Vec3(0, 107e-15, 0);
    FieldFlags f;
    const Vec3 inside = cylinder_field(m, Vec3(0, 0, 0), &f);
    CHECK(f.inside);
    CHECK(std::isfinite(inside.norm()));
    // thin in-plane disk: B inside approaches mu0 M (small demagnetizing factor)
    CHECK(inside.y() == doctest::Approx(constants.mu0 * m.magnetization().y()).epsilon(0.05));
    const Vec3 rim = cylinder_field(m, Vec3(0, m.diameter / 2, m.thickness / 2), &f);
    CHECK(f.edge);
    CHECK(std::isfinite(rim.norm()));
    CylinderMagnet bad;
    bad.diameter = -1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("field near the symmetry axis stays accurate") {
    CylinderMagnet m;
    m.moment = Vec3(20e-15, 107e-15, 30e-15);
    const oracle::DipoleSum ref(m.diameter / 2, m.thickness, 48, 512, 2);
    for (double eps : {0.0, 1e-12, 1e-10, 1e-9, 2.9e-9, 3e-9, 1e-8, 1e-7}) {
        for (const Vec3& obs : {Vec3(eps, 0, 2e-6), Vec3(0, eps, 2e-6), Vec3(-eps, eps, 2e-6)})
            CHECK(rel_err(cylinder_field(m, obs), ref.field(m.magnetization(), obs)) < 1e-4);
    }
}

TEST_CASE("NV projection and frames") {
    const NVFrame f;
    CHECK(f.axis.norm() == doctest::Approx(1.0));
    CHECK(nv_projection(Vec3(0, 1, 0)) == doctest::Approx(std::sqrt(2.0 / 3.0)));
    const NVFrame g = NVFrame::from_tilt(std::acos(std::sqrt(1.0 / 3.0)));
    CHECK((g.axis - f.axis).norm() < 1e-12);
    CHECK(f.perpendicular(Vec3(1, 2, 3)).dot(f.axis) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("field maps superpose and do not depend on the thread count") {
    CylinderMagnet a, b;
    a.moment = Vec3(0, 100e-15, 0);
    b.center = Vec3(12e-6, -7e-6, 0);
    b.moment = Vec3(0, 60e-15, 0);
    GridSpec g{40, 30, 1e-6};
    const FieldMap ab1 = synth_field_map({a, b}, g, 6e-6, MapAxis::nv, {}, 1);
    const FieldMap ab3 = synth_field_map({a, b}, g, 6e-6, MapAxis::nv, {}, 3);
    CHECK(ab1.values == ab3.values);
    const FieldMap ma = synth_field_map({a}, g, 6e-6, MapAxis::nv);
    const FieldMap mb = synth_field_map({b}, g, 6e-6, MapAxis::nv);
    for (std::size_t i = 0; i < ab1.size(); ++i) CHECK(ab1.values[i] == doctest::Approx(ma.values[i] + mb.values[i]).epsilon(1e-12));
    const FieldMap z = synth_field_map({a}, g, 6e-6, MapAxis::z);
    CHECK(z.at(20, 15 + 3) == doctest::Approx(cylinder_field(a, Vec3(0, 3e-6, 6e-6)).z()));
    CHECK_THROWS_AS(synth_field_map({a}, g, 0.0, MapAxis::nv), InvalidArgument);
}

TEST_CASE("line-cut finds signed extrema with sub-pixel refinement") {
    // f(y) = y exp(-y^2 / (2 s^2)) has extrema at +-s with values +-s e^{-1/2}
    GridSpec g{41, 41, 1e-6};
    FieldMap m(g, 6e-6, MapAxis::nv);
    const double s = 4.3e-6;
    for (int r = 0; r < g.height; ++r)
        for (int c = 0; c < g.width; ++c) {
            const double y = g.y_of(r), x = g.x_of(c);
            m.at(c, r) = y * std::exp(-(y * y + x * x) / (2 * s * s));
        }
    const LinecutResult cut = linecut_peak_to_peak(m, 0.0, 0.0);
    CHECK(cut.y_pkpk == doctest::Approx(2 * s).epsilon(0.02));
    CHECK(cut.pos_at > 0);
    CHECK(cut.neg_at < 0);
    CHECK(cut.slope == doctest::Approx(std::exp(-0.5)).epsilon(0.02));

    FieldMap mono(g, 6e-6, MapAxis::nv);
    for (int r = 0; r < g.height; ++r)
        for (int c = 0; c < g.width; ++c) mono.at(c, r) = g.y_of(r);
    CHECK_THROWS_AS(linecut_peak_to_peak(mono, 0.0, 0.0), DataError);
}

TEST_CASE("moment from slope round-trips the reference magnet") {
    CalibrationGeometry cal;
    for (double m : {50e-15, 107e-15, 200e-15}) {
        CylinderMagnet mag;
        mag.moment = Vec3(0, m, 0);
        const FieldMap map = synth_field_map({mag}, cal.grid, 6e-6, MapAxis::nv);
        const LinecutResult cut = linecut_peak_to_peak(map, 0.0, 0.0);
        CHECK(moment_from_slope(cut.slope, 6e-6, cal) == doctest::Approx(m).epsilon(1e-12));
    }
    CHECK_THROWS_AS(moment_from_slope(1.0, 0.0, cal), InvalidArgument);
    CHECK_THROWS_AS(standoff_calibration(cal, {3e-6, 4e-6, 5e-6}), InvalidArgument);
}

TEST_CASE("stand-off calibration inverts its own points") {
    CalibrationGeometry cal;
    std::vector<double> z;
    for (int i = 3; i <= 10; ++i) z.push_back(i * 1e-6);
    const StandoffFit fit = standoff_calibration(cal, z);
    CHECK(fit.z0.size() == z.size());
    CHECK(fit.slope > 0.5);
    for (std::size_t i = 0; i < z.size(); ++i) {
        CHECK(std::abs(fit.line_standoff(fit.intercept + fit.slope * z[i]) - z[i]) < 1e-15);
        CHECK(std::abs(fit.standoff_for(fit.y_pkpk[i]) - z[i]) < 1e-15);
    }
    const double mid = 0.5 * (fit.y_pkpk[2] + fit.y_pkpk[3]);
    CHECK(fit.standoff_for(mid) > z[2]);
    CHECK(fit.standoff_for(mid) < z[3]);
    const double beyond = fit.y_pkpk.back() + 1e-6;
    CHECK(fit.standoff_for(beyond) == fit.line_standoff(beyond));
    CHECK(fit.residual <= fit.max_residual);
}
