#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qdm/instrument.hpp"

using namespace qdm;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.grid = {24, 20, 1e-6};
    c.threads = 1;
    return c;
}

}  // namespace

TEST_CASE("grid layout and overlap checks") {
    const MagnetScene s = MagnetScene::grid_layout();
    REQUIRE(s.magnets.size() == 9);
    CHECK(s.magnets[4].center.norm() == 0.0);
    CHECK(s.magnets[0].center.x() == doctest::Approx(-25e-6));
    CHECK(s.magnets[8].center.y() == doctest::Approx(25e-6));
    CHECK_NOTHROW(s.validate());
    const MagnetScene tight = MagnetScene::grid_layout(1, 2, 4e-6);
    CHECK_THROWS_AS(tight.validate(), InvalidArgument);
    MagnetScene neg = MagnetScene::grid_layout(1, 1);
    neg.magnets[0].chi_v = {-1.0, 0.0};
    CHECK_THROWS_AS(neg.validate(), InvalidArgument);
    CHECK(MagnetScene::grid_layout(0, 0).magnets.empty());
}

TEST_CASE("moment law") {
    MomentLaw law;
    CHECK(law.moment_at(1e-3) == doctest::Approx(115e-15));
    CHECK(law.moment_at(3e-3) == doctest::Approx(373e-15));
    law.table = {{1e-3, 107e-15}, {2e-3, 230e-15}, {3e-3, 360e-15}};
    CHECK(law.moment_at(1.5e-3) == doctest::Approx(168.5e-15));
    CHECK(law.moment_at(1e-3) == doctest::Approx(107e-15));
    CHECK(law.moment_at(4e-3) == doctest::Approx(490e-15));  // linear extension of the last segment
}

TEST_CASE("moment change from the in-plane excitation") {
    // chi V H_y with H_y = B_nv / (sqrt(2/3) mu0)
    const double expect = 138.0 * 3.17e-18 * 3.5e-6 / (std::sqrt(2.0 / 3.0) * 4e-7 * pi);
    CHECK(expect == doctest::Approx(1.4922e-15).epsilon(1e-4));
    ExperimentConfig c = small_config();
    const LocalFields lf = local_fields(MagnetScene::grid_layout(1, 1), c);
    REQUIRE(lf.delta_m.size() == 1);
    CHECK(lf.delta_m[0].real() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(in_plane_conversion({}) == doctest::Approx(std::sqrt(1.5)));
}

TEST_CASE("local fields without a sample") {
    ExperimentConfig c = small_config();
    const LocalFields lf = local_fields(MagnetScene{}, c);
    for (std::size_t p = 0; p < lf.b_ac_nv.size(); ++p) {
        CHECK(lf.b_ac_nv[p] == c.ac.amplitude);
        CHECK(lf.detuning[p] == 0.0);
        CHECK(lf.b_dc_nv[p] == c.b_dc);
    }
}

TEST_CASE("local fields carry the sample phase") {
    ExperimentConfig c = small_config();
    MagnetScene s = MagnetScene::grid_layout(1, 1, 25e-6, 5.8e-6, 30e-9, {138.0, 40.0});
    const LocalFields lf = local_fields(s, c);
    CHECK(std::arg(lf.delta_m[0]) == doctest::Approx(std::atan2(40.0, 138.0)));
    double max_shift = 0.0;
    for (double v : lf.ac_phase_shift) max_shift = std::max(max_shift, std::abs(v));
    CHECK(max_shift > 0.0);
    CHECK(max_shift < 0.1);
}

TEST_CASE("DC stack noise and determinism") {
    ExperimentConfig c;
    c.threads = 1;
    const MagnetScene none;
    auto clean = c;
    clean.noise.field_sigma = 0.0;
    for (const auto& m : synth_dc_stack(none, clean, {1e-3}))
        for (double v : m.values) CHECK(v == 1e-3);

    const auto a = synth_dc_stack(none, c, {1e-3, 2e-3});
    double s = 0, s2 = 0;
    for (double v : a[0].values) {
        s += v - 1e-3;
        s2 += (v - 1e-3) * (v - 1e-3);
    }
    const double n = a[0].size();
    CHECK(std::sqrt(s2 / n - (s / n) * (s / n)) == doctest::Approx(120e-9).epsilon(0.04));
    CHECK(a[0].values != a[1].values);

    auto c3 = c;
    c3.threads = 3;
    const auto b = synth_dc_stack(MagnetScene::grid_layout(), c3, {1e-3});
    const auto b1 = synth_dc_stack(MagnetScene::grid_layout(), c, {1e-3});
    CHECK(b[0].values == b1[0].values);
    auto c8 = c;
    c8.seed = 8;
    CHECK(synth_dc_stack(none, c8, {1e-3})[0].values != a[0].values);
    CHECK_THROWS_AS(synth_dc_stack(none, c, {9e-3}), InvalidArgument);
    CHECK_THROWS_AS(synth_dc_stack(none, c, {}), InvalidArgument);
}

TEST_CASE("noise-free datacube equals the propagated sweep") {
    ExperimentConfig c = small_config();
    c.noise.field_sigma = 0.0;
    const auto deltas = delta_grid(9);
    const DatacubeResult r = synth_ac_datacube(MagnetScene{}, c, deltas);
    CHECK(r.signal_sigma == 0.0);
    const PhaseSweep sw = phase_sweep(c.sequence, c.ac, deltas, 0.0, c.rabi_omega, c.effective_propagation());
    for (std::size_t p : {std::size_t{0}, std::size_t{37}, r.cube.pixels() - 1})
        for (std::size_t j = 0; j < deltas.size(); ++j) CHECK(r.cube.sweep(p)[j] == sw.signal[j]);
    CHECK(r.contrast == doctest::Approx(std::exp(-c.sequence.total_duration() / 21e-6)));
    CHECK(r.kappa == doctest::Approx(xyn_kappa(8, 1.0 / 600e3)));
}

TEST_CASE("noisy datacube is reproducible across thread counts") {
    ExperimentConfig c = small_config();
    const auto deltas = delta_grid(9);
    const DatacubeResult a = synth_ac_datacube(MagnetScene::grid_layout(1, 1), c, deltas);
    c.threads = 4;
    const DatacubeResult b = synth_ac_datacube(MagnetScene::grid_layout(1, 1), c, deltas);
    CHECK(a.cube.signal == b.cube.signal);
    CHECK(a.signal_sigma > 0.0);
}

TEST_CASE("mismatched pulse spacing is reported") {
    ExperimentConfig c = small_config();
    c.noise.field_sigma = 0.0;
    c.sequence.tau *= 1.1;
    const DatacubeResult r = synth_ac_datacube(MagnetScene{}, c, delta_grid(8));
    CHECK(r.diagnostics.warnings.size() == 1);
}

TEST_CASE("camera frames isolate the modulated signal") {
    AcquisitionSchedule s;
    s.sequence_duration = 13e-6;
    s.p0_plus = {0.2, 0.5};
    s.p0_minus = {0.8, 0.5};
    const CameraFrames f = camera_demodulate(s, 2);
    CHECK(f.bin_duration == doctest::Approx(31.25e-6));
    CHECK(f.i_frame[0] == doctest::Approx(1e4 * 0.3 * 0.6));
    CHECK(f.i_frame[1] == 0.0);
    CHECK(f.q_frame[0] == 0.0);
    AcquisitionSchedule none;
    for (double v : camera_demodulate(none, 3).i_frame) CHECK(v == 0.0);
    s.sequence_duration = 40e-6;
    CHECK_THROWS_AS(camera_demodulate(s, 2), InvalidArgument);
}

TEST_CASE("ODMR dips sit at D0 +- gamma B") {
    ODMRConfig cfg;
    const double b = 1e-3;
    const double shift = constants.gamma_e * b;
    CHECK(odmr_contrast_at(constants.D0 - shift, b, cfg) == doctest::Approx(1.0 - cfg.depth).epsilon(1e-6));
    CHECK(odmr_contrast_at(constants.D0 + shift, b, cfg) == doctest::Approx(1.0 - cfg.depth).epsilon(1e-6));
    CHECK(odmr_contrast_at(constants.D0, b, cfg) > 0.99);
    const ODMRSpectrum sp = synth_odmr(b, cfg);
    CHECK(sp.mw_freqs.size() == 601);
    cfg.noise_sigma = 0.5;
    for (double v : synth_odmr(b, cfg).contrast) CHECK((v >= 0.0 && v <= 1.0));
    cfg.linewidth = 0.0;
    CHECK_THROWS_AS(synth_odmr(b, cfg), InvalidArgument);
}

TEST_CASE("experiment validation") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.b_dc = 0.1e-3;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = ExperimentConfig{};
    c.standoff = -1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}
