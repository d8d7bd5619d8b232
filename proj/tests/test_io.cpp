#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdm/io/config.hpp"
#include "qdm/io/heatmap.hpp"
#include "qdm/io/map_file.hpp"
#include "qdm/io/report_table.hpp"
#include "qdm/rng.hpp"

using namespace qdm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qdm_test_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

int error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.line;
    }
    return -1;
}

FieldMap random_map(int w, int h) {
    FieldMap m(GridSpec{w, h, 0.5e-6}, 6e-6, MapAxis::y);
    CounterRng r(99);
    for (double& v : m.values) v = 1e-6 * r.normal();
    m.values[0] = -0.0;
    m.values[1] = 5e-324;
    m.values[2] = 1.0 / 3.0;
    return m;
}

}  // namespace

TEST_CASE("quantities with units") {
    CHECK(parse_quantity("0.8 mT", Dimension::field) == doctest::Approx(8e-4));
    CHECK(parse_quantity("3.5uT", Dimension::field) == doctest::Approx(3.5e-6));
    CHECK(parse_quantity("6 um", Dimension::length) == doctest::Approx(6e-6));
    CHECK(parse_quantity("300 kHz", Dimension::frequency) == doctest::Approx(3e5));
    CHECK(parse_quantity("107 fJ/T", Dimension::moment) == doctest::Approx(107e-15));
    CHECK(parse_quantity("33", Dimension::none) == 33.0);
    // prefixed decimals land on the same double as the literal
    CHECK(parse_quantity("5.8 um", Dimension::length) == 5.8e-6);
    CHECK(parse_quantity("3.17 um^3", Dimension::volume) == 3.17e-18);
    CHECK(parse_quantity("-14 fJ/T", Dimension::moment) == -14e-15);
    CHECK(parse_quantity("1.5e-3 mT", Dimension::field) == 1.5e-6);
    CHECK(parse_quantity("90 deg", Dimension::angle) == doctest::Approx(pi / 2));
    CHECK_THROWS_AS(parse_quantity("0.8", Dimension::field), ConfigError);
    CHECK_THROWS_AS(parse_quantity("0.8 um", Dimension::field), ConfigError);
    CHECK_THROWS_AS(parse_quantity("mT", Dimension::field), ConfigError);
    CHECK_THROWS_AS(parse_quantity("4 Hz", Dimension::none), ConfigError);
}

TEST_CASE("config parses sections and reports errors with line numbers") {
    const RunConfig c = parse(
        "# comment\n"
        "[experiment]\n"
        "b_dc = 0.9 mT   # trailing comment\n"
        "ac_frequency = 250 kHz\n"
        "applied_fields = 1 mT, 4 mT\n"
        "[scene]\n"
        "rows = 2\n");
    CHECK(c.experiment.b_dc == doctest::Approx(0.9e-3));
    CHECK(c.experiment.ac.frequency == doctest::Approx(250e3));
    CHECK(c.applied_fields.size() == 2);
    CHECK(c.scene.rows == 2);
    CHECK(c.scene.cols == 3);

    CHECK(error_line("[scene]\nrows = 2\nbogus = 1\n") == 3);
    CHECK(error_line("[experiment]\n\nb_dc = 0.8\n") == 3);
    CHECK(error_line("[nowhere]\n") == 1);
    CHECK(error_line("rows = 3\n") == 1);
    CHECK(error_line("[scene]\nrows = 3\nrows = 4\n") == 3);
    CHECK(error_line("[scene]\nrows three\n") == 2);
    CHECK(error_line("[experiment]\nsequence = xy16\n") == 2);
    CHECK(error_line("[analysis]\ndelta_points = 4\n") == 2);
    CHECK_THROWS_AS(load_config("/nonexistent/qdm.cfg"), ConfigError);
}

TEST_CASE("rendered config parses back to the same values") {
    RunConfig c = default_config();
    c.experiment.b_dc = 0.8123456789012345e-3;
    c.scene.chi_imag = 13.8;
    c.analysis.array_reference = false;
    c.experiment.seed = 123456789012345ull;
    c.applied_fields = {0.5e-3, 1.7e-3};
    const std::string text = render_config(c);
    const RunConfig back = parse(text);
    CHECK(back.experiment.b_dc == c.experiment.b_dc);
    CHECK(back.scene.chi_imag == c.scene.chi_imag);
    CHECK(back.analysis.array_reference == false);
    CHECK(back.experiment.seed == c.experiment.seed);
    CHECK(back.applied_fields == c.applied_fields);
    CHECK(render_config(back) == text);
}

TEST_CASE("map files round trip bit for bit") {
    const FieldMap m = random_map(7, 5);
    const auto bytes = encode_map(m);
    CHECK(bytes.size() == map_header_size + 7 * 5 * 8);
    const FieldMap back = decode_map(bytes);
    CHECK(back.width == 7);
    CHECK(back.height == 5);
    CHECK(back.pixel_size == m.pixel_size);
    CHECK(back.standoff == m.standoff);
    CHECK(back.axis == MapAxis::y);
    CHECK(std::memcmp(back.values.data(), m.values.data(), m.values.size() * 8) == 0);
    CHECK(std::signbit(back.values[0]));

    const auto dir = scratch("maps");
    write_map((dir / "a.qdm").string(), m);
    CHECK(read_bytes((dir / "a.qdm").string()) == bytes);
}

TEST_CASE("corrupt map files name the failing field") {
    const auto good = encode_map(random_map(4, 3));
    auto field_of = [](std::vector<std::uint8_t> b) -> std::string {
        try {
            decode_map(b);
        } catch (const FormatError& e) {
            return e.field();
        }
        return "";
    };
    auto b = good;
    b[0] = 'X';
    CHECK(field_of(b) == "magic");
    b = good;
    b[4] = 2;
    CHECK(field_of(b) == "version");
    b = good;
    std::memset(b.data() + 8, 0, 4);
    CHECK(field_of(b) == "width");
    b = good;
    std::memset(b.data() + 12, 0, 4);
    CHECK(field_of(b) == "height");
    b = good;
    std::memset(b.data() + 16, 0, 8);
    CHECK(field_of(b) == "pixel_size");
    b = good;
    b[32] = 9;
    CHECK(field_of(b) == "axis");
    b = good;
    b.resize(b.size() - 3);
    CHECK(field_of(b) == "payload");
    b = good;
    b.push_back(0);
    CHECK(field_of(b) == "payload");
    b = good;
    b.resize(10);  // inside the width field
    CHECK(field_of(b) == "width");
    b = good;
    const double nan = std::nan("");
    std::memcpy(b.data() + map_header_size, &nan, 8);
    CHECK(field_of(b) == "payload");
    CHECK_THROWS_AS(read_map("/nonexistent/a.qdm"), DataError);
}

TEST_CASE("phase-sweep cubes round trip through manifest and data file") {
    PhaseSweepCube cube;
    cube.width = 5;
    cube.height = 4;
    cube.pixel_size = 1e-6;
    cube.standoff = 6e-6;
    cube.deltas = delta_grid(9);
    cube.signal.resize(cube.pixels() * 9);
    CounterRng r(5);
    for (double& v : cube.signal) v = r.uniform();
    CubeManifest info;
    info.kappa = 1.49e6;
    info.ac_amplitude = 3.5e-6;
    info.ac_frequency = 3e5;
    info.signal_sigma = 0.26;
    const auto dir = scratch("cube");
    write_cube(dir.string(), "c", cube, info);
    CubeManifest got;
    const PhaseSweepCube back = read_cube((dir / "c.manifest").string(), &got);
    CHECK(back.width == 5);
    CHECK(back.height == 4);
    CHECK(back.deltas == cube.deltas);
    CHECK(back.signal == cube.signal);
    CHECK(got.kappa == info.kappa);
    CHECK(got.signal_sigma == info.signal_sigma);

    // a truncated data file is a format error
    const fs::path data = dir / got.data_file;
    fs::resize_file(data, fs::file_size(data) - 8);
    CHECK_THROWS_AS(read_cube((dir / "c.manifest").string()), FormatError);
}

TEST_CASE("report tables keep numbers exact") {
    ReportTable t({"name", "value", "count"}, {"", "T", ""});
    const double x = 0.1 + 0.2;
    t.add_row({std::string("a"), x, 3LL});
    t.add_row({std::string("b"), -1.234567890123456789e-300, 0LL});
    std::stringstream ss;
    t.write(ss);
    const ReportTable back = ReportTable::parse(ss);
    CHECK(back.rows() == 2);
    CHECK(back.units()[1] == "T");
    CHECK(back.number(0, "value") == x);
    CHECK(back.number(1, "value") == -1.234567890123456789e-300);
    CHECK(back.cell(0, 2) == "3");
    CHECK_THROWS(back.column_index("nope"));
    CHECK_THROWS(t.add_row({1.0}));
}

TEST_CASE("heatmap header and scale file") {
    FieldMap m(GridSpec{3, 2, 1e-6}, 6e-6, MapAxis::nv);
    m.values = {-1e-6, 0.0, 1e-6, 2e-6, 3e-6, -1e-6};
    const auto dir = scratch("pgm");
    const std::string path = (dir / "m.pgm").string();
    const HeatmapScale s = write_heatmap(path, m);
    CHECK(s.min == -1e-6);
    CHECK(s.max == 3e-6);
    const auto bytes = read_bytes(path);
    const std::string header = "P5\n3 2\n65535\n";
    REQUIRE(bytes.size() == header.size() + 12);
    CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
    auto gray = [&](int i) { return bytes[header.size() + 2 * i] * 256 + bytes[header.size() + 2 * i + 1]; };
    CHECK(gray(0) == 0);
    CHECK(gray(4) == 65535);
    CHECK(gray(2) == 32768);  // 0.5 * 65535 rounds up
    std::ifstream side(path + ".scale.txt");
    std::stringstream text;
    text << side.rdbuf();
    CHECK(text.str().find("value_max = 3.0000000000000001e-06 T") != std::string::npos);
}

TEST_CASE("shipped example config equals the built-in defaults") {
    const RunConfig c = load_config(QDM_SOURCE_DIR "/configs/default.cfg");
    CHECK(render_config(c) == render_config(default_config()));
}
