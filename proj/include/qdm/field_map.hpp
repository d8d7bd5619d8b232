#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qdm {

enum class MapAxis : std::uint8_t { nv = 0, x = 1, y = 2, z = 3 };

// Pixel (c, r) sits at x = (c - width/2)*pixel_size, y = (r - height/2)*pixel_size
// (integer division), so the scene origin falls on a pixel center.
// Row index grows with +y; row 0 is the top row of the stored image.
struct GridSpec {
    int width = 70;
    int height = 70;
    double pixel_size = 1e-6;

    double x_of(int c) const { return (c - width / 2) * pixel_size; }
    double y_of(int r) const { return (r - height / 2) * pixel_size; }
    double col_of(double x) const { return x / pixel_size + width / 2; }
    double row_of(double y) const { return y / pixel_size + height / 2; }
    std::size_t size() const { return static_cast<std::size_t>(width) * height; }
    void validate() const;
};

struct FieldMap {
    int width = 0;
    int height = 0;
    double pixel_size = 1e-6;
    double standoff = 0.0;
    MapAxis axis = MapAxis::nv;
    std::vector<double> values;

    FieldMap() = default;
    FieldMap(const GridSpec& g, double standoff, MapAxis axis, double fill = 0.0);

    GridSpec grid() const { return {width, height, pixel_size}; }
    double& at(int c, int r) { return values[static_cast<std::size_t>(r) * width + c]; }
    double at(int c, int r) const { return values[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return values.size(); }
    void validate() const;  // dimensions > 0, payload size, finite values
};

// Per-pixel phase sweeps: signal[pixel * deltas.size() + j]
struct PhaseSweepCube {
    int width = 0;
    int height = 0;
    double pixel_size = 1e-6;
    double standoff = 0.0;
    std::vector<double> deltas;
    std::vector<double> signal;

    GridSpec grid() const { return {width, height, pixel_size}; }
    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
    const double* sweep(std::size_t pixel) const { return signal.data() + pixel * deltas.size(); }
    double* sweep(std::size_t pixel) { return signal.data() + pixel * deltas.size(); }
};

}  // namespace qdm
