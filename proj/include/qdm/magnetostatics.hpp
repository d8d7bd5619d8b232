#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qdm/common.hpp"
#include "qdm/field_map.hpp"

namespace qdm {

using Vec3 = Eigen::Vector3d;

// Flat cylinder with its symmetry axis along z, uniformly magnetized.
struct CylinderMagnet {
    Vec3 center = Vec3::Zero();
    double diameter = 5.8e-6;
    double thickness = 30e-9;
    Vec3 moment = Vec3::Zero();  // J/T

    double volume() const { return pi * 0.25 * diameter * diameter * thickness; }
    Vec3 magnetization() const;  // A/m
    void validate() const;
};

struct NVFrame {
    Vec3 axis{0.0, 0.816496580927726, 0.5773502691896258};  // (0, sqrt(2/3), sqrt(1/3))

    static NVFrame from_tilt(double theta);  // (0, sin theta, cos theta)
    double project(const Vec3& B) const { return axis.dot(B); }
    Vec3 perpendicular(const Vec3& B) const { return B - axis.dot(B) * axis; }
};

struct FieldFlags {
    bool inside = false;  // observation point inside the body
    bool edge = false;    // on the singular rim, evaluated by offset averaging
};

Vec3 dipole_field(const Vec3& moment, const Vec3& source, const Vec3& obs);

// Bulirsch's generalized complete elliptic integral
// cel(kc, p, a, b) = int_0^{pi/2} (a cos^2 + b sin^2) / ((cos^2 + p sin^2) sqrt(cos^2 + kc^2 sin^2)) dphi
double cel(double kc, double p, double a, double b);

Vec3 cylinder_field(const CylinderMagnet& magnet, const Vec3& obs, FieldFlags* flags = nullptr);

double nv_projection(const Vec3& B, const NVFrame& frame = {});

FieldMap synth_field_map(const std::vector<CylinderMagnet>& magnets, const GridSpec& grid, double standoff,
                         MapAxis axis, const NVFrame& frame = {}, int threads = 1, Diagnostics* diag = nullptr);

struct LinecutOptions {
    double angle = pi / 2;          // cut direction in the plane, +y by default
    double search_radius = 12.5e-6; // extrema are looked for within this distance of the center
};

struct LinecutResult {
    double y_pkpk = 0.0;  // m
    double slope = 0.0;   // T/m, from the positive to the negative extremum
    double pos_at = 0.0;  // signed positions along the cut relative to the center
    double neg_at = 0.0;
    double pos_value = 0.0;
    double neg_value = 0.0;
};

LinecutResult linecut_peak_to_peak(const FieldMap& map, double cx, double cy, const LinecutOptions& opt = {});

struct StandoffFit {
    double intercept = 0.0;  // m
    double slope = 0.0;
    double residual = 0.0;   // m, RMS
    double max_residual = 0.0;
    std::vector<double> z0;
    std::vector<double> y_pkpk;

    double line_standoff(double y_pkpk) const { return (y_pkpk - intercept) / slope; }
    // interpolates the calibration points where they are monotone and cover y_pkpk,
    // otherwise inverts the straight line
    double standoff_for(double y_pkpk) const;
};

struct CalibrationGeometry {
    double diameter = 5.8e-6;
    double thickness = 30e-9;
    double reference_moment = 107e-15;  // J/T, in-plane along +y
    GridSpec grid{};
    NVFrame frame{};
    LinecutOptions linecut{};
    std::function<FieldMap(const FieldMap&)> preprocess;  // e.g. background removal applied to measured maps
    int threads = 1;
    // optional array layout: every listed position carries the reference moment and the
    // cut is taken at (cx, cy), so neighbours and map edges bias reference and data alike
    std::vector<Vec3> layout;
    double cx = 0.0, cy = 0.0;
};

StandoffFit standoff_calibration(const CalibrationGeometry& geom, const std::vector<double>& z0_grid);

// slope of the reference magnet's line-cut at the given standoff
double reference_slope(const CalibrationGeometry& geom, double standoff);

double moment_from_slope(double slope, double standoff, const CalibrationGeometry& geom);

}  // namespace qdm
