#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdm/common.hpp"
#include "qdm/field_map.hpp"

namespace qdm {

// Binary layout, little-endian:
//   "QDM1" | u32 version=1 | u32 width | u32 height | f64 pixel_size | f64 standoff | u8 axis
//   | width*height f64, row-major from the top-left pixel
inline constexpr std::uint32_t map_file_version = 1;
inline constexpr std::size_t map_header_size = 33;

// thrown for corrupt or truncated files; field() names the failing header field
struct FormatError : DataError {
    FormatError(const std::string& field, const std::string& msg)
        : DataError("map file field '" + field + "': " + msg), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

std::vector<std::uint8_t> encode_map(const FieldMap& map);
// decodes one map starting at offset; advances offset past it
FieldMap decode_map(const std::vector<std::uint8_t>& bytes, std::size_t& offset);
FieldMap decode_map(const std::vector<std::uint8_t>& bytes);

void write_map(const std::string& path, const FieldMap& map);
FieldMap read_map(const std::string& path);

std::vector<std::uint8_t> read_bytes(const std::string& path);
void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

// Phase-sweep cube: one MapFile per delta, concatenated, plus a text manifest
// listing the deltas and the sensing constants needed to analyse it.
struct CubeManifest {
    std::string data_file;
    std::vector<double> deltas;  // rad
    double kappa = 0.0;          // rad/T
    double ac_amplitude = 0.0;   // T
    double ac_frequency = 0.0;   // Hz
    double signal_sigma = 0.0;
};

void write_cube(const std::string& dir, const std::string& stem, const PhaseSweepCube& cube, const CubeManifest& info);
PhaseSweepCube read_cube(const std::string& manifest_path, CubeManifest* info = nullptr);

}  // namespace qdm
