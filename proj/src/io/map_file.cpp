#include "qdm/io/map_file.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qdm/common.hpp"

namespace qdm {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.insert(out.end(), b, b + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t& off, const char* field) {
    if (off + sizeof(T) > in.size()) throw FormatError(field, "file truncated");
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, in.data() + off, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    off += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_map(const FieldMap& map) {
    map.validate();
    std::vector<std::uint8_t> out;
    out.reserve(map_header_size + map.values.size() * 8);
    for (char ch : {'Q', 'D', 'M', '1'}) out.push_back(static_cast<std::uint8_t>(ch));
    put<std::uint32_t>(out, map_file_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(map.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(map.height));
    put<double>(out, map.pixel_size);
    put<double>(out, map.standoff);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(map.axis));
    for (double v : map.values) put<double>(out, v);
    return out;
}

FieldMap decode_map(const std::vector<std::uint8_t>& in, std::size_t& off) {
    if (off + 4 > in.size()) throw FormatError("magic", "file truncated");
    if (std::memcmp(in.data() + off, "QDM1", 4) != 0) throw FormatError("magic", "expected \"QDM1\"");
    off += 4;
    const auto version = get<std::uint32_t>(in, off, "version");
    if (version != map_file_version) throw FormatError("version", "unsupported version " + std::to_string(version));
    FieldMap m;
    const auto w = get<std::uint32_t>(in, off, "width");
    if (w == 0 || w > (1u << 20)) throw FormatError("width", "invalid value " + std::to_string(w));
    const auto h = get<std::uint32_t>(in, off, "height");
    if (h == 0 || h > (1u << 20)) throw FormatError("height", "invalid value " + std::to_string(h));
    m.width = static_cast<int>(w);
    m.height = static_cast<int>(h);
    m.pixel_size = get<double>(in, off, "pixel_size");
    if (!(m.pixel_size > 0.0) || !std::isfinite(m.pixel_size)) throw FormatError("pixel_size", "must be positive");
    m.standoff = get<double>(in, off, "standoff");
    if (!std::isfinite(m.standoff)) throw FormatError("standoff", "must be finite");
    const auto axis = get<std::uint8_t>(in, off, "axis");
    if (axis > 3) throw FormatError("axis", "invalid code " + std::to_string(axis));
    m.axis = static_cast<MapAxis>(axis);
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (off + n * 8 > in.size())
        throw FormatError("payload", "expected " + std::to_string(n * 8) + " bytes, found " + std::to_string(in.size() - off));
    m.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.values[i] = get<double>(in, off, "payload");
        if (!std::isfinite(m.values[i])) throw FormatError("payload", "non-finite value at index " + std::to_string(i));
    }
    return m;
}

FieldMap decode_map(const std::vector<std::uint8_t>& bytes) {
    std::size_t off = 0;
    FieldMap m = decode_map(bytes, off);
    if (off != bytes.size()) throw FormatError("payload", "trailing bytes after the payload");
    return m;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path + "'");
}

void write_map(const std::string& path, const FieldMap& map) { write_bytes(path, encode_map(map)); }

FieldMap read_map(const std::string& path) { return decode_map(read_bytes(path)); }

void write_cube(const std::string& dir, const std::string& stem, const PhaseSweepCube& cube, const CubeManifest& info) {
    const std::size_t n = cube.deltas.size();
    if (cube.signal.size() != cube.pixels() * n) throw InvalidArgument("cube payload does not match its dimensions");
    std::vector<std::uint8_t> bytes;
    for (std::size_t j = 0; j < n; ++j) {
        FieldMap m(cube.grid(), cube.standoff, MapAxis::nv);
        for (std::size_t p = 0; p < cube.pixels(); ++p) m.values[p] = cube.signal[p * n + j];
        const auto b = encode_map(m);
        bytes.insert(bytes.end(), b.begin(), b.end());
    }
    const std::string data_name = stem + ".qdmc";
    write_bytes((std::filesystem::path(dir) / data_name).string(), bytes);

    std::ofstream man(std::filesystem::path(dir) / (stem + ".manifest"));
    if (!man) throw DataError("cannot write cube manifest");
    man << std::setprecision(17);
    man << "# phase-sweep cube: one map file per delta, concatenated; values are normalized contrast\n";
    man << "data = " << data_name << "\n";
    man << "maps = " << n << "\n";
    man << "kappa = " << info.kappa << " rad/T\n";
    man << "ac_amplitude = " << info.ac_amplitude << " T\n";
    man << "ac_frequency = " << info.ac_frequency << " Hz\n";
    man << "signal_sigma = " << info.signal_sigma << "\n";
    for (std::size_t j = 0; j < n; ++j) man << "delta = " << cube.deltas[j] << " rad\n";
}

PhaseSweepCube read_cube(const std::string& manifest_path, CubeManifest* info_out) {
    std::ifstream man(manifest_path);
    if (!man) throw DataError("cannot open cube manifest '" + manifest_path + "'");
    CubeManifest info;
    std::size_t maps = 0;
    std::string line;
    int line_no = 0;
    auto number = [&](const std::string& v) {
        std::istringstream is(v);
        double x;
        if (!(is >> x)) throw DataError("manifest line " + std::to_string(line_no) + ": expected a number");
        return x;
    };
    while (std::getline(man, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("manifest line " + std::to_string(line_no) + ": expected key = value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(key.find_last_not_of(' ') + 1);
        val.erase(0, val.find_first_not_of(' '));
        if (key == "data") info.data_file = val;
        else if (key == "maps") maps = static_cast<std::size_t>(number(val));
        else if (key == "kappa") info.kappa = number(val);
        else if (key == "ac_amplitude") info.ac_amplitude = number(val);
        else if (key == "ac_frequency") info.ac_frequency = number(val);
        else if (key == "signal_sigma") info.signal_sigma = number(val);
        else if (key == "delta") info.deltas.push_back(number(val));
        else throw DataError("manifest line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (info.data_file.empty()) throw DataError("manifest does not name a data file");
    if (maps != info.deltas.size()) throw DataError("manifest map count does not match its delta list");

    const auto dir = std::filesystem::path(manifest_path).parent_path();
    const auto bytes = read_bytes((dir / info.data_file).string());
    PhaseSweepCube cube;
    cube.deltas = info.deltas;
    std::size_t off = 0;
    for (std::size_t j = 0; j < maps; ++j) {
        const FieldMap m = decode_map(bytes, off);
        if (j == 0) {
            cube.width = m.width;
            cube.height = m.height;
            cube.pixel_size = m.pixel_size;
            cube.standoff = m.standoff;
            cube.signal.assign(cube.pixels() * maps, 0.0);
        } else if (m.width != cube.width || m.height != cube.height) {
            throw FormatError("width", "cube maps differ in size");
        }
        for (std::size_t p = 0; p < cube.pixels(); ++p) cube.signal[p * maps + j] = m.values[p];
    }
    if (off != bytes.size()) throw FormatError("payload", "trailing bytes after the last cube map");
    if (info_out) *info_out = info;
    return cube;
}

}  // namespace qdm
