#include "qdm/io/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>

#include "qdm/common.hpp"

namespace qdm {

HeatmapScale write_heatmap(const std::string& path, const FieldMap& map, const std::string& unit) {
    map.validate();
    const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
    HeatmapScale s{*lo, *hi};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "P5\n" << map.width << " " << map.height << "\n65535\n";
    const double span = s.max - s.min;
    for (double v : map.values) {
        const double g = span > 0.0 ? std::round(65535.0 * (v - s.min) / span) : 0.0;
        const auto gray = static_cast<std::uint16_t>(std::clamp(g, 0.0, 65535.0));
        // PGM stores 16-bit samples most significant byte first
        const char b[2] = {static_cast<char>(gray >> 8), static_cast<char>(gray & 0xff)};
        out.write(b, 2);
    }
    if (!out) throw DataError("write failed for '" + path + "'");

    std::ofstream side(path + ".scale.txt", std::ios::trunc);
    if (!side) throw DataError("cannot write heatmap scale file");
    side << std::setprecision(17);
    side << "mapping = linear\n";
    side << "gray_min = 0\n";
    side << "gray_max = 65535\n";
    side << "value_min = " << s.min << " " << unit << "\n";
    side << "value_max = " << s.max << " " << unit << "\n";
    side << "# value = value_min + gray / 65535 * (value_max - value_min)\n";
    return s;
}

}  // namespace qdm
