#pragma once

#include <string>

#include "qdm/field_map.hpp"

namespace qdm {

struct HeatmapScale {
    double min = 0.0;  // value drawn as gray 0
    double max = 0.0;  // value drawn as gray 65535
};

// 16-bit binary PGM with a linear min->max mapping, plus "<path>.scale.txt"
// recording the mapping so gray levels can be turned back into values.
HeatmapScale write_heatmap(const std::string& path, const FieldMap& map, const std::string& unit = "T");

}  // namespace qdm
