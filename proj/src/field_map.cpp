#include "qdm/field_map.hpp"

#include <cmath>
#include <string>

#include "qdm/common.hpp"

namespace qdm {

void GridSpec::validate() const {
    if (width <= 0 || height <= 0) throw InvalidArgument("grid dimensions must be positive");
    if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) throw InvalidArgument("pixel size must be positive");
}

FieldMap::FieldMap(const GridSpec& g, double standoff_, MapAxis axis_, double fill)
    : width(g.width), height(g.height), pixel_size(g.pixel_size), standoff(standoff_), axis(axis_),
      values(g.size(), fill) {
    g.validate();
}

void FieldMap::validate() const {
    if (width <= 0 || height <= 0) throw DataError("map dimensions must be positive");
    if (values.size() != static_cast<std::size_t>(width) * height)
        throw DataError("map payload has " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(static_cast<std::size_t>(width) * height));
    for (double v : values)
        if (!std::isfinite(v)) throw DataError("map contains non-finite values");
}

}  // namespace qdm
