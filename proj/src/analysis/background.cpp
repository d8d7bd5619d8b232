#include <cmath>
#include <vector>

#include "qdm/analysis.hpp"

namespace qdm {

namespace {

// half-sample mirror: -1 -> 0, n -> n-1
int mirror(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

std::vector<double> taps(const GaussianKernel& k) {
    const int radius = k.window / 2;
    std::vector<double> w(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        w[i + radius] = std::exp(-0.5 * (i * i) / (k.sigma * k.sigma));
        sum += w[i + radius];
    }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace

FieldMap gaussian_blur(const FieldMap& map, const GaussianKernel& k) {
    map.validate();
    if (k.window < 1 || !(k.sigma > 0.0)) throw InvalidArgument("Gaussian kernel needs a positive window and sigma");
    if (k.window >= std::min(map.width, map.height))
        throw InvalidArgument("Gaussian kernel window must be smaller than the map");
    const auto w = taps(k);
    const int radius = k.window / 2;
    FieldMap tmp = map;
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += w[i + radius] * map.at(mirror(c + i, map.width), r);
            tmp.at(c, r) = acc;
        }
    }
    FieldMap out = map;
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += w[i + radius] * tmp.at(c, mirror(r + i, map.height));
            out.at(c, r) = acc;
        }
    }
    return out;
}

FieldMap background_subtract(const FieldMap& map, const GaussianKernel& k) {
    map.validate();
    // the blur reproduces a constant only up to rounding, so remove one first;
    // this makes a uniform map come out exactly zero
    const double offset = map.values.front();
    FieldMap shifted = map;
    for (double& v : shifted.values) v -= offset;
    const FieldMap blur = gaussian_blur(shifted, k);
    for (std::size_t i = 0; i < shifted.values.size(); ++i) shifted.values[i] -= blur.values[i];
    return shifted;
}

}  // namespace qdm
