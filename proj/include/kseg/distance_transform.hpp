#pragma once

#include "kseg/raster.hpp"

#include <vector>

namespace kseg {

/// Exact squared Euclidean distance from each pixel to the nearest
/// foreground pixel of `m` (Felzenszwalb-Huttenlocher lower envelope).
/// Pixels are +inf when `m` has no foreground.
std::vector<double> squared_distance_to_foreground(const BinaryMask& m);

}  // namespace kseg
