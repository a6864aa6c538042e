#pragma once

#include "kseg/raster.hpp"

#include <complex>
#include <span>
#include <vector>

namespace kseg {

struct GaborParams {
    int num_scales = 3;
    int num_directions = 8;
    /// One wavelength per scale, strictly increasing, >= 2 px. Empty means
    /// the default octave schedule from `base_wavelength`.
    std::vector<double> wavelengths;
    double base_wavelength = 4.0;
    /// sigma_x = sigma_y = sigma_ratio * wavelength
    double sigma_ratio = 0.56;
    double kernel_halfwidth_sigmas = 3.0;

    /// Wavelengths actually used (explicit list or base * 2^(i-1)).
    std::vector<double> resolved_wavelengths() const;
    /// Throws Configuration on violated invariants.
    void validate() const;
};

struct GaborKernel {
    int scale = 0;
    int direction = 0;
    double wavelength = 0.0;
    double theta = 0.0;
    double sigma = 0.0;
    int half_width = 0;
    /// Row-major (2*half_width+1)^2 samples, offset (x,y) at
    /// [(y+h)*side + (x+h)].
    std::vector<std::complex<double>> values;

    int side() const noexcept { return 2 * half_width + 1; }
    std::complex<double> at(int x, int y) const {
        return values[static_cast<std::size_t>((y + half_width) * side() + (x + half_width))];
    }
};

/// Kernel grid indexed [scale * num_directions + direction].
struct FilterBank {
    int num_scales = 0;
    int num_directions = 0;
    std::vector<GaborKernel> kernels;

    const GaborKernel& kernel(int scale, int direction) const {
        return kernels[static_cast<std::size_t>(scale * num_directions + direction)];
    }
    int max_side() const;
};

/// |f_{i,j}(p)| for every scale i, direction j and pixel p.
class ResponseStack {
public:
    ResponseStack(int num_scales, int num_directions, int width, int height);

    int num_scales() const noexcept { return scales_; }
    int num_directions() const noexcept { return directions_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    double at(int scale, int direction, int x, int y) const { return data_[offset(scale, direction) + pixel(x, y)]; }
    double& at(int scale, int direction, int x, int y) { return data_[offset(scale, direction) + pixel(x, y)]; }

    std::span<double> plane(int scale, int direction) {
        return std::span(data_).subspan(offset(scale, direction), plane_size());
    }
    std::span<const double> plane(int scale, int direction) const {
        return std::span(data_).subspan(offset(scale, direction), plane_size());
    }

private:
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    std::size_t offset(int s, int d) const noexcept {
        return (static_cast<std::size_t>(s) * directions_ + d) * plane_size();
    }
    std::size_t pixel(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }

    int scales_;
    int directions_;
    int width_;
    int height_;
    std::vector<double> data_;
};

/// Row-major values in [0,1] (min-max normalized; constant maps are all 0).
struct FeatureMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

FilterBank build_bank(const GaborParams& params);

/// Complex correlation with replicate padding, magnitude per pixel. Throws
/// Configuration if any kernel side exceeds the image width or height.
ResponseStack convolve_bank(const GrayImage& img, const FilterBank& bank);

/// Lowest direction index attaining the maximum magnitude at one scale.
int scale_argmax(const ResponseStack& stack, int scale, int x, int y);

/// Dominant direction set at one pixel: per-scale argmax (lowest index on
/// ties), per-direction win counts, then all directions with at least half
/// the best count. Indices are 0-based.
std::vector<int> dominant_directions(const ResponseStack& stack, int x, int y);

/// Raw fused value (1/m) * sum_i sum_{j in dominant set} |f_ij(p)| per pixel.
std::vector<double> fuse_raw(const ResponseStack& stack);

/// fuse_raw followed by min-max normalization to [0,1].
FeatureMap fuse(const ResponseStack& stack);

FeatureMap normalize_min_max(int width, int height, std::vector<double> raw);

/// build_bank + convolve_bank + fuse.
FeatureMap gabor_feature_map(const GrayImage& img, const GaborParams& params);

}  // namespace kseg
