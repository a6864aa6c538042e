#pragma once

#include "kseg/raster.hpp"

#include <cstdint>
#include <string_view>

namespace kseg {

enum class PhantomPreset { CleanEllipse, WeakBoundary, HighSpeckle };

std::string_view to_string(PhantomPreset preset);
PhantomPreset parse_preset(std::string_view text);

/// Star-shaped region: rotated ellipse with an optional Gaussian dent
/// (kidney hilum) in its polar radius.
struct PhantomShape {
    double cx = 128.0;
    double cy = 128.0;
    double semi_a = 40.0;
    double semi_b = 32.0;
    double rotation = 0.0;
    double dent_depth = 0.0;   // fraction of the radius removed at the dent centre
    double dent_angle = 0.0;
    double dent_width = 0.45;  // radians (Gaussian std)

    /// Boundary radius along polar angle phi (image coordinates).
    double radius_at(double phi) const;
    bool inside(double x, double y) const;
};

struct PhantomSpec {
    PhantomPreset preset = PhantomPreset::CleanEllipse;
    std::uint64_t seed = 0;
    int size = 256;
    double interior = 0.35;
    double exterior = 0.65;
    /// 0 = noiseless; 1 = fully developed multiplicative speckle.
    double speckle = 0.0;
    bool bean = false;
    /// Angular width of the zero-contrast arc (0 disables it).
    double gap_degrees = 0.0;
    /// How far outside the boundary the gap's exterior takes interior intensity.
    double gap_depth = 25.0;

    /// Defaults for a preset; the seed also draws shape and gap placement.
    static PhantomSpec for_preset(PhantomPreset preset, std::uint64_t seed);
};

struct Phantom {
    GrayImage image;
    BinaryMask truth;
    PhantomSpec spec;
    PhantomShape shape;
    double gap_center = 0.0;  // radians, meaningful when spec.gap_degrees > 0
};

Phantom make_phantom(PhantomPreset preset, std::uint64_t seed);
Phantom make_phantom(const PhantomSpec& spec);

/// `count` points on the boundary pulled `inset` pixels toward the centre.
Contour phantom_init_points(const Phantom& phantom, int count = 8, double inset = 5.0);

/// Independent uniform +-amplitude displacement of every coordinate, clamped
/// to the image.
Contour jitter_points(const Contour& c, double amplitude, std::uint64_t seed, int width, int height);

}  // namespace kseg
