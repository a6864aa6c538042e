#include "kseg/phantom.hpp"

#include "kseg/error.hpp"
#include "kseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kseg {

std::string_view to_string(PhantomPreset preset) {
    switch (preset) {
        case PhantomPreset::CleanEllipse: return "clean-ellipse";
        case PhantomPreset::WeakBoundary: return "weak-boundary";
        case PhantomPreset::HighSpeckle: return "high-speckle";
    }
    return "clean-ellipse";
}

PhantomPreset parse_preset(std::string_view text) {
    if (text == "clean-ellipse") return PhantomPreset::CleanEllipse;
    if (text == "weak-boundary") return PhantomPreset::WeakBoundary;
    if (text == "high-speckle") return PhantomPreset::HighSpeckle;
    throw Error(ErrorCode::Validation, "unknown phantom preset: " + std::string(text), "preset");
}

namespace {

double wrap_angle(double a) {
    a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a - std::numbers::pi;
}

}  // namespace

double PhantomShape::radius_at(double phi) const {
    const double t = phi - rotation;
    const double c = std::cos(t);
    const double s = std::sin(t);
    const double r = semi_a * semi_b / std::sqrt((semi_b * c) * (semi_b * c) + (semi_a * s) * (semi_a * s));
    if (dent_depth <= 0.0) return r;
    const double d = wrap_angle(phi - dent_angle);
    return r * (1.0 - dent_depth * std::exp(-d * d / (2.0 * dent_width * dent_width)));
}

bool PhantomShape::inside(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double rho = std::hypot(dx, dy);
    if (rho == 0.0) return true;
    return rho <= radius_at(std::atan2(dy, dx));
}

PhantomSpec PhantomSpec::for_preset(PhantomPreset preset, std::uint64_t seed) {
    PhantomSpec spec;
    spec.preset = preset;
    spec.seed = seed;
    switch (preset) {
        case PhantomPreset::CleanEllipse:
            spec.speckle = 0.3;
            break;
        case PhantomPreset::WeakBoundary:
            spec.speckle = 1.5;
            spec.bean = true;
            spec.gap_degrees = 40.0;
            break;
        case PhantomPreset::HighSpeckle:
            spec.speckle = 2.25;
            spec.bean = true;
            break;
    }
    return spec;
}

Phantom make_phantom(PhantomPreset preset, std::uint64_t seed) {
    return make_phantom(PhantomSpec::for_preset(preset, seed));
}

Phantom make_phantom(const PhantomSpec& spec) {
    if (spec.size < 64) throw Error(ErrorCode::Configuration, "phantom size must be >= 64");
    if (!(spec.speckle >= 0.0)) throw Error(ErrorCode::Configuration, "speckle scale must be >= 0");
    const int n = spec.size;

    Phantom ph;
    ph.spec = spec;
    Rng shape_rng(derive_seed(spec.seed, 1));
    auto& sh = ph.shape;
    const double scale = n / 256.0;
    sh.semi_a = shape_rng.uniform(30.0, 45.0) * scale;
    sh.semi_b = shape_rng.uniform(30.0, 45.0) * scale;
    sh.rotation = shape_rng.uniform(0.0, std::numbers::pi);
    sh.cx = 0.5 * (n - 1) + shape_rng.uniform(-10.0, 10.0) * scale;
    sh.cy = 0.5 * (n - 1) + shape_rng.uniform(-10.0, 10.0) * scale;
    const double dent_angle = shape_rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double gap_center = shape_rng.uniform(-std::numbers::pi, std::numbers::pi);
    if (spec.bean) {
        sh.dent_depth = 0.12;
        sh.dent_angle = dent_angle;
    }
    ph.gap_center = gap_center;

    ph.truth = BinaryMask(n, n);
    std::vector<double> base(static_cast<std::size_t>(n) * n);
    const double half_gap = spec.gap_degrees * std::numbers::pi / 360.0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double dx = x - sh.cx;
            const double dy = y - sh.cy;
            const double rho = std::hypot(dx, dy);
            const double phi = std::atan2(dy, dx);
            const double boundary = sh.radius_at(phi);
            const bool in = rho <= boundary;
            ph.truth.set(x, y, in);
            double v = in ? spec.interior : spec.exterior;
            if (!in && half_gap > 0.0 && std::abs(wrap_angle(phi - gap_center)) <= half_gap &&
                rho - boundary <= spec.gap_depth) {
                v = spec.interior;
            }
            base[static_cast<std::size_t>(y) * n + x] = v;
        }
    }

    if (spec.speckle > 0.0) {
        // Fully developed speckle: intensity of a circular complex Gaussian
        // field is exponential (squared Rayleigh) with unit mean.
        Rng speckle_rng(derive_seed(spec.seed, 2));
        std::vector<double> raw(base.size());
        for (auto& v : raw) {
            const double re = speckle_rng.normal();
            const double im = speckle_rng.normal();
            v = 0.5 * (re * re + im * im);
        }
        std::vector<double> eta(base.size());
        double total = 0.0;
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = std::clamp(x + dx, 0, n - 1);
                        const int yy = std::clamp(y + dy, 0, n - 1);
                        acc += raw[static_cast<std::size_t>(yy) * n + xx];
                    }
                }
                eta[static_cast<std::size_t>(y) * n + x] = acc / 9.0;
                total += acc / 9.0;
            }
        }
        const double mean = total / static_cast<double>(eta.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            const double e = 1.0 + spec.speckle * (eta[i] / mean - 1.0);
            base[i] = std::clamp(base[i] * e, 0.0, 1.0);
        }
    }
    ph.image = GrayImage(n, n, std::move(base));
    return ph;
}

Contour phantom_init_points(const Phantom& phantom, int count, double inset) {
    if (count < 3) throw Error(ErrorCode::Validation, "need at least 3 initialization points");
    Contour c;
    const auto& sh = phantom.shape;
    const double offset = 0.25 * std::numbers::pi / count;
    for (int k = 0; k < count; ++k) {
        const double phi = offset + 2.0 * std::numbers::pi * k / count;
        const double r = std::max(1.0, sh.radius_at(phi) - inset);
        c.points.push_back({sh.cx + r * std::cos(phi), sh.cy + r * std::sin(phi)});
    }
    return c;
}

Contour jitter_points(const Contour& c, double amplitude, std::uint64_t seed, int width, int height) {
    Rng rng(seed);
    Contour out;
    for (const auto& p : c.points) {
        const double x = std::clamp(p.x + rng.uniform(-amplitude, amplitude), 0.0, width - 1.0);
        const double y = std::clamp(p.y + rng.uniform(-amplitude, amplitude), 0.0, height - 1.0);
        out.points.push_back({x, y});
    }
    return out;
}

}  // namespace kseg
