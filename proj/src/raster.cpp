#include "kseg/raster.hpp"

#include "kseg/distance_transform.hpp"
#include "kseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

namespace kseg {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io: return "io_error";
        case ErrorCode::Format: return "format_error";
        case ErrorCode::DegenerateContour: return "degenerate_contour";
        case ErrorCode::OutOfBounds: return "out_of_bounds";
        case ErrorCode::Configuration: return "configuration_error";
        case ErrorCode::InitializationTooSmall: return "initialization_too_small";
        case ErrorCode::EmptyBand: return "empty_band";
        case ErrorCode::IllPosedBand: return "ill_posed_band";
        case ErrorCode::InvalidNode: return "invalid_node";
        case ErrorCode::UnboundedFlow: return "unbounded_flow";
        case ErrorCode::Collapse: return "segmentation_collapse";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::UndefinedMetric: return "undefined_metric";
        case ErrorCode::Validation: return "validation_error";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::NotReady: return "not_ready";
    }
    return "unknown";
}

namespace {

void check_dims(int width, int height) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::Format, "raster dimensions must be positive");
    }
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill) {
    check_dims(width, height);
    if (!(fill >= 0.0 && fill <= 1.0)) throw Error(ErrorCode::Format, "intensity outside [0,1]");
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::Format, "image data length does not match width*height");
    }
    for (double v : data_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw Error(ErrorCode::Format, "intensity outside [0,1]");
    }
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            fill ? 1 : 0) {
    check_dims(width, height);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::Format, "mask data length does not match width*height");
    }
    for (auto& v : data_) {
        if (v > 1) throw Error(ErrorCode::Format, "mask labels must be 0 or 1");
    }
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::complement() const {
    BinaryMask out = *this;
    for (auto& v : out.data_) v = v ? 0 : 1;
    return out;
}

DiskStructuringElement::DiskStructuringElement(int radius) : radius_(radius) {
    if (radius < 0) throw Error(ErrorCode::Configuration, "structuring element radius must be >= 0");
    const long r2 = static_cast<long>(radius) * radius;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy <= r2) offsets_.push_back({dx, dy});
        }
    }
}

// ---------------------------------------------------------------------------
// Contour rasterization

namespace {

Point2 catmull_rom(const Point2& p0, const Point2& p1, const Point2& p2, const Point2& p3, double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    auto eval = [&](double a, double b, double c, double d) {
        return 0.5 * (2.0 * b + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 +
                      (-a + 3.0 * b - 3.0 * c + d) * t3);
    };
    return {eval(p0.x, p1.x, p2.x, p3.x), eval(p0.y, p1.y, p2.y, p3.y)};
}

double shoelace(const std::vector<Point2>& poly) {
    double acc = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

}  // namespace

std::vector<Point2> sample_closed_spline(const Contour& c, double max_step) {
    const auto& pts = c.points;
    const std::size_t n = pts.size();
    if (n < 3) throw Error(ErrorCode::DegenerateContour, "contour needs at least 3 points");
    if (!(max_step > 0.0)) throw Error(ErrorCode::Configuration, "spline sampling step must be positive");

    std::vector<Point2> out;
    for (std::size_t k = 0; k < n; ++k) {
        const Point2& p0 = pts[(k + n - 1) % n];
        const Point2& p1 = pts[k];
        const Point2& p2 = pts[(k + 1) % n];
        const Point2& p3 = pts[(k + 2) % n];

        // Bound the segment length from a dense probe, then pick a uniform
        // parameter step; halve until every chord is within max_step.
        constexpr int kProbe = 64;
        double length = 0.0;
        Point2 prev = p1;
        for (int s = 1; s <= kProbe; ++s) {
            const Point2 cur = catmull_rom(p0, p1, p2, p3, static_cast<double>(s) / kProbe);
            length += std::hypot(cur.x - prev.x, cur.y - prev.y);
            prev = cur;
        }
        int steps = std::max(1, static_cast<int>(std::ceil(length / (0.5 * max_step))));
        for (;;) {
            std::vector<Point2> seg;
            seg.reserve(static_cast<std::size_t>(steps));
            bool ok = true;
            Point2 last = p1;
            for (int s = 0; s < steps; ++s) {
                const Point2 cur = catmull_rom(p0, p1, p2, p3, static_cast<double>(s) / steps);
                if (s > 0 && std::hypot(cur.x - last.x, cur.y - last.y) > max_step) {
                    ok = false;
                    break;
                }
                seg.push_back(cur);
                last = cur;
            }
            if (ok && std::hypot(p2.x - last.x, p2.y - last.y) <= max_step) {
                out.insert(out.end(), seg.begin(), seg.end());
                break;
            }
            steps *= 2;
        }
    }
    return out;
}

BinaryMask rasterize_contour(const Contour& c, int width, int height) {
    if (width <= 0 || height <= 0) throw Error(ErrorCode::Configuration, "raster dimensions must be positive");
    if (c.points.size() < 3) throw Error(ErrorCode::DegenerateContour, "contour needs at least 3 points");
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const auto& p = c.points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.y < 0.0 ||
            p.x > width - 1.0 || p.y > height - 1.0) {
            throw Error(ErrorCode::OutOfBounds, "contour point outside image bounds",
                        "points[" + std::to_string(i) + "]");
        }
    }

    const auto curve = sample_closed_spline(c, 0.5);
    if (std::abs(shoelace(curve)) < 0.5) {
        throw Error(ErrorCode::DegenerateContour, "contour encloses zero area");
    }

    BinaryMask mask(width, height);

    // Even-odd scanline fill at pixel centres.
    std::vector<double> xs;
    const std::size_t n = curve.size();
    for (int y = 0; y < height; ++y) {
        xs.clear();
        const double yc = y;
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& a = curve[i];
            const Point2& b = curve[(i + 1) % n];
            if ((a.y <= yc) != (b.y <= yc)) {
                xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k])));
            const int x1 = std::min(width - 1, static_cast<int>(std::floor(xs[k + 1])));
            for (int x = x0; x <= x1; ++x) {
                // Pixel centres exactly on the right crossing are outside.
                if (static_cast<double>(x) < xs[k + 1]) mask.set(x, y, true);
            }
        }
    }

    // Trace: every pixel containing a curve sample.
    for (const auto& p : curve) {
        const int x = std::clamp(static_cast<int>(std::lround(p.x)), 0, width - 1);
        const int y = std::clamp(static_cast<int>(std::lround(p.y)), 0, height - 1);
        mask.set(x, y, true);
    }

    if (count_components4(mask) != 1) {
        throw Error(ErrorCode::DegenerateContour, "contour does not rasterize to a single connected region");
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Morphology via exact squared Euclidean distance transform

BinaryMask dilate(const BinaryMask& m, int radius) {
    if (radius < 0) throw Error(ErrorCode::Configuration, "dilation radius must be >= 0");
    if (radius == 0) return m;
    const auto d2 = squared_distance_to_foreground(m);
    const double r2 = static_cast<double>(radius) * radius;
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (d2[m.index(x, y)] <= r2) out.set(x, y, true);
        }
    }
    return out;
}

BinaryMask erode(const BinaryMask& m, int radius) {
    if (radius < 0) throw Error(ErrorCode::Configuration, "erosion radius must be >= 0");
    if (radius == 0) return m;
    return dilate(m.complement(), radius).complement();
}

std::vector<Pixel> mask_boundary(const BinaryMask& m) {
    std::vector<Pixel> out;
    const int w = m.width();
    const int h = m.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m.at(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !m.at(x - 1, y) ||
                              !m.at(x + 1, y) || !m.at(x, y - 1) || !m.at(x, y + 1);
            if (edge) out.push_back({x, y});
        }
    }
    return out;
}

int count_components4(const BinaryMask& m) {
    const int w = m.width();
    const int h = m.height();
    std::vector<std::uint8_t> seen(m.size(), 0);
    std::queue<Pixel> queue;
    int components = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m.at(x, y) || seen[m.index(x, y)]) continue;
            ++components;
            seen[m.index(x, y)] = 1;
            queue.push({x, y});
            while (!queue.empty()) {
                const Pixel p = queue.front();
                queue.pop();
                constexpr int dx[] = {1, -1, 0, 0};
                constexpr int dy[] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = p.x + dx[k];
                    const int ny = p.y + dy[k];
                    if (!m.contains(nx, ny) || !m.at(nx, ny) || seen[m.index(nx, ny)]) continue;
                    seen[m.index(nx, ny)] = 1;
                    queue.push({nx, ny});
                }
            }
        }
    }
    return components;
}

std::vector<Pixel> trace_outer_contour(const BinaryMask& m) {
    std::vector<Pixel> chain;
    Pixel start{-1, -1};
    for (int y = 0; y < m.height() && start.x < 0; ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m.at(x, y)) {
                start = {x, y};
                break;
            }
        }
    }
    if (start.x < 0) return chain;

    // Clockwise Moore neighbourhood starting west.
    constexpr int dx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    constexpr int dy[8] = {0, -1, -1, -1, 0, 1, 1, 1};
    auto fg = [&](int x, int y) { return m.contains(x, y) && m.at(x, y); };

    chain.push_back(start);
    Pixel cur = start;
    int dir = 0;  // we entered start from the west (row-major scan)
    const std::size_t limit = 4 * m.size() + 8;
    for (std::size_t guard = 0; guard < limit; ++guard) {
        int found = -1;
        for (int k = 0; k < 8; ++k) {
            const int d = (dir + k) % 8;
            if (fg(cur.x + dx[d], cur.y + dy[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        const Pixel next{cur.x + dx[found], cur.y + dy[found]};
        // Jacob's criterion: done when start is left the same way as the first time.
        if (cur == start && chain.size() > 2 && next == chain[1]) {
            chain.pop_back();
            break;
        }
        // Resume the scan just after the background pixel preceding `found`.
        dir = (found + 6) % 8;
        chain.push_back(next);
        cur = next;
    }
    return chain;
}

}  // namespace kseg
