#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace kseg {

struct Pixel {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel& a, const Pixel& b) {
        if (auto c = a.y <=> b.y; c != 0) return c;
        return a.x <=> b.x;
    }
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Row-major grayscale raster with intensities in [0,1].
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    /// Throws Format if the data length or any value violates the invariants.
    GrayImage(int width, int height, std::vector<double> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    double at(int x, int y) const { return data_[index(x, y)]; }
    double& at(int x, int y) { return data_[index(x, y)]; }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Row-major label grid; true (1) is foreground / segment S.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);
    BinaryMask(int width, int height, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool contains(Pixel p) const noexcept { return contains(p.x, p.y); }

    bool at(int x, int y) const { return data_[index(x, y)] != 0; }
    bool at(Pixel p) const { return at(p.x, p.y); }
    void set(int x, int y, bool v) { data_[index(x, y)] = v ? 1 : 0; }
    void set(Pixel p, bool v) { set(p.x, p.y, v); }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    std::size_t count() const noexcept;
    bool empty_foreground() const noexcept { return count() == 0; }
    bool full() const noexcept { return count() == data_.size(); }
    bool same_shape(const BinaryMask& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }

    BinaryMask complement() const;

    std::span<const std::uint8_t> data() const noexcept { return data_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Closed contour through user-placed points.
struct Contour {
    std::vector<Point2> points;
};

/// All integer offsets with Euclidean norm <= radius.
class DiskStructuringElement {
public:
    explicit DiskStructuringElement(int radius);

    int radius() const noexcept { return radius_; }
    std::span<const Pixel> offsets() const noexcept { return offsets_; }

private:
    int radius_;
    std::vector<Pixel> offsets_;
};

/// Dense samples of the closed periodic Catmull-Rom spline through the
/// contour points; consecutive samples (including last->first) are at most
/// `max_step` apart.
std::vector<Point2> sample_closed_spline(const Contour& c, double max_step = 0.5);

/// Throws DegenerateContour / OutOfBounds on invalid input.
BinaryMask rasterize_contour(const Contour& c, int width, int height);

BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);

/// Foreground pixels with at least one background 4-neighbour; the image
/// border counts as background. Ordered row-major.
std::vector<Pixel> mask_boundary(const BinaryMask& m);

/// Number of 4-connected foreground components.
int count_components4(const BinaryMask& m);

/// Ordered outer boundary chain (Moore tracing, 8-connected) of the
/// component containing the first foreground pixel in row-major order.
std::vector<Pixel> trace_outer_contour(const BinaryMask& m);

}  // namespace kseg
