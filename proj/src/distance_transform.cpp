#include "kseg/distance_transform.hpp"

#include <limits>

namespace kseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of a sampled function f over n cells.
void transform_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    int first = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] < kInf) {
            first = q;
            break;
        }
    }
    if (first < 0) {
        for (int q = 0; q < n; ++q) d[q] = kInf;
        return;
    }
    v[0] = first;
    for (int q = first + 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        double s = 0.0;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
                if (k < 0) break;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = (k == 0) ? -kInf : s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double diff = q - v[k];
        d[q] = diff * diff + f[v[k]];
    }
}

}  // namespace

std::vector<double> squared_distance_to_foreground(const BinaryMask& m) {
    const int w = m.width();
    const int h = m.height();
    std::vector<double> grid(m.size());
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = m.data()[i] ? 0.0 : kInf;

    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);

    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = grid[m.index(x, y)];
        transform_1d(f.data(), d.data(), h, v, z);
        for (int y = 0; y < h; ++y) grid[m.index(x, y)] = d[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = grid[m.index(x, y)];
        transform_1d(f.data(), d.data(), w, v, z);
        for (int x = 0; x < w; ++x) grid[m.index(x, y)] = d[x];
    }
    return grid;
}

}  // namespace kseg
