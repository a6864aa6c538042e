#include "kseg/gabor.hpp"

#include "kseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace kseg {

std::vector<double> GaborParams::resolved_wavelengths() const {
    if (!wavelengths.empty()) return wavelengths;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(num_scales, 0)));
    for (int i = 0; i < num_scales; ++i) out.push_back(base_wavelength * std::ldexp(1.0, i));
    return out;
}

void GaborParams::validate() const {
    if (num_scales < 1) throw Error(ErrorCode::Configuration, "num_scales must be >= 1", "scales");
    if (num_directions < 1) throw Error(ErrorCode::Configuration, "num_directions must be >= 1", "directions");
    if (!(sigma_ratio > 0.0)) throw Error(ErrorCode::Configuration, "sigma_ratio must be > 0", "sigma_ratio");
    if (!(kernel_halfwidth_sigmas > 0.0)) {
        throw Error(ErrorCode::Configuration, "kernel_halfwidth_sigmas must be > 0", "kernel_halfwidth_sigmas");
    }
    const auto lambdas = resolved_wavelengths();
    if (static_cast<int>(lambdas.size()) != num_scales) {
        throw Error(ErrorCode::Configuration, "need exactly one wavelength per scale", "wavelengths");
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 2.0)) throw Error(ErrorCode::Configuration, "wavelengths must be >= 2 px", "wavelengths");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
            throw Error(ErrorCode::Configuration, "wavelengths must be strictly increasing", "wavelengths");
        }
    }
}

int FilterBank::max_side() const {
    int side = 0;
    for (const auto& k : kernels) side = std::max(side, k.side());
    return side;
}

ResponseStack::ResponseStack(int num_scales, int num_directions, int width, int height)
    : scales_(num_scales), directions_(num_directions), width_(width), height_(height),
      data_(static_cast<std::size_t>(num_scales) * num_directions * width * height, 0.0) {}

FilterBank build_bank(const GaborParams& params) {
    params.validate();
    const auto lambdas = params.resolved_wavelengths();
    FilterBank bank;
    bank.num_scales = params.num_scales;
    bank.num_directions = params.num_directions;
    bank.kernels.reserve(static_cast<std::size_t>(params.num_scales * params.num_directions));

    for (int i = 0; i < params.num_scales; ++i) {
        const double lambda = lambdas[static_cast<std::size_t>(i)];
        const double sigma = params.sigma_ratio * lambda;
        const int h = static_cast<int>(std::ceil(params.kernel_halfwidth_sigmas * sigma));
        const double norm = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
        for (int j = 0; j < params.num_directions; ++j) {
            GaborKernel k;
            k.scale = i;
            k.direction = j;
            k.wavelength = lambda;
            k.theta = j * std::numbers::pi / params.num_directions;
            k.sigma = sigma;
            k.half_width = h;
            const double c = std::cos(k.theta);
            const double s = std::sin(k.theta);
            k.values.reserve(static_cast<std::size_t>(k.side() * k.side()));
            for (int y = -h; y <= h; ++y) {
                for (int x = -h; x <= h; ++x) {
                    const double xr = x * c + y * s;
                    const double yr = -x * s + y * c;
                    const double envelope = norm * std::exp(-(xr * xr / (sigma * sigma) + yr * yr / (sigma * sigma)));
                    const double phase = 2.0 * std::numbers::pi * xr / lambda;
                    k.values.push_back(std::polar(envelope, phase));
                }
            }
            bank.kernels.push_back(std::move(k));
        }
    }
    return bank;
}

ResponseStack convolve_bank(const GrayImage& img, const FilterBank& bank) {
    const int w = img.width();
    const int h = img.height();
    for (const auto& k : bank.kernels) {
        if (k.side() > w || k.side() > h) {
            throw Error(ErrorCode::Configuration,
                        "Gabor kernel side " + std::to_string(k.side()) + " exceeds image size " +
                            std::to_string(w) + "x" + std::to_string(h));
        }
    }

    ResponseStack stack(bank.num_scales, bank.num_directions, w, h);
    const auto pixels = img.data();
    std::vector<std::complex<double>> rows(static_cast<std::size_t>(w) * h);
    std::vector<std::complex<double>> fx, fy;

    // With sigma_x == sigma_y the envelope is isotropic and the carrier
    // factorizes along x and y, so each kernel is an outer product of two
    // 1-D complex taps over the same square support.
    for (const auto& k : bank.kernels) {
        const int hw = k.half_width;
        const double norm = 1.0 / (2.0 * std::numbers::pi * k.sigma * k.sigma);
        const double kx = 2.0 * std::numbers::pi * std::cos(k.theta) / k.wavelength;
        const double ky = 2.0 * std::numbers::pi * std::sin(k.theta) / k.wavelength;
        fx.resize(static_cast<std::size_t>(k.side()));
        fy.resize(static_cast<std::size_t>(k.side()));
        for (int t = -hw; t <= hw; ++t) {
            const double g = std::exp(-static_cast<double>(t) * t / (k.sigma * k.sigma));
            fx[static_cast<std::size_t>(t + hw)] = std::polar(g, kx * t);
            fy[static_cast<std::size_t>(t + hw)] = std::polar(g, ky * t);
        }

        for (int y = 0; y < h; ++y) {
            const double* row = pixels.data() + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
                std::complex<double> acc{};
                for (int t = -hw; t <= hw; ++t) {
                    const int xx = std::clamp(x + t, 0, w - 1);
                    acc += row[xx] * fx[static_cast<std::size_t>(t + hw)];
                }
                rows[static_cast<std::size_t>(y) * w + x] = acc;
            }
        }

        auto out = stack.plane(k.scale, k.direction);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                std::complex<double> acc{};
                for (int t = -hw; t <= hw; ++t) {
                    const int yy = std::clamp(y + t, 0, h - 1);
                    acc += rows[static_cast<std::size_t>(yy) * w + x] * fy[static_cast<std::size_t>(t + hw)];
                }
                out[static_cast<std::size_t>(y) * w + x] = std::abs(norm * acc);
            }
        }
    }
    return stack;
}

namespace {

// Shared by dominant_directions and fuse_raw; `best` and `wins` are scratch.
void dominant_set(const ResponseStack& stack, std::size_t pixel, std::vector<double>& best,
                  std::vector<int>& wins, std::vector<int>& omega) {
    const int m = stack.num_scales();
    const int n = stack.num_directions();
    best.assign(static_cast<std::size_t>(m), 0.0);
    wins.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < m; ++i) {
        double top = stack.plane(i, 0)[pixel];
        for (int j = 1; j < n; ++j) top = std::max(top, stack.plane(i, j)[pixel]);
        best[static_cast<std::size_t>(i)] = top;
    }
    // A direction scores at scale i when it attains that scale's maximum
    // exactly, so ties credit every tied direction.
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            if (stack.plane(i, j)[pixel] == best[static_cast<std::size_t>(i)]) ++wins[static_cast<std::size_t>(j)];
        }
    }
    const int max_wins = *std::max_element(wins.begin(), wins.end());
    omega.clear();
    for (int j = 0; j < n; ++j) {
        if (2 * wins[static_cast<std::size_t>(j)] >= max_wins) omega.push_back(j);
    }
}

}  // namespace

int scale_argmax(const ResponseStack& stack, int scale, int x, int y) {
    int g = 0;
    double top = stack.at(scale, 0, x, y);
    for (int j = 1; j < stack.num_directions(); ++j) {
        if (stack.at(scale, j, x, y) > top) {
            top = stack.at(scale, j, x, y);
            g = j;
        }
    }
    return g;
}

std::vector<int> dominant_directions(const ResponseStack& stack, int x, int y) {
    if (x < 0 || y < 0 || x >= stack.width() || y >= stack.height()) {
        throw Error(ErrorCode::OutOfBounds, "pixel outside response stack");
    }
    std::vector<double> best;
    std::vector<int> wins, omega;
    dominant_set(stack, static_cast<std::size_t>(y) * stack.width() + x, best, wins, omega);
    return omega;
}

std::vector<double> fuse_raw(const ResponseStack& stack) {
    const std::size_t n_pixels = static_cast<std::size_t>(stack.width()) * stack.height();
    std::vector<double> raw(n_pixels, 0.0);
    std::vector<double> best;
    std::vector<int> wins, omega;
    const double inv_m = 1.0 / stack.num_scales();
    for (std::size_t p = 0; p < n_pixels; ++p) {
        dominant_set(stack, p, best, wins, omega);
        double acc = 0.0;
        for (int i = 0; i < stack.num_scales(); ++i) {
            for (int j : omega) acc += stack.plane(i, j)[p];
        }
        raw[p] = inv_m * acc;
    }
    return raw;
}

FeatureMap normalize_min_max(int width, int height, std::vector<double> raw) {
    FeatureMap map{width, height, std::move(raw)};
    if (map.data.empty()) return map;
    const auto [lo_it, hi_it] = std::minmax_element(map.data.begin(), map.data.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) {
        std::fill(map.data.begin(), map.data.end(), 0.0);
        return map;
    }
    const double scale = 1.0 / (hi - lo);
    for (auto& v : map.data) v = std::clamp((v - lo) * scale, 0.0, 1.0);
    return map;
}

FeatureMap fuse(const ResponseStack& stack) {
    return normalize_min_max(stack.width(), stack.height(), fuse_raw(stack));
}

FeatureMap gabor_feature_map(const GrayImage& img, const GaborParams& params) {
    return fuse(convolve_bank(img, build_bank(params)));
}

}  // namespace kseg
