#pragma once

#include "kseg/bandgraph.hpp"
#include "kseg/gabor.hpp"
#include "kseg/raster.hpp"

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace kseg {

enum class FeatureSet { Intensity, Gabor, Both };

std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view text);

struct SegConfig {
    GaborParams gabor;      // defaults: 3 scales, 8 directions
    WeightParams weights;   // defaults: sigma 0.1, r 10, inflate 15, shrink 3
    FeatureSet feature_set = FeatureSet::Both;
    int max_iterations = 20;
    double convergence_fraction = 0.001;
    /// Rebuild the narrow band around the current contour every iteration.
    /// When false the band from the initial contour is reused.
    bool dynamic_band = true;

    void validate() const;
};

struct IterationRecord {
    std::size_t band_size = 0;
    std::size_t changed_pixels = 0;
    double cut_value = 0.0;
    double changed_fraction() const {
        return band_size ? static_cast<double>(changed_pixels) / static_cast<double>(band_size) : 0.0;
    }
};

struct SegState {
    BinaryMask labels;
    int iteration = 0;
    std::vector<IterationRecord> history;
    NarrowBand band;
};

/// Everything fixed per image: the initial labels and the feature stack.
struct SegInit {
    SegState state;
    FeatureStack stack;
};

struct SegResult {
    BinaryMask mask;
    std::vector<Pixel> contour;
    int iterations_run = 0;
    bool converged = false;
    std::vector<IterationRecord> diagnostics;
};

using ProgressCallback = std::function<void(const SegState&)>;

/// Feature stack for an image: intensity and/or the fused Gabor map.
FeatureStack build_feature_stack(const GrayImage& img, const SegConfig& cfg);

SegInit initialize(const GrayImage& img, const Contour& points, const SegConfig& cfg);
/// Same, reusing a precomputed feature stack (must match cfg.feature_set).
SegInit initialize(const GrayImage& img, const Contour& points, const SegConfig& cfg, FeatureStack stack);

/// One band rebuild + graph cut. Labels change only inside the band. Throws
/// Collapse if the new mask is empty or full.
SegState iterate(const SegState& state, const FeatureStack& stack, const SegConfig& cfg);

SegResult run(const GrayImage& img, const Contour& points, const SegConfig& cfg,
              const ProgressCallback& progress = {});
SegResult run(const SegInit& init, const SegConfig& cfg, const ProgressCallback& progress = {});

}  // namespace kseg
