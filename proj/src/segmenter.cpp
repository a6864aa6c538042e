#include "kseg/segmenter.hpp"

#include "kseg/error.hpp"

#include <string>

namespace kseg {

std::string_view to_string(FeatureSet set) {
    switch (set) {
        case FeatureSet::Intensity: return "intensity";
        case FeatureSet::Gabor: return "gabor";
        case FeatureSet::Both: return "both";
    }
    return "both";
}

FeatureSet parse_feature_set(std::string_view text) {
    if (text == "intensity") return FeatureSet::Intensity;
    if (text == "gabor") return FeatureSet::Gabor;
    if (text == "both") return FeatureSet::Both;
    throw Error(ErrorCode::Validation, "feature_set must be intensity, gabor or both", "feature_set");
}

void SegConfig::validate() const {
    if (feature_set != FeatureSet::Intensity) gabor.validate();
    weights.validate();
    if (max_iterations < 0) throw Error(ErrorCode::Configuration, "max_iterations must be >= 0", "max_iter");
    if (!(convergence_fraction >= 0.0)) {
        throw Error(ErrorCode::Configuration, "convergence_fraction must be >= 0", "convergence_fraction");
    }
}

FeatureStack build_feature_stack(const GrayImage& img, const SegConfig& cfg) {
    std::vector<FeatureMap> maps;
    if (cfg.feature_set != FeatureSet::Gabor) maps.push_back(intensity_map(img));
    if (cfg.feature_set != FeatureSet::Intensity) maps.push_back(gabor_feature_map(img, cfg.gabor));
    return FeatureStack(std::move(maps));
}

SegInit initialize(const GrayImage& img, const Contour& points, const SegConfig& cfg, FeatureStack stack) {
    cfg.validate();
    const int expected = cfg.feature_set == FeatureSet::Both ? 2 : 1;
    if (stack.size() != expected || stack.width() != img.width() || stack.height() != img.height()) {
        throw Error(ErrorCode::Configuration, "feature stack does not match the image and feature_set");
    }
    SegInit init{SegState{}, std::move(stack)};
    init.state.labels = rasterize_contour(points, img.width(), img.height());
    if (init.state.labels.empty_foreground()) {
        throw Error(ErrorCode::DegenerateContour, "contour interior is empty after rasterization");
    }
    if (init.state.labels.full()) {
        throw Error(ErrorCode::DegenerateContour, "contour interior covers the whole image");
    }
    return init;
}

SegInit initialize(const GrayImage& img, const Contour& points, const SegConfig& cfg) {
    cfg.validate();
    // Validate the contour before paying for the Gabor bank.
    (void)rasterize_contour(points, img.width(), img.height());
    return initialize(img, points, cfg, build_feature_stack(img, cfg));
}

SegState iterate(const SegState& state, const FeatureStack& stack, const SegConfig& cfg) {
    SegState next;
    next.iteration = state.iteration + 1;
    next.history = state.history;
    next.band = (cfg.dynamic_band || state.band.nodes.empty()) ? build_band(state.labels, cfg.weights) : state.band;

    const BandGraph bg = build_graph(next.band, stack, state.labels, cfg.weights);
    const CutResult cut = max_flow(bg.graph);

    next.labels = state.labels;
    std::size_t changed = 0;
    for (std::size_t node = 0; node < next.band.nodes.size(); ++node) {
        const Pixel p = next.band.nodes[node];
        const bool fg = cut.side[node] == Side::S;
        if (fg != state.labels.at(p)) ++changed;
        next.labels.set(p, fg);
    }
    next.history.push_back({next.band.size(), changed, cut.flow_value});

    if (next.labels.empty_foreground() || next.labels.full()) {
        throw Error(ErrorCode::Collapse, "segmentation collapsed to an " +
                                             std::string(next.labels.empty_foreground() ? "empty" : "full") +
                                             " mask at iteration " + std::to_string(next.iteration) +
                                             " (band " + std::to_string(next.band.size()) + " px, " +
                                             std::to_string(changed) + " changed)");
    }
    return next;
}

SegResult run(const SegInit& init, const SegConfig& cfg, const ProgressCallback& progress) {
    cfg.validate();
    SegState state = init.state;
    SegResult result;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        state = iterate(state, init.stack, cfg);
        if (progress) progress(state);
        if (state.history.back().changed_fraction() < cfg.convergence_fraction) {
            result.converged = true;
            break;
        }
    }
    result.iterations_run = state.iteration;
    result.diagnostics = state.history;
    result.mask = std::move(state.labels);
    result.contour = trace_outer_contour(result.mask);
    return result;
}

SegResult run(const GrayImage& img, const Contour& points, const SegConfig& cfg, const ProgressCallback& progress) {
    return run(initialize(img, points, cfg), cfg, progress);
}

}  // namespace kseg
