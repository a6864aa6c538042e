#pragma once

#include "kseg/gabor.hpp"
#include "kseg/maxflow.hpp"
#include "kseg/raster.hpp"

#include <array>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace kseg {

/// One or more co-registered feature rasters with values in [0,1].
class FeatureStack {
public:
    FeatureStack() = default;
    explicit FeatureStack(std::vector<FeatureMap> maps);

    int size() const noexcept { return static_cast<int>(maps_.size()); }
    int width() const noexcept { return maps_.empty() ? 0 : maps_.front().width; }
    int height() const noexcept { return maps_.empty() ? 0 : maps_.front().height; }
    const FeatureMap& map(int i) const { return maps_[static_cast<std::size_t>(i)]; }
    double value(int i, Pixel p) const { return maps_[static_cast<std::size_t>(i)].at(p.x, p.y); }

private:
    std::vector<FeatureMap> maps_;
};

/// Intensity image as a feature raster (values copied unchanged).
FeatureMap intensity_map(const GrayImage& img);

enum class WeightMode { Pixel, Regional, Both };

std::string_view to_string(WeightMode mode);
WeightMode parse_weight_mode(std::string_view text);

struct WeightParams {
    double sigma = 0.1;
    int neighborhood_radius = 10;
    int band_inflate = 15;
    int band_shrink = 3;
    int connectivity = 4;
    double epsilon = 1e-6;
    WeightMode weight_mode = WeightMode::Both;

    void validate() const;
};

/// In-band pixels plus the seed layers tied to the terminals.
struct NarrowBand {
    BinaryMask band;
    std::vector<Pixel> inner_seed;  // -> S
    std::vector<Pixel> outer_seed;  // -> T
    /// Band pixels in row-major order; node id = position.
    std::vector<Pixel> nodes;
    /// Node id per pixel, -1 outside the band.
    std::vector<int> node_of;

    int node_at(Pixel p) const { return node_of[band.index(p.x, p.y)]; }
    std::size_t size() const noexcept { return nodes.size(); }
};

/// band = dilate(current, inflate) minus erode(current, shrink). Inner seeds
/// are band pixels 4-adjacent to the eroded core; outer seeds are band pixels
/// 4-adjacent to the outside of the dilation, or on the image border and
/// outside `current`.
NarrowBand build_band(const BinaryMask& current, const WeightParams& params);

/// Band with explicit membership and seeds (used for hand-built graphs).
NarrowBand make_band(const BinaryMask& band, std::vector<Pixel> inner_seed, std::vector<Pixel> outer_seed);

enum class Label : std::uint8_t { S, T };

/// Per-map segment means around one pixel.
struct LocalMeans {
    std::vector<double> s;
    std::vector<double> t;
};

/// Global S/T means per map, used when a segment is absent from a disk.
struct SegmentMeans {
    std::vector<double> s;
    std::vector<double> t;
};

SegmentMeans global_segment_means(const FeatureStack& stack, const BinaryMask& labels);

LocalMeans local_means(const FeatureStack& stack, const BinaryMask& labels, Pixel p, int radius);
LocalMeans local_means(const FeatureStack& stack, const BinaryMask& labels, Pixel p,
                       const DiskStructuringElement& disk, const SegmentMeans& fallback);

struct LabelPair {
    Label p;
    Label q;
    friend bool operator==(const LabelPair&, const LabelPair&) = default;
};

/// Candidate assignments in tie-break order.
inline constexpr std::array<LabelPair, 4> kLabelPairs{{
    {Label::S, Label::T},
    {Label::T, Label::S},
    {Label::S, Label::S},
    {Label::T, Label::T},
}};

/// Raw regional fit of one pair before same-label substitution.
struct RegionalFit {
    std::vector<double> k;             // per map, minimum over kLabelPairs
    std::vector<LabelPair> minimizer;  // per map

    bool same_label(int map) const {
        return minimizer[static_cast<std::size_t>(map)].p == minimizer[static_cast<std::size_t>(map)].q;
    }
};

RegionalFit regional_fit(const FeatureStack& stack, Pixel p, Pixel q, const LocalMeans& at_p, const LocalMeans& at_q);

/// K_i(p,q) with the same-label substitution applied against `band_max`
/// (per-map maxima of the raw fits over all in-band adjacent pairs).
std::vector<double> regional_K(const RegionalFit& fit, const std::vector<double>& band_max);

/// Convenience: computes local means at p and q, then the raw fit.
RegionalFit regional_K(const FeatureStack& stack, const BinaryMask& labels, Pixel p, Pixel q, int radius);

struct EdgeWeight {
    double pixel = 0.0;
    double regional = 0.0;
    double total = 0.0;
};

/// w_p from feature differences, w_r from the (substituted) K values;
/// `total` follows params.weight_mode.
EdgeWeight edge_weight(const FeatureStack& stack, Pixel p, Pixel q, const std::vector<double>& k,
                       const WeightParams& params);

struct GraphEdge {
    Pixel p;
    Pixel q;
    EdgeWeight w;
};

struct BandGraph {
    FlowGraph graph;
    std::vector<GraphEdge> edges;  // parallel to graph n-link ids
    std::vector<double> band_max_k;
};

/// One node per band pixel, symmetric n-links between adjacent band pixels,
/// infinite t-links on seeds. Throws IllPosedBand if a seed set is empty.
BandGraph build_graph(const NarrowBand& band, const FeatureStack& stack, const BinaryMask& labels,
                      const WeightParams& params);

/// CSV: px,py,qx,qy,w_p,w_r,w
void write_edges_csv(std::ostream& out, const BandGraph& g);
/// JSON object {"inner_seed": [[x,y],...], "outer_seed": [...]}
std::string seeds_json(const NarrowBand& band);

}  // namespace kseg
