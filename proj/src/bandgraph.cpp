#include "kseg/bandgraph.hpp"

#include "kseg/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace kseg {

FeatureStack::FeatureStack(std::vector<FeatureMap> maps) : maps_(std::move(maps)) {
    if (maps_.empty()) throw Error(ErrorCode::Configuration, "feature stack needs at least one map");
    for (const auto& m : maps_) {
        if (m.width != maps_.front().width || m.height != maps_.front().height) {
            throw Error(ErrorCode::DimensionMismatch, "feature maps must share dimensions");
        }
        if (m.data.size() != static_cast<std::size_t>(m.width) * m.height) {
            throw Error(ErrorCode::DimensionMismatch, "feature map data length mismatch");
        }
        for (double v : m.data) {
            if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::Configuration, "feature values must lie in [0,1]");
        }
    }
}

FeatureMap intensity_map(const GrayImage& img) {
    return FeatureMap{img.width(), img.height(), std::vector<double>(img.data().begin(), img.data().end())};
}

std::string_view to_string(WeightMode mode) {
    switch (mode) {
        case WeightMode::Pixel: return "pixel";
        case WeightMode::Regional: return "regional";
        case WeightMode::Both: return "both";
    }
    return "both";
}

WeightMode parse_weight_mode(std::string_view text) {
    if (text == "pixel") return WeightMode::Pixel;
    if (text == "regional") return WeightMode::Regional;
    if (text == "both") return WeightMode::Both;
    throw Error(ErrorCode::Validation, "weight_mode must be pixel, regional or both", "weight_mode");
}

void WeightParams::validate() const {
    if (!(sigma > 0.0)) throw Error(ErrorCode::Configuration, "sigma must be > 0", "sigma");
    if (neighborhood_radius < 1) throw Error(ErrorCode::Configuration, "radius must be >= 1", "radius");
    if (band_inflate < 0) throw Error(ErrorCode::Configuration, "band_inflate must be >= 0", "band_inflate");
    if (band_shrink < 0) throw Error(ErrorCode::Configuration, "band_shrink must be >= 0", "band_shrink");
    if (connectivity != 4 && connectivity != 8) {
        throw Error(ErrorCode::Configuration, "connectivity must be 4 or 8", "connectivity");
    }
    if (!(epsilon > 0.0)) throw Error(ErrorCode::Configuration, "epsilon must be > 0", "epsilon");
}

namespace {

constexpr int kDx4[4] = {1, -1, 0, 0};
constexpr int kDy4[4] = {0, 0, 1, -1};

void index_nodes(NarrowBand& nb) {
    nb.nodes.clear();
    nb.node_of.assign(nb.band.size(), -1);
    for (int y = 0; y < nb.band.height(); ++y) {
        for (int x = 0; x < nb.band.width(); ++x) {
            if (!nb.band.at(x, y)) continue;
            nb.node_of[nb.band.index(x, y)] = static_cast<int>(nb.nodes.size());
            nb.nodes.push_back({x, y});
        }
    }
}

}  // namespace

NarrowBand build_band(const BinaryMask& current, const WeightParams& params) {
    if (current.empty_foreground() || current.full()) {
        throw Error(ErrorCode::Validation, "current mask must be neither empty nor full");
    }
    if (params.band_inflate < 0 || params.band_shrink < 0) {
        throw Error(ErrorCode::Configuration, "band radii must be >= 0");
    }
    const BinaryMask outer = dilate(current, params.band_inflate);
    const BinaryMask core = erode(current, params.band_shrink);
    if (core.empty_foreground()) {
        throw Error(ErrorCode::InitializationTooSmall,
                    "erosion by band_shrink empties the foreground; initialize a larger contour");
    }

    NarrowBand nb;
    nb.band = BinaryMask(current.width(), current.height());
    for (int y = 0; y < current.height(); ++y) {
        for (int x = 0; x < current.width(); ++x) {
            if (outer.at(x, y) && !core.at(x, y)) nb.band.set(x, y, true);
        }
    }
    if (nb.band.empty_foreground()) throw Error(ErrorCode::EmptyBand, "narrow band is empty");
    index_nodes(nb);

    const int w = current.width();
    const int h = current.height();
    for (const Pixel& p : nb.nodes) {
        bool touches_core = false;
        bool touches_outside = false;
        for (int k = 0; k < 4; ++k) {
            const int nx = p.x + kDx4[k];
            const int ny = p.y + kDy4[k];
            if (!current.contains(nx, ny)) continue;
            if (core.at(nx, ny)) touches_core = true;
            if (!outer.at(nx, ny)) touches_outside = true;
        }
        const bool on_border = p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1;
        if (touches_core) {
            nb.inner_seed.push_back(p);
        } else if (touches_outside || (on_border && !current.at(p))) {
            nb.outer_seed.push_back(p);
        }
    }
    return nb;
}

NarrowBand make_band(const BinaryMask& band, std::vector<Pixel> inner_seed, std::vector<Pixel> outer_seed) {
    NarrowBand nb;
    nb.band = band;
    index_nodes(nb);
    std::sort(inner_seed.begin(), inner_seed.end());
    std::sort(outer_seed.begin(), outer_seed.end());
    for (const auto& p : inner_seed) {
        if (!band.contains(p) || !band.at(p)) throw Error(ErrorCode::Validation, "seed outside band");
        if (std::binary_search(outer_seed.begin(), outer_seed.end(), p)) {
            throw Error(ErrorCode::Validation, "seed sets must be disjoint");
        }
    }
    for (const auto& p : outer_seed) {
        if (!band.contains(p) || !band.at(p)) throw Error(ErrorCode::Validation, "seed outside band");
    }
    nb.inner_seed = std::move(inner_seed);
    nb.outer_seed = std::move(outer_seed);
    return nb;
}

SegmentMeans global_segment_means(const FeatureStack& stack, const BinaryMask& labels) {
    const int n = stack.size();
    SegmentMeans out{std::vector<double>(static_cast<std::size_t>(n), 0.0),
                     std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    const std::size_t count_s = labels.count();
    const std::size_t count_t = labels.size() - count_s;
    for (int i = 0; i < n; ++i) {
        const auto& data = stack.map(i).data;
        double sum_s = 0.0;
        double sum_t = 0.0;
        for (std::size_t k = 0; k < data.size(); ++k) (labels.data()[k] ? sum_s : sum_t) += data[k];
        // An absent segment has no defined mean; fall back to the other one.
        const double mean_s = count_s ? sum_s / static_cast<double>(count_s) : sum_t / static_cast<double>(count_t);
        const double mean_t = count_t ? sum_t / static_cast<double>(count_t) : mean_s;
        out.s[static_cast<std::size_t>(i)] = mean_s;
        out.t[static_cast<std::size_t>(i)] = mean_t;
    }
    return out;
}

LocalMeans local_means(const FeatureStack& stack, const BinaryMask& labels, Pixel p,
                       const DiskStructuringElement& disk, const SegmentMeans& fallback) {
    const int n = stack.size();
    LocalMeans out{std::vector<double>(static_cast<std::size_t>(n), 0.0),
                   std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    int count_s = 0;
    int count_t = 0;
    for (const auto& d : disk.offsets()) {
        const int x = p.x + d.x;
        const int y = p.y + d.y;
        if (!labels.contains(x, y)) continue;
        const bool s = labels.at(x, y);
        (s ? count_s : count_t) += 1;
        auto& acc = s ? out.s : out.t;
        for (int i = 0; i < n; ++i) acc[static_cast<std::size_t>(i)] += stack.map(i).at(x, y);
    }
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.s[k] = count_s ? out.s[k] / count_s : fallback.s[k];
        out.t[k] = count_t ? out.t[k] / count_t : fallback.t[k];
    }
    return out;
}

LocalMeans local_means(const FeatureStack& stack, const BinaryMask& labels, Pixel p, int radius) {
    if (!labels.contains(p)) throw Error(ErrorCode::OutOfBounds, "pixel outside image");
    if (labels.width() != stack.width() || labels.height() != stack.height()) {
        throw Error(ErrorCode::DimensionMismatch, "labels and features differ in size");
    }
    return local_means(stack, labels, p, DiskStructuringElement(radius), global_segment_means(stack, labels));
}

RegionalFit regional_fit(const FeatureStack& stack, Pixel p, Pixel q, const LocalMeans& at_p, const LocalMeans& at_q) {
    const int n = stack.size();
    RegionalFit fit;
    fit.k.resize(static_cast<std::size_t>(n));
    fit.minimizer.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double ip = stack.value(i, p);
        const double iq = stack.value(i, q);
        double best = 0.0;
        LabelPair arg = kLabelPairs[0];
        bool first = true;
        for (const auto& pair : kLabelPairs) {
            const double fp = pair.p == Label::S ? at_p.s[k] : at_p.t[k];
            const double fq = pair.q == Label::S ? at_q.s[k] : at_q.t[k];
            const double v = (ip - fp) * (ip - fp) + (iq - fq) * (iq - fq);
            if (first || v < best) {
                best = v;
                arg = pair;
                first = false;
            }
        }
        fit.k[k] = best;
        fit.minimizer[k] = arg;
    }
    return fit;
}

std::vector<double> regional_K(const RegionalFit& fit, const std::vector<double>& band_max) {
    std::vector<double> k = fit.k;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (fit.minimizer[i].p == fit.minimizer[i].q) k[i] = band_max[i];
    }
    return k;
}

RegionalFit regional_K(const FeatureStack& stack, const BinaryMask& labels, Pixel p, Pixel q, int radius) {
    if (!labels.contains(p) || !labels.contains(q)) throw Error(ErrorCode::OutOfBounds, "pixel outside image");
    const DiskStructuringElement disk(radius);
    const SegmentMeans fallback = global_segment_means(stack, labels);
    return regional_fit(stack, p, q, local_means(stack, labels, p, disk, fallback),
                        local_means(stack, labels, q, disk, fallback));
}

EdgeWeight edge_weight(const FeatureStack& stack, Pixel p, Pixel q, const std::vector<double>& k,
                       const WeightParams& params) {
    const int n = stack.size();
    double diff = 0.0;
    double k_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = stack.value(i, p) - stack.value(i, q);
        diff += d * d;
        k_sum += k[static_cast<std::size_t>(i)];
    }
    diff /= n;
    const double k_mean = k_sum / n;

    EdgeWeight w;
    w.pixel = std::exp(-diff / params.sigma);
    w.regional = std::exp(-(1.0 / (k_mean + params.epsilon)) / params.sigma);
    switch (params.weight_mode) {
        case WeightMode::Pixel: w.total = w.pixel; break;
        case WeightMode::Regional: w.total = w.regional; break;
        case WeightMode::Both: w.total = w.pixel + w.regional; break;
    }
    return w;
}

BandGraph build_graph(const NarrowBand& band, const FeatureStack& stack, const BinaryMask& labels,
                      const WeightParams& params) {
    params.validate();
    if (band.inner_seed.empty() || band.outer_seed.empty()) {
        throw Error(ErrorCode::IllPosedBand, "narrow band needs nonempty inner and outer seed sets");
    }
    if (labels.width() != stack.width() || labels.height() != stack.height() || !labels.same_shape(band.band)) {
        throw Error(ErrorCode::DimensionMismatch, "band, labels and features differ in size");
    }

    const DiskStructuringElement disk(params.neighborhood_radius);
    const SegmentMeans fallback = global_segment_means(stack, labels);
    std::vector<LocalMeans> means;
    means.reserve(band.size());
    for (const auto& p : band.nodes) means.push_back(local_means(stack, labels, p, disk, fallback));

    // Forward neighbour offsets so every adjacent pair appears once.
    std::vector<Pixel> forward{{1, 0}, {0, 1}};
    if (params.connectivity == 8) {
        forward.push_back({1, 1});
        forward.push_back({-1, 1});
    }

    struct PairRef {
        int a;
        int b;
    };
    std::vector<PairRef> pairs;
    for (std::size_t a = 0; a < band.nodes.size(); ++a) {
        const Pixel p = band.nodes[a];
        for (const auto& d : forward) {
            const Pixel q{p.x + d.x, p.y + d.y};
            if (!band.band.contains(q) || !band.band.at(q)) continue;
            pairs.push_back({static_cast<int>(a), band.node_at(q)});
        }
    }

    const int n_maps = stack.size();
    std::vector<RegionalFit> fits;
    fits.reserve(pairs.size());
    BandGraph out;
    out.band_max_k.assign(static_cast<std::size_t>(n_maps), 0.0);
    for (const auto& pr : pairs) {
        fits.push_back(regional_fit(stack, band.nodes[static_cast<std::size_t>(pr.a)],
                                    band.nodes[static_cast<std::size_t>(pr.b)], means[static_cast<std::size_t>(pr.a)],
                                    means[static_cast<std::size_t>(pr.b)]));
        for (int i = 0; i < n_maps; ++i) {
            out.band_max_k[static_cast<std::size_t>(i)] =
                std::max(out.band_max_k[static_cast<std::size_t>(i)], fits.back().k[static_cast<std::size_t>(i)]);
        }
    }

    out.graph.add_nodes(static_cast<int>(band.size()));
    out.edges.reserve(pairs.size());
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        const Pixel p = band.nodes[static_cast<std::size_t>(pairs[e].a)];
        const Pixel q = band.nodes[static_cast<std::size_t>(pairs[e].b)];
        const EdgeWeight w = edge_weight(stack, p, q, regional_K(fits[e], out.band_max_k), params);
        out.graph.add_nlink(pairs[e].a, pairs[e].b, w.total, w.total);
        out.edges.push_back({p, q, w});
    }
    for (const auto& p : band.inner_seed) out.graph.add_tlink(band.node_at(p), kInfinite, 0.0);
    for (const auto& p : band.outer_seed) out.graph.add_tlink(band.node_at(p), 0.0, kInfinite);
    return out;
}

void write_edges_csv(std::ostream& out, const BandGraph& g) {
    out << "px,py,qx,qy,w_p,w_r,w\n";
    out.precision(17);
    for (const auto& e : g.edges) {
        out << e.p.x << ',' << e.p.y << ',' << e.q.x << ',' << e.q.y << ',' << e.w.pixel << ',' << e.w.regional << ','
            << e.w.total << '\n';
    }
}

std::string seeds_json(const NarrowBand& band) {
    auto to_json = [](const std::vector<Pixel>& pts) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : pts) arr.push_back({p.x, p.y});
        return arr;
    };
    return nlohmann::json{{"inner_seed", to_json(band.inner_seed)}, {"outer_seed", to_json(band.outer_seed)}}.dump();
}

}  // namespace kseg
