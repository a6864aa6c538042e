// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "kseg/gabor.hpp"
#include "kseg/maxflow.hpp"
#include "kseg/metrics.hpp"
#include "kseg/phantom.hpp"
#include "kseg/rng.hpp"
#include "kseg/segmenter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

using namespace kseg;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- max-flow

double exhaustive_min_cut(const FlowGraph& g) {
    const int n = g.node_count();
    double best = std::numeric_limits<double>::infinity();
    std::vector<Side> side(static_cast<std::size_t>(n));
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double cut = 0.0;
        for (int p = 0; p < n; ++p) {
            side[static_cast<std::size_t>(p)] = (mask >> p) & 1 ? Side::S : Side::T;
            cut += side[static_cast<std::size_t>(p)] == Side::S ? g.sink_capacity(p) : g.source_capacity(p);
        }
        for (int a = 0; a < g.arc_count(); ++a) {
            if (side[static_cast<std::size_t>(g.tail(a))] == Side::S &&
                side[static_cast<std::size_t>(g.arc(a).head)] == Side::T)
                cut += g.arc(a).capacity;
        }
        best = std::min(best, cut);
    }
    return best;
}

void check_maxflow() {
    Rng rng(20240601);
    int exact = 0;
    double solver_time = 0.0;
    for (int t = 0; t < 200; ++t) {
        FlowGraph g;
        const int n = 1 + static_cast<int>(rng.uniform() * 8);
        g.add_nodes(n);
        for (int p = 0; p < n; ++p) g.add_tlink(p, std::floor(rng.uniform() * 11), std::floor(rng.uniform() * 11));
        const int pairs = n >= 2 ? static_cast<int>(rng.uniform() * 9) : 0;
        for (int k = 0; k < pairs; ++k) {
            const int p = static_cast<int>(rng.uniform() * n);
            int q = static_cast<int>(rng.uniform() * (n - 1));
            if (q >= p) ++q;
            g.add_nlink(p, q, std::floor(rng.uniform() * 11), std::floor(rng.uniform() * 11));
        }
        const auto t0 = std::chrono::steady_clock::now();
        const double flow = max_flow(g).flow_value;
        solver_time += seconds_since(t0);
        exact += flow == exhaustive_min_cut(g);
    }
    report(exact == 200 && solver_time < 5.0, "maxflow-oracle",
           fmt("%d/200 random graphs equal the exhaustive min cut; solver time %.3f s (limit 5 s)", exact, solver_time));
}

// ------------------------------------------------------------------- gabor

ResponseStack single_pixel(const std::vector<std::vector<double>>& f) {
    ResponseStack s(static_cast<int>(f.size()), static_cast<int>(f[0].size()), 1, 1);
    for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = 0; j < f[i].size(); ++j) s.at(static_cast<int>(i), static_cast<int>(j), 0, 0) = f[i][j];
    return s;
}

void check_fusion() {
    const double a = fuse_raw(single_pixel({{3, 1}, {2, 5}}))[0];
    const double b = fuse_raw(single_pixel({{4, 1}, {5, 2}}))[0];
    const bool omega = dominant_directions(single_pixel({{3, 1}, {2, 5}}), 0, 0) == std::vector<int>{0, 1} &&
                       dominant_directions(single_pixel({{4, 1}, {5, 2}}), 0, 0) == std::vector<int>{0};
    report(a == 5.5 && b == 4.5 && omega, "fusion-hand-trace",
           fmt("[[3,1],[2,5]] -> %.17g (expect 5.5), [[4,1],[5,2]] -> %.17g (expect 4.5), dominant sets %s", a, b,
               omega ? "match" : "differ"));
}

void check_convolution() {
    GaborParams params;
    params.num_scales = 2;
    params.num_directions = 8;
    const FilterBank bank = build_bank(params);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Rng rng(seed);
        std::vector<double> v(32 * 32);
        for (auto& x : v) x = rng.uniform();
        const GrayImage img(32, 32, std::move(v));
        const ResponseStack r = convolve_bank(img, bank);
        for (const auto& k : bank.kernels)
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) {
                    std::complex<double> acc = 0.0;
                    for (int dy = -k.half_width; dy <= k.half_width; ++dy)
                        for (int dx = -k.half_width; dx <= k.half_width; ++dx)
                            acc += img.at(std::clamp(x + dx, 0, 31), std::clamp(y + dy, 0, 31)) * k.at(dx, dy);
                    const double expected = std::abs(acc);
                    worst = std::max(worst, std::abs(r.at(k.scale, k.direction, x, y) - expected) / expected);
                }
    }
    report(worst < 1e-9, "convolution-oracle",
           fmt("max relative error vs dense correlation on 3 random 32x32 images: %.3e (limit 1e-9)", worst));
}

// ----------------------------------------------------------------- metrics

BinaryMask random_mask(int w, int h, double density, Rng& rng) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(x, y, rng.uniform() < density);
    return m;
}

void check_metrics() {
    Rng rng(777);
    double worst_identity = 0.0;
    int pairs = 0;
    while (pairs < 1000) {
        const BinaryMask e = random_mask(20, 16, rng.uniform(), rng);
        const BinaryMask f = random_mask(20, 16, rng.uniform(), rng);
        if (e.empty_foreground() && f.empty_foreground()) continue;
        const double j = jaccard(e, f);
        worst_identity = std::max(worst_identity, std::abs(dice(e, f) - 2 * j / (1 + j)));
        ++pairs;
    }
    double worst_distance = 0.0;
    for (int t = 0; t < 50; ++t) {
        const BinaryMask e = random_mask(24, 24, 0.2 + 0.6 * rng.uniform(), rng);
        const BinaryMask f = random_mask(24, 24, 0.2 + 0.6 * rng.uniform(), rng);
        const auto be = mask_boundary(e);
        const auto bf = mask_boundary(f);
        double total = 0.0;
        for (const auto& a : be) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& b : bf) best = std::min(best, std::hypot(a.x - b.x, a.y - b.y));
            total += best;
        }
        worst_distance = std::max(worst_distance, std::abs(mean_distance(e, f) - total / static_cast<double>(be.size())));
    }
    report(worst_identity <= 1e-12 && worst_distance <= 1e-9, "metric-identities",
           fmt("dice vs 2J/(1+J) on 1000 pairs: max error %.3e (limit 1e-12); mean distance vs brute force on 50 pairs: "
               "max error %.3e (limit 1e-9)",
               worst_identity, worst_distance));
}

// ---------------------------------------------------------------- phantoms

struct RunRecord {
    std::string label;
    bool default_config = false;
    double dice = 0.0;
    bool ok = false;
    bool converged = false;
    int iterations = 0;
    double final_fraction = 1.0;
    double seconds = 0.0;
};

std::vector<RunRecord> all_runs;

RunRecord segment(const Phantom& ph, const Contour& init, const SegConfig& cfg, const std::string& label) {
    RunRecord rec;
    rec.label = label;
    rec.default_config = cfg.feature_set == FeatureSet::Both && cfg.weights.weight_mode == WeightMode::Both;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const SegResult r = run(ph.image, init, cfg);
        rec.ok = true;
        rec.dice = dice(r.mask, ph.truth);
        rec.converged = r.converged;
        rec.iterations = r.iterations_run;
        rec.final_fraction = r.diagnostics.empty() ? 1.0 : r.diagnostics.back().changed_fraction();
    } catch (const std::exception& e) {
        std::printf("  run %s failed: %s\n", label.c_str(), e.what());
    }
    rec.seconds = seconds_since(t0);
    all_runs.push_back(rec);
    return rec;
}

void check_clean() {
    int good = 0;
    double slowest = 0.0, lowest = 1.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Phantom ph = make_phantom(PhantomPreset::CleanEllipse, seed);
        const RunRecord r = segment(ph, phantom_init_points(ph), SegConfig{}, "clean-ellipse-" + std::to_string(seed));
        good += r.dice >= 0.95 && r.seconds < 10.0;
        slowest = std::max(slowest, r.seconds);
        lowest = std::min(lowest, r.dice);
    }
    report(good == 10, "clean-phantom",
           fmt("%d/10 seeds reach Dice >= 0.95 within 10 s (min Dice %.4f, slowest run %.2f s)", good, lowest, slowest));
}

SegConfig variant(FeatureSet fs, WeightMode wm) {
    SegConfig cfg;
    cfg.feature_set = fs;
    cfg.weights.weight_mode = wm;
    return cfg;
}

void check_trends() {
    // Per seed: mean Dice over the weak-boundary and high-speckle phantoms.
    const std::vector<std::pair<std::string, SegConfig>> variants{
        {"intensity", variant(FeatureSet::Intensity, WeightMode::Both)},
        {"gabor", variant(FeatureSet::Gabor, WeightMode::Both)},
        {"both", variant(FeatureSet::Both, WeightMode::Both)},
        {"pixel", variant(FeatureSet::Both, WeightMode::Pixel)},
        {"regional", variant(FeatureSet::Both, WeightMode::Regional)},
    };
    int wins_features = 0, wins_weights = 0;
    std::map<std::string, double> totals;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::map<std::string, double> mean;
        for (auto preset : {PhantomPreset::WeakBoundary, PhantomPreset::HighSpeckle}) {
            const Phantom ph = make_phantom(preset, seed);
            const Contour init = phantom_init_points(ph);
            for (const auto& [name, cfg] : variants) {
                const std::string label = std::string(to_string(preset)) + "-" + std::to_string(seed) + "/" + name;
                mean[name] += segment(ph, init, cfg, label).dice / 2;
            }
        }
        for (const auto& [name, v] : mean) totals[name] += v / 10;
        wins_features += mean["both"] >= mean["intensity"] && mean["both"] >= mean["gabor"];
        wins_weights += mean["both"] >= mean["pixel"] && mean["both"] >= mean["regional"];
    }
    report(wins_features >= 8, "feature-set-trend",
           fmt("both >= each single feature on %d/10 seeds (need 8); mean Dice intensity %.4f, gabor %.4f, both %.4f",
               wins_features, totals["intensity"], totals["gabor"], totals["both"]));
    report(wins_weights >= 8, "weight-mode-trend",
           fmt("both >= pixel and >= regional on %d/10 seeds (need 8); mean Dice pixel %.4f, regional %.4f, both %.4f",
               wins_weights, totals["pixel"], totals["regional"], totals["both"]));
}

void check_icc() {
    const PhantomPreset presets[3] = {PhantomPreset::CleanEllipse, PhantomPreset::WeakBoundary, PhantomPreset::HighSpeckle};
    Measurements m{3, 20, std::vector<double>(60)};
    for (int j = 0; j < 20; ++j) {
        const std::uint64_t seed = 100 + static_cast<std::uint64_t>(j);
        const Phantom ph = make_phantom(presets[j % 3], seed);
        const Contour base = phantom_init_points(ph);
        for (int i = 0; i < 3; ++i) {
            const Contour init = jitter_points(base, 3.0, derive_seed(seed, 7, static_cast<std::uint64_t>(i)), 256, 256);
            const std::string label = std::string(to_string(presets[j % 3])) + "-" + std::to_string(seed) + "/jitter-" +
                                      std::to_string(i);
            m.values[static_cast<std::size_t>(i * 20 + j)] = segment(ph, init, SegConfig{}, label).dice;
        }
    }
    const double value = icc(m);
    report(value >= 0.85, "init-jitter-icc",
           fmt("ICC(A,k) of Dice over 3 jittered (+-3 px) initializations x 20 phantoms = %.4f (need >= 0.85)", value));
}

void check_convergence_and_determinism() {
    // The criterion covers runs of the method itself; single-feature and
    // single-weight ablation variants are reported separately.
    int converged = 0, total = 0, variant_converged = 0, variant_total = 0;
    double worst = 0.0;
    int max_iterations = 0;
    std::string offenders;
    for (const auto& r : all_runs) {
        const bool ok = r.ok && r.converged && r.iterations <= 20 && r.final_fraction < 0.001;
        if (!r.default_config) {
            variant_converged += ok;
            ++variant_total;
            continue;
        }
        ++total;
        converged += ok;
        if (r.ok) worst = std::max(worst, r.final_fraction);
        max_iterations = std::max(max_iterations, r.iterations);
        if (!ok && offenders.size() < 200) offenders += " " + r.label;
    }
    report(converged == total, "convergence",
           fmt("%d/%d default-config phantom runs converged within 20 iterations with final changed fraction < 0.1%% "
               "(worst %.5f, max iterations %d)%s%s",
               converged, total, worst, max_iterations, offenders.empty() ? "" : "; not converged:", offenders.c_str()));
    std::printf("[INFO] ablation variants (single feature or single weight term): %d/%d runs converged\n",
                variant_converged, variant_total);

    int identical = 0;
    const PhantomPreset presets[3] = {PhantomPreset::CleanEllipse, PhantomPreset::WeakBoundary, PhantomPreset::HighSpeckle};
    for (int k = 0; k < 6; ++k) {
        const Phantom a = make_phantom(presets[k % 3], 50 + k);
        const Phantom b = make_phantom(presets[k % 3], 50 + k);
        const SegResult ra = run(a.image, phantom_init_points(a), SegConfig{});
        const SegResult rb = run(b.image, phantom_init_points(b), SegConfig{});
        bool same = std::equal(a.image.data().begin(), a.image.data().end(), b.image.data().begin()) &&
                    ra.mask == rb.mask && ra.contour == rb.contour && ra.iterations_run == rb.iterations_run &&
                    ra.diagnostics.size() == rb.diagnostics.size();
        for (std::size_t i = 0; same && i < ra.diagnostics.size(); ++i)
            same = ra.diagnostics[i].cut_value == rb.diagnostics[i].cut_value &&
                   ra.diagnostics[i].changed_pixels == rb.diagnostics[i].changed_pixels;
        identical += same;
    }
    report(identical == 6, "determinism",
           fmt("%d/6 repeated phantom generations and segmentations are bit-identical", identical));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    check_maxflow();
    check_fusion();
    check_convolution();
    check_metrics();
    check_clean();
    check_trends();
    check_icc();
    check_convergence_and_determinism();
    std::printf("%s: %d criteria failed (%.1f s)\n", failures ? "FAIL" : "PASS", failures, seconds_since(t0));
    return failures ? 1 : 0;
}
