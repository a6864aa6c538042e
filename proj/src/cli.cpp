#include "kseg/cli.hpp"

#include "kseg/config.hpp"
#include "kseg/experiments.hpp"
#include "kseg/image_io.hpp"
#include "kseg/metrics.hpp"
#include "kseg/phantom.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace kseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path, const std::string& what) {
    const auto bytes = read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Format, what + " is not valid JSON: " + e.what(), what);
    }
}

void write_json_file(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string absolute_string(const fs::path& p) {
    return fs::absolute(p).lexically_normal().string();
}

/// Flags that mirror SegConfig keys; only the ones given on the command line
/// end up in the override object.
struct ConfigFlags {
    std::optional<std::string> config_path;
    std::optional<int> scales;
    std::optional<int> directions;
    std::optional<double> sigma;
    std::optional<std::string> feature_set;
    std::optional<std::string> weight_mode;
    std::optional<int> band_inflate;
    std::optional<int> band_shrink;
    std::optional<int> radius;
    std::optional<int> max_iter;
    std::optional<int> connectivity;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config file (flags override it)");
        app->add_option("--scales", scales, "Gabor scales");
        app->add_option("--directions", directions, "Gabor directions");
        app->add_option("--sigma", sigma, "weight bandwidth sigma");
        app->add_option("--feature-set", feature_set, "intensity|gabor|both");
        app->add_option("--weight-mode", weight_mode, "pixel|regional|both");
        app->add_option("--band-inflate", band_inflate, "narrow band dilation radius");
        app->add_option("--band-shrink", band_shrink, "narrow band erosion radius");
        app->add_option("--radius", radius, "regional neighborhood radius");
        app->add_option("--max-iter", max_iter, "maximum iterations");
        app->add_option("--connectivity", connectivity, "4 or 8");
    }

    SegConfig resolve() const {
        SegConfig cfg;
        if (config_path) apply_config_json(cfg, read_json_file(*config_path, "config"), "config");
        json o = json::object();
        if (scales) o["scales"] = *scales;
        if (directions) o["directions"] = *directions;
        if (sigma) o["sigma"] = *sigma;
        if (feature_set) o["feature_set"] = *feature_set;
        if (weight_mode) o["weight_mode"] = *weight_mode;
        if (band_inflate) o["band_inflate"] = *band_inflate;
        if (band_shrink) o["band_shrink"] = *band_shrink;
        if (radius) o["radius"] = *radius;
        if (max_iter) o["max_iter"] = *max_iter;
        if (connectivity) o["connectivity"] = *connectivity;
        apply_config_json(cfg, o);
        return cfg;
    }
};

json result_document(const SegResult& r) {
    json diag = json::array();
    for (const auto& d : r.diagnostics) {
        diag.push_back({{"band_size", d.band_size},
                        {"changed_pixels", d.changed_pixels},
                        {"changed_fraction", d.changed_fraction()},
                        {"cut_value", d.cut_value}});
    }
    return {{"contour", pixels_to_json(r.contour)},
            {"iterations", r.iterations_run},
            {"converged", r.converged},
            {"diagnostics", diag}};
}

/// Runs a segmentation described by a manifest and writes its outputs.
void execute_segment(const RunManifest& m) {
    const GrayImage img = load_image(m.inputs.at("image"));
    const SegResult r = run(img, m.init, m.config);
    write_file(m.outputs.at("mask"), encode_mask_png(r.mask));
    write_json_file(m.outputs.at("contour"), result_document(r));
}

std::vector<Case> load_cases(const fs::path& path) {
    const json j = read_json_file(path, "cases");
    if (!j.is_array() || j.empty()) throw Error(ErrorCode::Validation, "cases must be a nonempty array", "cases");
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    std::vector<Case> cases;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string at = "cases[" + std::to_string(i) + "]";
        const auto& e = j[i];
        if (!e.is_object() || !e.contains("image") || !e.contains("init") || !e.contains("truth")) {
            throw Error(ErrorCode::Validation, "case needs image, init and truth", at);
        }
        Case c;
        c.id = e.value("id", "case-" + std::to_string(i));
        c.image = load_image(resolve(e["image"].get<std::string>()));
        c.truth = load_mask(resolve(e["truth"].get<std::string>()));
        const json& init = e["init"];
        c.init = init.is_string() ? parse_points_json(read_json_file(resolve(init.get<std::string>()), at + ".init"), at + ".init")
                                  : parse_points_json(init, at + ".init");
        cases.push_back(std::move(c));
    }
    return cases;
}

void write_stream_file(const fs::path& path, const std::string& text) { write_text(path, text); }

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kidney ultrasound graph-cut segmentation toolkit", "kseg"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolkitVersion);

    // segment
    auto* seg = app.add_subcommand("segment", "segment one image from initialization points");
    std::string seg_image, seg_init, seg_out;
    std::optional<std::string> seg_contour, seg_manifest;
    std::uint64_t seg_seed = 0;
    ConfigFlags seg_flags;
    seg->add_option("--image", seg_image, "PNG or PGM grayscale image")->required();
    seg->add_option("--init", seg_init, "init points JSON [[x,y],...]")->required();
    seg->add_option("--out", seg_out, "output mask PNG")->required();
    seg->add_option("--contour", seg_contour, "output contour/result JSON (default <out>.json)");
    seg->add_option("--manifest", seg_manifest, "output manifest JSON (default <out>.manifest.json)");
    seg->add_option("--seed", seg_seed, "recorded in the manifest");
    seg_flags.attach(seg);

    // replay
    auto* rep = app.add_subcommand("replay", "re-run a segmentation from its manifest");
    std::string rep_manifest;
    std::optional<std::string> rep_out_dir;
    rep->add_option("--manifest", rep_manifest, "manifest JSON")->required();
    rep->add_option("--out-dir", rep_out_dir, "write outputs here instead of the recorded paths");

    // eval
    auto* ev = app.add_subcommand("eval", "compare a predicted mask with a truth mask");
    std::string ev_pred, ev_truth;
    std::optional<std::string> ev_out;
    ev->add_option("--pred", ev_pred, "predicted mask PNG/PGM")->required();
    ev->add_option("--truth", ev_truth, "truth mask PNG/PGM")->required();
    ev->add_option("--out", ev_out, "write the report here as well as stdout");

    // gridsearch
    auto* gs = app.add_subcommand("gridsearch", "grid search over scales, directions and sigma");
    std::optional<std::string> gs_cases, gs_grid, gs_outcomes;
    std::string gs_preset = "clean-ellipse";
    std::uint64_t gs_seed = 0;
    int gs_count = 5, gs_workers = 1;
    std::string gs_out;
    ConfigFlags gs_flags;
    gs->add_option("--cases", gs_cases, "cases JSON [{id,image,init,truth}]");
    gs->add_option("--preset", gs_preset, "phantom preset when no --cases");
    gs->add_option("--count", gs_count, "number of phantoms when no --cases");
    gs->add_option("--seed", gs_seed, "first phantom seed");
    gs->add_option("--grid", gs_grid, "GridSpec JSON (default: full grid)");
    gs->add_option("--workers", gs_workers, "worker threads");
    gs->add_option("--out", gs_out, "ranked table CSV")->required();
    gs->add_option("--outcomes", gs_outcomes, "per case x setting CSV");
    gs_flags.attach(gs);

    // ablate
    auto* ab = app.add_subcommand("ablate", "feature-set, weight-mode or init-jitter ablation");
    std::string ab_mode, ab_out;
    std::optional<std::string> ab_cases, ab_summary;
    std::string ab_preset = "weak-boundary";
    std::uint64_t ab_seed = 0;
    int ab_count = 10, ab_workers = 1, ab_reps = 3;
    ConfigFlags ab_flags;
    ab->add_option("--mode", ab_mode, "feature_set|weight_mode|init_jitter")->required();
    ab->add_option("--cases", ab_cases, "cases JSON [{id,image,init,truth}]");
    ab->add_option("--preset", ab_preset, "phantom preset when no --cases");
    ab->add_option("--count", ab_count, "number of phantoms when no --cases");
    ab->add_option("--seed", ab_seed, "first phantom seed and jitter seed");
    ab->add_option("--repetitions", ab_reps, "jittered initializations per case");
    ab->add_option("--workers", ab_workers, "worker threads");
    ab->add_option("--out", ab_out, "per-run CSV")->required();
    ab->add_option("--summary", ab_summary, "summary JSON");
    ab_flags.attach(ab);

    // phantom
    auto* ph = app.add_subcommand("phantom", "generate a speckle phantom and its truth mask");
    std::string ph_preset;
    std::uint64_t ph_seed = 0;
    std::optional<std::string> ph_out;
    std::optional<double> ph_speckle;
    ph->add_option("--preset", ph_preset, "clean-ellipse|weak-boundary|high-speckle")->required();
    ph->add_option("--seed", ph_seed, "generator seed");
    ph->add_option("--out", ph_out, "output prefix (writes <prefix>_image.png, _truth.png, _init.json, _meta.json)");
    ph->add_option("--speckle", ph_speckle, "override the preset speckle scale");

    // features
    auto* ft = app.add_subcommand("features", "write the fused Gabor feature map as PNG");
    std::string ft_image, ft_out;
    ConfigFlags ft_flags;
    ft->add_option("--image", ft_image, "PNG or PGM grayscale image")->required();
    ft->add_option("--out", ft_out, "output PNG")->required();
    ft_flags.attach(ft);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << json{{"error", {{"code", "usage_error"}, {"message", e.what()}}}}.dump() << "\n";
        return 2;
    }

    try {
        if (*seg) {
            RunManifest m;
            m.command = "segment";
            m.config = seg_flags.resolve();
            m.seed = seg_seed;
            m.inputs["image"] = absolute_string(seg_image);
            m.inputs["init"] = absolute_string(seg_init);
            m.init = parse_points_json(read_json_file(seg_init, "init"), "init");
            if (m.init.points.size() < 3) throw Error(ErrorCode::Validation, "at least 3 points are required", "init");
            m.outputs["mask"] = absolute_string(seg_out);
            m.outputs["contour"] = absolute_string(seg_contour.value_or(seg_out + ".json"));
            const std::string manifest_path = absolute_string(seg_manifest.value_or(seg_out + ".manifest.json"));
            execute_segment(m);
            write_json_file(manifest_path, m.to_json());
            out << json{{"mask", m.outputs["mask"]}, {"contour", m.outputs["contour"]}, {"manifest", manifest_path}}.dump()
                << "\n";
        } else if (*rep) {
            RunManifest m = RunManifest::from_json(read_json_file(rep_manifest, "manifest"));
            if (m.command != "segment") throw Error(ErrorCode::Validation, "only segment manifests can be replayed", "command");
            if (rep_out_dir) {
                for (auto& [key, path] : m.outputs) path = absolute_string(fs::path(*rep_out_dir) / fs::path(path).filename());
            }
            execute_segment(m);
            out << json{{"outputs", m.outputs}}.dump() << "\n";
        } else if (*ev) {
            const MetricReport r = evaluate(load_mask(ev_pred), load_mask(ev_truth));
            const std::string text = metrics_to_json(r).dump(2) + "\n";
            if (ev_out) write_stream_file(*ev_out, text);
            out << text;
        } else if (*gs) {
            const SegConfig base = gs_flags.resolve();
            const GridSpec spec = gs_grid ? GridSpec::from_json(read_json_file(*gs_grid, "grid")) : GridSpec{};
            const auto cases = gs_cases ? load_cases(*gs_cases) : phantom_cases(parse_preset(gs_preset), gs_seed, gs_count);
            const GridResult res = grid_search(cases, spec, base, gs_workers);
            std::ostringstream table;
            write_grid_csv(table, res);
            write_stream_file(gs_out, table.str());
            if (gs_outcomes) {
                std::ostringstream rows;
                write_outcomes_csv(rows, res.outcomes);
                write_stream_file(*gs_outcomes, rows.str());
            }
            out << table.str();
        } else if (*ab) {
            const SegConfig base = ab_flags.resolve();
            const AblationMode mode = parse_ablation_mode(ab_mode);
            const auto cases = ab_cases ? load_cases(*ab_cases) : phantom_cases(parse_preset(ab_preset), ab_seed, ab_count);
            AblationOptions opt;
            opt.seed = ab_seed;
            opt.workers = ab_workers;
            opt.jitter_repetitions = ab_reps;
            const AblationResult res = ablation_run(cases, mode, base, opt);
            std::ostringstream rows;
            write_outcomes_csv(rows, res.outcomes);
            write_stream_file(ab_out, rows.str());
            const json summary = res.summary_json();
            if (ab_summary) write_json_file(*ab_summary, summary);
            out << summary.dump(2) << "\n";
        } else if (*ph) {
            PhantomSpec spec = PhantomSpec::for_preset(parse_preset(ph_preset), ph_seed);
            if (ph_speckle) spec.speckle = *ph_speckle;
            const Phantom p = make_phantom(spec);
            const std::string prefix = ph_out.value_or("phantom_" + ph_preset + "_" + std::to_string(ph_seed));
            write_file(prefix + "_image.png", encode_png(quantize(p.image)));
            write_file(prefix + "_truth.png", encode_mask_png(p.truth));
            write_json_file(prefix + "_init.json", points_to_json(phantom_init_points(p)));
            json meta{{"preset", ph_preset},
                      {"seed", ph_seed},
                      {"size", spec.size},
                      {"interior", spec.interior},
                      {"exterior", spec.exterior},
                      {"speckle", spec.speckle},
                      {"bean", spec.bean},
                      {"gap_degrees", spec.gap_degrees},
                      {"gap_depth", spec.gap_depth},
                      {"gap_center", p.gap_center},
                      {"version", kToolkitVersion}};
            write_json_file(prefix + "_meta.json", meta);
            out << json{{"image", prefix + "_image.png"}, {"truth", prefix + "_truth.png"}}.dump() << "\n";
        } else if (*ft) {
            const SegConfig cfg = ft_flags.resolve();
            const GrayImage img = load_image(ft_image);
            const FeatureMap f = gabor_feature_map(img, cfg.gabor);
            write_file(ft_out, encode_png(quantize(GrayImage(f.width, f.height, f.data))));
            out << json{{"features", ft_out}}.dump() << "\n";
        }
    } catch (const Error& e) {
        err << json{{"error", error_to_json(e)}}.dump() << "\n";
        const bool usage = e.code() == ErrorCode::Validation || e.code() == ErrorCode::Configuration;
        return usage ? 2 : 1;
    } catch (const std::exception& e) {
        err << json{{"error", {{"code", "internal_error"}, {"message", e.what()}}}}.dump() << "\n";
        return 1;
    }
    return 0;
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace kseg::cli
