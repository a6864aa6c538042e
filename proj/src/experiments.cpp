#include "kseg/experiments.hpp"

#include "kseg/error.hpp"
#include "kseg/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace kseg {

std::vector<Case> phantom_cases(PhantomPreset preset, std::uint64_t first_seed, int count) {
    std::vector<Case> cases;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
        Phantom ph = make_phantom(preset, seed);
        Case c;
        c.id = std::string(to_string(preset)) + "-" + std::to_string(seed);
        c.init = phantom_init_points(ph);
        c.image = std::move(ph.image);
        c.truth = std::move(ph.truth);
        cases.push_back(std::move(c));
    }
    return cases;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

CaseOutcome evaluate_case(const Case& c, const Contour& init, const SegConfig& cfg, const std::string& setting) {
    CaseOutcome out;
    out.case_id = c.id;
    out.setting = setting;
    try {
        const SegResult r = run(c.image, init, cfg);
        out.metrics = evaluate(r.mask, c.truth);
        out.iterations = r.iterations_run;
        out.converged = r.converged;
        out.ok = true;
    } catch (const Error& e) {
        out.error_code = std::string(to_string(e.code()));
        out.error_message = e.what();
    }
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

void write_outcomes_csv(std::ostream& os, const std::vector<CaseOutcome>& outcomes) {
    os << "case,setting,status,dice,jaccard,mean_distance,mean_distance_symmetric,iterations,converged,error\n";
    for (const auto& o : outcomes) {
        os << csv_field(o.case_id) << ',' << csv_field(o.setting) << ',' << (o.ok ? "ok" : "failed") << ',';
        if (o.ok) {
            os << format_double(o.metrics.dice) << ',' << format_double(o.metrics.jaccard) << ','
               << format_double(o.metrics.mean_distance) << ',' << format_double(o.metrics.mean_distance_symmetric);
        } else {
            os << ",,,";
        }
        os << ',' << o.iterations << ',' << (o.converged ? "true" : "false") << ',' << csv_field(o.error_code) << '\n';
    }
}

void GridSpec::validate() const {
    if (scales_options.empty()) throw Error(ErrorCode::Validation, "scales_options is empty", "scales_options");
    if (directions_options.empty()) {
        throw Error(ErrorCode::Validation, "directions_options is empty", "directions_options");
    }
    if (sigma_options.empty()) throw Error(ErrorCode::Validation, "sigma_options is empty", "sigma_options");
    for (std::size_t i = 0; i < scales_options.size(); ++i) {
        if (scales_options[i] < 1) {
            throw Error(ErrorCode::Validation, "scales must be >= 1", "scales_options[" + std::to_string(i) + "]");
        }
    }
    for (std::size_t i = 0; i < directions_options.size(); ++i) {
        if (directions_options[i] < 1) {
            throw Error(ErrorCode::Validation, "directions must be >= 1", "directions_options[" + std::to_string(i) + "]");
        }
    }
    for (std::size_t i = 0; i < sigma_options.size(); ++i) {
        if (!(sigma_options[i] > 0.0)) {
            throw Error(ErrorCode::Validation, "sigma must be > 0", "sigma_options[" + std::to_string(i) + "]");
        }
    }
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Validation, "grid spec must be an object");
    GridSpec g;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "scales_options") g.scales_options = v.get<std::vector<int>>();
            else if (key == "directions_options") g.directions_options = v.get<std::vector<int>>();
            else if (key == "sigma_options") g.sigma_options = v.get<std::vector<double>>();
            else throw Error(ErrorCode::Validation, "unknown grid spec key: " + key, key);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Validation, std::string("malformed grid spec: ") + e.what());
    }
    g.validate();
    return g;
}

nlohmann::json GridSpec::to_json() const {
    return {{"scales_options", scales_options},
            {"directions_options", directions_options},
            {"sigma_options", sigma_options}};
}

std::string grid_setting_name(int scales, int directions, double sigma) {
    return "scales=" + std::to_string(scales) + ";directions=" + std::to_string(directions) +
           ";sigma=" + format_double(sigma);
}

GridResult grid_search(const std::vector<Case>& cases, const GridSpec& spec, const SegConfig& base, int workers) {
    if (cases.empty()) throw Error(ErrorCode::Validation, "grid search needs at least one case", "cases");
    spec.validate();

    struct Setting {
        int scales;
        int directions;
        double sigma;
        SegConfig cfg;
    };
    std::vector<Setting> settings;
    for (int s : spec.scales_options) {
        for (int d : spec.directions_options) {
            for (double sg : spec.sigma_options) {
                SegConfig cfg = base;
                cfg.gabor.num_scales = s;
                cfg.gabor.wavelengths.clear();
                cfg.gabor.num_directions = d;
                cfg.weights.sigma = sg;
                cfg.validate();
                settings.push_back({s, d, sg, cfg});
            }
        }
    }

    GridResult result;
    result.outcomes.resize(settings.size() * cases.size());
    parallel_for(result.outcomes.size(), workers, [&](std::size_t k) {
        const Setting& st = settings[k / cases.size()];
        const Case& c = cases[k % cases.size()];
        result.outcomes[k] = evaluate_case(c, c.init, st.cfg, grid_setting_name(st.scales, st.directions, st.sigma));
    });

    for (std::size_t si = 0; si < settings.size(); ++si) {
        GridRow row{settings[si].scales, settings[si].directions, settings[si].sigma};
        for (std::size_t ci = 0; ci < cases.size(); ++ci) {
            const auto& o = result.outcomes[si * cases.size() + ci];
            if (!o.ok) {
                ++row.failed;
                continue;
            }
            ++row.succeeded;
            row.mean_dice += o.metrics.dice;
            row.mean_distance += o.metrics.mean_distance;
        }
        if (row.succeeded == 0) continue;
        row.mean_dice /= row.succeeded;
        row.mean_distance /= row.succeeded;
        result.rows.push_back(row);
    }
    std::stable_sort(result.rows.begin(), result.rows.end(), [](const GridRow& a, const GridRow& b) {
        if (a.mean_dice != b.mean_dice) return a.mean_dice > b.mean_dice;
        return a.mean_distance < b.mean_distance;
    });
    return result;
}

void write_grid_csv(std::ostream& os, const GridResult& result) {
    os << "rank,scales,directions,sigma,mean_dice,mean_distance,succeeded,failed\n";
    int rank = 1;
    for (const auto& r : result.rows) {
        os << rank++ << ',' << r.scales << ',' << r.directions << ',' << format_double(r.sigma) << ','
           << format_double(r.mean_dice) << ',' << format_double(r.mean_distance) << ',' << r.succeeded << ','
           << r.failed << '\n';
    }
}

std::string_view to_string(AblationMode mode) {
    switch (mode) {
        case AblationMode::FeatureSet: return "feature_set";
        case AblationMode::WeightMode: return "weight_mode";
        case AblationMode::InitJitter: return "init_jitter";
    }
    return "feature_set";
}

AblationMode parse_ablation_mode(std::string_view text) {
    if (text == "feature_set" || text == "feature-set") return AblationMode::FeatureSet;
    if (text == "weight_mode" || text == "weight-mode") return AblationMode::WeightMode;
    if (text == "init_jitter" || text == "init-jitter") return AblationMode::InitJitter;
    throw Error(ErrorCode::Validation, "unknown ablation mode: " + std::string(text), "mode");
}

double AblationResult::dice_of(const std::string& case_id, const std::string& variant) const {
    for (const auto& o : outcomes) {
        if (o.case_id == case_id && o.setting == variant) return o.ok ? o.metrics.dice : 0.0;
    }
    throw Error(ErrorCode::NotFound, "no outcome for " + case_id + " / " + variant);
}

nlohmann::json AblationResult::summary_json() const {
    nlohmann::json j;
    j["mode"] = std::string(to_string(mode));
    j["variants"] = nlohmann::json::array();
    for (const auto& v : variants) {
        j["variants"].push_back({{"variant", v.variant},
                                 {"runs", v.runs},
                                 {"failed", v.failed},
                                 {"mean_dice", v.mean_dice},
                                 {"mean_jaccard", v.mean_jaccard},
                                 {"mean_distance", v.mean_distance}});
    }
    if (mode == AblationMode::InitJitter) {
        nlohmann::json icc_j;
        icc_j["model"] = kIccModel;
        icc_j["dice"] = icc_dice ? nlohmann::json(*icc_dice) : nlohmann::json(nullptr);
        icc_j["jaccard"] = icc_jaccard ? nlohmann::json(*icc_jaccard) : nlohmann::json(nullptr);
        icc_j["mean_distance"] = icc_mean_distance ? nlohmann::json(*icc_mean_distance) : nlohmann::json(nullptr);
        j["icc"] = icc_j;
    }
    return j;
}

AblationResult ablation_run(const std::vector<Case>& cases, AblationMode mode, const SegConfig& base,
                            const AblationOptions& options) {
    if (cases.empty()) throw Error(ErrorCode::Validation, "ablation needs at least one case", "cases");
    base.validate();

    struct Variant {
        std::string name;
        SegConfig cfg;
        int repetition = -1;
    };
    std::vector<Variant> variants;
    switch (mode) {
        case AblationMode::FeatureSet:
            for (auto fs : {FeatureSet::Intensity, FeatureSet::Gabor, FeatureSet::Both}) {
                SegConfig cfg = base;
                cfg.feature_set = fs;
                variants.push_back({std::string(to_string(fs)), cfg});
            }
            break;
        case AblationMode::WeightMode:
            for (auto wm : {WeightMode::Pixel, WeightMode::Regional, WeightMode::Both}) {
                SegConfig cfg = base;
                cfg.weights.weight_mode = wm;
                variants.push_back({std::string(to_string(wm)), cfg});
            }
            break;
        case AblationMode::InitJitter:
            if (options.jitter_repetitions < 2) {
                throw Error(ErrorCode::Validation, "jitter ablation needs at least 2 repetitions", "repetitions");
            }
            for (int r = 0; r < options.jitter_repetitions; ++r) variants.push_back({"init-" + std::to_string(r), base, r});
            break;
    }

    AblationResult result;
    result.mode = mode;
    result.outcomes.resize(variants.size() * cases.size());
    parallel_for(result.outcomes.size(), options.workers, [&](std::size_t k) {
        const std::size_t vi = k / cases.size();
        const std::size_t ci = k % cases.size();
        const Variant& v = variants[vi];
        const Case& c = cases[ci];
        Contour init = c.init;
        if (v.repetition >= 0) {
            init = jitter_points(c.init, options.jitter_amplitude,
                                 derive_seed(options.seed, ci + 1, static_cast<std::uint64_t>(v.repetition) + 1),
                                 c.image.width(), c.image.height());
        }
        result.outcomes[k] = evaluate_case(c, init, v.cfg, v.name);
    });

    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        VariantSummary s;
        s.variant = variants[vi].name;
        int ok = 0;
        for (std::size_t ci = 0; ci < cases.size(); ++ci) {
            const auto& o = result.outcomes[vi * cases.size() + ci];
            ++s.runs;
            if (!o.ok) {
                ++s.failed;
                continue;
            }
            ++ok;
            s.mean_dice += o.metrics.dice;
            s.mean_jaccard += o.metrics.jaccard;
            s.mean_distance += o.metrics.mean_distance;
        }
        s.mean_dice /= s.runs;
        s.mean_jaccard /= s.runs;
        s.mean_distance = ok ? s.mean_distance / ok : 0.0;
        result.variants.push_back(s);
    }

    if (mode == AblationMode::InitJitter && cases.size() >= 2) {
        const int k = static_cast<int>(variants.size());
        const int n = static_cast<int>(cases.size());
        Measurements md{k, n, std::vector<double>(result.outcomes.size())};
        Measurements mj = md;
        Measurements mdist = md;
        bool all_ok = true;
        for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
            const auto& o = result.outcomes[i];
            md.values[i] = o.ok ? o.metrics.dice : 0.0;
            mj.values[i] = o.ok ? o.metrics.jaccard : 0.0;
            mdist.values[i] = o.metrics.mean_distance;
            all_ok = all_ok && o.ok;
        }
        auto try_icc = [](const Measurements& m) -> std::optional<double> {
            try {
                return icc(m);
            } catch (const Error&) {
                return std::nullopt;
            }
        };
        result.icc_dice = try_icc(md);
        result.icc_jaccard = try_icc(mj);
        if (all_ok) result.icc_mean_distance = try_icc(mdist);
    }
    return result;
}

}  // namespace kseg
