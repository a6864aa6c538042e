#include "kseg/config.hpp"

#include "kseg/metrics.hpp"

namespace kseg {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw Error(ErrorCode::Validation, "expected an integer", path);
    return v.get<int>();
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw Error(ErrorCode::Validation, "expected a number", path);
    return v.get<double>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw Error(ErrorCode::Validation, "expected a string", path);
    return v.get<std::string>();
}

}  // namespace

json config_to_json(const SegConfig& cfg) {
    json j;
    j["scales"] = cfg.gabor.num_scales;
    j["directions"] = cfg.gabor.num_directions;
    j["wavelengths"] = cfg.gabor.resolved_wavelengths();
    j["sigma_ratio"] = cfg.gabor.sigma_ratio;
    j["sigma"] = cfg.weights.sigma;
    j["radius"] = cfg.weights.neighborhood_radius;
    j["band_inflate"] = cfg.weights.band_inflate;
    j["band_shrink"] = cfg.weights.band_shrink;
    j["connectivity"] = cfg.weights.connectivity;
    j["epsilon"] = cfg.weights.epsilon;
    j["weight_mode"] = std::string(to_string(cfg.weights.weight_mode));
    j["feature_set"] = std::string(to_string(cfg.feature_set));
    j["max_iter"] = cfg.max_iterations;
    j["convergence_fraction"] = cfg.convergence_fraction;
    j["dynamic_band"] = cfg.dynamic_band;
    return j;
}

void apply_config_json(SegConfig& cfg, const json& j, const std::string& prefix) {
    if (!j.is_object()) throw Error(ErrorCode::Validation, "config must be a JSON object", prefix);
    for (const auto& [key, v] : j.items()) {
        const std::string path = join(prefix, key);
        try {
            if (key == "scales") {
                cfg.gabor.num_scales = get_int(v, path);
                if (!j.contains("wavelengths")) cfg.gabor.wavelengths.clear();
            } else if (key == "directions") {
                cfg.gabor.num_directions = get_int(v, path);
            } else if (key == "wavelengths") {
                if (!v.is_array()) throw Error(ErrorCode::Validation, "expected an array", path);
                std::vector<double> w;
                for (std::size_t i = 0; i < v.size(); ++i) w.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
                cfg.gabor.wavelengths = std::move(w);
            } else if (key == "sigma_ratio") {
                cfg.gabor.sigma_ratio = get_number(v, path);
            } else if (key == "sigma") {
                cfg.weights.sigma = get_number(v, path);
            } else if (key == "radius") {
                cfg.weights.neighborhood_radius = get_int(v, path);
            } else if (key == "band_inflate") {
                cfg.weights.band_inflate = get_int(v, path);
            } else if (key == "band_shrink") {
                cfg.weights.band_shrink = get_int(v, path);
            } else if (key == "connectivity") {
                cfg.weights.connectivity = get_int(v, path);
            } else if (key == "epsilon") {
                cfg.weights.epsilon = get_number(v, path);
            } else if (key == "weight_mode") {
                cfg.weights.weight_mode = parse_weight_mode(get_string(v, path));
            } else if (key == "feature_set") {
                cfg.feature_set = parse_feature_set(get_string(v, path));
            } else if (key == "max_iter") {
                cfg.max_iterations = get_int(v, path);
            } else if (key == "convergence_fraction") {
                cfg.convergence_fraction = get_number(v, path);
            } else if (key == "dynamic_band") {
                if (!v.is_boolean()) throw Error(ErrorCode::Validation, "expected a boolean", path);
                cfg.dynamic_band = v.get<bool>();
            } else {
                throw Error(ErrorCode::Validation, "unknown config key: " + key, path);
            }
        } catch (const Error& e) {
            if (!e.field_path().empty() && e.field_path() == path) throw;
            throw Error(e.code(), e.what(), path);
        }
    }
    if (j.contains("wavelengths") && !j.contains("scales")) {
        cfg.gabor.num_scales = static_cast<int>(cfg.gabor.wavelengths.size());
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), join(prefix, e.field_path()));
    }
}

SegConfig config_from_json(const json& j) {
    SegConfig cfg;
    apply_config_json(cfg, j);
    return cfg;
}

Contour parse_points_json(const json& j, const std::string& prefix) {
    if (!j.is_array()) throw Error(ErrorCode::Validation, "points must be an array of [x,y]", prefix);
    Contour c;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = prefix + "[" + std::to_string(i) + "]";
        const auto& p = j[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw Error(ErrorCode::Validation, "point must be [x,y]", path);
        }
        c.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return c;
}

json points_to_json(const Contour& c) {
    json j = json::array();
    for (const auto& p : c.points) j.push_back({p.x, p.y});
    return j;
}

json pixels_to_json(const std::vector<Pixel>& chain) {
    json j = json::array();
    for (const auto& p : chain) j.push_back({p.x, p.y});
    return j;
}

json metrics_to_json(const MetricReport& r) {
    return {{"dice", r.dice},
            {"jaccard", r.jaccard},
            {"mean_distance", r.mean_distance},
            {"mean_distance_symmetric", r.mean_distance_symmetric}};
}

json error_to_json(const Error& e) {
    json j{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (!e.field_path().empty()) j["field_path"] = e.field_path();
    return j;
}

json RunManifest::to_json() const {
    return {{"command", command},
            {"inputs", inputs},
            {"init", points_to_json(init)},
            {"config", config_to_json(config)},
            {"seed", seed},
            {"outputs", outputs},
            {"version", version}};
}

RunManifest RunManifest::from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Validation, "manifest must be an object");
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.init = parse_points_json(j.at("init"), "init");
        m.config = SegConfig{};
        apply_config_json(m.config, j.at("config"), "config");
        m.seed = j.value("seed", std::uint64_t{0});
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.version = j.value("version", std::string(kToolkitVersion));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Validation, std::string("malformed manifest: ") + e.what());
    }
    return m;
}

}  // namespace kseg
