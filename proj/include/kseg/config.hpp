#pragma once

#include "kseg/error.hpp"
#include "kseg/metrics.hpp"
#include "kseg/raster.hpp"
#include "kseg/segmenter.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>

namespace kseg {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Flat JSON object whose keys mirror the command-line flags.
nlohmann::json config_to_json(const SegConfig& cfg);

/// Overrides fields of `cfg` from a JSON object. Unknown keys and wrongly
/// typed values throw Validation with a field path like "overrides.sigma".
void apply_config_json(SegConfig& cfg, const nlohmann::json& j, const std::string& path_prefix = {});

SegConfig config_from_json(const nlohmann::json& j);

/// `[[x,y],...]`
Contour parse_points_json(const nlohmann::json& j, const std::string& path_prefix = "points");
nlohmann::json points_to_json(const Contour& c);
nlohmann::json pixels_to_json(const std::vector<Pixel>& chain);

nlohmann::json metrics_to_json(const MetricReport& r);

nlohmann::json error_to_json(const Error& e);

struct RunManifest {
    std::string command;
    std::map<std::string, std::string> inputs;
    Contour init;
    SegConfig config;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> outputs;
    std::string version = kToolkitVersion;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

}  // namespace kseg
