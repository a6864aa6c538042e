#pragma once

#include "kseg/metrics.hpp"
#include "kseg/phantom.hpp"
#include "kseg/segmenter.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kseg {

struct Case {
    std::string id;
    GrayImage image;
    Contour init;
    BinaryMask truth;
};

/// Phantom cases with the default 8-point initialization.
std::vector<Case> phantom_cases(PhantomPreset preset, std::uint64_t first_seed, int count);

/// Runs fn(0..n-1) on up to `workers` threads. The first exception is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// One segmentation of one case under one named setting.
struct CaseOutcome {
    std::string case_id;
    std::string setting;
    bool ok = false;
    MetricReport metrics;
    int iterations = 0;
    bool converged = false;
    std::string error_code;
    std::string error_message;
};

CaseOutcome evaluate_case(const Case& c, const Contour& init, const SegConfig& cfg, const std::string& setting);

void write_outcomes_csv(std::ostream& os, const std::vector<CaseOutcome>& outcomes);

struct GridSpec {
    std::vector<int> scales_options{2, 3, 4, 5};
    std::vector<int> directions_options{4, 8, 16};
    std::vector<double> sigma_options{1.0, 0.1, 0.01};

    void validate() const;
    static GridSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct GridRow {
    int scales = 0;
    int directions = 0;
    double sigma = 0.0;
    double mean_dice = 0.0;
    double mean_distance = 0.0;
    int succeeded = 0;
    int failed = 0;
};

struct GridResult {
    /// Sorted by mean Dice descending; settings where every case failed are
    /// left out.
    std::vector<GridRow> rows;
    std::vector<CaseOutcome> outcomes;
};

std::string grid_setting_name(int scales, int directions, double sigma);

GridResult grid_search(const std::vector<Case>& cases, const GridSpec& spec, const SegConfig& base, int workers = 1);

void write_grid_csv(std::ostream& os, const GridResult& result);

enum class AblationMode { FeatureSet, WeightMode, InitJitter };

std::string_view to_string(AblationMode mode);
AblationMode parse_ablation_mode(std::string_view text);

struct VariantSummary {
    std::string variant;
    int runs = 0;
    int failed = 0;
    /// Failed runs count as Dice = Jaccard = 0.
    double mean_dice = 0.0;
    double mean_jaccard = 0.0;
    /// Over successful runs only.
    double mean_distance = 0.0;
};

struct AblationResult {
    AblationMode mode = AblationMode::FeatureSet;
    std::vector<VariantSummary> variants;
    std::vector<CaseOutcome> outcomes;
    /// Jitter mode: ICC(A,k) over repetitions x cases.
    std::optional<double> icc_dice;
    std::optional<double> icc_jaccard;
    std::optional<double> icc_mean_distance;

    /// Dice of one case under one variant (0 if that run failed).
    double dice_of(const std::string& case_id, const std::string& variant) const;
    nlohmann::json summary_json() const;
};

struct AblationOptions {
    int jitter_repetitions = 3;
    double jitter_amplitude = 3.0;
    std::uint64_t seed = 0;
    int workers = 1;
};

AblationResult ablation_run(const std::vector<Case>& cases, AblationMode mode, const SegConfig& base,
                            const AblationOptions& options = {});

}  // namespace kseg
