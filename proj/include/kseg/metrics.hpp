#pragma once

#include "kseg/raster.hpp"

#include <span>
#include <vector>

namespace kseg {

struct MetricReport {
    double dice = 0.0;
    double jaccard = 0.0;
    /// Directional: mean over boundary(pred) of the distance to boundary(truth).
    double mean_distance = 0.0;
    double mean_distance_symmetric = 0.0;
};

double dice(const BinaryMask& e, const BinaryMask& f);
double jaccard(const BinaryMask& e, const BinaryMask& f);

/// mean over e in boundary(E) of min over f in boundary(F) of |e - f|.
double mean_distance(const BinaryMask& e, const BinaryMask& f);
/// (mean_distance(E,F) + mean_distance(F,E)) / 2
double mean_distance_symmetric(const BinaryMask& e, const BinaryMask& f);

MetricReport evaluate(const BinaryMask& pred, const BinaryMask& truth);

/// Row-major k x n matrix: k repeated measurements (rows) of n subjects
/// (columns).
struct Measurements {
    int runs = 0;
    int subjects = 0;
    std::vector<double> values;

    double at(int run, int subject) const {
        return values[static_cast<std::size_t>(run) * static_cast<std::size_t>(subjects) + static_cast<std::size_t>(subject)];
    }
};

/// McGraw-Wong ICC(A,k): two-way random effects, absolute agreement,
/// average of k measurements.
double icc(const Measurements& m);

inline constexpr const char* kIccModel = "ICC(A,k) two-way random, absolute agreement, average measures";

}  // namespace kseg
