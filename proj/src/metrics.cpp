#include "kseg/metrics.hpp"

#include "kseg/distance_transform.hpp"
#include "kseg/error.hpp"

#include <cmath>

namespace kseg {

namespace {

struct Overlap {
    std::size_t e = 0;
    std::size_t f = 0;
    std::size_t both = 0;
};

Overlap overlap(const BinaryMask& e, const BinaryMask& f) {
    if (!e.same_shape(f)) throw Error(ErrorCode::DimensionMismatch, "masks differ in size");
    Overlap o;
    const auto a = e.data();
    const auto b = f.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        o.e += a[i];
        o.f += b[i];
        o.both += a[i] & b[i];
    }
    if (o.e == 0 && o.f == 0) throw Error(ErrorCode::UndefinedMetric, "both masks are empty");
    return o;
}

}  // namespace

double dice(const BinaryMask& e, const BinaryMask& f) {
    const Overlap o = overlap(e, f);
    return 2.0 * static_cast<double>(o.both) / static_cast<double>(o.e + o.f);
}

double jaccard(const BinaryMask& e, const BinaryMask& f) {
    const Overlap o = overlap(e, f);
    return static_cast<double>(o.both) / static_cast<double>(o.e + o.f - o.both);
}

double mean_distance(const BinaryMask& e, const BinaryMask& f) {
    if (!e.same_shape(f)) throw Error(ErrorCode::DimensionMismatch, "masks differ in size");
    const auto be = mask_boundary(e);
    const auto bf = mask_boundary(f);
    if (be.empty() || bf.empty()) throw Error(ErrorCode::UndefinedMetric, "mean distance needs nonempty boundaries");

    BinaryMask target(f.width(), f.height());
    for (const auto& p : bf) target.set(p, true);
    const auto d2 = squared_distance_to_foreground(target);
    double sum = 0.0;
    for (const auto& p : be) sum += std::sqrt(d2[target.index(p.x, p.y)]);
    return sum / static_cast<double>(be.size());
}

double mean_distance_symmetric(const BinaryMask& e, const BinaryMask& f) {
    return 0.5 * (mean_distance(e, f) + mean_distance(f, e));
}

MetricReport evaluate(const BinaryMask& pred, const BinaryMask& truth) {
    MetricReport r;
    r.dice = dice(pred, truth);
    r.jaccard = jaccard(pred, truth);
    r.mean_distance = mean_distance(pred, truth);
    r.mean_distance_symmetric = 0.5 * (r.mean_distance + mean_distance(truth, pred));
    return r;
}

double icc(const Measurements& m) {
    const int k = m.runs;
    const int n = m.subjects;
    if (k < 2 || n < 2) throw Error(ErrorCode::Validation, "ICC needs at least 2 runs and 2 subjects");
    if (m.values.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(n)) {
        throw Error(ErrorCode::DimensionMismatch, "measurement matrix size mismatch");
    }

    double grand = 0.0;
    for (double v : m.values) grand += v;
    grand /= static_cast<double>(k * n);

    double ss_subjects = 0.0;
    for (int j = 0; j < n; ++j) {
        double mean = 0.0;
        for (int i = 0; i < k; ++i) mean += m.at(i, j);
        mean /= k;
        ss_subjects += (mean - grand) * (mean - grand);
    }
    ss_subjects *= k;

    double ss_runs = 0.0;
    for (int i = 0; i < k; ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += m.at(i, j);
        mean /= n;
        ss_runs += (mean - grand) * (mean - grand);
    }
    ss_runs *= n;

    double ss_total = 0.0;
    for (double v : m.values) ss_total += (v - grand) * (v - grand);
    const double ss_error = ss_total - ss_subjects - ss_runs;

    const double ms_subjects = ss_subjects / (n - 1);
    const double ms_runs = ss_runs / (k - 1);
    const double ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));

    if (!(ms_subjects > 0.0)) throw Error(ErrorCode::UndefinedMetric, "zero between-subject variance");
    const double denom = ms_subjects + (ms_runs - ms_error) / n;
    if (denom == 0.0) throw Error(ErrorCode::UndefinedMetric, "degenerate ICC denominator");
    return (ms_subjects - ms_error) / denom;
}

}  // namespace kseg
