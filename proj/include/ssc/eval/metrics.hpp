#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "ssc/common.hpp"

namespace ssc {

/// Positive-class measures plus the confusion counts they derive from.
/// Counts are doubles so fold/member averages stay representable.
struct MetricsReport {
    double accuracy = 0;
    double precision_p = 0;
    double recall_p = 0;
    double f1_p = 0;
    double tp = 0, fp = 0, fn = 0, tn = 0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline MetricsReport metrics_from_confusion(double tp, double fp, double fn, double tn) {
    MetricsReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.tn = tn;
    const double n = tp + fp + fn + tn;
    r.accuracy = n > 0 ? (tp + tn) / n : 0.0;
    r.precision_p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    r.recall_p = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double pr = r.precision_p + r.recall_p;
    r.f1_p = pr > 0 ? 2 * r.precision_p * r.recall_p / pr : 0.0;
    return r;
}

inline MetricsReport compute_metrics(std::span<const Label> pred, std::span<const Label> gold) {
    if (pred.size() != gold.size()) throw Error("metrics: prediction/gold length mismatch");
    if (pred.empty()) throw Error("metrics: empty prediction list");
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == Label::positive, g = gold[i] == Label::positive;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
        tn += !p && !g;
    }
    return metrics_from_confusion(tp, fp, fn, tn);
}

/// Unweighted arithmetic mean of every field. Each field is summed in
/// sorted order so the result does not depend on report order.
inline MetricsReport mean_report(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw Error("metrics: cannot average zero reports");
    auto mean_of = [&](double MetricsReport::*field) {
        std::vector<double> v;
        v.reserve(reports.size());
        for (const auto& r : reports) v.push_back(r.*field);
        std::sort(v.begin(), v.end());
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    MetricsReport m;
    for (auto f : {&MetricsReport::accuracy, &MetricsReport::precision_p, &MetricsReport::recall_p,
                   &MetricsReport::f1_p, &MetricsReport::tp, &MetricsReport::fp, &MetricsReport::fn,
                   &MetricsReport::tn})
        m.*f = mean_of(f);
    return m;
}

/// Named access used by best-epoch selection.
inline double metric_value(const MetricsReport& r, const std::string& name) {
    if (name == "f1_p") return r.f1_p;
    if (name == "accuracy") return r.accuracy;
    if (name == "precision_p") return r.precision_p;
    if (name == "recall_p") return r.recall_p;
    throw Error("unknown metric '" + name + "' (expected f1_p, accuracy, precision_p or recall_p)");
}

}  // namespace ssc
