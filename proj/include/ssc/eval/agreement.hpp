#pragma once

#include <optional>
#include <span>

#include "ssc/corpus.hpp"

namespace ssc {

/// Krippendorff's alpha for nominal binary labels, coincidence-matrix form.
/// Items with a single annotation contribute no pairable values. Returns
/// nullopt when alpha is undefined (no pairable values, or only one class
/// ever observed among them).
inline std::optional<double> krippendorff_alpha(const AnnotationSet& ann) {
    // o[c][k]: coincidences between class c and class k.
    double o[2][2] = {{0, 0}, {0, 0}};
    for (const auto& [item, list] : ann.entries()) {
        const double m = static_cast<double>(list.size());
        if (list.size() < 2) continue;
        double n[2] = {0, 0};
        for (const auto& a : list) n[class_index(a.label)] += 1;
        for (int c = 0; c < 2; ++c)
            for (int k = 0; k < 2; ++k) o[c][k] += (c == k ? n[c] * (n[c] - 1) : n[c] * n[k]) / (m - 1);
    }
    const double n0 = o[0][0] + o[0][1], n1 = o[1][0] + o[1][1];
    const double n = n0 + n1;
    if (n <= 1) return std::nullopt;
    const double expected = 2 * n0 * n1;
    if (expected == 0) return std::nullopt;
    const double observed = o[0][1] + o[1][0];
    return 1.0 - (n - 1) * observed / expected;
}

/// Cohen's kappa for two raters. When chance agreement is 1 the ratio is
/// undefined; it is reported as 1 for perfect observed agreement, else 0.
inline double cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
    if (a.size() != b.size()) throw Error("cohen_kappa: rater lists differ in length");
    if (a.empty()) throw Error("cohen_kappa: empty rater lists");
    const double n = static_cast<double>(a.size());
    double agree = 0, pa = 0, pb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        agree += a[i] == b[i];
        pa += a[i] == Label::positive;
        pb += b[i] == Label::positive;
    }
    const double po = agree / n;
    pa /= n;
    pb /= n;
    const double pe = pa * pb + (1 - pa) * (1 - pb);
    if (pe == 1.0) return po == 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1 - pe);
}

}  // namespace ssc
