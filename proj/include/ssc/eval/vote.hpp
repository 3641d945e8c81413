#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "ssc/common.hpp"

namespace ssc {

/// Strict majority of the votes; a tie goes positive only when the mean
/// positive-class probability exceeds 0.5.
inline Label majority_vote(std::span<const Label> votes, std::span<const double> positive_probs) {
    if (votes.empty()) throw Error("majority_vote: no votes");
    if (positive_probs.size() != votes.size()) throw Error("majority_vote: probabilities not aligned with votes");
    std::size_t pos = 0;
    for (Label v : votes) pos += v == Label::positive;
    const std::size_t neg = votes.size() - pos;
    if (pos != neg) return pos > neg ? Label::positive : Label::negative;
    // Summed in sorted order so the result cannot depend on vote order.
    std::vector<double> sorted(positive_probs.begin(), positive_probs.end());
    std::sort(sorted.begin(), sorted.end());
    double mean = 0;
    for (double p : sorted) mean += p;
    mean /= static_cast<double>(positive_probs.size());
    return mean > 0.5 ? Label::positive : Label::negative;
}

}  // namespace ssc
