#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "ssc/baselines/sparse.hpp"
#include "ssc/models/trainer.hpp"

namespace ssc {

/// Multinomial Naive Bayes with add-one smoothing. The sufficient
/// statistics (documents per class, per-class feature mass) are kept at
/// 32-bit precision; log-priors and log-likelihoods derive from them.
struct NbModel {
    std::size_t dim = 0;
    std::array<double, 2> class_docs{};
    std::array<std::vector<double>, 2> feature_mass;
    std::array<double, 2> log_prior{};
    std::array<std::vector<double>, 2> log_likelihood;

    void finalize() {
        const double n = class_docs[0] + class_docs[1];
        for (int c = 0; c < 2; ++c) {
            log_prior[c] = std::log(class_docs[c] / n);
            double total = 0;
            for (double m : feature_mass[c]) total += m;
            log_likelihood[c].resize(dim);
            const double denom = total + static_cast<double>(dim);
            for (std::size_t w = 0; w < dim; ++w) log_likelihood[c][w] = std::log((feature_mass[c][w] + 1.0) / denom);
        }
    }
};

inline NbModel train_nb(std::span<const SparseVector> x, std::span<const Label> y, std::size_t dim) {
    if (x.size() != y.size()) throw Error("naive bayes: feature/label count mismatch");
    NbModel m;
    m.dim = dim;
    m.feature_mass[0].assign(dim, 0.0);
    m.feature_mass[1].assign(dim, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int c = class_index(y[i]);
        m.class_docs[c] += 1;
        for (std::size_t k = 0; k < x[i].nnz(); ++k) {
            if (x[i].value[k] < 0) throw Error("naive bayes: negative feature value");
            if (x[i].index[k] < dim) m.feature_mass[c][x[i].index[k]] += x[i].value[k];
        }
    }
    if (m.class_docs[0] == 0 || m.class_docs[1] == 0) throw Error("naive bayes: training data contains a single class");
    for (auto& v : m.feature_mass)
        for (auto& f : v) f = round_to_f32(f);
    m.finalize();
    return m;
}

/// Posterior via log-sum-exp; features outside the vocabulary are ignored.
inline Prediction nb_predict(const NbModel& m, const SparseVector& x) {
    std::array<double, 2> score = m.log_prior;
    for (std::size_t k = 0; k < x.nnz(); ++k) {
        if (x.index[k] >= m.dim) continue;
        for (int c = 0; c < 2; ++c) score[c] += x.value[k] * m.log_likelihood[c][x.index[k]];
    }
    const double mx = std::max(score[0], score[1]);
    const double e0 = std::exp(score[0] - mx), e1 = std::exp(score[1] - mx);
    const double p1 = e1 / (e0 + e1);
    return {decide(1 - p1, p1), p1};
}

}  // namespace ssc
