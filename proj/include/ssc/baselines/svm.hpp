#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "ssc/baselines/sparse.hpp"
#include "ssc/models/trainer.hpp"
#include "ssc/random.hpp"

namespace ssc {

struct SvmConfig {
    double lambda = 1e-4;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
};

/// Stable evaluation of 1 / (1 + exp(a*s + b)).
inline double platt_probability(double a, double b, double s) {
    const double z = a * s + b;
    if (z >= 0) {
        const double e = std::exp(-z);
        return e / (1 + e);
    }
    return 1 / (1 + std::exp(z));
}

struct PlattParams {
    double a = 0;
    double b = 0;
    std::size_t iterations = 0;
};

/// Newton's method with backtracking on the smoothed-target log-likelihood.
inline PlattParams platt_fit(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) throw Error("platt: score/label count mismatch");
    double npos = 0, nneg = 0;
    for (Label l : labels) (l == Label::positive ? npos : nneg) += 1;
    if (npos == 0 || nneg == 0) throw Error("platt: labels contain a single class");
    const double hi = (npos + 1) / (npos + 2), lo = 1 / (nneg + 2);
    std::vector<double> t(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] == Label::positive ? hi : lo;

    auto nll = [&](double a, double b) {
        double f = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double z = a * scores[i] + b;
            f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1) * z + std::log1p(std::exp(z));
        }
        return f;
    };

    PlattParams p;
    p.b = std::log((nneg + 1) / (npos + 1));
    double f = nll(p.a, p.b);
    const double sigma = 1e-12;
    for (; p.iterations < 100; ++p.iterations) {
        double h11 = sigma, h22 = sigma, h21 = 0, g1 = 0, g2 = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double pr = platt_probability(p.a, p.b, scores[i]);
            const double q = 1 - pr;
            const double d2 = pr * q;
            h11 += scores[i] * scores[i] * d2;
            h22 += d2;
            h21 += scores[i] * d2;
            const double d1 = t[i] - pr;
            g1 += scores[i] * d1;
            g2 += d1;
        }
        if (std::hypot(g1, g2) < 1e-8) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1;
        bool moved = false;
        while (step >= 1e-10) {
            const double na = p.a + step * da, nb = p.b + step * db;
            const double nf = nll(na, nb);
            if (nf < f + 1e-4 * step * gd) {
                p.a = na;
                p.b = nb;
                f = nf;
                moved = true;
                break;
            }
            step /= 2;
        }
        if (!moved) break;
    }
    return p;
}

/// Linear SVM. The bias is the weight of an implicit constant feature of
/// value 1 and is regularized with the rest of w. Weights and Platt
/// parameters are rounded to 32-bit precision once training ends.
struct SvmModel {
    std::vector<double> w;
    double bias = 0;
    double platt_a = 0;
    double platt_b = 0;
    bool calibrated = false;

    double score(const SparseVector& x) const { return x.dot(w) + bias; }

    double probability(double s) const {
        if (!calibrated) throw Error("svm: model is not calibrated");
        return platt_probability(platt_a, platt_b, s);
    }

    Prediction predict(const SparseVector& x) const {
        const double s = score(x);
        const double p = calibrated ? probability(s) : (s > 0 ? 1.0 : 0.0);
        return {s > 0 ? Label::positive : Label::negative, p};
    }
};

/// lambda/2 * (|w|^2 + bias^2) + mean hinge loss.
inline double svm_objective(const SvmModel& m, std::span<const SparseVector> x, std::span<const Label> y,
                            double lambda) {
    double reg = m.bias * m.bias;
    for (double v : m.w) reg += v * v;
    double hinge = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double yi = y[i] == Label::positive ? 1.0 : -1.0;
        hinge += std::max(0.0, 1 - yi * m.score(x[i]));
    }
    return lambda / 2 * reg + hinge / static_cast<double>(x.size());
}

/// Pegasos: one pass over a seeded permutation per epoch, step 1/(lambda t),
/// followed by projection onto the ball of radius 1/sqrt(lambda). Epoch-end
/// objective values are reported through `history` when given.
inline SvmModel train_svm(std::span<const SparseVector> x, std::span<const Label> y, std::size_t dim,
                          const SvmConfig& cfg, std::vector<double>* history = nullptr) {
    if (x.empty()) throw Error("svm: empty training set");
    if (x.size() != y.size()) throw Error("svm: feature/label count mismatch");
    if (!(cfg.lambda > 0)) throw Error("svm: lambda must be positive");
    const bool has_pos = std::find(y.begin(), y.end(), Label::positive) != y.end();
    const bool has_neg = std::find(y.begin(), y.end(), Label::negative) != y.end();
    if (!has_pos || !has_neg) throw Error("svm: training data contains a single class");

    // w = scale * v keeps the shrink step O(1).
    std::vector<double> v(dim, 0.0);
    double vb = 0, scale = 1, sqnorm = 0;
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(cfg.seed, "svm"));
    std::size_t t = 0;
    const double radius2 = 1 / cfg.lambda;

    auto snapshot = [&] {
        SvmModel m;
        m.w.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) m.w[j] = scale * v[j];
        m.bias = scale * vb;
        return m;
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1 / (cfg.lambda * static_cast<double>(t));
            const double yi = y[i] == Label::positive ? 1.0 : -1.0;
            double margin = vb;
            for (std::size_t k = 0; k < x[i].nnz(); ++k)
                if (x[i].index[k] < dim) margin += v[x[i].index[k]] * x[i].value[k];
            margin *= scale * yi;

            const double shrink = 1 - eta * cfg.lambda;
            if (shrink <= 0) {
                std::fill(v.begin(), v.end(), 0.0);
                vb = 0;
                scale = 1;
                sqnorm = 0;
            } else {
                scale *= shrink;
                sqnorm *= shrink * shrink;
            }
            if (margin < 1) {
                const double c = eta * yi / scale;
                for (std::size_t k = 0; k < x[i].nnz(); ++k) {
                    const auto j = x[i].index[k];
                    if (j >= dim) continue;
                    const double old = v[j];
                    v[j] += c * x[i].value[k];
                    sqnorm += scale * scale * (v[j] * v[j] - old * old);
                }
                const double old = vb;
                vb += c;
                sqnorm += scale * scale * (vb * vb - old * old);
            }
            if (sqnorm > radius2) {
                const double f = std::sqrt(radius2 / sqnorm);
                scale *= f;
                sqnorm = radius2;
            }
            if (scale < 1e-100) {
                for (auto& e : v) e *= scale;
                vb *= scale;
                scale = 1;
            }
        }
        if (history) history->push_back(svm_objective(snapshot(), x, y, cfg.lambda));
    }

    SvmModel m = snapshot();
    for (auto& e : m.w) e = round_to_f32(e);
    m.bias = round_to_f32(m.bias);
    return m;
}

/// Fits Platt parameters on the model's scores over (x, y).
inline void calibrate(SvmModel& m, std::span<const SparseVector> x, std::span<const Label> y) {
    std::vector<double> s;
    s.reserve(x.size());
    for (const auto& xi : x) s.push_back(m.score(xi));
    const auto p = platt_fit(s, y);
    m.platt_a = round_to_f32(p.a);
    m.platt_b = round_to_f32(p.b);
    m.calibrated = true;
}

}  // namespace ssc
