#pragma once

#include <cmath>
#include <vector>

#include "ssc/nn/params.hpp"

namespace ssc::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moments are kept per parameter, in the
/// parameter set's order.
template <class T>
class Adam {
public:
    explicit Adam(const ParamSet<T>& params, AdamConfig cfg = {}) : cfg_(cfg) {
        for (const auto& p : params) {
            m_.emplace_back(p.value.shape());
            v_.emplace_back(p.value.shape());
        }
    }

    const AdamConfig& config() const noexcept { return cfg_; }
    long steps() const noexcept { return t_; }

    void step(ParamSet<T>& params) {
        if (params.size() != m_.size()) throw Error("adam: parameter set changed since construction");
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
        const T step_size = static_cast<T>(cfg_.lr / c1);
        const T inv_c2 = static_cast<T>(1.0 / c2);
        const T eps = static_cast<T>(cfg_.eps);
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = params[i];
            if (p.grad.size() != m_[i].size()) throw Error("adam: shape mismatch for " + p.name);
            T* w = p.value.data();
            const T* g = p.grad.data();
            T* m = m_[i].data();
            T* v = v_[i].data();
            for (std::size_t j = 0; j < p.value.size(); ++j) {
                m[j] = b1 * m[j] + (T(1) - b1) * g[j];
                v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
                w[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
            }
        }
    }

private:
    AdamConfig cfg_;
    std::vector<Tensor<T>> m_, v_;
    long t_ = 0;
};

}  // namespace ssc::nn
