#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ssc/nn/tensor.hpp"
#include "ssc/random.hpp"

namespace ssc::nn {

template <class T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;  // same shape as value
};

/// Ordered set of named trainable parameters with paired gradient buffers.
/// Element addresses are stable once the set is built.
template <class T>
class ParamSet {
public:
    Parameter<T>& add(std::string name, Tensor<T> value) {
        if (find(name)) throw Error("param set: duplicate parameter " + name);
        Tensor<T> grad(value.shape());
        params_.push_back({std::move(name), std::move(value), std::move(grad)});
        return params_.back();
    }

    Parameter<T>* find(const std::string& name) {
        for (auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }
    const Parameter<T>* find(const std::string& name) const {
        for (auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }
    Parameter<T>& at(const std::string& name) {
        if (auto* p = find(name)) return *p;
        throw Error("param set: no parameter " + name);
    }
    const Parameter<T>& at(const std::string& name) const {
        if (auto* p = find(name)) return *p;
        throw Error("param set: no parameter " + name);
    }

    std::size_t size() const noexcept { return params_.size(); }
    Parameter<T>& operator[](std::size_t i) { return params_[i]; }
    const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void reserve(std::size_t n) { params_.reserve(n); }

    void zero_grad() {
        for (auto& p : params_) p.grad.fill(T(0));
    }

    /// Total number of scalar parameters.
    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.value.size();
        return n;
    }

    /// True when names, shapes and values match bit for bit.
    bool same_values(const ParamSet& other) const {
        if (size() != other.size()) return false;
        for (std::size_t i = 0; i < size(); ++i)
            if (params_[i].name != other.params_[i].name || params_[i].value != other.params_[i].value) return false;
        return true;
    }

private:
    std::vector<Parameter<T>> params_;
};

enum class Init { glorot_uniform, zeros, uniform };

struct ParamSpec {
    std::string name;
    Shape shape;
    Init init = Init::glorot_uniform;
    double scale = 0.0;  // half-width for Init::uniform
};

/// Glorot bound sqrt(6 / (fan_in + fan_out)). Rank-2 [in, out]; rank-3
/// conv kernels [k, C, F] use fan_in = k*C, fan_out = k*F.
inline double glorot_bound(const Shape& s) {
    double fan_in = 0, fan_out = 0;
    if (s.size() == 2) {
        fan_in = static_cast<double>(s[0]);
        fan_out = static_cast<double>(s[1]);
    } else if (s.size() == 3) {
        fan_in = static_cast<double>(s[0] * s[1]);
        fan_out = static_cast<double>(s[0] * s[2]);
    } else {
        fan_in = fan_out = static_cast<double>(shape_size(s));
    }
    return std::sqrt(6.0 / (fan_in + fan_out));
}

template <class T>
ParamSet<T> init_params(const std::vector<ParamSpec>& specs, std::uint64_t seed) {
    ParamSet<T> ps;
    ps.reserve(specs.size());
    for (const auto& spec : specs) {
        Tensor<T> v(spec.shape);
        Rng rng(mix_seed(seed, spec.name));
        switch (spec.init) {
            case Init::zeros:
                break;
            case Init::glorot_uniform: {
                const double b = glorot_bound(spec.shape);
                for (auto& x : v.values()) x = static_cast<T>(rng.uniform(-b, b));
                break;
            }
            case Init::uniform:
                for (auto& x : v.values()) x = static_cast<T>(rng.uniform(-spec.scale, spec.scale));
                break;
        }
        ps.add(spec.name, std::move(v));
    }
    return ps;
}

}  // namespace ssc::nn
