#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ssc/models/encoded.hpp"
#include "ssc/nn/checkpoint.hpp"
#include "ssc/nn/graph.hpp"
#include "ssc/nn/params.hpp"

namespace ssc {

enum class CnnKind { word_aux, char_aux, char_cnn };

inline std::string kind_name(CnnKind k) {
    switch (k) {
        case CnnKind::word_aux: return "word_aux";
        case CnnKind::char_aux: return "char_aux";
        default: return "char_cnn";
    }
}

inline CnnKind parse_cnn_kind(const std::string& s) {
    if (s == "word_aux") return CnnKind::word_aux;
    if (s == "char_aux") return CnnKind::char_aux;
    if (s == "char_cnn") return CnnKind::char_cnn;
    throw Error("unknown CNN kind '" + s + "'");
}

using Meta = std::map<std::string, std::string>;

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    for (auto part : text::split(s, ',')) {
        auto p = text::trim(part);
        if (p.empty()) throw Error("empty entry in size list '" + s + "'");
        std::size_t used = 0;
        std::size_t v = std::stoul(std::string(p), &used);
        if (used != p.size()) throw Error("invalid size list '" + s + "'");
        out.push_back(v);
    }
    return out;
}

inline const std::string& meta_get(const Meta& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) throw Error("model config: missing key " + key);
    return it->second;
}

inline std::size_t meta_size(const Meta& m, const std::string& key) { return std::stoul(meta_get(m, key)); }

}  // namespace detail

/// Word-level CNN: per kernel size two stacked conv(same)+ReLU+maxpool
/// stages over the embedded token matrix, then the dense block.
struct WCnnConfig {
    std::vector<std::size_t> kernel_sizes{3, 4, 5};
    std::size_t filters = 128;
    std::size_t pool_size = 2;
    std::size_t dense_units = 1024;
    std::size_t dense_layers = 2;
    std::size_t aux_dim = kAuxDim;
    std::size_t seq_len = kWordSeqLen;
    std::size_t embed_dim = 400;
    double dropout = 0.5;

    void validate() const {
        if (dense_units != 1024 || dense_layers != 2) throw Error("wcnn: the dense block is fixed at 2 x 1024 units");
        if (aux_dim != kAuxDim) throw Error("wcnn: aux_dim must be 154");
        if (kernel_sizes.empty() || filters == 0 || embed_dim == 0 || seq_len == 0)
            throw Error("wcnn: kernel sizes, filters, embedding dim and sequence length must be non-empty/positive");
        if (pool_size == 0 || seq_len / pool_size / pool_size == 0)
            throw Error("wcnn: two pooling stages of size " + std::to_string(pool_size) + " do not fit length " +
                        std::to_string(seq_len));
        for (auto k : kernel_sizes)
            if (k == 0) throw Error("wcnn: kernel size 0");
        if (dropout < 0 || dropout >= 1) throw Error("wcnn: dropout must be in [0,1)");
    }

    /// Sequence length after both pooling stages.
    std::size_t pooled_len() const {
        std::size_t l1 = (seq_len - pool_size) / pool_size + 1;
        return (l1 - pool_size) / pool_size + 1;
    }

    Meta to_meta() const {
        return {{"model", "wcnn"},
                {"kernel_sizes", detail::join_sizes(kernel_sizes)},
                {"filters", std::to_string(filters)},
                {"pool_size", std::to_string(pool_size)},
                {"dense_units", std::to_string(dense_units)},
                {"dense_layers", std::to_string(dense_layers)},
                {"aux_dim", std::to_string(aux_dim)},
                {"seq_len", std::to_string(seq_len)},
                {"embed_dim", std::to_string(embed_dim)},
                {"dropout", nn::format_exact(dropout)}};
    }

    static WCnnConfig from_meta(const Meta& m) {
        WCnnConfig c;
        c.kernel_sizes = detail::parse_sizes(detail::meta_get(m, "kernel_sizes"));
        c.filters = detail::meta_size(m, "filters");
        c.pool_size = detail::meta_size(m, "pool_size");
        c.dense_units = detail::meta_size(m, "dense_units");
        c.dense_layers = detail::meta_size(m, "dense_layers");
        c.aux_dim = detail::meta_size(m, "aux_dim");
        c.seq_len = detail::meta_size(m, "seq_len");
        c.embed_dim = detail::meta_size(m, "embed_dim");
        c.dropout = std::stod(detail::meta_get(m, "dropout"));
        return c;
    }
};

enum class AuxMode { none, full };

/// Character-level CNN: trainable char embedding, per kernel size one
/// conv(valid)+tanh+global max pool, then the SELU dense block.
struct CCnnConfig {
    std::vector<std::size_t> kernel_sizes{3, 4, 5, 7};
    std::size_t filters = 128;
    std::size_t dense_units = 1024;
    std::size_t dense_layers = 2;
    AuxMode aux_mode = AuxMode::full;
    std::size_t seq_len = kMaxChars;
    std::size_t char_embed_dim = 128;
    std::size_t charset_size = default_charset().size();
    double dropout = 0.5;

    void validate() const {
        if (dense_units != 1024 || dense_layers != 2) throw Error("ccnn: the dense block is fixed at 2 x 1024 units");
        if (kernel_sizes.empty() || filters == 0 || char_embed_dim == 0 || charset_size < 2)
            throw Error("ccnn: kernel sizes, filters, embedding dim and charset must be non-empty/positive");
        for (auto k : kernel_sizes)
            if (k == 0 || k > seq_len) throw Error("ccnn: kernel size must be in [1, sequence length]");
        if (dropout < 0 || dropout >= 1) throw Error("ccnn: dropout must be in [0,1)");
    }

    std::size_t aux_dim() const { return aux_mode == AuxMode::full ? kAuxDim : 0; }

    Meta to_meta() const {
        return {{"model", "ccnn"},
                {"kernel_sizes", detail::join_sizes(kernel_sizes)},
                {"filters", std::to_string(filters)},
                {"dense_units", std::to_string(dense_units)},
                {"dense_layers", std::to_string(dense_layers)},
                {"aux_mode", aux_mode == AuxMode::full ? "full" : "none"},
                {"seq_len", std::to_string(seq_len)},
                {"char_embed_dim", std::to_string(char_embed_dim)},
                {"charset_size", std::to_string(charset_size)},
                {"dropout", nn::format_exact(dropout)}};
    }

    static CCnnConfig from_meta(const Meta& m) {
        CCnnConfig c;
        c.kernel_sizes = detail::parse_sizes(detail::meta_get(m, "kernel_sizes"));
        c.filters = detail::meta_size(m, "filters");
        c.dense_units = detail::meta_size(m, "dense_units");
        c.dense_layers = detail::meta_size(m, "dense_layers");
        const auto& mode = detail::meta_get(m, "aux_mode");
        if (mode != "full" && mode != "none") throw Error("ccnn: aux_mode must be full or none");
        c.aux_mode = mode == "full" ? AuxMode::full : AuxMode::none;
        c.seq_len = detail::meta_size(m, "seq_len");
        c.char_embed_dim = detail::meta_size(m, "char_embed_dim");
        c.charset_size = detail::meta_size(m, "charset_size");
        c.dropout = std::stod(detail::meta_get(m, "dropout"));
        return c;
    }
};

template <class T>
using Batch = std::span<const EncodedItem<T>* const>;

/// A trainable classifier emitting two logits (negative, positive).
template <class T>
class CnnModel {
public:
    virtual ~CnnModel() = default;

    virtual CnnKind kind() const = 0;
    virtual Meta config_meta() const = 0;
    virtual std::unique_ptr<CnnModel> clone() const = 0;

    /// Logits [B,2]. Dropout is applied only when training (needs rng).
    virtual nn::Var forward(nn::Graph<T>& g, Batch<T> batch, bool training, Rng* rng) = 0;

    nn::ParamSet<T>& params() noexcept { return params_; }
    const nn::ParamSet<T>& params() const noexcept { return params_; }

    /// Overwrites parameter values; names and shapes must match.
    void load_params(const nn::ParamSet<T>& src) {
        if (src.size() != params_.size()) throw Error("model: parameter count mismatch");
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (src[i].name != params_[i].name || src[i].value.shape() != params_[i].value.shape())
                throw Error("model: parameter " + src[i].name + " does not match " + params_[i].name);
            params_[i].value = src[i].value;
        }
    }

    std::uint64_t config_digest() const {
        std::string s;
        for (const auto& [k, v] : config_meta()) s += k + "=" + v + "\n";
        return fnv1a(s);
    }

protected:
    nn::ParamSet<T> params_;
};

namespace detail {

template <class T>
nn::Tensor<T> stack_aux(Batch<T> batch) {
    nn::Tensor<T> aux({batch.size(), kAuxDim});
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t j = 0; j < kAuxDim; ++j) aux.at(b, j) = static_cast<T>(batch[b]->aux[j]);
    return aux;
}

template <class T>
nn::Var dense_block(nn::Graph<T>& g, nn::ParamSet<T>& p, nn::Var h, nn::Activation act, std::size_t layers,
                    double dropout, bool training, Rng* rng) {
    for (std::size_t i = 1; i <= layers; ++i) {
        const std::string n = "dense" + std::to_string(i);
        h = g.activation(g.dense(h, g.param(p.at(n + ".w")), g.param(p.at(n + ".b"))), act);
        if (training && dropout > 0) {
            if (!rng) throw Error("model: training forward pass needs a random generator");
            h = g.dropout(h, dropout, *rng);
        }
    }
    return h;
}

inline void add_dense_specs(std::vector<nn::ParamSpec>& specs, std::size_t in, std::size_t units, std::size_t layers,
                            std::size_t aux_dim) {
    for (std::size_t i = 1; i <= layers; ++i) {
        const std::string n = "dense" + std::to_string(i);
        specs.push_back({n + ".w", {i == 1 ? in : units, units}});
        specs.push_back({n + ".b", {units}, nn::Init::zeros});
    }
    specs.push_back({"out.w", {units + aux_dim, 2}});
    specs.push_back({"out.b", {2}, nn::Init::zeros});
}

}  // namespace detail

template <class T>
class WCnn final : public CnnModel<T> {
public:
    WCnn(WCnnConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        this->params_ = nn::init_params<T>(specs(cfg_), seed);
    }

    static std::vector<nn::ParamSpec> specs(const WCnnConfig& c) {
        std::vector<nn::ParamSpec> s;
        for (auto k : c.kernel_sizes) {
            const std::string ks = std::to_string(k);
            s.push_back({"conv1_k" + ks + ".w", {k, c.embed_dim, c.filters}});
            s.push_back({"conv1_k" + ks + ".b", {c.filters}, nn::Init::zeros});
            s.push_back({"conv2_k" + ks + ".w", {k, c.filters, c.filters}});
            s.push_back({"conv2_k" + ks + ".b", {c.filters}, nn::Init::zeros});
        }
        detail::add_dense_specs(s, c.kernel_sizes.size() * c.pooled_len() * c.filters, c.dense_units, c.dense_layers,
                                c.aux_dim);
        return s;
    }

    CnnKind kind() const override { return CnnKind::word_aux; }
    Meta config_meta() const override { return cfg_.to_meta(); }
    std::unique_ptr<CnnModel<T>> clone() const override { return std::make_unique<WCnn>(*this); }
    const WCnnConfig& config() const noexcept { return cfg_; }

    nn::Var forward(nn::Graph<T>& g, Batch<T> batch, bool training, Rng* rng) override {
        const std::size_t B = batch.size(), L = cfg_.seq_len, D = cfg_.embed_dim;
        nn::Tensor<T> x({B, L, D});
        for (std::size_t b = 0; b < B; ++b) {
            const auto& w = batch[b]->words;
            if (w.shape() != nn::Shape{L, D})
                throw Error("wcnn: input word matrix " + nn::shape_str(w.shape()) + " does not match model shape " +
                            nn::shape_str({L, D}));
            std::copy(w.data(), w.data() + w.size(), x.data() + b * L * D);
        }
        auto& p = this->params_;
        nn::Var in = g.constant(std::move(x));
        std::vector<nn::Var> branches;
        for (auto k : cfg_.kernel_sizes) {
            const std::string ks = std::to_string(k);
            nn::Var h = g.conv1d(in, g.param(p.at("conv1_k" + ks + ".w")), g.param(p.at("conv1_k" + ks + ".b")),
                                 nn::Padding::same);
            h = g.maxpool1d(g.activation(h, nn::Activation::relu), cfg_.pool_size, cfg_.pool_size);
            h = g.conv1d(h, g.param(p.at("conv2_k" + ks + ".w")), g.param(p.at("conv2_k" + ks + ".b")),
                         nn::Padding::same);
            h = g.maxpool1d(g.activation(h, nn::Activation::relu), cfg_.pool_size, cfg_.pool_size);
            const auto& hs = g.value(h).shape();
            branches.push_back(g.reshape(h, {B, hs[1] * hs[2]}));
        }
        nn::Var h = branches.size() == 1 ? branches[0] : g.concat(branches);
        h = detail::dense_block(g, p, h, nn::Activation::relu, cfg_.dense_layers, cfg_.dropout, training, rng);
        h = g.concat({h, g.constant(detail::stack_aux(batch))});
        return g.dense(h, g.param(p.at("out.w")), g.param(p.at("out.b")));
    }

private:
    WCnnConfig cfg_;
};

template <class T>
class CCnn final : public CnnModel<T> {
public:
    CCnn(CCnnConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        this->params_ = nn::init_params<T>(specs(cfg_), seed);
    }

    static std::vector<nn::ParamSpec> specs(const CCnnConfig& c) {
        std::vector<nn::ParamSpec> s;
        s.push_back({"char_embed", {c.charset_size, c.char_embed_dim}, nn::Init::uniform, 0.05});
        for (auto k : c.kernel_sizes) {
            const std::string ks = std::to_string(k);
            s.push_back({"conv_k" + ks + ".w", {k, c.char_embed_dim, c.filters}});
            s.push_back({"conv_k" + ks + ".b", {c.filters}, nn::Init::zeros});
        }
        detail::add_dense_specs(s, c.kernel_sizes.size() * c.filters, c.dense_units, c.dense_layers, c.aux_dim());
        return s;
    }

    CnnKind kind() const override { return cfg_.aux_mode == AuxMode::full ? CnnKind::char_aux : CnnKind::char_cnn; }
    Meta config_meta() const override { return cfg_.to_meta(); }
    std::unique_ptr<CnnModel<T>> clone() const override { return std::make_unique<CCnn>(*this); }
    const CCnnConfig& config() const noexcept { return cfg_; }

    nn::Var forward(nn::Graph<T>& g, Batch<T> batch, bool training, Rng* rng) override {
        const std::size_t B = batch.size(), L = cfg_.seq_len;
        std::vector<std::int32_t> idx;
        idx.reserve(B * L);
        for (std::size_t b = 0; b < B; ++b) {
            const auto& c = batch[b]->chars;
            if (c.size() != L)
                throw Error("ccnn: input has " + std::to_string(c.size()) + " characters, model expects " +
                            std::to_string(L));
            for (auto v : c)
                if (v < 0 || static_cast<std::size_t>(v) >= cfg_.charset_size)
                    throw Error("ccnn: character index outside the charset");
            idx.insert(idx.end(), c.begin(), c.end());
        }
        auto& p = this->params_;
        nn::Var emb = g.embedding(g.param(p.at("char_embed")), idx, B, L);
        std::vector<nn::Var> pooled;
        for (auto k : cfg_.kernel_sizes) {
            const std::string ks = std::to_string(k);
            nn::Var h = g.conv1d(emb, g.param(p.at("conv_k" + ks + ".w")), g.param(p.at("conv_k" + ks + ".b")),
                                 nn::Padding::valid);
            pooled.push_back(g.global_maxpool(g.activation(h, nn::Activation::tanh)));
        }
        nn::Var h = pooled.size() == 1 ? pooled[0] : g.concat(pooled);
        h = detail::dense_block(g, p, h, nn::Activation::selu, cfg_.dense_layers, cfg_.dropout, training, rng);
        if (cfg_.aux_mode == AuxMode::full) h = g.concat({h, g.constant(detail::stack_aux(batch))});
        return g.dense(h, g.param(p.at("out.w")), g.param(p.at("out.b")));
    }

private:
    CCnnConfig cfg_;
};

template <class T>
std::unique_ptr<CnnModel<T>> build_wcnn(const WCnnConfig& cfg, std::uint64_t seed) {
    return std::make_unique<WCnn<T>>(cfg, seed);
}

template <class T>
std::unique_ptr<CnnModel<T>> build_ccnn(const CCnnConfig& cfg, std::uint64_t seed) {
    return std::make_unique<CCnn<T>>(cfg, seed);
}

/// Rebuilds an architecture from its serialized config.
template <class T>
std::unique_ptr<CnnModel<T>> build_from_meta(const Meta& m) {
    const auto& model = detail::meta_get(m, "model");
    if (model == "wcnn") return build_wcnn<T>(WCnnConfig::from_meta(m), 0);
    if (model == "ccnn") return build_ccnn<T>(CCnnConfig::from_meta(m), 0);
    throw Error("unknown model type '" + model + "'");
}

}  // namespace ssc
