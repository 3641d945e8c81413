#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssc/corpus.hpp"
#include "ssc/features.hpp"
#include "ssc/nn/tensor.hpp"
#include "ssc/random.hpp"

namespace ssc {

inline constexpr std::size_t kWordSeqLen = 40;

/// Pretrained word vectors, stored at the model's precision.
template <class T>
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return index_.size(); }

    void add(const std::string& word, std::span<const T> vec) {
        if (vec.size() != dim_) throw Error("embedding: vector length mismatch for '" + word + "'");
        if (!index_.emplace(word, index_.size()).second) throw Error("embedding: duplicate word '" + word + "'");
        data_.insert(data_.end(), vec.begin(), vec.end());
    }

    /// Null when the word is out of vocabulary.
    const T* find(const std::string& word) const {
        auto it = index_.find(word);
        return it == index_.end() ? nullptr : data_.data() + it->second * dim_;
    }

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<T> data_;
};

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
    // std::from_chars for double is available in libstdc++ 11.
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool is_unsigned(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

}  // namespace detail

/// Text embedding format: an optional `V D` header, then `word v1 ... vD`
/// lines. expected_dim = 0 infers the dimension from the first vector line.
template <class T>
EmbeddingTable<T> load_embeddings(const std::string& path, std::size_t expected_dim = 0) {
    auto lines = detail::read_lines(path);
    std::size_t dim = expected_dim;
    std::size_t first = 0;
    while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
    if (first < lines.size()) {
        auto cols = text::split_ws(lines[first]);
        if (cols.size() == 2 && detail::is_unsigned(cols[0]) && detail::is_unsigned(cols[1])) {
            std::size_t header_dim = std::stoul(std::string(cols[1]));
            if (dim != 0 && header_dim != dim)
                throw ParseError(path, first + 1,
                                 "header dimension " + std::to_string(header_dim) + " != expected " + std::to_string(dim));
            dim = header_dim;
            ++first;
        }
    }
    EmbeddingTable<T> table;
    bool have_table = false;
    std::vector<T> vec;
    for (std::size_t n = first; n < lines.size(); ++n) {
        auto cols = text::split_ws(lines[n]);
        if (cols.empty()) continue;
        const std::size_t got = cols.size() - 1;
        if (dim == 0) dim = got;
        if (got != dim || dim == 0)
            throw ParseError(path, n + 1, "expected " + std::to_string(dim) + " components, got " + std::to_string(got));
        if (!have_table) {
            table = EmbeddingTable<T>(dim);
            have_table = true;
        }
        vec.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            double v = 0;
            if (!detail::parse_double(cols[j + 1], v))
                throw ParseError(path, n + 1, "non-numeric component '" + std::string(cols[j + 1]) + "'");
            vec[j] = static_cast<T>(v);
        }
        try {
            table.add(std::string(cols[0]), vec);
        } catch (const Error& e) {
            throw ParseError(path, n + 1, e.what());
        }
    }
    if (!have_table) throw Error("embedding file " + path + " has no vectors");
    return table;
}

/// Deterministic out-of-vocabulary vector: uniform draws seeded by the
/// token's FNV-1a hash, scaled so the largest magnitude is 1.
template <class T>
std::vector<T> oov_vector(const std::string& token, std::size_t dim) {
    Rng rng(fnv1a(token));
    std::vector<T> v(dim);
    double maxabs = 0;
    std::vector<double> raw(dim);
    for (auto& x : raw) {
        x = rng.uniform(-1.0, 1.0);
        maxabs = std::max(maxabs, std::abs(x));
    }
    for (std::size_t i = 0; i < dim; ++i) v[i] = static_cast<T>(maxabs > 0 ? raw[i] / maxabs : 0.0);
    return v;
}

/// max_len x dim matrix; rows past the token count are zero, tokens past
/// max_len are dropped.
template <class T>
nn::Tensor<T> embed_words(const TokenSeq& tokens, const EmbeddingTable<T>& table, std::size_t max_len = kWordSeqLen) {
    const std::size_t dim = table.dim();
    nn::Tensor<T> m({max_len, dim});
    const std::size_t n = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < n; ++i) {
        T* row = m.data() + i * dim;
        if (const T* v = table.find(tokens[i])) {
            std::copy(v, v + dim, row);
        } else {
            auto o = oov_vector<T>(tokens[i], dim);
            std::copy(o.begin(), o.end(), row);
        }
    }
    return m;
}

}  // namespace ssc
