#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssc/features.hpp"

namespace ssc {

/// Sparse vector with strictly increasing indices.
struct SparseVector {
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    std::size_t nnz() const noexcept { return index.size(); }

    double get(std::uint32_t i) const {
        auto it = std::lower_bound(index.begin(), index.end(), i);
        return it != index.end() && *it == i ? value[static_cast<std::size_t>(it - index.begin())] : 0.0;
    }

    double dot(const std::vector<double>& dense) const {
        double s = 0;
        for (std::size_t k = 0; k < index.size(); ++k)
            if (index[k] < dense.size()) s += value[k] * dense[index[k]];
        return s;
    }
};

/// Bag-of-words TF-IDF over a training vocabulary, followed by the 154 aux
/// entries. Term weight = tf * idf with idf = ln((N+1)/(df+1)) + 1; the
/// term block is L2-normalized, the aux block is appended as is. idf values
/// are held at 32-bit precision so a serialized vectorizer is exact.
class TfidfVectorizer {
public:
    struct Options {
        std::size_t min_df = 1;
        bool use_idf = true;
        bool normalize = true;
        bool append_aux = true;
    };

    TfidfVectorizer() = default;
    explicit TfidfVectorizer(Options opt) : opt_(opt) {}

    void fit(const std::vector<TokenSeq>& docs) {
        std::map<std::string, std::size_t> df;
        for (const auto& d : docs) {
            std::vector<std::string> uniq(d.begin(), d.end());
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            for (auto& t : uniq) ++df[t];
        }
        vocab_.clear();
        idf_.clear();
        index_.clear();
        const double n = static_cast<double>(docs.size());
        for (const auto& [term, count] : df) {
            if (count < opt_.min_df) continue;
            index_.emplace(term, vocab_.size());
            vocab_.push_back(term);
            idf_.push_back(opt_.use_idf ? round_to_f32(std::log((n + 1) / (static_cast<double>(count) + 1)) + 1) : 1.0);
        }
    }

    /// Restores a fitted vectorizer (vocabulary in index order).
    void assign(std::vector<std::string> vocab, std::vector<double> idf) {
        if (vocab.size() != idf.size()) throw Error("tfidf: vocabulary/idf length mismatch");
        vocab_ = std::move(vocab);
        idf_ = std::move(idf);
        index_.clear();
        for (std::size_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], i);
    }

    SparseVector transform(const TokenSeq& tokens, const AuxVector& aux) const {
        std::map<std::uint32_t, double> tf;
        for (const auto& t : tokens)
            if (auto it = index_.find(t); it != index_.end()) tf[static_cast<std::uint32_t>(it->second)] += 1;
        SparseVector v;
        double norm = 0;
        for (const auto& [i, c] : tf) {
            const double w = c * idf_[i];
            v.index.push_back(i);
            v.value.push_back(w);
            norm += w * w;
        }
        if (opt_.normalize && norm > 0) {
            const double inv = 1.0 / std::sqrt(norm);
            for (auto& w : v.value) w *= inv;
        }
        if (opt_.append_aux)
            for (std::size_t j = 0; j < kAuxDim; ++j)
                if (aux[j] != 0) {
                    v.index.push_back(static_cast<std::uint32_t>(vocab_.size() + j));
                    v.value.push_back(aux[j]);
                }
        return v;
    }

    std::size_t vocab_size() const noexcept { return vocab_.size(); }
    std::size_t dimension() const noexcept { return vocab_.size() + (opt_.append_aux ? kAuxDim : 0); }
    const std::vector<std::string>& vocab() const noexcept { return vocab_; }
    const std::vector<double>& idf() const noexcept { return idf_; }
    const Options& options() const noexcept { return opt_; }

    double idf(const std::string& term) const {
        auto it = index_.find(term);
        if (it == index_.end()) throw Error("tfidf: term not in vocabulary: " + term);
        return idf_[it->second];
    }

private:
    Options opt_;
    std::vector<std::string> vocab_;
    std::vector<double> idf_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace ssc
