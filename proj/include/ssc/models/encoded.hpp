#pragma once

#include <optional>
#include <vector>

#include "ssc/corpus.hpp"
#include "ssc/embeddings.hpp"
#include "ssc/features.hpp"

namespace ssc {

/// Every representation a roster member may consume, computed once per
/// tweet: tokens (baselines), aux vector, word matrix (W-CNN, empty when no
/// embedding table is loaded) and character indices (C-CNN).
template <class T>
struct EncodedItem {
    std::string id;
    TokenSeq tokens;
    AuxVector aux{};
    nn::Tensor<T> words;
    CharSeq chars;
    Label label = Label::negative;
};

template <class T>
class Encoder {
public:
    Encoder(const FeatureResources& resources, const EmbeddingTable<T>* embeddings)
        : res_(&resources), emb_(embeddings) {}

    EncodedItem<T> encode(const Tweet& t) const {
        EncodedItem<T> e;
        e.id = t.id;
        e.tokens = tokenize(t.text);
        e.aux = res_->aux(e.tokens);
        if (emb_) e.words = embed_words(res_->word_tokens(e.tokens), *emb_);
        e.chars = encode_chars(t.text);
        e.label = t.label.value_or(Label::negative);
        return e;
    }

    std::vector<EncodedItem<T>> encode(const Dataset& d) const {
        std::vector<EncodedItem<T>> out;
        out.reserve(d.size());
        for (const auto& t : d) out.push_back(encode(t));
        return out;
    }

    bool has_embeddings() const noexcept { return emb_ != nullptr; }
    std::size_t embedding_dim() const { return emb_ ? emb_->dim() : 0; }

private:
    const FeatureResources* res_;
    const EmbeddingTable<T>* emb_;
};

}  // namespace ssc
