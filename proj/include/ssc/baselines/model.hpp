#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ssc/baselines/naive_bayes.hpp"
#include "ssc/baselines/random_forest.hpp"
#include "ssc/baselines/sparse.hpp"
#include "ssc/baselines/svm.hpp"
#include "ssc/corpus.hpp"
#include "ssc/nn/checkpoint.hpp"

namespace ssc {

enum class BaselineKind { nb, svm, rf };

inline const char* kind_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::nb: return "nb";
        case BaselineKind::svm: return "svm";
        case BaselineKind::rf: return "rf";
    }
    return "?";
}

inline const char* kind_tag(BaselineKind k) {
    switch (k) {
        case BaselineKind::nb: return "NB1";
        case BaselineKind::svm: return "SVM1";
        case BaselineKind::rf: return "RF1";
    }
    return "?";
}

inline std::optional<BaselineKind> parse_baseline_kind(std::string_view s) {
    if (s == "nb" || s == "NB1") return BaselineKind::nb;
    if (s == "svm" || s == "SVM1") return BaselineKind::svm;
    if (s == "rf" || s == "RF1") return BaselineKind::rf;
    return std::nullopt;
}

struct BaselineConfig {
    std::size_t min_df = 1;
    double svm_lambda = 1e-4;
    std::size_t svm_epochs = 20;
    std::size_t rf_trees = 50;
    std::size_t rf_max_depth = 16;
    /// NB has no randomness of its own; members differ by a bootstrap of
    /// the training set when enabled.
    bool nb_bootstrap = true;
};

/// One vectorized training example.
struct BowItem {
    TokenSeq tokens;
    AuxVector aux{};
    Label label = Label::negative;
};

/// A fitted vectorizer paired with one classical classifier.
class BaselineModel {
public:
    BaselineKind kind() const noexcept { return kind_; }
    const TfidfVectorizer& vectorizer() const noexcept { return vec_; }
    const NbModel& nb() const { return std::get<NbModel>(model_); }
    const SvmModel& svm() const { return std::get<SvmModel>(model_); }
    const RfModel& rf() const { return std::get<RfModel>(model_); }

    static BaselineModel train(BaselineKind kind, const std::vector<BowItem>& data, const BaselineConfig& cfg,
                               std::uint64_t seed) {
        if (data.empty()) throw Error(std::string(kind_name(kind)) + ": empty training set");
        std::vector<const BowItem*> rows;
        rows.reserve(data.size());
        if (kind == BaselineKind::nb && cfg.nb_bootstrap) {
            Rng rng(mix_seed(seed, "nb-bootstrap"));
            for (std::size_t i = 0; i < data.size(); ++i) rows.push_back(&data[rng.below(data.size())]);
            // A resample that lost a class falls back to the full set.
            const auto pos = std::count_if(rows.begin(), rows.end(), [](auto* r) { return r->label == Label::positive; });
            if (pos == 0 || pos == static_cast<std::ptrdiff_t>(rows.size())) {
                rows.clear();
                for (const auto& d : data) rows.push_back(&d);
            }
        } else {
            for (const auto& d : data) rows.push_back(&d);
        }

        BaselineModel m;
        m.kind_ = kind;
        TfidfVectorizer::Options opt;
        opt.min_df = cfg.min_df;
        m.vec_ = TfidfVectorizer(opt);
        std::vector<TokenSeq> docs;
        docs.reserve(rows.size());
        for (auto* r : rows) docs.push_back(r->tokens);
        m.vec_.fit(docs);

        std::vector<SparseVector> x;
        std::vector<Label> y;
        x.reserve(rows.size());
        for (auto* r : rows) {
            x.push_back(m.vec_.transform(r->tokens, r->aux));
            y.push_back(r->label);
        }
        const std::size_t dim = m.vec_.dimension();
        switch (kind) {
            case BaselineKind::nb: m.model_ = train_nb(x, y, dim); break;
            case BaselineKind::svm: {
                SvmModel s = train_svm(x, y, dim, {cfg.svm_lambda, cfg.svm_epochs, mix_seed(seed, "svm")});
                calibrate(s, x, y);
                m.model_ = std::move(s);
                break;
            }
            case BaselineKind::rf: {
                RfConfig rc;
                rc.trees = cfg.rf_trees;
                rc.max_depth = cfg.rf_max_depth;
                rc.seed = mix_seed(seed, "rf");
                m.model_ = train_rf(x, y, dim, rc);
                break;
            }
        }
        return m;
    }

    SparseVector vectorize(const TokenSeq& tokens, const AuxVector& aux) const { return vec_.transform(tokens, aux); }

    Prediction predict(const TokenSeq& tokens, const AuxVector& aux) const {
        const auto x = vectorize(tokens, aux);
        switch (kind_) {
            case BaselineKind::nb: return nb_predict(nb(), x);
            case BaselineKind::svm: return svm().predict(x);
            case BaselineKind::rf: return rf().predict(x);
        }
        throw Error("baseline: unknown kind");
    }

    nn::Container to_container() const {
        nn::Container c;
        c.meta["kind"] = kind_tag(kind_);
        std::string vocab;
        for (std::size_t i = 0; i < vec_.vocab().size(); ++i) {
            if (i) vocab += ' ';
            vocab += vec_.vocab()[i];
        }
        c.meta["vocab"] = vocab;
        c.meta["vocab_size"] = std::to_string(vec_.vocab_size());
        c.meta["min_df"] = std::to_string(vec_.options().min_df);
        c.entries.push_back({"tfidf.idf", {vec_.vocab_size()}, to_f32(vec_.idf())});
        switch (kind_) {
            case BaselineKind::nb: {
                const auto& m = nb();
                c.entries.push_back({"nb.class_docs", {2}, to_f32({m.class_docs[0], m.class_docs[1]})});
                c.entries.push_back({"nb.mass_negative", {m.dim}, to_f32(m.feature_mass[0])});
                c.entries.push_back({"nb.mass_positive", {m.dim}, to_f32(m.feature_mass[1])});
                break;
            }
            case BaselineKind::svm: {
                const auto& m = svm();
                c.entries.push_back({"svm.w", {m.w.size()}, to_f32(m.w)});
                c.entries.push_back({"svm.bias", {1}, to_f32({m.bias})});
                c.entries.push_back({"svm.platt", {2}, to_f32({m.platt_a, m.platt_b})});
                c.meta["calibrated"] = m.calibrated ? "1" : "0";
                break;
            }
            case BaselineKind::rf: {
                const auto& m = rf();
                c.meta["trees"] = std::to_string(m.trees.size());
                for (std::size_t t = 0; t < m.trees.size(); ++t) {
                    const auto& nodes = m.trees[t].nodes;
                    std::vector<float> flat;
                    flat.reserve(nodes.size() * 6);
                    for (const auto& n : nodes) {
                        flat.push_back(static_cast<float>(n.feature));
                        flat.push_back(n.threshold);
                        flat.push_back(static_cast<float>(n.left));
                        flat.push_back(static_cast<float>(n.right));
                        flat.push_back(n.counts[0]);
                        flat.push_back(n.counts[1]);
                    }
                    c.entries.push_back({"rf.tree" + std::to_string(t), {nodes.size(), 6}, std::move(flat)});
                }
                break;
            }
        }
        c.meta["dim"] = std::to_string(vec_.dimension());
        return c;
    }

    static BaselineModel from_container(const nn::Container& c) {
        const auto kind = parse_baseline_kind(c.meta_at("kind"));
        if (!kind) throw Error("checkpoint: not a baseline model (kind " + c.meta_at("kind") + ")");
        BaselineModel m;
        m.kind_ = *kind;
        const std::size_t vs = std::stoul(c.meta_at("vocab_size"));
        std::vector<std::string> vocab;
        for (auto t : text::split_ws(c.meta_at("vocab"))) vocab.emplace_back(t);
        if (vocab.size() != vs) throw Error("checkpoint: vocabulary size mismatch");
        TfidfVectorizer::Options opt;
        opt.min_df = std::stoul(c.meta_at("min_df"));
        m.vec_ = TfidfVectorizer(opt);
        m.vec_.assign(std::move(vocab), to_f64(c.at("tfidf.idf"), vs));
        const std::size_t dim = m.vec_.dimension();
        if (std::stoul(c.meta_at("dim")) != dim) throw Error("checkpoint: feature dimension mismatch");
        switch (*kind) {
            case BaselineKind::nb: {
                NbModel nb;
                nb.dim = dim;
                const auto docs = to_f64(c.at("nb.class_docs"), 2);
                nb.class_docs = {docs[0], docs[1]};
                nb.feature_mass[0] = to_f64(c.at("nb.mass_negative"), dim);
                nb.feature_mass[1] = to_f64(c.at("nb.mass_positive"), dim);
                nb.finalize();
                m.model_ = std::move(nb);
                break;
            }
            case BaselineKind::svm: {
                SvmModel s;
                s.w = to_f64(c.at("svm.w"), dim);
                s.bias = to_f64(c.at("svm.bias"), 1)[0];
                const auto p = to_f64(c.at("svm.platt"), 2);
                s.platt_a = p[0];
                s.platt_b = p[1];
                s.calibrated = c.meta_at("calibrated") == "1";
                m.model_ = std::move(s);
                break;
            }
            case BaselineKind::rf: {
                RfModel rf;
                rf.dim = dim;
                const std::size_t n = std::stoul(c.meta_at("trees"));
                for (std::size_t t = 0; t < n; ++t) {
                    const auto& e = c.at("rf.tree" + std::to_string(t));
                    if (e.shape.size() != 2 || e.shape[1] != 6) throw Error("checkpoint: malformed tree table");
                    DecisionTree tree;
                    const std::size_t count = e.shape[0];
                    for (std::size_t i = 0; i < count; ++i) {
                        const float* r = &e.data[i * 6];
                        TreeNode node;
                        node.feature = static_cast<std::int32_t>(r[0]);
                        node.threshold = r[1];
                        node.left = static_cast<std::int32_t>(r[2]);
                        node.right = static_cast<std::int32_t>(r[3]);
                        node.counts = {r[4], r[5]};
                        const auto in_range = [&](std::int32_t v) {
                            return v > 0 && static_cast<std::size_t>(v) < count;
                        };
                        if (node.feature >= 0 &&
                            (static_cast<std::size_t>(node.feature) >= dim || !in_range(node.left) || !in_range(node.right)))
                            throw Error("checkpoint: malformed tree node");
                        tree.nodes.push_back(node);
                    }
                    if (tree.nodes.empty()) throw Error("checkpoint: empty tree");
                    rf.trees.push_back(std::move(tree));
                }
                m.model_ = std::move(rf);
                break;
            }
        }
        return m;
    }

    void save(const std::string& path) const { nn::save_container(to_container(), path); }
    static BaselineModel load(const std::string& path) { return from_container(nn::load_container(path)); }

private:
    static std::vector<float> to_f32(const std::vector<double>& v) { return {v.begin(), v.end()}; }

    static std::vector<double> to_f64(const nn::Container::Entry& e, std::size_t expected) {
        if (e.data.size() != expected)
            throw Error("checkpoint: tensor " + e.name + " has " + std::to_string(e.data.size()) +
                        " values, expected " + std::to_string(expected));
        return {e.data.begin(), e.data.end()};
    }

    BaselineKind kind_ = BaselineKind::nb;
    TfidfVectorizer vec_;
    std::variant<NbModel, SvmModel, RfModel> model_;
};

struct PrefilterResult {
    Dataset selected;
    std::size_t qualifying = 0;
    /// Set when fewer items qualified than were requested.
    bool insufficient = false;
};

/// Keeps items whose calibrated probability for their predicted class
/// exceeds `threshold`, then draws a seeded uniform sample of `sample_n`.
/// The sample keeps input order.
inline PrefilterResult prefilter(const Dataset& unlabeled, const BaselineModel& svm, const FeatureResources& res,
                                 double threshold, std::size_t sample_n, std::uint64_t seed) {
    if (svm.kind() != BaselineKind::svm || !svm.svm().calibrated)
        throw Error("prefilter: requires a Platt-calibrated SVM model");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
        const auto tokens = tokenize(unlabeled[i].text);
        const auto p = svm.predict(tokens, res.aux(tokens));
        const double conf = p.label == Label::positive ? p.positive_prob : 1 - p.positive_prob;
        if (conf > threshold) keep.push_back(i);
    }
    PrefilterResult r;
    r.qualifying = keep.size();
    if (keep.size() <= sample_n) {
        r.insufficient = keep.size() < sample_n;
    } else {
        Rng rng(mix_seed(seed, "prefilter"));
        rng.shuffle(keep);
        keep.resize(sample_n);
        std::sort(keep.begin(), keep.end());
    }
    std::vector<Tweet> items;
    for (auto i : keep) items.push_back(unlabeled[i]);
    r.selected = Dataset(std::move(items));
    return r;
}

}  // namespace ssc
