#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "ssc/baselines/model.hpp"

using namespace ssc;
using ssc::testing::TempDir;

namespace {

SparseVector dense_to_sparse(const std::vector<double>& d) {
    SparseVector v;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] != 0) {
            v.index.push_back(static_cast<std::uint32_t>(i));
            v.value.push_back(d[i]);
        }
    return v;
}

std::vector<BowItem> word_task(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<std::string> pos = {"blaze", "kush", "bong", "stoned"};
    const std::vector<std::string> neg = {"coffee", "meeting", "lunch", "train"};
    const std::vector<std::string> shared = {"the", "today", "so", "lol", "just"};
    std::vector<BowItem> items;
    for (std::size_t i = 0; i < n; ++i) {
        BowItem b;
        b.label = i % 2 ? Label::positive : Label::negative;
        const auto& own = b.label == Label::positive ? pos : neg;
        for (int k = 0; k < 4; ++k) b.tokens.push_back(shared[rng.below(shared.size())]);
        b.tokens.push_back(own[rng.below(own.size())]);
        items.push_back(std::move(b));
    }
    return items;
}

}  // namespace

TEST(Tfidf, EmptyTokensGiveEmptyTermBlock) {
    TfidfVectorizer v;
    v.fit({{"a", "b"}, {"b"}});
    EXPECT_EQ(v.transform({}, AuxVector{}).nnz(), 0u);
    EXPECT_EQ(v.dimension(), 2 + kAuxDim);
}

TEST(Tfidf, IdfAndNormalization) {
    TfidfVectorizer v;
    v.fit({{"a", "b"}, {"a"}, {"a", "c"}});
    EXPECT_EQ(v.idf("a"), 1.0);
    EXPECT_NEAR(v.idf("b"), std::log(4.0 / 2.0) + 1, 1e-7);
    const auto x = v.transform({"a", "a", "b", "zzz"}, AuxVector{});
    ASSERT_EQ(x.nnz(), 2u);
    double norm = 0;
    for (double w : x.value) norm += w * w;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    EXPECT_NEAR(x.get(0) / x.get(1), 2.0 / v.idf("b"), 1e-12);
}

TEST(Tfidf, AuxAppendedAfterVocabulary) {
    TfidfVectorizer v;
    v.fit({{"a"}});
    AuxVector aux{};
    aux[0] = 1;
    aux[5] = 1;
    const auto x = v.transform({"a"}, aux);
    EXPECT_EQ(x.get(1), 1.0);
    EXPECT_EQ(x.get(6), 1.0);
    EXPECT_EQ(x.nnz(), 3u);
}

TEST(Tfidf, MinDfDropsRareTerms) {
    TfidfVectorizer v({.min_df = 2});
    v.fit({{"a", "b"}, {"a"}});
    EXPECT_EQ(v.vocab(), std::vector<std::string>{"a"});
}

TEST(NaiveBayes, SymmetricCorpusGivesHalf) {
    std::vector<SparseVector> x = {dense_to_sparse({1, 0}), dense_to_sparse({0, 1})};
    std::vector<Label> y = {Label::positive, Label::negative};
    const auto m = train_nb(x, y, 2);
    const auto p = nb_predict(m, dense_to_sparse({1, 1}));
    EXPECT_NEAR(p.positive_prob, 0.5, 1e-15);
    EXPECT_EQ(p.label, Label::negative);
}

TEST(NaiveBayes, MatchesEnumerationOracle) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t V = 1 + rng.below(5);
        const std::size_t n = 2 + rng.below(8);
        std::vector<std::vector<double>> rows(n, std::vector<double>(V));
        std::vector<Label> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& c : rows[i]) c = static_cast<double>(rng.below(4));
            labels[i] = i == 0 ? Label::positive : i == 1 ? Label::negative
                                                          : (rng.below(2) ? Label::positive : Label::negative);
        }
        std::vector<SparseVector> x;
        for (const auto& r : rows) x.push_back(dense_to_sparse(r));
        const auto m = train_nb(x, labels, V);
        std::vector<double> q(V);
        for (auto& c : q) c = static_cast<double>(rng.below(4));
        const double expected = oracle::nb_posterior(rows, labels, q);
        ASSERT_NEAR(nb_predict(m, dense_to_sparse(q)).positive_prob, expected, 1e-12) << "trial " << trial;
    }
}

TEST(NaiveBayes, EmptyInputFallsBackToPrior) {
    std::vector<SparseVector> x = {dense_to_sparse({1}), dense_to_sparse({1}), dense_to_sparse({1}),
                                   dense_to_sparse({2})};
    std::vector<Label> y = {Label::positive, Label::positive, Label::positive, Label::negative};
    EXPECT_NEAR(nb_predict(train_nb(x, y, 1), SparseVector{}).positive_prob, 0.75, 1e-15);
}

TEST(NaiveBayes, Errors) {
    std::vector<SparseVector> x = {dense_to_sparse({1})};
    EXPECT_THROW(train_nb(x, std::vector<Label>{Label::positive}, 1), Error);
    std::vector<SparseVector> neg = {SparseVector{{0}, {-1.0}}, dense_to_sparse({1})};
    EXPECT_THROW(train_nb(neg, std::vector<Label>{Label::positive, Label::negative}, 1), Error);
}

TEST(Svm, SeparablePair) {
    std::vector<SparseVector> x = {dense_to_sparse({1}), dense_to_sparse({-1})};
    std::vector<Label> y = {Label::positive, Label::negative};
    const auto m = train_svm(x, y, 1, {1e-2, 50, 1});
    EXPECT_GT(m.score(x[0]), 0);
    EXPECT_LT(m.score(x[1]), 0);
}

TEST(Svm, ObjectiveDecreases) {
    Rng rng(5);
    std::vector<SparseVector> x;
    std::vector<Label> y;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> d(6);
        for (auto& v : d) v = rng.uniform(-1, 1);
        y.push_back(d[0] + 0.5 * d[1] > 0 ? Label::positive : Label::negative);
        x.push_back(dense_to_sparse(d));
    }
    std::vector<double> history;
    const auto m = train_svm(x, y, 6, {1e-2, 30, 2}, &history);
    ASSERT_EQ(history.size(), 30u);
    const double initial = svm_objective(SvmModel{std::vector<double>(6, 0.0)}, x, y, 1e-2);
    EXPECT_LE(history.back(), initial);
    EXPECT_LT(svm_objective(m, x, y, 1e-2), initial);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x.size(); ++i) correct += (m.score(x[i]) > 0) == (y[i] == Label::positive);
    EXPECT_GE(correct, 190u);
}

TEST(Svm, Deterministic) {
    const auto data = word_task(60, 3);
    BaselineConfig cfg;
    const auto a = BaselineModel::train(BaselineKind::svm, data, cfg, 4);
    const auto b = BaselineModel::train(BaselineKind::svm, data, cfg, 4);
    EXPECT_EQ(a.svm().w, b.svm().w);
    EXPECT_EQ(a.svm().bias, b.svm().bias);
    EXPECT_THROW(train_svm(std::vector<SparseVector>{}, std::vector<Label>{}, 1, {}), Error);
}

TEST(Platt, SymmetricScores) {
    std::vector<double> s = {-2, -1, 1, 2};
    std::vector<Label> y = {Label::negative, Label::negative, Label::positive, Label::positive};
    const auto p = platt_fit(s, y);
    EXPECT_NEAR(p.b, 0.0, 1e-6);
    EXPECT_LT(p.a, 0.0);
    EXPECT_NEAR(platt_probability(p.a, p.b, 0), 0.5, 1e-6);
}

TEST(Platt, MonotoneInScore) {
    Rng rng(8);
    std::vector<double> s;
    std::vector<Label> y;
    for (int i = 0; i < 100; ++i) {
        const double v = rng.uniform(-3, 3);
        s.push_back(v);
        y.push_back(v + rng.uniform(-1, 1) > 0 ? Label::positive : Label::negative);
    }
    const auto p = platt_fit(s, y);
    double prev = -1;
    for (double v = -5; v <= 5; v += 0.25) {
        const double q = platt_probability(p.a, p.b, v);
        EXPECT_GT(q, prev);
        prev = q;
    }
    EXPECT_GT(platt_probability(p.a, p.b, 1000), 0.99);
    EXPECT_LT(platt_probability(p.a, p.b, -1000), 0.01);
}

TEST(Platt, ConstantScoresGiveMeanTarget) {
    std::vector<double> s(10, 0.3);
    std::vector<Label> y(10, Label::negative);
    for (int i = 0; i < 3; ++i) y[i] = Label::positive;
    const auto p = platt_fit(s, y);
    EXPECT_NEAR(platt_probability(p.a, p.b, 0.3), (3 * 0.8 + 7.0 / 9.0) / 10, 1e-6);
    EXPECT_THROW(platt_fit(s, std::vector<Label>(10, Label::positive)), Error);
}

TEST(RandomForest, SingleFullTreeMemorizes) {
    Rng rng(9);
    std::vector<SparseVector> x;
    std::vector<Label> y;
    for (int i = 0; i < 80; ++i) {
        std::vector<double> d(5);
        for (auto& v : d) v = static_cast<double>(rng.below(10));
        d[0] = i;
        x.push_back(dense_to_sparse(d));
        y.push_back(rng.below(2) ? Label::positive : Label::negative);
    }
    RfConfig cfg;
    cfg.trees = 1;
    cfg.max_depth = 0;
    cfg.bootstrap = false;
    cfg.max_features = 5;
    const auto m = train_rf(x, y, 5, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(m.predict(x[i]).label, y[i]) << i;
}

TEST(RandomForest, VoteShareAndDepthLimit) {
    const auto data = word_task(100, 10);
    BaselineConfig cfg;
    cfg.rf_trees = 9;
    const auto m = BaselineModel::train(BaselineKind::rf, data, cfg, 1);
    EXPECT_EQ(m.rf().trees.size(), 9u);
    const auto p = m.predict({"kush", "today"}, AuxVector{});
    EXPECT_NEAR(p.positive_prob * 9, std::round(p.positive_prob * 9), 1e-12);
    RfConfig stump;
    stump.trees = 1;
    stump.max_depth = 1;
    std::vector<SparseVector> x = {dense_to_sparse({0, 1}), dense_to_sparse({1, 0}), dense_to_sparse({1, 1})};
    std::vector<Label> y = {Label::positive, Label::negative, Label::positive};
    EXPECT_LE(train_rf(x, y, 2, stump).trees[0].nodes.size(), 3u);
}

TEST(BaselineModel, LearnsWordTask) {
    const auto train_set = word_task(200, 11), test_set = word_task(100, 12);
    for (auto kind : {BaselineKind::nb, BaselineKind::svm, BaselineKind::rf}) {
        const auto m = BaselineModel::train(kind, train_set, BaselineConfig{}, 2);
        std::size_t correct = 0;
        for (const auto& t : test_set) correct += m.predict(t.tokens, t.aux).label == t.label;
        EXPECT_GE(correct, 95u) << kind_name(kind);
    }
}

TEST(BaselineModel, SaveLoadReproducesPredictions) {
    TempDir dir;
    const auto data = word_task(80, 13), probe = word_task(100, 14);
    for (auto kind : {BaselineKind::nb, BaselineKind::svm, BaselineKind::rf}) {
        const auto m = BaselineModel::train(kind, data, BaselineConfig{}, 3);
        const auto path = dir.file(std::string(kind_tag(kind)) + ".ckpt");
        m.save(path);
        const auto back = BaselineModel::load(path);
        EXPECT_EQ(back.kind(), kind);
        for (const auto& t : probe) {
            const auto a = m.predict(t.tokens, t.aux), b = back.predict(t.tokens, t.aux);
            ASSERT_EQ(a.label, b.label);
            ASSERT_EQ(a.positive_prob, b.positive_prob) << kind_name(kind);
        }
    }
}

TEST(BaselineModel, KindNames) {
    EXPECT_EQ(parse_baseline_kind("svm"), BaselineKind::svm);
    EXPECT_EQ(parse_baseline_kind("RF1"), BaselineKind::rf);
    EXPECT_FALSE(parse_baseline_kind("knn"));
}

TEST(Prefilter, Thresholds) {
    const auto svm = BaselineModel::train(BaselineKind::svm, word_task(100, 15), BaselineConfig{}, 1);
    std::vector<Tweet> items;
    for (int i = 0; i < 30; ++i) items.push_back({"u" + std::to_string(i), i % 2 ? "kush today" : "coffee lol", {}});
    const Dataset pool(std::move(items));
    FeatureResources res;

    const auto none = prefilter(pool, svm, res, 1.0, 10, 1);
    EXPECT_EQ(none.qualifying, 0u);
    EXPECT_TRUE(none.insufficient);
    EXPECT_EQ(none.selected.size(), 0u);

    const auto all = prefilter(pool, svm, res, 0.0, 10, 1);
    EXPECT_EQ(all.qualifying, 30u);
    EXPECT_FALSE(all.insufficient);
    EXPECT_EQ(all.selected.size(), 10u);
    EXPECT_EQ(prefilter(pool, svm, res, 0.0, 10, 1).selected, all.selected);

    const auto nb = BaselineModel::train(BaselineKind::nb, word_task(100, 15), BaselineConfig{}, 1);
    EXPECT_THROW(prefilter(pool, nb, res, 0.5, 10, 1), Error);
}
