#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "../support/gradcases.hpp"
#include "ssc/models/encoded.hpp"
#include "ssc/models/trainer.hpp"

using namespace ssc;
using ssc::testing::TempDir;

namespace {

CCnnConfig small_ccnn(AuxMode aux = AuxMode::full) {
    CCnnConfig c;
    c.seq_len = 24;
    c.kernel_sizes = {2, 3};
    c.filters = 4;
    c.char_embed_dim = 4;
    c.aux_mode = aux;
    return c;
}

EncodedItem<float> char_item(const std::string& text, Label label, std::size_t seq_len, const AuxVector& aux = {}) {
    EncodedItem<float> e;
    e.chars = encode_chars(text);
    e.chars.resize(seq_len);
    e.aux = aux;
    e.label = label;
    return e;
}

/// 20 items: positives are runs of 'a' with an abuse hit, negatives runs
/// of 'z' without.
std::vector<EncodedItem<float>> toy_set(std::size_t seq_len) {
    std::vector<EncodedItem<float>> items;
    for (int i = 0; i < 20; ++i) {
        const bool pos = i % 2 == 0;
        AuxVector aux{};
        aux[0] = pos ? 1 : 0;
        items.push_back(char_item(std::string(3 + i / 2, pos ? 'a' : 'z'), pos ? Label::positive : Label::negative,
                                  seq_len, aux));
    }
    return items;
}

}  // namespace

TEST(Models, DefaultParameterCounts) {
    // W-CNN: conv1 614,784 + conv2 196,992 + dense1 3,933,184 + dense2
    // 1,049,600 + output (1024+154)*2+2.
    EXPECT_EQ(build_wcnn<float>(WCnnConfig{}, 1)->params().count(), 5796918u);
    // C-CNN: embedding 9,088 + convs 311,808 + dense1 525,312 + dense2
    // 1,049,600 + output.
    EXPECT_EQ(build_ccnn<float>(CCnnConfig{}, 1)->params().count(), 1898166u);
    CCnnConfig none;
    none.aux_mode = AuxMode::none;
    EXPECT_EQ(build_ccnn<float>(none, 1)->params().count(), 1897858u);
}

TEST(Models, AuxModeOutputLayer) {
    auto full = build_ccnn<float>(small_ccnn(AuxMode::full), 1);
    auto none = build_ccnn<float>(small_ccnn(AuxMode::none), 1);
    EXPECT_EQ(full->params().at("out.w").value.dim(0) - none->params().at("out.w").value.dim(0), 154u);
    EXPECT_EQ(full->kind(), CnnKind::char_aux);
    EXPECT_EQ(none->kind(), CnnKind::char_cnn);
}

TEST(Models, ConfigValidation) {
    WCnnConfig w;
    w.dense_units = 512;
    EXPECT_THROW(build_wcnn<float>(w, 1), Error);
    w = {};
    w.seq_len = 3;
    EXPECT_THROW(build_wcnn<float>(w, 1), Error);
    w = {};
    w.dropout = 1.0;
    EXPECT_THROW(build_wcnn<float>(w, 1), Error);
    auto c = small_ccnn();
    c.kernel_sizes = {30};
    EXPECT_THROW(build_ccnn<float>(c, 1), Error);
    EXPECT_THROW(parse_cnn_kind("rnn"), Error);
}

TEST(Models, WordCnnZeroInputGivesDistribution) {
    WCnnConfig c;
    c.filters = 4;
    c.embed_dim = 8;
    auto model = build_wcnn<double>(c, 3);
    EncodedItem<double> item;
    item.words = nn::Tensor<double>({40, 8});
    const auto p = predict(*model, item);
    EXPECT_GE(p.positive_prob, 0.0);
    EXPECT_LE(p.positive_prob, 1.0);
    item.words = nn::Tensor<double>({39, 8});
    EXPECT_THROW(predict(*model, item), Error);
}

TEST(Models, CharCnnProbabilitiesSumToOne) {
    auto model = build_ccnn<double>(
        [] {
            auto c = small_ccnn();
            return c;
        }(),
        4);
    EncodedItem<double> item;
    item.chars = encode_chars("so high right now");
    item.chars.resize(24);
    nn::Graph<double> g;
    const EncodedItem<double>* ptr = &item;
    auto probs = nn::Graph<double>::softmax(g.value(model->forward(g, {&ptr, 1}, false, nullptr)));
    EXPECT_NEAR(probs[0] + probs[1], 1.0, 1e-12);
    item.chars[0] = 500;
    EXPECT_THROW(predict(*model, item), Error);
}

TEST(Models, PadRegionPermutationInvariant) {
    CCnnConfig c;
    c.filters = 8;
    c.char_embed_dim = 8;
    auto model = build_ccnn<double>(c, 5);
    const std::string text = "feeling so high tonight lol";
    ASSERT_LT(text.size(), kMaxChars - 7);
    EncodedItem<double> a;
    a.chars = encode_chars(text);
    EncodedItem<double> b = a;
    Rng rng(6);
    std::span<std::int32_t> pad(b.chars.data() + text.size(), kMaxChars - text.size());
    rng.shuffle(pad);
    EXPECT_EQ(predict(*model, a).positive_prob, predict(*model, b).positive_prob);
}

TEST(Models, DropoutOnlyInTraining) {
    auto model = build_ccnn<float>(small_ccnn(), 7);
    auto item = char_item("text", Label::positive, 24);
    const auto p1 = predict(*model, item);
    const auto p2 = predict(*model, item);
    EXPECT_EQ(p1.positive_prob, p2.positive_prob);
    const EncodedItem<float>* ptr = &item;
    nn::Graph<float> g;
    EXPECT_THROW(model->forward(g, {&ptr, 1}, true, nullptr), Error);
}

TEST(Models, ParameterMismatchOnLoad) {
    auto a = build_ccnn<float>(small_ccnn(AuxMode::full), 1);
    auto b = build_ccnn<float>(small_ccnn(AuxMode::none), 1);
    EXPECT_THROW(a->load_params(b->params()), Error);
}

TEST(Decide, TieRule) {
    EXPECT_EQ(decide(0.2, 0.8), Label::positive);
    EXPECT_EQ(decide(0.5, 0.5), Label::negative);
    EXPECT_EQ(decide(0.8, 0.2), Label::negative);
}

TEST(SelectBestEpoch, Rules) {
    auto make = [](std::vector<double> f1) {
        std::vector<ModelCheckpoint<float>> cps;
        for (std::size_t i = 0; i < f1.size(); ++i) {
            ModelCheckpoint<float> cp;
            cp.epoch = i + 1;
            cp.validation.f1_p = f1[i];
            cps.push_back(cp);
        }
        return cps;
    };
    EXPECT_EQ(select_best_epoch(make({0.5, 0.8, 0.7})).epoch, 2u);
    EXPECT_EQ(select_best_epoch(make({0.8, 0.8})).epoch, 1u);
    EXPECT_EQ(select_best_epoch(make({0.3})).epoch, 1u);
    EXPECT_THROW(select_best_epoch(make({})), Error);
    EXPECT_THROW(select_best_epoch(make({0.1}), "auc"), Error);
}

TEST(ValidationSplit, StratifiedAndDeterministic) {
    std::vector<Label> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(i < 30 ? Label::positive : Label::negative);
    const auto [fit, val] = split_validation(labels, 0.1, 5);
    EXPECT_EQ(fit.size() + val.size(), 100u);
    std::size_t vp = 0;
    for (auto i : val) vp += labels[i] == Label::positive;
    EXPECT_EQ(vp, 3u);
    EXPECT_EQ(val.size(), 10u);
    EXPECT_EQ(split_validation(labels, 0.1, 5), split_validation(labels, 0.1, 5));
}

TEST(Train, OverfitsToySet) {
    auto model = build_ccnn<float>(small_ccnn(), 11);
    auto data = toy_set(24);
    TrainConfig tc;
    tc.epochs = 30;
    tc.batch_size = 4;
    tc.seed = 3;
    const auto cps = train(*model, data, tc);
    ASSERT_EQ(cps.size(), 30u);
    std::vector<const EncodedItem<float>*> ptrs;
    for (const auto& d : data) ptrs.push_back(&d);
    EXPECT_EQ(evaluate(*model, std::span<const EncodedItem<float>* const>(ptrs)).accuracy, 1.0);
    EXPECT_LT(cps.back().train_loss, cps.front().train_loss);
}

TEST(Train, CheckpointPerEpochAndDeterminism) {
    auto data = toy_set(24);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 4;
    tc.seed = 9;
    auto m1 = build_ccnn<float>(small_ccnn(), 12);
    auto m2 = build_ccnn<float>(small_ccnn(), 12);
    const auto a = train(*m1, data, tc);
    const auto b = train(*m2, data, tc);
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a[i].epoch, i + 1);
        EXPECT_EQ(a[i].validation, b[i].validation);
        EXPECT_EQ(a[i].train_loss, b[i].train_loss);
        ASSERT_TRUE(a[i].params);
        EXPECT_TRUE(a[i].params->same_values(*b[i].params));
    }
    EXPECT_TRUE(m1->params().same_values(m2->params()));
    EXPECT_TRUE(a.back().params->same_values(m1->params()));
}

TEST(Train, RetainBestOnlyAndFiles) {
    TempDir dir;
    auto data = toy_set(24);
    TrainConfig tc;
    tc.epochs = 4;
    tc.batch_size = 4;
    tc.retain_all = false;
    tc.checkpoint_dir = dir.path().string();
    tc.checkpoint_prefix = "m_";
    auto model = build_ccnn<float>(small_ccnn(), 13);
    const auto cps = train(*model, data, tc);
    std::size_t retained = 0;
    for (const auto& cp : cps) retained += cp.params.has_value();
    EXPECT_EQ(retained, 1u);
    EXPECT_TRUE(select_best_epoch(cps).params.has_value());
    for (int e = 1; e <= 4; ++e) EXPECT_TRUE(std::filesystem::exists(dir.file("m_epoch" + std::to_string(e) + ".ckpt")));
}

TEST(Train, Errors) {
    auto model = build_ccnn<float>(small_ccnn(), 14);
    std::vector<EncodedItem<float>> one_class = {char_item("a", Label::positive, 24), char_item("b", Label::positive, 24)};
    EXPECT_THROW(train(*model, one_class, TrainConfig{}), Error);
    EXPECT_THROW(train(*model, std::vector<EncodedItem<float>>{}, TrainConfig{}), Error);
    TrainConfig bad;
    bad.epochs = 0;
    EXPECT_THROW(train(*model, toy_set(24), bad), Error);
    bad = {};
    bad.selection_metric = "auc";
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Checkpoint, ModelRoundTripReproducesPredictions) {
    TempDir dir;
    auto data = toy_set(24);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 4;
    auto model = build_ccnn<float>(small_ccnn(), 15);
    const auto cps = train(*model, data, tc);
    const auto& cp = cps.back();
    save_checkpoint(cp, dir.file("best.ckpt"));
    const auto back = load_checkpoint<float>(dir.file("best.ckpt"));
    EXPECT_EQ(back.epoch, cp.epoch);
    EXPECT_EQ(back.kind, "char_aux");
    EXPECT_EQ(back.validation, cp.validation);
    EXPECT_EQ(back.train_loss, cp.train_loss);
    EXPECT_EQ(back.config_digest, model->config_digest());
    EXPECT_TRUE(back.params->same_values(*cp.params));
    auto restored = restore_model(back);

    Rng rng(16);
    for (int i = 0; i < 100; ++i) {
        std::string text;
        const auto n = 1 + rng.below(23);
        for (std::uint64_t j = 0; j < n; ++j) text.push_back(static_cast<char>(32 + rng.below(95)));
        auto item = char_item(text, Label::negative, 24, ssc::testing::random_aux(rng));
        const auto a = predict(*model, item), b = predict(*restored, item);
        ASSERT_EQ(a.label, b.label);
        ASSERT_EQ(a.positive_prob, b.positive_prob);
    }
}

TEST(Checkpoint, RejectsBaselineKind) {
    nn::Container c;
    c.meta["kind"] = "NB1";
    EXPECT_THROW(from_container<float>(c), Error);
}

TEST(Encoder, ProducesAllRepresentations) {
    FeatureResources res;
    res.abuse = Lexicon({"weed"});
    EmbeddingTable<float> emb(2);
    const float v[] = {1, 2};
    emb.add("weed", v);
    Encoder<float> enc(res, &emb);
    const auto e = enc.encode(Tweet{"id1", "Weed time", Label::positive});
    EXPECT_EQ(e.tokens, (TokenSeq{"weed", "time"}));
    EXPECT_EQ(e.aux[0], 1);
    EXPECT_EQ(e.words.shape(), (nn::Shape{40, 2}));
    EXPECT_EQ(e.words.at(0, 1), 2.0f);
    EXPECT_EQ(e.chars.size(), kMaxChars);
    EXPECT_EQ(e.label, Label::positive);
    Encoder<float> no_emb(res, nullptr);
    EXPECT_TRUE(no_emb.encode(Tweet{"id2", "x", {}}).words.empty());
}
