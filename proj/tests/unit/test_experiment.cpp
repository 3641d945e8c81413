#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "ssc/experiment/run.hpp"
#include "ssc/synth.hpp"

using namespace ssc;
using ssc::testing::read_file;
using ssc::testing::TempDir;
using ssc::testing::write_file;

namespace {

std::string expect_parse_error(const std::string& content, std::size_t line) {
    try {
        load_config_string(content, "test.ini");
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), line) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "expected ParseError";
    return {};
}

ExperimentConfig small_experiment(const TempDir& dir) {
    synth::Config sc;
    sc.positives = 400;
    sc.negatives = 400;
    synth::write_resources(dir.file("res"), sc);
    ExperimentConfig cfg;
    cfg.dataset = dir.file("res/dataset.tsv");
    cfg.abuse_lexicon = dir.file("res/abuse.txt");
    cfg.slang_lexicon = dir.file("res/slang.txt");
    cfg.clusters = dir.file("res/clusters.tsv");
    cfg.synonyms = dir.file("res/synonyms.tsv");
    cfg.folds = 2;
    cfg.scenarios = {{50, 50, 200, 100, 0}, {20, 80, 200, 100, 0}};
    cfg.roster = {"nb"};
    cfg.members_per_type = 2;
    cfg.checkpoints = CheckpointPolicy::none;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST(Config, DefaultsNeedOnlyDataset) {
    const auto cfg = load_config_string("[paths]\ndataset = /data/x.tsv\n", "t");
    EXPECT_EQ(cfg.dataset, "/data/x.tsv");
    EXPECT_EQ(cfg.folds, 6u);
    EXPECT_EQ(cfg.scenarios.size(), 5u);
    EXPECT_EQ(cfg.roster.size(), 6u);
    EXPECT_EQ(cfg.members_per_type, 2u);
    EXPECT_EQ(cfg.train.epochs, 30u);
    EXPECT_EQ(cfg.train.batch_size, 32u);
    EXPECT_EQ(cfg.wcnn.filters, 128u);
    EXPECT_EQ(cfg.ccnn.kernel_sizes, (std::vector<std::size_t>{3, 4, 5, 7}));
}

TEST(Config, UnknownKeyNamesLine) {
    const auto msg = expect_parse_error("[paths]\ndataset = x\n\n[train]\nlearning_rte = 0.01\n", 5);
    EXPECT_NE(msg.find("learning_rte"), std::string::npos);
}

TEST(Config, Errors) {
    expect_parse_error("dataset = x\n[nope]\n", 2);
    expect_parse_error("dataset = x\n[train]\nepochs = -3\n", 3);
    expect_parse_error("dataset = x\n[train]\nepochs\n", 3);
    expect_parse_error("dataset = x\n[experiment]\ncheckpoints = some\n", 3);
    expect_parse_error("dataset = x\n[experiment]\nroster = nb, knn\n", 3);
    expect_parse_error("filters = 8\ndataset = x\n", 1);
    expect_parse_error("[train]\nepochs = 3\n", 2);
}

TEST(Config, BareKeysSectionsAndComments) {
    const auto cfg = load_config_string(
        "# comment\n"
        "dataset = d.tsv   # trailing\n"
        "epochs = 4\n"
        "[experiment]\n"
        "seed = 99\n"
        "scenarios = 30:70/100/20, 10:90/50/10\n"
        "roster = char_cnn, nb\n"
        "ccnn.filters = 16\n",
        "t");
    EXPECT_EQ(cfg.train.epochs, 4u);
    EXPECT_EQ(cfg.seed, 99u);
    ASSERT_EQ(cfg.scenarios.size(), 2u);
    EXPECT_EQ(cfg.scenarios[1].positive_pct, 10);
    EXPECT_EQ(cfg.scenarios[1].n_test, 10u);
    EXPECT_EQ(cfg.roster, (std::vector<std::string>{"char_cnn", "nb"}));
    EXPECT_EQ(cfg.ccnn.filters, 16u);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
    TempDir dir;
    write_file(dir.file("data.tsv"), "a\t1\tx\n");
    const auto path = write_file(dir.file("exp.ini"), "[paths]\ndataset = data.tsv\noutput_dir = out\n");
    const auto cfg = load_config(path);
    EXPECT_EQ(cfg.dataset, dir.file("data.tsv"));
    EXPECT_EQ(cfg.output_dir, "out");
}

TEST(Config, DumpRoundTrip) {
    ExperimentConfig cfg;
    cfg.dataset = "/x/d.tsv";
    cfg.seed = 1234;
    cfg.train.adam.lr = 0.00037;
    cfg.scenarios = {{40, 60, 300, 60, 0}};
    cfg.roster = {"word_aux", "rf"};
    cfg.baselines.nb_bootstrap = false;
    cfg.ccnn.kernel_sizes = {2, 9};
    const auto back = load_config_string(dump_config(cfg), "dump");
    EXPECT_EQ(back, cfg);
    EXPECT_EQ(config_digest(back), config_digest(cfg));
    EXPECT_EQ(back.train.adam.lr, 0.00037);
    auto other = cfg;
    other.seed = 1;
    EXPECT_NE(config_digest(other), config_digest(cfg));
}

TEST(Config, Validation) {
    TempDir dir;
    ExperimentConfig cfg;
    cfg.dataset = write_file(dir.file("d.tsv"), "a\t1\tx\n");
    cfg.roster = {"nb"};
    EXPECT_NO_THROW(validate_config(cfg));
    auto bad = cfg;
    bad.abuse_lexicon = dir.file("missing.txt");
    EXPECT_THROW(validate_config(bad), Error);
    bad = cfg;
    bad.roster = {"word_aux"};
    EXPECT_THROW(validate_config(bad), Error);
    bad = cfg;
    bad.folds = 0;
    EXPECT_THROW(validate_config(bad), Error);
    bad = cfg;
    bad.scenarios = {{70, 20, 10, 10, 0}};
    EXPECT_THROW(validate_config(bad), Error);
}

TEST(Report, CsvRoundTripAtSixDecimals) {
    ExperimentReport r;
    r.rows.push_back({"50:50", "ensemble_cnn", metrics_from_confusion(10, 3, 2, 7)});
    r.rows.push_back({"50:50", "nb", metrics_from_confusion(1, 1, 1, 1)});
    const auto csv = report_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "scenario,model,accuracy,precision_p,recall_p,f1_p,tp,fp,fn,tn");
    EXPECT_NE(csv.find("0.769231"), std::string::npos);
    const auto rows = parse_report_csv(csv);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].model, "ensemble_cnn");
    EXPECT_NEAR(rows[0].metrics.precision_p, 10.0 / 13.0, 5e-7);
    EXPECT_EQ(rows[0].metrics.tp, 10);
    EXPECT_THROW(parse_report_csv("h\n1,2,3\n"), ParseError);
}

TEST(Report, MarkdownBlocks) {
    ExperimentReport r;
    for (const char* sc : {"50:50", "10:90"})
        for (const char* m : {"ensemble_ml", "svm"}) r.rows.push_back({sc, m, metrics_from_confusion(3, 1, 2, 4)});
    const auto md = report_markdown(r);
    std::size_t blocks = 0;
    for (auto p = md.find("### Scenario"); p != std::string::npos; p = md.find("### Scenario", p + 1)) ++blocks;
    EXPECT_EQ(blocks, 2u);
    EXPECT_NE(md.find("| F1 score_p | 0.6667 |"), std::string::npos) << md;
    EXPECT_NE(md.find("| Accuracy | 0.7000 | 0.7000 |"), std::string::npos) << md;
    EXPECT_EQ(emit_report(r, "csv"), report_csv(r));
    EXPECT_THROW(emit_report(r, "xml"), Error);
    EXPECT_THROW(emit_report(ExperimentReport{}, "csv"), Error);
}

TEST(Report, SingleRowSingleBlock) {
    ExperimentReport r;
    r.rows.push_back({"30:70", "rf", metrics_from_confusion(0, 0, 0, 4)});
    const auto md = report_markdown(r);
    EXPECT_EQ(md.find("### Scenario 30:70"), 0u);
    EXPECT_EQ(md.find("### Scenario", 1), std::string::npos);
}

TEST(Synth, GeneratorProperties) {
    synth::Config c;
    c.positives = 400;
    c.negatives = 600;
    const auto d = synth::generate(c);
    EXPECT_EQ(d.size(), 1000u);
    EXPECT_EQ(d.count(Label::positive), 400u);
    EXPECT_EQ(dedupe(d).removed, 0u);
    EXPECT_EQ(synth::generate(c), d);
    c.seed = 8;
    EXPECT_NE(synth::generate(c), d);
}

TEST(Synth, ResourcesLoad) {
    TempDir dir;
    synth::Config c;
    c.positives = 50;
    c.negatives = 50;
    synth::write_resources(dir.path().string(), c);
    EXPECT_EQ(load_dataset(dir.file("dataset.tsv")).size(), 100u);
    EXPECT_TRUE(load_lexicon(dir.file("abuse.txt")).contains("weed"));
    EXPECT_FALSE(load_slang_lexicon(dir.file("slang.txt")).contains("lean"));
    EXPECT_GE(load_clusters(dir.file("clusters.tsv")).find("weed"), 0);
    EXPECT_TRUE(load_synonyms(dir.file("synonyms.tsv")).find("weed"));
    const auto emb = load_embeddings<float>(dir.file("embeddings.txt"));
    EXPECT_EQ(emb.dim(), 50u);
    EXPECT_TRUE(emb.find("marijuana"));
}

TEST(Experiment, NaiveBayesOnlyRun) {
    TempDir dir;
    auto cfg = small_experiment(dir);
    cfg.scenarios.resize(1);
    cfg.output_dir = dir.file("out");
    const auto r = run_experiment<float>(cfg);
    ASSERT_TRUE(r.ok()) << r.failures.front();
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].model, "nb");
    EXPECT_EQ(r.rows[0].metrics.tp + r.rows[0].metrics.fp + r.rows[0].metrics.fn + r.rows[0].metrics.tn, 100);
    EXPECT_GT(r.rows[0].metrics.f1_p, 0.6);
    EXPECT_EQ(r.completed_units.size(), 4u);
    for (const char* f : {"report.csv", "report.md", "provenance.txt", "config.ini", "manifest.txt",
                          "scenario_50-50/folds.tsv", "scenario_50-50/fold0.csv", "scenario_50-50/fold1.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir.file("out") + "/" + f)) << f;
    EXPECT_EQ(load_config(dir.file("out/config.ini")), cfg);
    EXPECT_NE(read_file(dir.file("out/provenance.txt")).find("precision=32"), std::string::npos);
}

TEST(Experiment, DeterministicReport) {
    TempDir dir;
    auto cfg = small_experiment(dir);
    cfg.roster = {"nb", "svm", "rf"};
    cfg.baselines.rf_trees = 5;
    cfg.output_dir = dir.file("a");
    const auto a = run_experiment<float>(cfg);
    cfg.output_dir = dir.file("b");
    const auto b = run_experiment<float>(cfg, RunOptions{.jobs = 3});
    ASSERT_TRUE(a.ok());
    EXPECT_EQ(a.rows.size(), 8u);
    EXPECT_EQ(a.rows[0].model, "ensemble_ml");
    EXPECT_EQ(read_file(dir.file("a/report.csv")), read_file(dir.file("b/report.csv")));
    EXPECT_EQ(read_file(dir.file("a/scenario_20-80/fold1.csv")), read_file(dir.file("b/scenario_20-80/fold1.csv")));
}

TEST(Experiment, PartialFailureRecorded) {
    TempDir dir;
    auto cfg = small_experiment(dir);
    cfg.scenarios.push_back({10, 90, 5000, 100, 0});
    cfg.output_dir = dir.file("out");
    const auto r = run_experiment<float>(cfg);
    EXPECT_FALSE(r.ok());
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_NE(r.failures[0].find("10:90"), std::string::npos);
    EXPECT_EQ(r.rows.size(), 2u);
    const auto manifest = read_file(dir.file("out/manifest.txt"));
    EXPECT_NE(manifest.find("failed\t10:90"), std::string::npos) << manifest;
    EXPECT_NE(manifest.find("completed\t50:50"), std::string::npos) << manifest;
    EXPECT_TRUE(std::filesystem::exists(dir.file("out/report.csv")));
}

TEST(Experiment, UnlabeledPoolRejected) {
    TempDir dir;
    ExperimentConfig cfg;
    cfg.dataset = write_file(dir.file("d.tsv"), "a\t-\tx\nb\t1\ty\n");
    cfg.roster = {"nb"};
    cfg.output_dir = dir.file("out");
    EXPECT_THROW(run_experiment<float>(cfg), Error);
}
