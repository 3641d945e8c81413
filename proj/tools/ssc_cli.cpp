#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ssc/eval/agreement.hpp"
#include "ssc/eval/ensemble.hpp"
#include "ssc/experiment/run.hpp"
#include "ssc/synth.hpp"

namespace fs = std::filesystem;
using namespace ssc;

namespace {

struct Globals {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 0;
    std::string format = "csv";
    std::string abuse, slang, clusters, synonyms, embeddings;
};

struct Options {
    // dataset
    std::string input, annotations, ratio = "50:50", fold_plan;
    std::size_t n_train = 0, n_test = 0, k = 6;
    // models
    std::string type, data;
    std::vector<std::string> models;
    std::size_t sample = 0;
    double threshold = 0.8;
    std::vector<std::string> pair;
    // synth
    synth::Config synth;
};

Globals g;
Options o;

/// Config from --config (or defaults) with command-line overrides applied.
ExperimentConfig effective_config() {
    ExperimentConfig cfg;
    if (!g.config.empty()) cfg = load_config(g.config);
    if (!g.output.empty()) cfg.output_dir = g.output;
    if (g.seed) cfg.seed = *g.seed;
    if (g.jobs) cfg.jobs = g.jobs;
    if (!g.abuse.empty()) cfg.abuse_lexicon = g.abuse;
    if (!g.slang.empty()) cfg.slang_lexicon = g.slang;
    if (!g.clusters.empty()) cfg.clusters = g.clusters;
    if (!g.synonyms.empty()) cfg.synonyms = g.synonyms;
    if (!g.embeddings.empty()) cfg.embeddings = g.embeddings;
    return cfg;
}

FeatureResources load_resources(const ExperimentConfig& cfg) {
    FeatureResources res;
    if (!cfg.abuse_lexicon.empty()) res.abuse = load_lexicon(cfg.abuse_lexicon);
    if (!cfg.slang_lexicon.empty()) res.slang = load_slang_lexicon(cfg.slang_lexicon);
    if (!cfg.clusters.empty()) res.clusters = load_clusters(cfg.clusters);
    if (!cfg.synonyms.empty()) res.synonyms = load_synonyms(cfg.synonyms);
    res.max_synonyms = cfg.max_synonyms;
    return res;
}

std::string require_output(const char* what) {
    if (g.output.empty()) throw Error(std::string(what) + ": --output is required");
    return g.output;
}

void write_or_print(const std::string& content) {
    if (g.output.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(g.output, std::ios::binary);
    if (!out) throw Error("cannot write " + g.output);
    out << content;
}

ScenarioPlan plan_from_flags(std::uint64_t seed) {
    auto plans = detail::parse_scenarios(o.ratio + "/" + std::to_string(o.n_train) + "/" + std::to_string(o.n_test));
    plans[0].seed = seed;
    return plans[0];
}

std::string metrics_text(const MetricsReport& m) {
    if (g.format == "csv") return "accuracy,precision_p,recall_p,f1_p,tp,fp,fn,tn\n" + detail::csv_metrics(m) + "\n";
    if (g.format != "markdown" && g.format != "md") throw Error("unknown format '" + g.format + "'");
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "| Measure | Value |\n|---|---|\n| Accuracy | %.4f |\n| Precision_p | %.4f |\n| Recall_p | %.4f |\n"
                  "| F1_p | %.4f |\n",
                  m.accuracy, m.precision_p, m.recall_p, m.f1_p);
    return buf;
}

// ---------------------------------------------------------------------------

int cmd_synth() {
    const auto dir = require_output("synth");
    synth::write_resources(dir, o.synth);
    std::cerr << "wrote synthetic corpus and resources to " << dir << "\n";
    return 0;
}

int cmd_validate() {
    const auto d = load_dataset(o.input);
    std::cout << "items=" << d.size() << " positive=" << d.count(Label::positive)
              << " negative=" << d.count(Label::negative)
              << " unlabeled=" << d.size() - d.count(Label::positive) - d.count(Label::negative)
              << " duplicates=" << dedupe(d).removed << "\n";
    return 0;
}

int cmd_dedupe() {
    const auto r = dedupe(load_dataset(o.input));
    save_dataset(r.data, require_output("dedupe"));
    std::cerr << "kept " << r.data.size() << ", removed " << r.removed << "\n";
    return 0;
}

int cmd_aggregate() {
    const auto agg = aggregate_labels(load_annotations(o.annotations));
    save_dataset(apply_labels(load_dataset(o.input), agg.labels), require_output("aggregate"));
    for (const auto& r : agg.rejected)
        std::cerr << "rejected " << r.item << " (" << r.annotations << " annotations)\n";
    std::cerr << "labeled " << agg.labels.size() << ", rejected " << agg.rejected.size() << "\n";
    return 0;
}

int cmd_resample() {
    const auto split = make_scenario(load_dataset(o.input), plan_from_flags(g.seed.value_or(0)));
    const fs::path dir(require_output("resample"));
    fs::create_directories(dir);
    save_dataset(split.train, (dir / "train.tsv").string());
    save_dataset(split.test, (dir / "test.tsv").string());
    std::cerr << "train " << split.train.size() << ", test " << split.test.size() << "\n";
    return 0;
}

int cmd_folds() {
    const auto plan = make_folds(load_dataset(o.input), plan_from_flags(g.seed.value_or(0)), o.k);
    save_fold_plan(plan, require_output("folds"));
    std::cerr << "wrote " << plan.k() << " folds\n";
    return 0;
}

template <class T>
struct Encoded {
    FeatureResources res;
    std::optional<EmbeddingTable<T>> emb;
    Dataset data;
    std::vector<EncodedItem<T>> items;
};

template <class T>
Encoded<T> encode_file(const ExperimentConfig& cfg, const std::string& path) {
    Encoded<T> e;
    e.res = load_resources(cfg);
    if (!cfg.embeddings.empty()) e.emb = load_embeddings<T>(cfg.embeddings);
    e.data = load_dataset(path);
    const Encoder<T> enc(e.res, e.emb ? &*e.emb : nullptr);
    e.items = enc.encode(e.data);
    return e;
}

template <class T>
int cmd_train() {
    const auto cfg = effective_config();
    const std::string data = o.data.empty() ? cfg.dataset : o.data;
    if (data.empty()) throw Error("train: --data or a config dataset is required");
    const auto out = require_output("train");
    auto e = encode_file<T>(cfg, data);
    detail::require_labeled(e.data);

    if (auto bk = parse_baseline_kind(o.type)) {
        std::vector<BowItem> bow;
        for (const auto& it : e.items) bow.push_back({it.tokens, it.aux, it.label});
        BaselineModel::train(*bk, bow, cfg.baselines, cfg.seed).save(out);
        std::cerr << "saved " << kind_name(*bk) << " model to " << out << "\n";
        return 0;
    }
    std::unique_ptr<CnnModel<T>> model;
    const auto kind = parse_cnn_kind(o.type);
    if (kind == CnnKind::word_aux) {
        if (!e.emb) throw Error("train: word_aux needs embeddings");
        WCnnConfig wc = cfg.wcnn;
        wc.embed_dim = e.emb->dim();
        model = build_wcnn<T>(wc, cfg.seed);
    } else {
        CCnnConfig cc = cfg.ccnn;
        cc.aux_mode = kind == CnnKind::char_aux ? AuxMode::full : AuxMode::none;
        model = build_ccnn<T>(cc, cfg.seed);
    }
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.retain_all = false;
    const auto cps = train(*model, e.items, tc);
    const auto& best = select_best_epoch(cps, tc.selection_metric);
    save_checkpoint(best, out);
    std::cerr << "saved " << o.type << " epoch " << best.epoch << " (validation " << tc.selection_metric << " "
              << metric_value(best.validation, tc.selection_metric) << ") to " << out << "\n";
    return 0;
}

template <class T>
std::vector<std::unique_ptr<Member<T>>> load_members() {
    if (o.models.empty()) throw Error("at least one --model is required");
    std::vector<std::unique_ptr<Member<T>>> members;
    for (const auto& p : o.models) members.push_back(load_member<T>(p));
    return members;
}

std::vector<Label> gold_labels(const Dataset& d) {
    detail::require_labeled(d);
    std::vector<Label> gold;
    for (const auto& t : d) gold.push_back(*t.label);
    return gold;
}

template <class T>
int cmd_evaluate() {
    const auto cfg = effective_config();
    auto e = encode_file<T>(cfg, o.data);
    const auto gold = gold_labels(e.data);
    const auto members = load_members<T>();
    std::vector<Label> pred;
    for (const auto& p : members.at(0)->predict(e.items)) pred.push_back(p.label);
    write_or_print(metrics_text(compute_metrics(pred, gold)));
    return 0;
}

template <class T>
int cmd_ensemble() {
    const auto cfg = effective_config();
    auto e = encode_file<T>(cfg, o.data);
    const auto members = load_members<T>();
    std::vector<const Member<T>*> ptrs;
    for (const auto& m : members) ptrs.push_back(m.get());
    const auto votes = ensemble_predict(ptrs, e.items);
    if (e.data.all_labeled()) {
        std::vector<Label> pred;
        for (const auto& v : votes) pred.push_back(v.label);
        write_or_print(metrics_text(compute_metrics(pred, gold_labels(e.data))));
        return 0;
    }
    std::ostringstream out;
    out << "id,label,positive_votes,negative_votes\n";
    for (std::size_t i = 0; i < votes.size(); ++i)
        out << e.data[i].id << ',' << class_index(votes[i].label) << ',' << votes[i].positive_votes << ','
            << votes[i].negative_votes << '\n';
    write_or_print(out.str());
    return 0;
}

template <class T>
int cmd_predict() {
    const auto cfg = effective_config();
    auto e = encode_file<T>(cfg, o.data);
    const auto members = load_members<T>();
    const auto preds = members.at(0)->predict(e.items);
    std::ostringstream out;
    out << "id,label,positive_prob\n";
    for (std::size_t i = 0; i < preds.size(); ++i)
        out << e.data[i].id << ',' << class_index(preds[i].label) << ',' << detail::fmt6(preds[i].positive_prob)
            << '\n';
    write_or_print(out.str());
    return 0;
}

template <class T>
int cmd_experiment(const std::string& precision) {
    if (g.config.empty()) throw Error("experiment: --config is required");
    const auto cfg = effective_config();
    RunOptions opt;
    opt.precision_label = precision;
    opt.log = [](const std::string& s) { std::cerr << s << "\n"; };
    const auto report = run_experiment<T>(cfg, opt);
    for (const auto& f : report.failures) std::cerr << "error: " << f << "\n";
    if (!report.rows.empty()) std::cout << emit_report(report, g.format);
    return report.ok() ? 0 : 1;
}

int cmd_agreement() {
    const auto ann = load_annotations(o.annotations);
    const auto alpha = krippendorff_alpha(ann);
    std::cout << "items=" << ann.size() << "\nkrippendorff_alpha="
              << (alpha ? nn::format_exact(*alpha) : std::string("undefined")) << "\n";
    if (o.pair.size() == 2) {
        std::vector<Label> a, b;
        for (const auto& [item, list] : ann.entries()) {
            std::optional<Label> la, lb;
            for (const auto& x : list) {
                if (x.annotator == o.pair[0]) la = x.label;
                if (x.annotator == o.pair[1]) lb = x.label;
            }
            if (la && lb) {
                a.push_back(*la);
                b.push_back(*lb);
            }
        }
        std::cout << "cohen_kappa(" << o.pair[0] << "," << o.pair[1] << ")=" << nn::format_exact(cohen_kappa(a, b))
                  << " over " << a.size() << " items\n";
    }
    return 0;
}

int cmd_prefilter() {
    const auto cfg = effective_config();
    const auto res = load_resources(cfg);
    if (o.models.size() != 1) throw Error("prefilter: exactly one --model (a calibrated SVM) is required");
    const auto svm = BaselineModel::load(o.models[0]);
    const auto r = prefilter(load_dataset(o.data), svm, res, o.threshold, o.sample, cfg.seed);
    save_dataset(r.selected, require_output("prefilter"));
    std::cerr << r.qualifying << " items above " << o.threshold << ", kept " << r.selected.size() << "\n";
    if (r.insufficient) std::cerr << "warning: fewer qualifying items than requested\n";
    return 0;
}

template <class T>
int dispatch(CLI::App& app, const std::string& precision) {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "synth") return cmd_synth();
    if (name == "dataset") {
        const std::string op = sub->get_subcommands().front()->get_name();
        if (op == "validate") return cmd_validate();
        if (op == "dedupe") return cmd_dedupe();
        if (op == "aggregate") return cmd_aggregate();
        if (op == "resample") return cmd_resample();
        return cmd_folds();
    }
    if (name == "train") return cmd_train<T>();
    if (name == "evaluate") return cmd_evaluate<T>();
    if (name == "ensemble") return cmd_ensemble<T>();
    if (name == "predict") return cmd_predict<T>();
    if (name == "experiment") return cmd_experiment<T>(precision);
    if (name == "agreement") return cmd_agreement();
    return cmd_prefilter();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drug-abuse tweet classification: corpus tools, CNN and baseline models, experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", g.config, "Experiment config file")->check(CLI::ExistingFile);
    app.add_option("--output,-o", g.output, "Output file or directory");
    app.add_option("--seed", g.seed, "Seed (overrides the config)");
    app.add_option("--jobs", g.jobs, "Parallel units (overrides the config)");
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "markdown", "md"}));
    app.add_option("--abuse-lexicon", g.abuse, "Abuse lexicon (overrides the config)");
    app.add_option("--slang-lexicon", g.slang, "Slang lexicon (overrides the config)");
    app.add_option("--clusters", g.clusters, "Word cluster map (overrides the config)");
    app.add_option("--synonyms", g.synonyms, "Synonym map (overrides the config)");
    app.add_option("--embeddings", g.embeddings, "Word embeddings (overrides the config)");

    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labeled corpus and matching resources");
    synth_cmd->add_option("--positives", o.synth.positives);
    synth_cmd->add_option("--negatives", o.synth.negatives);
    synth_cmd->add_option("--synth-seed", o.synth.seed);
    synth_cmd->add_option("--embed-dim", o.synth.embed_dim);

    auto* ds = app.add_subcommand("dataset", "Corpus utilities");
    ds->require_subcommand(1);
    ds->add_subcommand("validate", "Parse a dataset and print counts")->add_option("input", o.input)->required();
    ds->add_subcommand("dedupe", "Drop texts that duplicate an earlier one")->add_option("input", o.input)->required();
    auto* agg = ds->add_subcommand("aggregate", "Majority-label a dataset from annotations");
    agg->add_option("input", o.input)->required();
    agg->add_option("--annotations", o.annotations)->required();
    for (const char* name : {"resample", "folds"}) {
        auto* c = ds->add_subcommand(name, std::string(name) == "resample" ? "Draw one class-distribution scenario"
                                                                           : "Write a stratified fold plan");
        c->add_option("input", o.input)->required();
        c->add_option("--ratio", o.ratio, "positive:negative percentages");
        c->add_option("--train", o.n_train)->required();
        c->add_option("--test", o.n_test)->required();
        if (std::string(name) == "folds") c->add_option("-k,--folds", o.k);
    }

    auto* tr = app.add_subcommand("train", "Train one model and save it");
    tr->add_option("--type", o.type, "char_aux, char_cnn, word_aux, nb, svm or rf")
        ->required()
        ->check(CLI::IsMember(all_model_types()));
    tr->add_option("--data", o.data, "Labeled training set (default: config dataset)");

    for (const char* name : {"evaluate", "predict", "ensemble"}) {
        const std::string n(name);
        auto* c = app.add_subcommand(name, n == "evaluate" ? "Score a saved model on a labeled set"
                                           : n == "predict" ? "Per-item predictions from a saved model"
                                                            : "Majority vote of saved models");
        c->add_option("--model", o.models, "Checkpoint or baseline model file")->required();
        c->add_option("--data", o.data)->required();
    }

    app.add_subcommand("experiment", "Run the configured scenario grid and print the report");

    auto* ag = app.add_subcommand("agreement", "Inter-annotator agreement");
    ag->add_option("annotations", o.annotations)->required();
    ag->add_option("--pair", o.pair, "Two annotator ids for Cohen's kappa")->expected(2);

    auto* pf = app.add_subcommand("prefilter", "Select confidently classified unlabeled items");
    pf->add_option("--model", o.models, "Calibrated SVM model")->required();
    pf->add_option("--data", o.data)->required();
    pf->add_option("--threshold", o.threshold);
    pf->add_option("--sample", o.sample)->required();

    CLI11_PARSE(app, argc, argv);

    std::string precision = "32";
    if (const char* p = std::getenv("SSC_PRECISION")) precision = p;
    try {
        if (precision == "32") return dispatch<float>(app, precision);
        if (precision == "64") return dispatch<double>(app, precision);
        throw Error("SSC_PRECISION must be 32 or 64, got '" + precision + "'");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
