#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssc/eval/ensemble.hpp"
#include "ssc/experiment/config.hpp"

namespace ssc {

struct ReportRow {
    std::string scenario;
    std::string model;
    MetricsReport metrics;
};

/// One trained member (or ensemble) evaluated on one fold.
struct FoldRow {
    std::string scenario;
    std::size_t fold = 0;
    std::string model;
    std::size_t member = 0;  // 1-based; 0 for ensembles
    MetricsReport metrics;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<FoldRow> fold_rows;
    std::vector<std::string> completed_units;
    std::vector<std::string> failures;
    std::uint64_t config_digest = 0;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;

    bool ok() const noexcept { return failures.empty(); }
};

/// Canonical report column order.
inline const std::vector<std::string>& report_model_order() {
    static const std::vector<std::string> v = {"ensemble_cnn", "ensemble_ml", "char_aux", "char_cnn",
                                               "word_aux",     "svm",         "rf",       "nb"};
    return v;
}

inline std::string model_display_name(const std::string& id) {
    static const std::map<std::string, std::string> names = {
        {"ensemble_cnn", "Ensemble CNN"}, {"ensemble_ml", "Ensemble ML"}, {"char_aux", "char_aux"},
        {"char_cnn", "char_cnn"},         {"word_aux", "word_aux"},       {"svm", "SVM"},
        {"rf", "Random Forest"},          {"nb", "Naive Bayes"}};
    auto it = names.find(id);
    return it == names.end() ? id : it->second;
}

inline std::string scenario_dir_name(const std::string& scenario) {
    std::string s = "scenario_" + scenario;
    std::replace(s.begin(), s.end(), ':', '-');
    return s;
}

inline std::string member_seed_key(const std::string& scenario, const std::string& type, std::size_t member,
                                   std::size_t fold) {
    return scenario + "/" + type + "/" + std::to_string(member) + "/fold" + std::to_string(fold);
}

namespace detail {

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string csv_metrics(const MetricsReport& m) {
    return fmt6(m.accuracy) + "," + fmt6(m.precision_p) + "," + fmt6(m.recall_p) + "," + fmt6(m.f1_p) + "," +
           fmt6(m.tp) + "," + fmt6(m.fp) + "," + fmt6(m.fn) + "," + fmt6(m.tn);
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
}

/// Runs tasks[0..n) on up to `jobs` threads; each task records its own
/// outcome, so completion order does not matter.
inline void run_parallel(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::size_t next = 0;
    std::mutex mu;
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < std::min(jobs, n); ++w)
        workers.push_back(std::async(std::launch::async, [&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard lock(mu);
                    if (next >= n) return;
                    i = next++;
                }
                task(i);
            }
        }));
    for (auto& w : workers) w.get();
}

}  // namespace detail

inline std::string fold_csv_header() { return "scenario,fold,model,member,accuracy,precision_p,recall_p,f1_p,tp,fp,fn,tn\n"; }

/// One row per (scenario, model): averaged measures and confusion counts.
inline std::string report_csv(const ExperimentReport& r) {
    std::string s = "scenario,model,accuracy,precision_p,recall_p,f1_p,tp,fp,fn,tn\n";
    for (const auto& row : r.rows) s += row.scenario + "," + row.model + "," + detail::csv_metrics(row.metrics) + "\n";
    return s;
}

/// Table-3 orientation: one block per scenario, measures as rows, models as
/// columns, four decimals.
inline std::string report_markdown(const ExperimentReport& r) {
    std::vector<std::string> scenarios;
    for (const auto& row : r.rows)
        if (std::find(scenarios.begin(), scenarios.end(), row.scenario) == scenarios.end())
            scenarios.push_back(row.scenario);
    std::string s;
    for (const auto& sc : scenarios) {
        std::vector<const ReportRow*> cols;
        for (const auto& row : r.rows)
            if (row.scenario == sc) cols.push_back(&row);
        if (!s.empty()) s += "\n";
        s += "### Scenario " + sc + "\n\n| Measure |";
        for (auto* c : cols) s += " " + model_display_name(c->model) + " |";
        s += "\n|---|";
        for (std::size_t i = 0; i < cols.size(); ++i) s += "---|";
        s += "\n";
        const std::pair<const char*, double MetricsReport::*> measures[] = {
            {"Accuracy", &MetricsReport::accuracy},
            {"Precision_p", &MetricsReport::precision_p},
            {"Recall_p", &MetricsReport::recall_p},
            {"F1 score_p", &MetricsReport::f1_p}};
        for (const auto& [label, field] : measures) {
            s += std::string("| ") + label + " |";
            for (auto* c : cols) {
                char buf[32];
                std::snprintf(buf, sizeof buf, " %.4f |", c->metrics.*field);
                s += buf;
            }
            s += "\n";
        }
    }
    return s;
}

inline std::string emit_report(const ExperimentReport& r, const std::string& format) {
    if (r.rows.empty()) throw Error("report: no rows to emit");
    if (format == "csv") return report_csv(r);
    if (format == "markdown" || format == "md") return report_markdown(r);
    throw Error("report: unknown format '" + format + "' (expected csv or markdown)");
}

/// Parses a report CSV back into rows.
inline std::vector<ReportRow> parse_report_csv(const std::string& content) {
    std::vector<ReportRow> rows;
    std::istringstream in(content);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (n++ == 0 || line.empty()) continue;
        auto cols = text::split(line, ',');
        if (cols.size() != 10) throw ParseError("report", n, "expected 10 columns");
        ReportRow r;
        r.scenario = std::string(cols[0]);
        r.model = std::string(cols[1]);
        double v[8];
        for (int i = 0; i < 8; ++i) v[i] = std::stod(std::string(cols[static_cast<std::size_t>(i) + 2]));
        r.metrics = {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
        rows.push_back(r);
    }
    return rows;
}

struct RunOptions {
    /// Overrides cfg.jobs when non-zero.
    std::size_t jobs = 0;
    /// Written into the provenance block.
    std::string precision_label = "32";
    /// Progress lines (unit started/finished); may be null.
    std::function<void(const std::string&)> log;
};

/// Trains every roster member on every fold of every scenario, evaluates
/// on the fold's test block, ensembles, and writes all artifacts under
/// cfg.output_dir. Failures are recorded per scenario in the report and the
/// manifest; the remaining scenarios still run.
template <class T>
ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    namespace fs = std::filesystem;
    validate_config(cfg);
    ExperimentReport report;
    report.config_digest = config_digest(cfg);
    report.seed = cfg.seed;
    report.started = detail::utc_now();
    const std::size_t jobs = opt.jobs ? opt.jobs : cfg.jobs;
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    std::mutex log_mu;
    auto log = [&](const std::string& s) {
        if (!opt.log) return;
        std::lock_guard lock(log_mu);
        opt.log(s);
    };

    FeatureResources res;
    if (!cfg.abuse_lexicon.empty()) res.abuse = load_lexicon(cfg.abuse_lexicon);
    if (!cfg.slang_lexicon.empty()) res.slang = load_slang_lexicon(cfg.slang_lexicon);
    if (!cfg.clusters.empty()) res.clusters = load_clusters(cfg.clusters);
    if (!cfg.synonyms.empty()) res.synonyms = load_synonyms(cfg.synonyms);
    res.max_synonyms = cfg.max_synonyms;
    std::optional<EmbeddingTable<T>> emb;
    if (!cfg.embeddings.empty()) emb = load_embeddings<T>(cfg.embeddings);

    const Dataset pool = load_dataset(cfg.dataset);
    detail::require_labeled(pool);
    const Encoder<T> encoder(res, emb ? &*emb : nullptr);
    const std::vector<EncodedItem<T>> encoded = encoder.encode(pool);
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < pool.size(); ++i) pos.emplace(pool[i].id, i);

    std::ostringstream prov;
    prov << "config_digest=" << std::hex << report.config_digest << std::dec << "\n"
         << "seed=" << cfg.seed << "\n"
         << "precision=" << opt.precision_label << "\n"
         << "folds=" << cfg.folds << "\n"
         << "members_per_type=" << cfg.members_per_type << "\n";
    std::ostringstream manifest;

    for (const auto& base_plan : cfg.scenarios) {
        ScenarioPlan plan = base_plan;
        plan.seed = mix_seed(cfg.seed, "scenario:" + plan.name());
        const std::string sc = plan.name();
        const fs::path sc_dir = out_dir / scenario_dir_name(sc);
        prov << "scenario." << sc << ".seed=" << plan.seed << "\n";
        try {
            log("scenario " + sc + ": building folds");
            const FoldPlan folds = make_folds(pool, plan, cfg.folds);
            fs::create_directories(sc_dir);
            save_fold_plan(folds, (sc_dir / "folds.tsv").string());

            struct Unit {
                std::size_t fold;
                std::string type;
                std::size_t member;
                std::uint64_t seed;
                std::vector<Prediction> preds;
                MetricsReport metrics;
                std::string error;
            };
            std::vector<Unit> units;
            for (std::size_t f = 0; f < folds.k(); ++f)
                for (const auto& type : cfg.roster)
                    for (std::size_t m = 1; m <= cfg.members_per_type; ++m)
                        units.push_back({f, type, m, mix_seed(cfg.seed, member_seed_key(sc, type, m, f)), {}, {}, {}});

            auto ptrs = [&](const std::vector<std::string>& ids) {
                std::vector<const EncodedItem<T>*> v;
                v.reserve(ids.size());
                for (const auto& id : ids) v.push_back(&encoded[pos.at(id)]);
                return v;
            };

            detail::run_parallel(units.size(), jobs, [&](std::size_t u) {
                Unit& unit = units[u];
                const std::string tag = sc + " fold " + std::to_string(unit.fold) + " " + unit.type + "#" +
                                        std::to_string(unit.member);
                try {
                    const auto train_items = ptrs(folds.folds[unit.fold].train);
                    const auto test_items = ptrs(folds.folds[unit.fold].test);
                    const std::span<const EncodedItem<T>* const> test_span(test_items);
                    const fs::path fold_dir = sc_dir / ("fold" + std::to_string(unit.fold));
                    const std::string stem = unit.type + "_" + std::to_string(unit.member);
                    if (is_cnn_type(unit.type)) {
                        std::unique_ptr<CnnModel<T>> model;
                        if (unit.type == "word_aux") {
                            WCnnConfig wc = cfg.wcnn;
                            wc.embed_dim = encoder.embedding_dim();
                            model = build_wcnn<T>(wc, unit.seed);
                        } else {
                            CCnnConfig cc = cfg.ccnn;
                            cc.aux_mode = unit.type == "char_aux" ? AuxMode::full : AuxMode::none;
                            model = build_ccnn<T>(cc, unit.seed);
                        }
                        TrainConfig tc = cfg.train;
                        tc.seed = unit.seed;
                        tc.retain_all = false;
                        if (cfg.checkpoints == CheckpointPolicy::all) {
                            tc.checkpoint_dir = fold_dir.string();
                            tc.checkpoint_prefix = stem + "_";
                        }
                        const auto cps = train(*model, std::span<const EncodedItem<T>* const>(train_items), tc);
                        const auto& best = select_best_epoch(cps, tc.selection_metric);
                        if (cfg.checkpoints == CheckpointPolicy::best) {
                            fs::create_directories(fold_dir);
                            save_checkpoint(best, (fold_dir / (stem + "_best.ckpt")).string());
                        }
                        auto restored = restore_model(best);
                        unit.preds = predict_batch(*restored, test_span);
                    } else {
                        std::vector<BowItem> bow;
                        bow.reserve(train_items.size());
                        for (const auto* it : train_items) bow.push_back({it->tokens, it->aux, it->label});
                        const auto kind = *parse_baseline_kind(unit.type);
                        const auto model = BaselineModel::train(kind, bow, cfg.baselines, unit.seed);
                        if (cfg.checkpoints != CheckpointPolicy::none) {
                            fs::create_directories(fold_dir);
                            model.save((fold_dir / (stem + ".model")).string());
                        }
                        for (const auto* it : test_items) unit.preds.push_back(model.predict(it->tokens, it->aux));
                    }
                    std::vector<Label> p, g;
                    for (std::size_t i = 0; i < test_items.size(); ++i) {
                        p.push_back(unit.preds[i].label);
                        g.push_back(test_items[i]->label);
                    }
                    unit.metrics = compute_metrics(p, g);
                    log(tag + ": f1_p " + detail::fmt6(unit.metrics.f1_p));
                } catch (const std::exception& e) {
                    unit.error = e.what();
                    log(tag + ": FAILED " + unit.error);
                }
            });

            for (const auto& unit : units) {
                const std::string id = sc + "\tfold" + std::to_string(unit.fold) + "\t" + unit.type + "#" +
                                       std::to_string(unit.member);
                if (unit.error.empty()) {
                    report.completed_units.push_back(id);
                    manifest << "completed\t" << id << "\n";
                } else {
                    manifest << "failed\t" << id << "\t" << unit.error << "\n";
                }
            }
            for (const auto& unit : units)
                if (!unit.error.empty())
                    throw Error("fold " + std::to_string(unit.fold) + " " + unit.type + "#" +
                                std::to_string(unit.member) + ": " + unit.error);

            auto unit_at = [&](std::size_t f, const std::string& type, std::size_t m) -> const Unit& {
                for (const auto& u : units)
                    if (u.fold == f && u.type == type && u.member == m) return u;
                throw Error("internal: missing unit");
            };

            std::vector<ReportRow> sc_rows;
            std::vector<FoldRow> sc_fold_rows;
            for (const auto& u : units) sc_fold_rows.push_back({sc, u.fold, u.type, u.member, u.metrics});

            auto ensemble_of = [&](const std::string& name, bool cnn_group) {
                std::vector<std::string> types;
                for (const auto& t : cfg.roster)
                    if (is_cnn_type(t) == cnn_group) types.push_back(t);
                if (types.size() < 2) return;
                const auto cv = cross_validate(folds.k(), [&](std::size_t f) {
                    std::vector<std::vector<Prediction>> per_member;
                    for (const auto& t : types)
                        for (std::size_t m = 1; m <= cfg.members_per_type; ++m)
                            per_member.push_back(unit_at(f, t, m).preds);
                    const auto votes = combine_votes(per_member);
                    const auto test_items = ptrs(folds.folds[f].test);
                    std::vector<Label> p, g;
                    for (std::size_t i = 0; i < votes.size(); ++i) {
                        p.push_back(votes[i].label);
                        g.push_back(test_items[i]->label);
                    }
                    return compute_metrics(p, g);
                });
                for (std::size_t f = 0; f < folds.k(); ++f) sc_fold_rows.push_back({sc, f, name, 0, cv.folds[f]});
                sc_rows.push_back({sc, name, cv.mean});
            };
            ensemble_of("ensemble_cnn", true);
            ensemble_of("ensemble_ml", false);

            for (const auto& type : cfg.roster) {
                std::vector<MetricsReport> member_means;
                for (std::size_t m = 1; m <= cfg.members_per_type; ++m)
                    member_means.push_back(
                        cross_validate(folds.k(), [&](std::size_t f) { return unit_at(f, type, m).metrics; }).mean);
                sc_rows.push_back({sc, type, mean_report(member_means)});
            }
            const auto& order = report_model_order();
            std::stable_sort(sc_rows.begin(), sc_rows.end(), [&](const ReportRow& a, const ReportRow& b) {
                return std::find(order.begin(), order.end(), a.model) < std::find(order.begin(), order.end(), b.model);
            });

            for (std::size_t f = 0; f < folds.k(); ++f) {
                std::string csv = fold_csv_header();
                for (const auto& r : sc_fold_rows)
                    if (r.fold == f)
                        csv += sc + "," + std::to_string(f) + "," + r.model + "," + std::to_string(r.member) + "," +
                               detail::csv_metrics(r.metrics) + "\n";
                detail::write_text(sc_dir / ("fold" + std::to_string(f) + ".csv"), csv);
            }
            report.rows.insert(report.rows.end(), sc_rows.begin(), sc_rows.end());
            report.fold_rows.insert(report.fold_rows.end(), sc_fold_rows.begin(), sc_fold_rows.end());
        } catch (const std::exception& e) {
            report.failures.push_back("scenario " + sc + ": " + e.what());
            manifest << "failed\t" << sc << "\tscenario\t" << e.what() << "\n";
            log("scenario " + sc + ": FAILED " + e.what());
        }
    }

    report.finished = detail::utc_now();
    prov << "started=" << report.started << "\n" << "finished=" << report.finished << "\n";
    detail::write_text(out_dir / "provenance.txt", prov.str());
    detail::write_text(out_dir / "config.ini", dump_config(cfg));
    detail::write_text(out_dir / "manifest.txt", manifest.str());
    if (!report.rows.empty()) {
        detail::write_text(out_dir / "report.csv", report_csv(report));
        detail::write_text(out_dir / "report.md", report_markdown(report));
    }
    return report;
}

}  // namespace ssc
