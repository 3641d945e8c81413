#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ssc/baselines/model.hpp"
#include "ssc/corpus.hpp"
#include "ssc/models/cnn.hpp"
#include "ssc/nn/checkpoint.hpp"

namespace ssc {

/// Roster entries: three CNN kinds and three baseline kinds.
inline const std::vector<std::string>& all_model_types() {
    static const std::vector<std::string> v = {"char_aux", "char_cnn", "word_aux", "svm", "rf", "nb"};
    return v;
}

inline bool is_cnn_type(const std::string& t) { return t == "char_aux" || t == "char_cnn" || t == "word_aux"; }

enum class CheckpointPolicy { none, best, all };

struct ExperimentConfig {
    // [paths]
    std::string dataset;
    std::string abuse_lexicon;
    std::string slang_lexicon;
    std::string clusters;
    std::string synonyms;
    std::string embeddings;
    std::string output_dir = "ssc_output";

    // [experiment]
    std::uint64_t seed = 0;
    std::size_t folds = 6;
    std::vector<ScenarioPlan> scenarios = default_scenarios();
    std::vector<std::string> roster = all_model_types();
    std::size_t members_per_type = 2;
    CheckpointPolicy checkpoints = CheckpointPolicy::best;
    std::size_t jobs = 1;

    // [train]
    TrainConfig train{};
    std::size_t max_synonyms = kDefaultMaxSynonyms;

    // [wcnn] / [ccnn]
    WCnnConfig wcnn{};
    CCnnConfig ccnn{};

    // [baselines]
    BaselineConfig baselines{};

    friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

namespace detail {

inline std::string scenarios_to_string(const std::vector<ScenarioPlan>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += v[i].name() + "/" + std::to_string(v[i].n_train) + "/" + std::to_string(v[i].n_test);
    }
    return s;
}

inline std::string list_to_string(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
}

inline const char* policy_name(CheckpointPolicy p) {
    switch (p) {
        case CheckpointPolicy::none: return "none";
        case CheckpointPolicy::all: return "all";
        default: return "best";
    }
}

/// Accessor for one config key: renders the current value and parses a new one.
struct KeyBinding {
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    bool is_path = false;
};

inline std::size_t parse_count(const std::string& v) {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument("not a non-negative integer");
    return static_cast<std::size_t>(n);
}

inline double parse_real(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument("not a finite number");
    return d;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("expected true or false");
}

inline std::vector<ScenarioPlan> parse_scenarios(const std::string& v) {
    std::vector<ScenarioPlan> out;
    for (auto item : text::split(v, ',')) {
        auto t = std::string(text::trim(item));
        auto parts = text::split(t, '/');
        auto ratio = parts.empty() ? std::vector<std::string_view>{} : text::split(parts[0], ':');
        if (parts.size() != 3 || ratio.size() != 2)
            throw std::invalid_argument("scenario '" + t + "' must look like 50:50/3450/690");
        ScenarioPlan p;
        p.positive_pct = static_cast<int>(parse_count(std::string(ratio[0])));
        p.negative_pct = static_cast<int>(parse_count(std::string(ratio[1])));
        p.n_train = parse_count(std::string(parts[1]));
        p.n_test = parse_count(std::string(parts[2]));
        p.validate();
        out.push_back(p);
    }
    if (out.empty()) throw std::invalid_argument("no scenarios");
    return out;
}

inline std::vector<std::string> parse_roster(const std::string& v) {
    std::vector<std::string> out;
    for (auto item : text::split(v, ',')) {
        std::string t(text::trim(item));
        const auto& all = all_model_types();
        if (std::find(all.begin(), all.end(), t) == all.end())
            throw std::invalid_argument("unknown model type '" + t + "'");
        if (std::find(out.begin(), out.end(), t) != out.end())
            throw std::invalid_argument("model type '" + t + "' listed twice");
        out.push_back(t);
    }
    if (out.empty()) throw std::invalid_argument("empty roster");
    return out;
}

inline const std::map<std::string, KeyBinding>& key_table() {
    using C = ExperimentConfig;
    auto str = [](std::string C::*m, bool path) {
        return KeyBinding{[m](const C& c) { return c.*m; }, [m](C& c, const std::string& v) { c.*m = v; }, path};
    };
    auto count = [](auto getter) {
        return KeyBinding{[getter](const C& c) { return std::to_string(getter(const_cast<C&>(c))); },
                          [getter](C& c, const std::string& v) { getter(c) = parse_count(v); }};
    };
    auto real = [](auto getter) {
        return KeyBinding{[getter](const C& c) { return nn::format_exact(getter(const_cast<C&>(c))); },
                          [getter](C& c, const std::string& v) { getter(c) = parse_real(v); }};
    };
    auto sizes = [](auto getter) {
        return KeyBinding{[getter](const C& c) { return detail::join_sizes(getter(const_cast<C&>(c))); },
                          [getter](C& c, const std::string& v) { getter(c) = detail::parse_sizes(v); }};
    };
    static const std::map<std::string, KeyBinding> table = {
        {"paths.dataset", str(&C::dataset, true)},
        {"paths.abuse_lexicon", str(&C::abuse_lexicon, true)},
        {"paths.slang_lexicon", str(&C::slang_lexicon, true)},
        {"paths.clusters", str(&C::clusters, true)},
        {"paths.synonyms", str(&C::synonyms, true)},
        {"paths.embeddings", str(&C::embeddings, true)},
        {"paths.output_dir", str(&C::output_dir, false)},
        {"experiment.seed", {[](const C& c) { return std::to_string(c.seed); },
                             [](C& c, const std::string& v) { c.seed = parse_count(v); }}},
        {"experiment.folds", count([](C& c) -> std::size_t& { return c.folds; })},
        {"experiment.scenarios", {[](const C& c) { return scenarios_to_string(c.scenarios); },
                                  [](C& c, const std::string& v) { c.scenarios = parse_scenarios(v); }}},
        {"experiment.roster", {[](const C& c) { return list_to_string(c.roster); },
                               [](C& c, const std::string& v) { c.roster = parse_roster(v); }}},
        {"experiment.members_per_type", count([](C& c) -> std::size_t& { return c.members_per_type; })},
        {"experiment.checkpoints", {[](const C& c) { return std::string(policy_name(c.checkpoints)); },
                                    [](C& c, const std::string& v) {
                                        if (v == "none") c.checkpoints = CheckpointPolicy::none;
                                        else if (v == "best") c.checkpoints = CheckpointPolicy::best;
                                        else if (v == "all") c.checkpoints = CheckpointPolicy::all;
                                        else throw std::invalid_argument("expected none, best or all");
                                    }}},
        {"experiment.jobs", count([](C& c) -> std::size_t& { return c.jobs; })},
        {"train.epochs", count([](C& c) -> std::size_t& { return c.train.epochs; })},
        {"train.batch_size", count([](C& c) -> std::size_t& { return c.train.batch_size; })},
        {"train.validation_fraction", real([](C& c) -> double& { return c.train.validation_fraction; })},
        {"train.selection_metric", {[](const C& c) { return c.train.selection_metric; },
                                    [](C& c, const std::string& v) { c.train.selection_metric = v; }}},
        {"train.learning_rate", real([](C& c) -> double& { return c.train.adam.lr; })},
        {"train.max_synonyms", count([](C& c) -> std::size_t& { return c.max_synonyms; })},
        {"wcnn.kernel_sizes", sizes([](C& c) -> std::vector<std::size_t>& { return c.wcnn.kernel_sizes; })},
        {"wcnn.filters", count([](C& c) -> std::size_t& { return c.wcnn.filters; })},
        {"wcnn.pool_size", count([](C& c) -> std::size_t& { return c.wcnn.pool_size; })},
        {"wcnn.dropout", real([](C& c) -> double& { return c.wcnn.dropout; })},
        {"ccnn.kernel_sizes", sizes([](C& c) -> std::vector<std::size_t>& { return c.ccnn.kernel_sizes; })},
        {"ccnn.filters", count([](C& c) -> std::size_t& { return c.ccnn.filters; })},
        {"ccnn.char_embed_dim", count([](C& c) -> std::size_t& { return c.ccnn.char_embed_dim; })},
        {"ccnn.dropout", real([](C& c) -> double& { return c.ccnn.dropout; })},
        {"baselines.min_df", count([](C& c) -> std::size_t& { return c.baselines.min_df; })},
        {"baselines.svm_lambda", real([](C& c) -> double& { return c.baselines.svm_lambda; })},
        {"baselines.svm_epochs", count([](C& c) -> std::size_t& { return c.baselines.svm_epochs; })},
        {"baselines.rf_trees", count([](C& c) -> std::size_t& { return c.baselines.rf_trees; })},
        {"baselines.rf_max_depth", count([](C& c) -> std::size_t& { return c.baselines.rf_max_depth; })},
        {"baselines.nb_bootstrap", {[](const C& c) { return std::string(c.baselines.nb_bootstrap ? "true" : "false"); },
                                    [](C& c, const std::string& v) { c.baselines.nb_bootstrap = parse_bool(v); }}},
    };
    return table;
}

}  // namespace detail

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    for (const auto& [key, binding] : detail::key_table())
        if (binding.get(a) != binding.get(b)) return false;
    return true;
}

/// Canonical text form; load_config_string(dump_config(c)) == c.
inline std::string dump_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    std::string section;
    for (const auto& [key, binding] : detail::key_table()) {
        const auto dot = key.find('.');
        const auto sec = key.substr(0, dot);
        if (sec != section) {
            out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
            section = sec;
        }
        out << key.substr(dot + 1) << " = " << binding.get(cfg) << '\n';
    }
    return out.str();
}

/// Parses key=value text with `#` comments and [section] headers. Keys are
/// bare inside a section, or written `section.key`; a bare key before any
/// section is accepted when only one section defines it. Relative paths
/// resolve against `base_dir`. Path existence is checked by validate_config.
inline ExperimentConfig load_config_string(const std::string& content, const std::string& source,
                                           const std::string& base_dir = "") {
    ExperimentConfig cfg;
    bool dataset_seen = false;
    const auto& table = detail::key_table();
    std::istringstream in(content);
    std::string raw, section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line(raw);
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto t = std::string(text::trim(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError(source, line_no, "malformed section header");
            section = std::string(text::trim(std::string_view(t).substr(1, t.size() - 2)));
            bool known = false;
            for (const auto& [key, b] : table) known |= key.rfind(section + ".", 0) == 0;
            if (!known) throw ParseError(source, line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
        const auto name = std::string(text::trim(std::string_view(t).substr(0, eq)));
        const auto value = std::string(text::trim(std::string_view(t).substr(eq + 1)));
        if (name.empty()) throw ParseError(source, line_no, "missing key before '='");

        std::string full;
        if (name.find('.') != std::string::npos) {
            full = name;
        } else if (!section.empty()) {
            full = section + "." + name;
        } else {
            for (const auto& [key, b] : table)
                if (key.substr(key.find('.') + 1) == name) {
                    if (!full.empty()) throw ParseError(source, line_no, "ambiguous key '" + name + "' outside a section");
                    full = key;
                }
        }
        auto it = table.find(full);
        if (it == table.end()) throw ParseError(source, line_no, "unknown key '" + name + "'");
        try {
            std::string v = value;
            if (it->second.is_path && !v.empty() && !base_dir.empty() && std::filesystem::path(v).is_relative())
                v = (std::filesystem::path(base_dir) / v).lexically_normal().string();
            it->second.set(cfg, v);
        } catch (const std::exception& e) {
            throw ParseError(source, line_no, "invalid value for '" + name + "': " + e.what());
        }
        if (full == "paths.dataset") dataset_seen = !value.empty();
    }
    if (!dataset_seen) throw ParseError(source, line_no, "missing required key 'dataset'");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_string(ss.str(), path, std::filesystem::path(path).parent_path().string());
}

/// Checks the referenced files exist and the model settings are coherent.
inline void validate_config(const ExperimentConfig& cfg) {
    for (const auto& [key, binding] : detail::key_table()) {
        if (!binding.is_path) continue;
        const auto v = binding.get(cfg);
        if (!v.empty() && !std::filesystem::exists(v)) throw Error("config: " + key + " does not exist: " + v);
    }
    if (cfg.dataset.empty()) throw Error("config: missing required key 'dataset'");
    if (cfg.folds == 0) throw Error("config: folds must be at least 1");
    if (cfg.members_per_type == 0) throw Error("config: members_per_type must be at least 1");
    if (cfg.jobs == 0) throw Error("config: jobs must be at least 1");
    if (std::find(cfg.roster.begin(), cfg.roster.end(), "word_aux") != cfg.roster.end() && cfg.embeddings.empty())
        throw Error("config: roster includes word_aux but paths.embeddings is not set");
    cfg.train.validate();
    for (const auto& s : cfg.scenarios) s.validate();
}

inline std::uint64_t config_digest(const ExperimentConfig& cfg) { return fnv1a(dump_config(cfg)); }

}  // namespace ssc
