#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ssc/common.hpp"
#include "ssc/random.hpp"

namespace ssc {

struct Tweet {
    std::string id;
    std::string text;
    std::optional<Label> label;

    friend bool operator==(const Tweet&, const Tweet&) = default;
};

/// Ordered collection of tweets with unique, non-empty ids.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<Tweet> items) : items_(std::move(items)) {
        std::unordered_set<std::string> seen;
        for (const auto& t : items_) {
            if (t.id.empty()) throw Error("dataset: empty tweet id");
            if (t.text.empty()) throw Error("dataset: empty text for id " + t.id);
            if (!seen.insert(t.id).second) throw Error("dataset: duplicate id " + t.id);
        }
    }

    const std::vector<Tweet>& items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    const Tweet& operator[](std::size_t i) const { return items_[i]; }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    bool all_labeled() const {
        return std::all_of(items_.begin(), items_.end(), [](const Tweet& t) { return t.label.has_value(); });
    }

    std::size_t count(Label l) const {
        return static_cast<std::size_t>(
            std::count_if(items_.begin(), items_.end(), [l](const Tweet& t) { return t.label == l; }));
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<Tweet> items_;
};

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

inline std::optional<Label> parse_label_token(std::string_view tok, bool allow_unlabeled, const std::string& path,
                                              std::size_t line) {
    if (tok == "1") return Label::positive;
    if (tok == "0") return Label::negative;
    if (tok == "-" && allow_unlabeled) return std::nullopt;
    throw ParseError(path, line, "invalid label '" + std::string(tok) + "'");
}

}  // namespace detail

/// Reads `id<TAB>label<TAB>text` records; label is 1, 0 or "-" (unlabeled).
inline Dataset load_dataset(const std::string& path) {
    std::vector<Tweet> items;
    std::unordered_map<std::string, std::size_t> first_line;
    auto lines = detail::read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string& line = lines[n];
        const std::size_t lineno = n + 1;
        if (line.empty()) continue;
        auto cols = text::split(line, '\t');
        if (cols.size() != 3)
            throw ParseError(path, lineno, "expected 3 tab-separated columns, got " + std::to_string(cols.size()));
        if (cols[0].empty()) throw ParseError(path, lineno, "empty id");
        if (cols[2].empty()) throw ParseError(path, lineno, "empty text");
        auto label = detail::parse_label_token(cols[1], true, path, lineno);
        std::string id(cols[0]);
        auto [it, inserted] = first_line.emplace(id, lineno);
        if (!inserted)
            throw ParseError(path, lineno, "duplicate id '" + id + "' (first seen on line " +
                                               std::to_string(it->second) + ")");
        items.push_back(Tweet{std::move(id), std::string(cols[2]), label});
    }
    return Dataset(std::move(items));
}

inline void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (const auto& t : d) {
        if (t.text.find_first_of("\t\n\r") != std::string::npos || t.id.find_first_of("\t\n\r") != std::string::npos)
            throw Error("dataset: id/text of " + t.id + " contains a tab or line break");
        out << t.id << '\t' << (t.label ? (*t.label == Label::positive ? "1" : "0") : "-") << '\t' << t.text << '\n';
    }
}

// ---------------------------------------------------------------------------
// Annotation aggregation

struct Annotation {
    std::string annotator;
    Label label;
};

class AnnotationSet {
public:
    void add(const std::string& item, const std::string& annotator, Label label) {
        auto [it, inserted] = index_.emplace(item, entries_.size());
        if (inserted) entries_.push_back({item, {}});
        auto& list = entries_[it->second].second;
        for (const auto& a : list)
            if (a.annotator == annotator)
                throw Error("annotation: duplicate (item, annotator) pair (" + item + ", " + annotator + ")");
        list.push_back({annotator, label});
    }

    /// Items in first-seen order.
    const std::vector<std::pair<std::string, std::vector<Annotation>>>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::vector<std::pair<std::string, std::vector<Annotation>>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Reads `item_id<TAB>annotator_id<TAB>label` lines (label 0/1).
inline AnnotationSet load_annotations(const std::string& path) {
    AnnotationSet set;
    auto lines = detail::read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        auto cols = text::split(lines[n], '\t');
        if (cols.size() != 3)
            throw ParseError(path, n + 1, "expected 3 tab-separated columns, got " + std::to_string(cols.size()));
        if (cols[0].empty() || cols[1].empty()) throw ParseError(path, n + 1, "empty item or annotator id");
        auto label = *detail::parse_label_token(cols[2], false, path, n + 1);
        try {
            set.add(std::string(cols[0]), std::string(cols[1]), label);
        } catch (const Error& e) {
            throw ParseError(path, n + 1, e.what());
        }
    }
    return set;
}

struct RejectedItem {
    std::string item;
    std::size_t annotations;
};

struct AggregateResult {
    std::map<std::string, Label> labels;
    std::vector<RejectedItem> rejected;
};

/// Strict-majority label per item. Items without an odd count >= 3 of
/// annotations are listed in `rejected` instead.
inline AggregateResult aggregate_labels(const AnnotationSet& ann) {
    AggregateResult result;
    for (const auto& [item, list] : ann.entries()) {
        if (list.size() < 3 || list.size() % 2 == 0) {
            result.rejected.push_back({item, list.size()});
            continue;
        }
        std::size_t pos = 0;
        for (const auto& a : list) pos += a.label == Label::positive;
        result.labels[item] = 2 * pos > list.size() ? Label::positive : Label::negative;
    }
    return result;
}

/// Copies labels onto matching dataset items; items without an aggregated
/// label keep whatever label they had.
inline Dataset apply_labels(const Dataset& d, const std::map<std::string, Label>& labels) {
    std::vector<Tweet> items(d.items());
    for (auto& t : items)
        if (auto it = labels.find(t.id); it != labels.end()) t.label = it->second;
    return Dataset(std::move(items));
}

// ---------------------------------------------------------------------------
// Deduplication

struct DedupeResult {
    Dataset data;
    std::size_t removed = 0;
};

inline DedupeResult dedupe(const Dataset& d) {
    std::unordered_set<std::string> seen;
    std::vector<Tweet> kept;
    std::size_t removed = 0;
    for (const auto& t : d) {
        if (seen.insert(text::normalize_for_dedupe(t.text)).second)
            kept.push_back(t);
        else
            ++removed;
    }
    return {Dataset(std::move(kept)), removed};
}

// ---------------------------------------------------------------------------
// Class-ratio scenarios and folds

struct ScenarioPlan {
    int positive_pct = 50;
    int negative_pct = 50;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::uint64_t seed = 0;

    void validate() const {
        if (positive_pct < 0 || negative_pct < 0 || positive_pct + negative_pct != 100)
            throw Error("scenario: class percentages must be non-negative and sum to 100");
        if ((n_train * positive_pct) % 100 != 0 || (n_test * positive_pct) % 100 != 0)
            throw Error("scenario " + name() + ": class counts for n_train=" + std::to_string(n_train) +
                        ", n_test=" + std::to_string(n_test) + " are not whole numbers");
    }

    std::size_t train_count(Label l) const {
        return n_train * static_cast<std::size_t>(l == Label::positive ? positive_pct : negative_pct) / 100;
    }
    std::size_t test_count(Label l) const {
        return n_test * static_cast<std::size_t>(l == Label::positive ? positive_pct : negative_pct) / 100;
    }

    std::string name() const { return std::to_string(positive_pct) + ":" + std::to_string(negative_pct); }

    friend bool operator==(const ScenarioPlan&, const ScenarioPlan&) = default;
};

/// The five class-distribution rows used by the experiment grid.
inline std::vector<ScenarioPlan> default_scenarios(std::uint64_t seed = 0) {
    return {
        {50, 50, 3450, 690, seed}, {40, 60, 2850, 570, seed}, {30, 70, 2450, 490, seed},
        {20, 80, 2150, 430, seed}, {10, 90, 1900, 380, seed},
    };
}

namespace detail {

/// Pool indices of one class in a seeded, deterministic order.
inline std::vector<std::size_t> shuffled_class_indices(const Dataset& pool, Label l, std::uint64_t seed) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool[i].label == l) idx.push_back(i);
    Rng rng(mix_seed(seed, l == Label::positive ? "positive" : "negative"));
    rng.shuffle(idx);
    return idx;
}

inline Dataset subset(const Dataset& pool, std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    std::vector<Tweet> items;
    items.reserve(idx.size());
    for (auto i : idx) items.push_back(pool[i]);
    return Dataset(std::move(items));
}

inline void require_labeled(const Dataset& pool) {
    if (!pool.all_labeled()) throw Error("scenario sampling requires a fully labeled pool");
}

}  // namespace detail

struct Split {
    Dataset train;
    Dataset test;
};

/// Stratified sampling without replacement: per class, a seeded shuffle of
/// the pool, test items taken first, training items next.
inline Split make_scenario(const Dataset& pool, const ScenarioPlan& plan) {
    plan.validate();
    detail::require_labeled(pool);
    std::vector<std::size_t> train, test;
    for (Label l : {Label::positive, Label::negative}) {
        auto order = detail::shuffled_class_indices(pool, l, plan.seed);
        const std::size_t nte = plan.test_count(l), ntr = plan.train_count(l);
        if (order.size() < nte + ntr)
            throw ShortfallError("scenario " + plan.name() + ": need " + std::to_string(nte + ntr) + " " +
                                 label_name(l) + " items, pool has " + std::to_string(order.size()) +
                                 " (short by " + std::to_string(nte + ntr - order.size()) + ")");
        test.insert(test.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nte));
        train.insert(train.end(), order.begin() + static_cast<std::ptrdiff_t>(nte),
                     order.begin() + static_cast<std::ptrdiff_t>(nte + ntr));
    }
    return {detail::subset(pool, std::move(train)), detail::subset(pool, std::move(test))};
}

struct Fold {
    std::vector<std::string> train;  // item ids
    std::vector<std::string> test;
    friend bool operator==(const Fold&, const Fold&) = default;
};

struct FoldPlan {
    std::vector<Fold> folds;
    std::size_t k() const noexcept { return folds.size(); }
    friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// k stratified folds with pairwise-disjoint test blocks. Per class, the
/// seeded order is cut into k consecutive test blocks; each fold's training
/// set is the first train_count items of that order outside its test block.
/// With k = 1 the split equals make_scenario for the same plan.
inline FoldPlan make_folds(const Dataset& pool, const ScenarioPlan& plan, std::size_t k = 6) {
    plan.validate();
    detail::require_labeled(pool);
    if (k == 0) throw Error("folds: k must be at least 1");
    FoldPlan fp;
    fp.folds.resize(k);
    for (Label l : {Label::positive, Label::negative}) {
        auto order = detail::shuffled_class_indices(pool, l, plan.seed);
        const std::size_t nte = plan.test_count(l), ntr = plan.train_count(l);
        const std::size_t need = std::max(k * nte, nte + ntr);
        if (order.size() < need)
            throw ShortfallError("folds " + plan.name() + " k=" + std::to_string(k) + ": need " +
                                 std::to_string(need) + " " + label_name(l) + " items, pool has " +
                                 std::to_string(order.size()) + " (short by " +
                                 std::to_string(need - order.size()) + ")");
        for (std::size_t f = 0; f < k; ++f) {
            const std::size_t lo = f * nte, hi = lo + nte;
            for (std::size_t j = lo; j < hi; ++j) fp.folds[f].test.push_back(pool[order[j]].id);
            std::size_t taken = 0;
            for (std::size_t j = 0; j < order.size() && taken < ntr; ++j) {
                if (j >= lo && j < hi) continue;
                fp.folds[f].train.push_back(pool[order[j]].id);
                ++taken;
            }
        }
    }
    // Present ids in pool order so every consumer sees the same sequence.
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < pool.size(); ++i) pos.emplace(pool[i].id, i);
    auto by_pool = [&](const std::string& a, const std::string& b) { return pos.at(a) < pos.at(b); };
    for (auto& f : fp.folds) {
        std::sort(f.train.begin(), f.train.end(), by_pool);
        std::sort(f.test.begin(), f.test.end(), by_pool);
    }
    return fp;
}

/// Resolves one fold's ids against the pool it was built from.
inline Split fold_split(const Dataset& pool, const FoldPlan& plan, std::size_t fold) {
    if (fold >= plan.k()) throw Error("folds: fold index out of range");
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < pool.size(); ++i) pos.emplace(pool[i].id, i);
    auto resolve = [&](const std::vector<std::string>& ids) {
        std::vector<std::size_t> idx;
        idx.reserve(ids.size());
        for (const auto& id : ids) {
            auto it = pos.find(id);
            if (it == pos.end()) throw Error("folds: item '" + id + "' not in dataset");
            idx.push_back(it->second);
        }
        return idx;
    };
    return {detail::subset(pool, resolve(plan.folds[fold].train)), detail::subset(pool, resolve(plan.folds[fold].test))};
}

inline void save_fold_plan(const FoldPlan& plan, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (std::size_t f = 0; f < plan.k(); ++f) {
        for (const auto& id : plan.folds[f].train) out << f << "\ttrain\t" << id << '\n';
        for (const auto& id : plan.folds[f].test) out << f << "\ttest\t" << id << '\n';
    }
}

inline FoldPlan load_fold_plan(const std::string& path) {
    FoldPlan plan;
    auto lines = detail::read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        auto cols = text::split(lines[n], '\t');
        if (cols.size() != 3) throw ParseError(path, n + 1, "expected fold_index<TAB>role<TAB>item_id");
        std::size_t f = 0;
        try {
            std::size_t used = 0;
            f = std::stoul(std::string(cols[0]), &used);
            if (used != cols[0].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError(path, n + 1, "invalid fold index '" + std::string(cols[0]) + "'");
        }
        if (f > plan.folds.size()) throw ParseError(path, n + 1, "fold indices must be contiguous from 0");
        if (f == plan.folds.size()) plan.folds.emplace_back();
        if (cols[1] == "train")
            plan.folds[f].train.emplace_back(cols[2]);
        else if (cols[1] == "test")
            plan.folds[f].test.emplace_back(cols[2]);
        else
            throw ParseError(path, n + 1, "role must be train or test");
    }
    return plan;
}

}  // namespace ssc
