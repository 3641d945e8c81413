#pragma once

#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ssc/baselines/model.hpp"
#include "ssc/eval/metrics.hpp"
#include "ssc/eval/vote.hpp"
#include "ssc/models/trainer.hpp"

namespace ssc {

/// Anything that can vote on encoded items.
template <class T>
class Member {
public:
    virtual ~Member() = default;
    virtual std::string kind() const = 0;
    virtual std::vector<Prediction> predict(std::span<const EncodedItem<T>* const> items) const = 0;

    std::vector<Prediction> predict(const std::vector<EncodedItem<T>>& items) const {
        std::vector<const EncodedItem<T>*> ptrs;
        ptrs.reserve(items.size());
        for (const auto& it : items) ptrs.push_back(&it);
        return predict(std::span<const EncodedItem<T>* const>(ptrs));
    }
};

template <class T>
class CnnMember final : public Member<T> {
public:
    explicit CnnMember(std::unique_ptr<CnnModel<T>> model) : model_(std::move(model)) {}
    std::string kind() const override { return kind_name(model_->kind()); }
    using Member<T>::predict;
    std::vector<Prediction> predict(std::span<const EncodedItem<T>* const> items) const override {
        if (model_->kind() == CnnKind::word_aux)
            for (const auto* it : items)
                if (it->words.size() == 0) throw Error("word_aux member needs embedded word input (no embeddings loaded)");
        return predict_batch(*model_, items);
    }
    CnnModel<T>& model() const { return *model_; }

private:
    std::unique_ptr<CnnModel<T>> model_;
};

template <class T>
class BaselineMember final : public Member<T> {
public:
    explicit BaselineMember(BaselineModel model) : model_(std::move(model)) {}
    std::string kind() const override { return kind_name(model_.kind()); }
    using Member<T>::predict;
    std::vector<Prediction> predict(std::span<const EncodedItem<T>* const> items) const override {
        std::vector<Prediction> out;
        out.reserve(items.size());
        for (const auto* it : items) out.push_back(model_.predict(it->tokens, it->aux));
        return out;
    }
    const BaselineModel& model() const { return model_; }

private:
    BaselineModel model_;
};

/// Loads a CNN checkpoint or a baseline model file, chosen by its kind tag.
template <class T>
std::unique_ptr<Member<T>> load_member(const std::string& path) {
    try {
        const auto c = nn::load_container(path);
        const auto& kind = c.meta_at("kind");
        if (parse_baseline_kind(kind)) return std::make_unique<BaselineMember<T>>(BaselineModel::from_container(c));
        return std::make_unique<CnnMember<T>>(restore_model(from_container<T>(c)));
    } catch (const std::exception& e) {
        throw Error("ensemble member " + path + ": " + e.what());
    }
}

struct EnsembleVote {
    Label label = Label::negative;
    std::size_t positive_votes = 0;
    std::size_t negative_votes = 0;
    std::vector<Prediction> members;
};

/// Member predictions over a shared input set, combined by majority_vote.
inline std::vector<EnsembleVote> combine_votes(const std::vector<std::vector<Prediction>>& per_member) {
    if (per_member.empty()) throw Error("ensemble: no members");
    const std::size_t n = per_member[0].size();
    for (const auto& m : per_member)
        if (m.size() != n) throw Error("ensemble: members predicted different item counts");
    std::vector<EnsembleVote> out(n);
    std::vector<Label> votes(per_member.size());
    std::vector<double> probs(per_member.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = out[i];
        for (std::size_t m = 0; m < per_member.size(); ++m) {
            votes[m] = per_member[m][i].label;
            probs[m] = per_member[m][i].positive_prob;
            v.members.push_back(per_member[m][i]);
            (votes[m] == Label::positive ? v.positive_votes : v.negative_votes) += 1;
        }
        v.label = majority_vote(votes, probs);
    }
    return out;
}

template <class T>
std::vector<EnsembleVote> ensemble_predict(const std::vector<const Member<T>*>& members,
                                           const std::vector<EncodedItem<T>>& items) {
    std::vector<std::vector<Prediction>> per_member;
    for (const auto* m : members) per_member.push_back(m->predict(items));
    return combine_votes(per_member);
}

struct CvResult {
    std::vector<MetricsReport> folds;
    MetricsReport mean;
};

/// Runs `fold_fn` for every fold index, up to `jobs` at a time; results are
/// merged by fold index. The first failing fold (lowest index) aborts the
/// run with its index in the message.
inline CvResult cross_validate(std::size_t k, const std::function<MetricsReport(std::size_t)>& fold_fn,
                               std::size_t jobs = 1) {
    if (k == 0) throw Error("cross_validate: no folds");
    std::vector<MetricsReport> reports(k);
    std::vector<std::string> errors(k);
    std::vector<char> failed(k, 0);
    auto run = [&](std::size_t f) {
        try {
            reports[f] = fold_fn(f);
        } catch (const std::exception& e) {
            failed[f] = 1;
            errors[f] = e.what();
        }
    };
    if (jobs <= 1) {
        for (std::size_t f = 0; f < k; ++f) {
            run(f);
            if (failed[f]) break;
        }
    } else {
        std::size_t next = 0;
        std::mutex mu;
        std::vector<std::future<void>> workers;
        for (std::size_t w = 0; w < std::min(jobs, k); ++w)
            workers.push_back(std::async(std::launch::async, [&] {
                for (;;) {
                    std::size_t f;
                    {
                        std::lock_guard lock(mu);
                        if (next >= k) return;
                        f = next++;
                    }
                    run(f);
                }
            }));
        for (auto& w : workers) w.get();
    }
    for (std::size_t f = 0; f < k; ++f)
        if (failed[f]) throw Error("cross-validation fold " + std::to_string(f) + " failed: " + errors[f]);
    CvResult r;
    r.folds = std::move(reports);
    r.mean = mean_report(r.folds);
    return r;
}

}  // namespace ssc
