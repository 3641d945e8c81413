#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssc/eval/metrics.hpp"
#include "ssc/models/cnn.hpp"
#include "ssc/nn/adam.hpp"
#include "ssc/nn/checkpoint.hpp"

namespace ssc {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
    std::string selection_metric = "f1_p";
    nn::AdamConfig adam{};
    /// Keep every epoch's parameters in memory; otherwise only the best so far.
    bool retain_all = true;
    /// When set, each epoch is also written to <dir>/<prefix>epoch<N>.ckpt.
    std::string checkpoint_dir;
    std::string checkpoint_prefix;

    void validate() const {
        if (epochs == 0) throw Error("train: epochs must be positive");
        if (batch_size == 0) throw Error("train: batch size must be positive");
        if (!(validation_fraction > 0 && validation_fraction < 0.5))
            throw Error("train: validation fraction must be in (0, 0.5)");
        MetricsReport probe;
        (void)metric_value(probe, selection_metric);
    }
};

template <class T>
struct ModelCheckpoint {
    std::size_t epoch = 0;  // 1-based
    std::string kind;
    Meta config;
    std::uint64_t config_digest = 0;
    MetricsReport validation;
    double train_loss = 0;
    std::optional<nn::ParamSet<T>> params;
};

struct Prediction {
    Label label = Label::negative;
    double positive_prob = 0;
};

/// argmax over (negative, positive); an exact tie resolves to negative.
inline Label decide(double p_negative, double p_positive) {
    return p_positive > p_negative ? Label::positive : Label::negative;
}

template <class T>
std::vector<Prediction> predict_batch(CnnModel<T>& model, std::span<const EncodedItem<T>* const> items,
                                      std::size_t chunk = 64) {
    std::vector<Prediction> out;
    out.reserve(items.size());
    for (std::size_t start = 0; start < items.size(); start += chunk) {
        auto batch = items.subspan(start, std::min(chunk, items.size() - start));
        nn::Graph<T> g;
        auto probs = nn::Graph<T>::softmax(g.value(model.forward(g, batch, false, nullptr)));
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const double pn = probs.at(b, 0), pp = probs.at(b, 1);
            out.push_back({decide(pn, pp), pp});
        }
    }
    return out;
}

template <class T>
std::vector<Prediction> predict_batch(CnnModel<T>& model, const std::vector<EncodedItem<T>>& items) {
    std::vector<const EncodedItem<T>*> ptrs;
    ptrs.reserve(items.size());
    for (const auto& it : items) ptrs.push_back(&it);
    return predict_batch(model, std::span<const EncodedItem<T>* const>(ptrs));
}

template <class T>
Prediction predict(CnnModel<T>& model, const EncodedItem<T>& item) {
    const EncodedItem<T>* p = &item;
    return predict_batch(model, std::span<const EncodedItem<T>* const>(&p, 1))[0];
}

/// Stratified fit/validation split: per class, a seeded shuffle with the
/// first round(fraction * n) items held out.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_validation(std::span<const Label> labels,
                                                                                      double fraction,
                                                                                      std::uint64_t seed) {
    std::vector<std::size_t> fit, val;
    for (Label l : {Label::negative, Label::positive}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == l) idx.push_back(i);
        Rng rng(mix_seed(seed, l == Label::positive ? "val-positive" : "val-negative"));
        rng.shuffle(idx);
        std::size_t nval = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
        if (nval == 0 && idx.size() >= 2) nval = 1;
        if (nval >= idx.size()) nval = idx.size() - 1;
        val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nval));
        fit.insert(fit.end(), idx.begin() + static_cast<std::ptrdiff_t>(nval), idx.end());
    }
    std::sort(fit.begin(), fit.end());
    std::sort(val.begin(), val.end());
    return {fit, val};
}

template <class T>
nn::Container to_container(const ModelCheckpoint<T>& cp) {
    if (!cp.params) throw Error("checkpoint: epoch " + std::to_string(cp.epoch) + " has no retained parameters");
    nn::Container c;
    nn::put_params(c, *cp.params);
    c.meta["kind"] = cp.kind;
    c.meta["epoch"] = std::to_string(cp.epoch);
    char digest[20];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(cp.config_digest));
    c.meta["config_digest"] = digest;
    for (const auto& [k, v] : cp.config) c.meta["config." + k] = v;
    const auto& m = cp.validation;
    c.meta["metric.accuracy"] = nn::format_exact(m.accuracy);
    c.meta["metric.precision_p"] = nn::format_exact(m.precision_p);
    c.meta["metric.recall_p"] = nn::format_exact(m.recall_p);
    c.meta["metric.f1_p"] = nn::format_exact(m.f1_p);
    c.meta["metric.tp"] = nn::format_exact(m.tp);
    c.meta["metric.fp"] = nn::format_exact(m.fp);
    c.meta["metric.fn"] = nn::format_exact(m.fn);
    c.meta["metric.tn"] = nn::format_exact(m.tn);
    c.meta["metric.train_loss"] = nn::format_exact(cp.train_loss);
    return c;
}

template <class T>
void save_checkpoint(const ModelCheckpoint<T>& cp, const std::string& path) {
    nn::save_container(to_container(cp), path);
}

template <class T>
ModelCheckpoint<T> from_container(const nn::Container& c) {
    ModelCheckpoint<T> cp;
    cp.kind = c.meta_at("kind");
    if (cp.kind != "word_aux" && cp.kind != "char_aux" && cp.kind != "char_cnn")
        throw Error("checkpoint: not a CNN checkpoint (kind " + cp.kind + ")");
    cp.epoch = std::stoul(c.meta_at("epoch"));
    cp.config_digest = std::stoull(c.meta_at("config_digest"), nullptr, 16);
    for (const auto& [k, v] : c.meta)
        if (k.rfind("config.", 0) == 0) cp.config[k.substr(7)] = v;
    auto num = [&](const char* k) { return std::stod(c.meta_at(k)); };
    cp.validation = {num("metric.accuracy"), num("metric.precision_p"), num("metric.recall_p"), num("metric.f1_p"),
                     num("metric.tp"),       num("metric.fp"),          num("metric.fn"),       num("metric.tn")};
    cp.train_loss = num("metric.train_loss");
    cp.params = nn::get_params<T>(c);
    return cp;
}

template <class T>
ModelCheckpoint<T> load_checkpoint(const std::string& path) {
    return from_container<T>(nn::load_container(path));
}

/// Rebuilds the model a checkpoint was taken from, with its parameters.
template <class T>
std::unique_ptr<CnnModel<T>> restore_model(const ModelCheckpoint<T>& cp) {
    auto model = build_from_meta<T>(cp.config);
    if (kind_name(model->kind()) != cp.kind) throw Error("checkpoint: kind does not match stored config");
    if (!cp.params) throw Error("checkpoint: no parameters to restore");
    model->load_params(*cp.params);
    return model;
}

template <class T>
MetricsReport evaluate(CnnModel<T>& model, std::span<const EncodedItem<T>* const> items) {
    auto preds = predict_batch(model, items);
    std::vector<Label> p, g;
    for (std::size_t i = 0; i < items.size(); ++i) {
        p.push_back(preds[i].label);
        g.push_back(items[i]->label);
    }
    return compute_metrics(p, g);
}

/// Mini-batch Adam training with one checkpoint per epoch. The validation
/// split is carved from `data`; the model ends holding the last epoch's
/// parameters.
template <class T>
std::vector<ModelCheckpoint<T>> train(CnnModel<T>& model, std::span<const EncodedItem<T>* const> data,
                                      const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw Error("train: empty training set");
    std::vector<Label> labels;
    for (const auto* d : data) labels.push_back(d->label);
    const auto pos = std::count(labels.begin(), labels.end(), Label::positive);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size()))
        throw Error("train: training set contains a single class");

    auto [fit, val] = split_validation(labels, cfg.validation_fraction, cfg.seed);
    std::vector<const EncodedItem<T>*> val_items;
    for (auto i : val) val_items.push_back(data[i]);

    Rng rng(mix_seed(cfg.seed, "train"));
    nn::Adam<T> opt(model.params(), cfg.adam);
    const Meta config = model.config_meta();
    const std::uint64_t digest = model.config_digest();
    std::vector<ModelCheckpoint<T>> checkpoints;
    double best = -1;
    std::size_t best_index = 0;
    std::vector<const EncodedItem<T>*> batch;
    std::vector<int> gold;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(fit);
        double loss_sum = 0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < fit.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(fit.size(), start + cfg.batch_size);
            batch.clear();
            gold.clear();
            for (std::size_t j = start; j < end; ++j) {
                batch.push_back(data[fit[j]]);
                gold.push_back(class_index(data[fit[j]]->label));
            }
            nn::Graph<T> g;
            nn::Var logits = model.forward(g, batch, true, &rng);
            nn::Var loss = g.softmax_xent(logits, gold);
            const double l = static_cast<double>(g.value(loss)[0]);
            if (!std::isfinite(l))
                throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting " +
                            std::to_string(start));
            model.params().zero_grad();
            g.backward(loss);
            opt.step(model.params());
            loss_sum += l * static_cast<double>(end - start);
            seen += end - start;
        }

        ModelCheckpoint<T> cp;
        cp.epoch = epoch;
        cp.kind = kind_name(model.kind());
        cp.config = config;
        cp.config_digest = digest;
        cp.train_loss = loss_sum / static_cast<double>(seen);
        cp.validation = evaluate(model, std::span<const EncodedItem<T>* const>(val_items));
        cp.params = model.params();
        for (auto& p : *cp.params) p.grad = nn::Tensor<T>();

        if (!cfg.checkpoint_dir.empty()) {
            std::filesystem::create_directories(cfg.checkpoint_dir);
            save_checkpoint(cp, (std::filesystem::path(cfg.checkpoint_dir) /
                                 (cfg.checkpoint_prefix + "epoch" + std::to_string(epoch) + ".ckpt"))
                                    .string());
        }
        const double score = metric_value(cp.validation, cfg.selection_metric);
        const bool is_best = score > best;
        checkpoints.push_back(std::move(cp));
        if (!cfg.retain_all) {
            if (is_best) {
                if (best >= 0) checkpoints[best_index].params.reset();
            } else {
                checkpoints.back().params.reset();
            }
        }
        if (is_best) {
            best = score;
            best_index = checkpoints.size() - 1;
        }
    }
    return checkpoints;
}

template <class T>
std::vector<ModelCheckpoint<T>> train(CnnModel<T>& model, const std::vector<EncodedItem<T>>& data,
                                      const TrainConfig& cfg) {
    std::vector<const EncodedItem<T>*> ptrs;
    ptrs.reserve(data.size());
    for (const auto& d : data) ptrs.push_back(&d);
    return train(model, std::span<const EncodedItem<T>* const>(ptrs), cfg);
}

/// Checkpoint with the highest validation metric; earliest epoch on ties.
template <class T>
const ModelCheckpoint<T>& select_best_epoch(const std::vector<ModelCheckpoint<T>>& cps,
                                            const std::string& metric = "f1_p") {
    if (cps.empty()) throw Error("select_best_epoch: no checkpoints");
    (void)metric_value(cps[0].validation, metric);
    std::size_t best = 0;
    for (std::size_t i = 1; i < cps.size(); ++i)
        if (metric_value(cps[i].validation, metric) > metric_value(cps[best].validation, metric)) best = i;
    return cps[best];
}

}  // namespace ssc
