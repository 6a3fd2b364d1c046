#pragma once
// Two-stage training: classification pre-training over the trunk features,
// then symmetric contrastive alignment of state and text embeddings with
// in-batch negatives. Both stages are sequential and fully seeded.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clsp/checkpoint.hpp"
#include "clsp/config.hpp"
#include "clsp/dataset.hpp"
#include "clsp/encoders.hpp"
#include "clsp/metrics.hpp"
#include "clsp/ops.hpp"
#include "clsp/optim.hpp"
#include "clsp/rng.hpp"
#include "clsp/tensor.hpp"

namespace clsp {

// Sum over target-set items of the per-item cross-entropy, each item's term
// already averaged over the batch.
template <typename Real>
Tensor<Real>* pretrain_loss(Tape<Real>& tape, Tensor<Real>* trunk,
                            const std::vector<std::vector<int>>& labels,
                            PretrainHeads<Real>& heads, const StateSchema& schema,
                            const std::string& target_set) {
    check(trunk->rows() == labels.size(), "pretrain_loss: label count does not match batch");
    Tensor<Real>* total = nullptr;
    for (std::size_t i = 0; i < schema.items.size(); ++i) {
        const auto& it = schema.items[i];
        if (!item_in_target_set(it, target_set)) continue;
        std::vector<int> targets(labels.size());
        for (std::size_t b = 0; b < labels.size(); ++b) targets[b] = labels[b][i];
        Tensor<Real>* logits = linear(tape, trunk, heads.params.find("head." + it.name + ".w"),
                                      heads.params.find("head." + it.name + ".b"));
        Tensor<Real>* item_loss = softmax_cross_entropy_rows(tape, logits, std::move(targets));
        total = total == nullptr ? item_loss : scalar_add(tape, total, item_loss);
    }
    if (total == nullptr)
        throw std::invalid_argument("pretrain_loss: target set \"" + target_set +
                                    "\" selects no items");
    return total;
}

template <typename Real>
struct ContrastiveLoss {
    Tensor<Real>* s2t = nullptr;
    Tensor<Real>* t2s = nullptr;
    Tensor<Real>* total = nullptr;
};

// Symmetric InfoNCE over the in-batch similarity grid S T^T / tau. Row i's
// positive is column i; the total is the mean of the two directions.
template <typename Real>
ContrastiveLoss<Real> contrastive_loss(Tape<Real>& tape, Tensor<Real>* S, Tensor<Real>* T,
                                       double tau) {
    check(S->rows() >= 1, "contrastive_loss: empty batch");
    check(S->shape == T->shape, "contrastive_loss: shape mismatch " + S->shape_str() + " vs " +
                                    T->shape_str());
    check(tau > 0, "contrastive_loss: temperature must be positive");
    Tensor<Real>* sims = matmul_nt(tape, S, T);
    Tensor<Real>* scaled = scale(tape, sims, Real(1.0 / tau));
    std::vector<int> diagonal(S->rows());
    for (std::size_t i = 0; i < diagonal.size(); ++i) diagonal[i] = static_cast<int>(i);
    ContrastiveLoss<Real> out;
    out.s2t = softmax_cross_entropy_rows(tape, scaled, diagonal);
    out.t2s = softmax_cross_entropy_rows(tape, transpose(tape, scaled), std::move(diagonal));
    out.total = scale(tape, scalar_add(tape, out.s2t, out.t2s), Real(0.5));
    return out;
}

namespace detail {

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                            const std::string& stage, int epoch) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng = Rng::derive(seed, stage + ".shuffle." + std::to_string(epoch));
    shuffle(idx, rng);
    return idx;
}

inline void require_finite(double loss, const std::string& stage, long step) {
    if (!std::isfinite(loss))
        throw std::runtime_error(stage + " diverged: non-finite loss at step " +
                                 std::to_string(step));
}

}  // namespace detail

// Fraction of eval samples whose head argmax matches the label, per
// target-set item in schema order.
template <typename Real>
std::vector<std::pair<std::string, double>> pretrain_accuracy(
    Model<Real>& model, const std::vector<const AgentState*>& states,
    const std::vector<std::vector<int>>& labels, const std::string& target_set,
    std::size_t chunk = 256) {
    const StateSchema& schema = model.state.schema;
    std::vector<std::size_t> item_indices;
    for (std::size_t i = 0; i < schema.items.size(); ++i)
        if (item_in_target_set(schema.items[i], target_set)) item_indices.push_back(i);
    std::vector<std::size_t> correct(item_indices.size(), 0);
    std::vector<Tensor<Real>> fronts;
    for (std::size_t base = 0; base < states.size(); base += chunk) {
        const std::size_t n = std::min(chunk, states.size() - base);
        std::vector<const AgentState*> part(states.begin() + base, states.begin() + base + n);
        Tape<Real> tape;
        StateBatch<Real> batch =
            build_state_batch<Real>(part, schema, model.state.variant, model.state.banks);
        auto [trunk, embed] = state_forward(tape, model.state, batch, &fronts);
        for (std::size_t ii = 0; ii < item_indices.size(); ++ii) {
            const auto& it = schema.items[item_indices[ii]];
            Tensor<Real>* logits = linear(tape, trunk, model.heads.params.find("head." + it.name + ".w"),
                                          model.heads.params.find("head." + it.name + ".b"));
            for (std::size_t b = 0; b < n; ++b) {
                std::size_t best = 0;
                for (std::size_t c = 1; c < logits->cols(); ++c)
                    if (logits->at(b, c) > logits->at(b, best)) best = c;
                if (static_cast<int>(best) == labels[base + b][item_indices[ii]]) ++correct[ii];
            }
        }
    }
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t ii = 0; ii < item_indices.size(); ++ii)
        out.emplace_back(schema.items[item_indices[ii]].name,
                         double(correct[ii]) / double(states.size()));
    return out;
}

// Stage 1: trains the state encoder trunk and classifier heads with AdamW.
// Writes a checkpoint (heads kept per config) and an accuracy CSV; returns
// the trained model. Metrics rows land at step 0, every eval interval, and
// the final step.
template <typename Real>
Model<Real> run_pretraining(const PairDataset& train, Variant variant, const RunConfig& cfg,
                            const std::string& ckpt_path, const std::string& metrics_path,
                            std::ostream* log = nullptr) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("run_pretraining: empty dataset");
    if (variant == Variant::kClipBaseline)
        throw std::invalid_argument("run_pretraining: clip-baseline skips pre-training");
    if (static_cast<std::size_t>(cfg.batch_size) > train.size())
        throw std::invalid_argument("run_pretraining: batch size exceeds dataset size");

    const StateSchema schema = default_schema();
    Model<Real> model = make_model<Real>(variant, schema, cfg.seed, true, cfg.rff_sigma);
    std::vector<Tensor<Real>*> trainable = model.state.params.all();
    for (auto* t : model.heads.params.all()) trainable.push_back(t);
    AdamW<Real> opt(trainable, cfg.adamw_config());

    std::vector<std::vector<int>> all_labels(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        all_labels[i] = build_class_labels(train[i].state, schema);

    // Fixed evaluation subset drawn once from the training split.
    std::vector<std::size_t> eval_idx = detail::epoch_order(train.size(), cfg.seed, "pretrain.eval", 0);
    eval_idx.resize(std::min<std::size_t>(cfg.eval_queries, eval_idx.size()));
    std::vector<const AgentState*> eval_states;
    std::vector<std::vector<int>> eval_labels;
    for (std::size_t i : eval_idx) {
        eval_states.push_back(&train[i].state);
        eval_labels.push_back(all_labels[i]);
    }

    std::ofstream metrics(metrics_path, std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot write metrics " + metrics_path);
    metrics << std::setprecision(10);
    metrics << "# config " << cfg.to_json().dump() << "\n";
    metrics << "step,split,loss_pre";
    for (const auto& it : schema.items)
        if (item_in_target_set(it, cfg.target_set)) metrics << ",acc_" << it.name;
    metrics << "\n";

    double last_loss = 0;
    auto write_eval = [&](long step) {
        const auto accs = pretrain_accuracy(model, eval_states, eval_labels, cfg.target_set);
        metrics << step << ",train," << last_loss;
        for (const auto& [name, acc] : accs) metrics << ',' << acc;
        metrics << "\n";
        metrics.flush();
        if (log) {
            double mean = 0;
            for (const auto& [name, acc] : accs) mean += acc;
            *log << "pretrain step " << step << " loss " << last_loss << " mean-acc "
                 << mean / double(accs.size()) << "\n";
        }
    };

    // Step-0 row reports the loss of the first batch before any update.
    long step = 0;
    bool wrote_step0 = false;
    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        const auto order = detail::epoch_order(train.size(), cfg.seed, "pretrain", epoch);
        for (std::size_t base = 0; base + cfg.batch_size <= order.size();
             base += cfg.batch_size) {
            std::vector<const AgentState*> states;
            std::vector<std::vector<int>> labels;
            for (int b = 0; b < cfg.batch_size; ++b) {
                states.push_back(&train[order[base + b]].state);
                labels.push_back(all_labels[order[base + b]]);
            }
            Tape<Real> tape;
            StateBatch<Real> batch =
                build_state_batch<Real>(states, schema, variant, model.state.banks);
            std::vector<Tensor<Real>> fronts;
            auto [trunk, embed] = state_forward(tape, model.state, batch, &fronts);
            Tensor<Real>* loss =
                pretrain_loss(tape, trunk, labels, model.heads, schema, cfg.target_set);
            last_loss = double(loss->data[0]);
            detail::require_finite(last_loss, "pre-training", step);
            if (!wrote_step0) {
                write_eval(0);
                wrote_step0 = true;
            }
            tape.backward(loss);
            opt.step();
            ++step;
            if (step % cfg.eval_interval == 0) write_eval(step);
        }
    }
    if (step % cfg.eval_interval != 0 || step == 0) write_eval(step);

    if (!cfg.keep_heads) model.has_heads = false;
    save_checkpoint(ckpt_path, checkpoint_from_model(model, cfg.to_json(), cfg.seed, step));
    model.has_heads = true;
    return model;
}

// Pinned alignment metrics columns, shared by the CSV writer and tests.
inline std::string alignment_csv_header() {
    std::string h = "step,split,loss_total,loss_s2t,loss_t2s,r_at_1,r_at_5,r_at_10";
    for (const auto& ex : default_extractors()) h += ",top1_mae_" + ex.name;
    return h;
}

// Stage 2: jointly trains both encoders with the contrastive loss.
// `init` seeds the state encoder from a pre-training run; pass nullptr for
// random initialization (mandatory for clip-baseline). Evaluates retrieval
// on a fixed query subset of the test split against all test references.
template <typename Real>
Model<Real> run_alignment(const PairDataset& train, const PairDataset& test, Variant variant,
                          const RunConfig& cfg, const Model<Real>* init,
                          const std::string& ckpt_path, const std::string& metrics_path,
                          std::ostream* log = nullptr) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("run_alignment: empty train split");
    if (test.size() < 10)
        throw std::invalid_argument("run_alignment: test split needs at least 10 pairs");
    if (cfg.batch_size < 2)
        throw std::invalid_argument("run_alignment: contrastive batch needs at least 2 pairs");
    if (static_cast<std::size_t>(cfg.batch_size) > train.size())
        throw std::invalid_argument("run_alignment: batch size exceeds dataset size");
    if (variant == Variant::kClipBaseline && init != nullptr)
        throw std::invalid_argument("run_alignment: clip-baseline requires random initialization");
    if (init != nullptr && init->state.variant != variant)
        throw std::invalid_argument("run_alignment: init checkpoint variant is " +
                                    std::string(variant_name(init->state.variant)) +
                                    ", expected " + variant_name(variant));

    const StateSchema schema = default_schema();
    Model<Real> model =
        init ? *init : make_model<Real>(variant, schema, cfg.seed, false, cfg.rff_sigma);
    model.has_heads = false;
    std::vector<Tensor<Real>*> trainable = model.state.params.all();
    for (auto* t : model.text.params.all()) trainable.push_back(t);
    AdamW<Real> opt(trainable, cfg.adamw_config());

    // Fixed retrieval queries, full-test references, and a fixed loss batch.
    std::vector<std::size_t> qidx = detail::epoch_order(test.size(), cfg.seed, "align.eval", 0);
    qidx.resize(std::min<std::size_t>(cfg.eval_queries, qidx.size()));
    std::vector<const AgentState*> ref_states;
    for (const auto& p : test) ref_states.push_back(&p.state);
    std::vector<const std::string*> query_texts;
    for (std::size_t i : qidx) query_texts.push_back(&test[i].text);
    const std::size_t n_loss = std::min<std::size_t>(cfg.eval_loss_pairs, test.size());
    std::vector<const AgentState*> loss_states(ref_states.begin(), ref_states.begin() + n_loss);
    std::vector<const std::string*> loss_texts;
    for (std::size_t i = 0; i < n_loss; ++i) loss_texts.push_back(&test[i].text);

    std::ofstream metrics(metrics_path, std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot write metrics " + metrics_path);
    metrics << std::setprecision(10);
    metrics << "# config " << cfg.to_json().dump() << "\n";
    metrics << alignment_csv_header() << "\n";

    auto write_eval = [&](long step) {
        Tape<Real> loss_tape;
        StateBatch<Real> sb =
            build_state_batch<Real>(loss_states, schema, variant, model.state.banks);
        std::vector<Tensor<Real>> fronts;
        auto [trunk, S] = state_forward(loss_tape, model.state, sb, &fronts);
        Tensor<Real> counts = build_text_batch<Real>(loss_texts, model.text.vocab);
        Tensor<Real>* T = text_forward(loss_tape, model.text, counts);
        ContrastiveLoss<Real> l = contrastive_loss(loss_tape, S, T, cfg.temperature);

        const EmbeddingMatrix refs = embed_states(model.state, ref_states);
        const EmbeddingMatrix queries = embed_texts(model.text, query_texts);
        const RetrievalReport rep =
            evaluate_retrieval(queries, refs, qidx, ref_states, {1, 5, 10});
        metrics << step << ",test," << double(l.total->data[0]) << ',' << double(l.s2t->data[0])
                << ',' << double(l.t2s->data[0]);
        for (const auto& [k, v] : rep.r_at_k) metrics << ',' << v;
        for (const auto& [name, v] : rep.top1) metrics << ',' << v;
        metrics << "\n";
        metrics.flush();
        if (log)
            *log << "align step " << step << " loss " << double(l.total->data[0]) << " r@1 "
                 << rep.r_at_k[0].second << " r@10 " << rep.r_at_k[2].second << "\n";
    };

    write_eval(0);
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = detail::epoch_order(train.size(), cfg.seed, "align", epoch);
        for (std::size_t base = 0; base + cfg.batch_size <= order.size();
             base += cfg.batch_size) {
            std::vector<const AgentState*> states;
            std::vector<const std::string*> texts;
            for (int b = 0; b < cfg.batch_size; ++b) {
                states.push_back(&train[order[base + b]].state);
                texts.push_back(&train[order[base + b]].text);
            }
            Tape<Real> tape;
            StateBatch<Real> batch =
                build_state_batch<Real>(states, schema, variant, model.state.banks);
            std::vector<Tensor<Real>> fronts;
            auto [trunk, S] = state_forward(tape, model.state, batch, &fronts);
            Tensor<Real> counts = build_text_batch<Real>(texts, model.text.vocab);
            Tensor<Real>* T = text_forward(tape, model.text, counts);
            ContrastiveLoss<Real> loss = contrastive_loss(tape, S, T, cfg.temperature);
            detail::require_finite(double(loss.total->data[0]), "alignment", step);
            tape.backward(loss.total);
            opt.step();
            ++step;
            if (step % cfg.eval_interval == 0) write_eval(step);
        }
    }
    if (step % cfg.eval_interval != 0 && step > 0) write_eval(step);

    save_checkpoint(ckpt_path, checkpoint_from_model(model, cfg.to_json(), cfg.seed, step));
    return model;
}

}  // namespace clsp
