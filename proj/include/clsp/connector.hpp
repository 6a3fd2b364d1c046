#pragma once
// Expansion connector and regression probe. The connector fans one 128-wide
// embedding out into 8 tokens (per-token linear, GELU, shared linear, layer
// norm); the probe is a linear head over the concatenated tokens predicting
// the numeric state items, with direction as a sin/cos pair.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clsp/encoders.hpp"
#include "clsp/metrics.hpp"
#include "clsp/ops.hpp"
#include "clsp/optim.hpp"
#include "clsp/rng.hpp"
#include "clsp/state.hpp"
#include "clsp/tensor.hpp"

namespace clsp {

inline constexpr std::size_t kConnectorTokens = 8;
inline constexpr std::size_t kConnectorHidden = 64;
inline constexpr std::size_t kConnectorTokenWidth = 128;
inline constexpr std::size_t kProbeTargets = 15;

template <typename Real>
struct Connector {
    ParamSet<Real> params;
};

template <typename Real>
Connector<Real> make_connector(std::uint64_t seed) {
    Connector<Real> conn;
    auto& p = conn.params;
    auto gauss = [&](const std::string& name, std::vector<std::size_t> shape, double scale) {
        Tensor<Real>* t = p.add(name, std::move(shape));
        detail::init_normal(*t, seed, "connector." + name, scale);
    };
    for (std::size_t i = 0; i < kConnectorTokens; ++i) {
        const std::string base = "tok" + std::to_string(i) + ".";
        gauss(base + "w", {kEmbedWidth, kConnectorHidden}, 1.0 / std::sqrt(double(kEmbedWidth)));
        p.add(base + "b", {kConnectorHidden});
    }
    gauss("shared.w", {kConnectorHidden, kConnectorTokenWidth},
          1.0 / std::sqrt(double(kConnectorHidden)));
    p.add("shared.b", {kConnectorTokenWidth});
    Tensor<Real>* gain = p.add("ln.gain", {kConnectorTokenWidth});
    std::fill(gain->data.begin(), gain->data.end(), Real(1));
    p.add("ln.bias", {kConnectorTokenWidth});
    return conn;
}

template <typename Real>
struct Probe {
    ParamSet<Real> params;
};

template <typename Real>
Probe<Real> make_probe(std::uint64_t seed) {
    Probe<Real> probe;
    const std::size_t in = kConnectorTokens * kConnectorTokenWidth;
    Tensor<Real>* w = probe.params.add("out.w", {in, kProbeTargets});
    detail::init_normal(*w, seed, "probe.out.w", 1.0 / std::sqrt(double(in)));
    probe.params.add("out.b", {kProbeTargets});
    return probe;
}

template <typename Real>
struct ConnectorOut {
    std::vector<Tensor<Real>*> tokens;  // n entries, each [B, h]
    Tensor<Real>* concat = nullptr;     // [B, n*h]
};

// token_i = LN(shared(GELU(linear_i(E)))) for a batch of embeddings E.
template <typename Real>
ConnectorOut<Real> expand_connector(Tape<Real>& tape, Connector<Real>& conn, Tensor<Real>* E) {
    if (E->cols() != kEmbedWidth)
        throw std::invalid_argument("expand_connector: embedding width " + E->shape_str() +
                                    " does not match connector input " +
                                    std::to_string(kEmbedWidth));
    ConnectorOut<Real> out;
    Tensor<Real>* gain = conn.params.find("ln.gain");
    Tensor<Real>* bias = conn.params.find("ln.bias");
    Tensor<Real>* sw = conn.params.find("shared.w");
    Tensor<Real>* sb = conn.params.find("shared.b");
    for (std::size_t i = 0; i < kConnectorTokens; ++i) {
        const std::string base = "tok" + std::to_string(i) + ".";
        Tensor<Real>* h = gelu(
            tape, linear(tape, E, conn.params.find(base + "w"), conn.params.find(base + "b")));
        out.tokens.push_back(layer_norm_rows(tape, linear(tape, h, sw, sb), gain, bias));
    }
    out.concat = concat_cols(tape, out.tokens);
    return out;
}

template <typename Real>
Tensor<Real>* probe_forward(Tape<Real>& tape, Probe<Real>& probe, Tensor<Real>* tokens) {
    if (tokens->cols() != kConnectorTokens * kConnectorTokenWidth)
        throw std::invalid_argument("probe_forward: token width " + tokens->shape_str() +
                                    " does not match probe input");
    return linear(tape, tokens, probe.params.find("out.w"), probe.params.find("out.b"));
}

// Normalized regression targets: each scalar mapped to [0,1] by its schema
// range, direction expanded to (sin, cos).
inline std::array<double, kProbeTargets> probe_target_vector(const AgentState& st,
                                                             const StateSchema& schema) {
    auto norm = [&](const char* item, double v) {
        const SchemaItem& it = schema.item(item);
        return (v - it.lo) / (it.hi - it.lo);
    };
    const double rad = st.self.direction * std::numbers::pi / 180.0;
    std::array<double, kProbeTargets> t{};
    t[0] = norm("self_hp", st.self.hp);
    t[1] = norm("self_x", st.self.x);
    t[2] = norm("self_y", st.self.y);
    t[3] = norm("self_z", st.self.z);
    t[4] = std::sin(rad);
    t[5] = std::cos(rad);
    t[6] = norm("self_speed", st.self.speed);
    std::size_t k = 7;
    for (const char* base : {"enemy1", "enemy2", "teammate1", "teammate2"}) {
        const std::string b(base);
        t[k++] = norm((b + "_hp").c_str(), raw_item_value(st, schema.item(b + "_hp")));
        t[k++] = norm((b + "_distance").c_str(), raw_item_value(st, schema.item(b + "_distance")));
    }
    return t;
}

// Where the probe's embeddings come from. `trainable` is empty for frozen or
// parameter-free sources; `forward` must keep any buffers backward needs
// alive until the next call.
template <typename Real>
struct EmbeddingSource {
    std::vector<Tensor<Real>*> trainable;
    std::function<Tensor<Real>*(Tape<Real>&, const std::vector<const AgentState*>&)> forward;
};

// Live view over a state encoder; unfreezing exposes its parameters.
template <typename Real>
EmbeddingSource<Real> encoder_source(StateEncoder<Real>& enc) {
    EmbeddingSource<Real> src;
    src.trainable = enc.params.all();
    auto batch = std::make_shared<StateBatch<Real>>();
    auto fronts = std::make_shared<std::vector<Tensor<Real>>>();
    StateEncoder<Real>* e = &enc;
    src.forward = [e, batch, fronts](Tape<Real>& tape,
                                     const std::vector<const AgentState*>& states) {
        *batch = build_state_batch<Real>(states, e->schema, e->variant, e->banks);
        fronts->clear();
        return state_forward(tape, *e, *batch, fronts.get()).second;
    };
    return src;
}

struct ProbeItemMetrics {
    std::string item;
    RegressionMetrics metrics;
};

// Raw-unit predictions for every pair in the dataset, row-major [N, 15].
template <typename Real>
std::vector<std::array<double, kProbeTargets>> probe_predictions(
    EmbeddingSource<Real>& src, Connector<Real>& conn, Probe<Real>& probe,
    const std::vector<const AgentState*>& states, std::size_t chunk = 256) {
    std::vector<std::array<double, kProbeTargets>> preds;
    preds.reserve(states.size());
    for (std::size_t base = 0; base < states.size(); base += chunk) {
        const std::size_t n = std::min(chunk, states.size() - base);
        std::vector<const AgentState*> part(states.begin() + base, states.begin() + base + n);
        Tape<Real> tape;
        Tensor<Real>* E = src.forward(tape, part);
        ConnectorOut<Real> tokens = expand_connector(tape, conn, E);
        Tensor<Real>* out = probe_forward(tape, probe, tokens.concat);
        for (std::size_t r = 0; r < n; ++r) {
            std::array<double, kProbeTargets> row{};
            for (std::size_t c = 0; c < kProbeTargets; ++c) row[c] = double(out->at(r, c));
            preds.push_back(row);
        }
    }
    return preds;
}

namespace detail {

// Denormalizes one probe output back to raw units by its schema range.
inline double probe_raw(const StateSchema& schema, const char* item, double v) {
    const SchemaItem& it = schema.item(item);
    return v * (it.hi - it.lo) + it.lo;
}

}  // namespace detail

// Per-item held-out regression table in raw units. Position folds x/y/z into
// one Euclidean error; direction is decoded with atan2 before the angular
// error; everything else is a plain absolute difference.
template <typename Real>
std::vector<ProbeItemMetrics> eval_probe(EmbeddingSource<Real>& src, Connector<Real>& conn,
                                         Probe<Real>& probe, const PairDataset& test,
                                         const StateSchema& schema) {
    if (test.empty()) throw std::invalid_argument("eval_probe: empty split");
    std::vector<const AgentState*> states;
    for (const auto& p : test) states.push_back(&p.state);
    const auto preds = probe_predictions(src, conn, probe, states);

    const std::size_t n = states.size();
    std::vector<double> zeros(n, 0.0);
    std::vector<ProbeItemMetrics> table;
    auto add_scalar = [&](const std::string& label, const char* item, auto truth_of,
                          std::size_t col) {
        std::vector<double> p(n), t(n);
        for (std::size_t r = 0; r < n; ++r) {
            p[r] = detail::probe_raw(schema, item, preds[r][col]);
            t[r] = truth_of(*states[r]);
        }
        table.push_back({label, regression_metrics(p, t)});
    };
    add_scalar("hp", "self_hp", [](const AgentState& s) { return double(s.self.hp); }, 0);
    {
        std::vector<double> err(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double dx = detail::probe_raw(schema, "self_x", preds[r][1]) - states[r]->self.x;
            const double dy = detail::probe_raw(schema, "self_y", preds[r][2]) - states[r]->self.y;
            const double dz = detail::probe_raw(schema, "self_z", preds[r][3]) - states[r]->self.z;
            err[r] = std::sqrt(dx * dx + dy * dy + dz * dz);
        }
        table.push_back({"position", regression_metrics(err, zeros)});
    }
    {
        std::vector<double> err(n);
        for (std::size_t r = 0; r < n; ++r) {
            double deg = std::atan2(preds[r][4], preds[r][5]) * 180.0 / std::numbers::pi;
            if (deg < 0) deg += 360.0;
            err[r] = angular_error(deg, states[r]->self.direction);
        }
        table.push_back({"direction", regression_metrics(err, zeros)});
    }
    add_scalar("speed", "self_speed", [](const AgentState& s) { return s.self.speed; }, 6);
    std::size_t col = 7;
    for (const char* base : {"enemy1", "enemy2", "teammate1", "teammate2"}) {
        const std::string b(base);
        for (const char* suffix : {"_hp", "_distance"}) {
            const std::string item = b + suffix;
            const SchemaItem& it = schema.item(item);
            std::vector<double> p(n), t(n);
            for (std::size_t r = 0; r < n; ++r) {
                p[r] = detail::probe_raw(schema, item.c_str(), preds[r][col]);
                t[r] = raw_item_value(*states[r], it);
            }
            table.push_back({item, regression_metrics(p, t)});
            ++col;
        }
    }
    return table;
}

struct ProbeConfig {
    int batch_size = 64;
    double lr = 1e-3;
    double lr_stage2 = 1e-4;
    double weight_decay = 0.0;
    int epochs_stage1 = 2;
    int epochs_stage2 = 0;
    int eval_interval = 50;
    std::uint64_t seed = 1;
    std::size_t loss_samples = 512;  // fixed training subset for checkpoint losses

    void validate() const {
        if (batch_size < 1) throw std::invalid_argument("invalid probe config: batch_size");
        if (lr <= 0 || lr_stage2 <= 0) throw std::invalid_argument("invalid probe config: lr");
        if (weight_decay < 0) throw std::invalid_argument("invalid probe config: weight_decay");
        if (epochs_stage1 < 0 || epochs_stage2 < 0)
            throw std::invalid_argument("invalid probe config: epochs");
        if (eval_interval < 1) throw std::invalid_argument("invalid probe config: eval_interval");
        if (loss_samples < 1) throw std::invalid_argument("invalid probe config: loss_samples");
    }
};

template <typename Real>
struct ProbeResult {
    Connector<Real> connector;
    Probe<Real> probe;
    // MSE on the fixed training subset at every checkpoint, one list per stage.
    std::vector<std::vector<double>> checkpoint_losses;
    std::vector<ProbeItemMetrics> stage1_metrics;
    std::vector<ProbeItemMetrics> held_out;
};

// Two-stage probe training: stage 1 fits connector+probe on frozen source
// embeddings; stage 2 (when enabled) additionally unfreezes the source at its
// own learning rate. Loss is MSE on normalized targets.
template <typename Real>
ProbeResult<Real> train_probe(EmbeddingSource<Real>& src, const PairDataset& train,
                              const PairDataset& test, const StateSchema& schema,
                              const ProbeConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("train_probe: empty train split");
    if (test.empty()) throw std::invalid_argument("train_probe: empty test split");
    if (static_cast<std::size_t>(cfg.batch_size) > train.size())
        throw std::invalid_argument("train_probe: batch size exceeds dataset size");

    ProbeResult<Real> result;
    result.connector = make_connector<Real>(cfg.seed);
    result.probe = make_probe<Real>(cfg.seed);

    std::vector<std::array<double, kProbeTargets>> targets(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        targets[i] = probe_target_vector(train[i].state, schema);

    // Fixed subset for the checkpoint losses, drawn once.
    std::vector<std::size_t> loss_idx(train.size());
    for (std::size_t i = 0; i < loss_idx.size(); ++i) loss_idx[i] = i;
    Rng loss_rng = Rng::derive(cfg.seed, "probe.loss");
    shuffle(loss_idx, loss_rng);
    loss_idx.resize(std::min(cfg.loss_samples, loss_idx.size()));

    auto batch_loss = [&](const std::vector<std::size_t>& idx, bool backward,
                          AdamW<Real>* opt) -> double {
        std::vector<const AgentState*> states;
        std::vector<Real> flat;
        flat.reserve(idx.size() * kProbeTargets);
        for (std::size_t i : idx) {
            states.push_back(&train[i].state);
            for (double v : targets[i]) flat.push_back(Real(v));
        }
        Tape<Real> tape;
        Tensor<Real>* E = src.forward(tape, states);
        ConnectorOut<Real> tokens = expand_connector(tape, result.connector, E);
        Tensor<Real>* out = probe_forward(tape, result.probe, tokens.concat);
        Tensor<Real>* loss = mse_loss(tape, out, std::move(flat));
        const double value = double(loss->data[0]);
        if (!std::isfinite(value)) throw std::runtime_error("probe training diverged: non-finite loss");
        if (backward) {
            tape.backward(loss);
            opt->step();
        }
        return value;
    };

    for (int stage = 1; stage <= 2; ++stage) {
        const int epochs = stage == 1 ? cfg.epochs_stage1 : cfg.epochs_stage2;
        if (stage == 2 && epochs == 0) break;
        std::vector<Tensor<Real>*> params = result.connector.params.all();
        for (auto* t : result.probe.params.all()) params.push_back(t);
        if (stage == 2)
            for (auto* t : src.trainable) params.push_back(t);
        AdamWConfig ocfg;
        ocfg.lr = stage == 1 ? cfg.lr : cfg.lr_stage2;
        ocfg.weight_decay = cfg.weight_decay;
        AdamW<Real> opt(params, ocfg);

        std::vector<double> checkpoints;
        checkpoints.push_back(batch_loss(loss_idx, false, nullptr));
        long step = 0;
        for (int epoch = 0; epoch < epochs; ++epoch) {
            std::vector<std::size_t> order(train.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            Rng rng = Rng::derive(cfg.seed, "probe.shuffle.s" + std::to_string(stage) + "." +
                                                std::to_string(epoch));
            shuffle(order, rng);
            for (std::size_t base = 0; base < order.size();
                 base += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t n =
                    std::min<std::size_t>(cfg.batch_size, order.size() - base);
                std::vector<std::size_t> idx(order.begin() + base, order.begin() + base + n);
                batch_loss(idx, true, &opt);
                ++step;
                if (step % cfg.eval_interval == 0)
                    checkpoints.push_back(batch_loss(loss_idx, false, nullptr));
            }
        }
        if (step % cfg.eval_interval != 0)
            checkpoints.push_back(batch_loss(loss_idx, false, nullptr));
        result.checkpoint_losses.push_back(std::move(checkpoints));
        if (stage == 1)
            result.stage1_metrics =
                eval_probe(src, result.connector, result.probe, test, schema);
    }
    result.held_out = eval_probe(src, result.connector, result.probe, test, schema);
    return result;
}

template <typename Real>
ProbeResult<Real> train_probe(StateEncoder<Real>& enc, const PairDataset& train,
                              const PairDataset& test, const ProbeConfig& cfg) {
    EmbeddingSource<Real> src = encoder_source(enc);
    return train_probe(src, train, test, enc.schema, cfg);
}

inline void write_probe_report(std::ostream& out, const std::string& variant,
                               const std::vector<ProbeItemMetrics>& table,
                               bool with_header = true) {
    if (with_header) out << "variant,item,medae,mae,rmse\n";
    out.precision(10);
    for (const auto& row : table)
        out << variant << ',' << row.item << ',' << row.metrics.medae << ',' << row.metrics.mae
            << ',' << row.metrics.rmse << "\n";
}

}  // namespace clsp
