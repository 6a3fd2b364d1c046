#pragma once
// State and text encoders mapping into the shared 128-wide embedding space.
// State: [front-end MLPs (RFFM only)] -> input linear -> GELU -> 3 residual
// blocks -> 256 trunk features -> projection -> L2 norm.
// Text: token counts -> mean-pooled embedding -> 2-layer MLP -> projection.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clsp/encoding.hpp"
#include "clsp/ops.hpp"
#include "clsp/rng.hpp"
#include "clsp/schema.hpp"
#include "clsp/state.hpp"
#include "clsp/tensor.hpp"
#include "clsp/text.hpp"

namespace clsp {

inline constexpr std::size_t kTrunkWidth = 256;
inline constexpr std::size_t kEmbedWidth = 128;
inline constexpr std::size_t kTokenEmbedWidth = 64;

// Ordered, named parameter tensors. Names are the checkpoint identity.
template <typename Real>
struct ParamSet {
    std::vector<std::pair<std::string, Tensor<Real>>> entries;

    Tensor<Real>* add(const std::string& name, std::vector<std::size_t> shape) {
        entries.emplace_back(name, Tensor<Real>(std::move(shape), true));
        return &entries.back().second;
    }
    Tensor<Real>* find(const std::string& name) {
        for (auto& [n, t] : entries)
            if (n == name) return &t;
        throw std::invalid_argument("no parameter named " + name);
    }
    const Tensor<Real>* find(const std::string& name) const {
        for (const auto& [n, t] : entries)
            if (n == name) return &t;
        throw std::invalid_argument("no parameter named " + name);
    }
    std::vector<Tensor<Real>*> all() {
        std::vector<Tensor<Real>*> out;
        out.reserve(entries.size());
        for (auto& [n, t] : entries) out.push_back(&t);
        return out;
    }
    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& [name, t] : entries) n += t.numel();
        return n;
    }
};

namespace detail {

// Gaussian fan-in init; the stream depends only on (seed, tensor name).
template <typename Real>
void init_normal(Tensor<Real>& t, std::uint64_t seed, const std::string& name, double scale) {
    Rng rng = Rng::derive(seed, name);
    for (auto& v : t.data) v = static_cast<Real>(rng.normal(0.0, scale));
}

}  // namespace detail

template <typename Real>
struct StateEncoder {
    Variant variant = Variant::kRff;
    StateSchema schema;
    BankSet banks;
    ParamSet<Real> params;
    std::size_t input_width = 0;
};

template <typename Real>
StateEncoder<Real> make_state_encoder(Variant variant, const StateSchema& schema,
                                      std::uint64_t seed) {
    StateEncoder<Real> enc;
    enc.variant = variant;
    enc.schema = schema;
    enc.banks = make_bank_set(schema, variant, seed);
    enc.input_width = schema.flattened_width(variant);
    auto& p = enc.params;
    auto gauss = [&](const std::string& name, std::vector<std::size_t> shape, double scale) {
        Tensor<Real>* t = p.add(name, std::move(shape));
        detail::init_normal(*t, seed, name, scale);
    };
    auto zeros = [&](const std::string& name, std::vector<std::size_t> shape) {
        p.add(name, std::move(shape));
    };
    if (variant == Variant::kRffm) {
        // Two-layer residual front per scalar item. The second layer starts
        // at zero, so each front is exactly the identity at initialization.
        for (const auto& it : schema.items) {
            if (it.kind != ItemKind::kScalar) continue;
            const std::size_t w = it.width(variant);
            const std::string base = "front." + it.name + ".";
            gauss(base + "w1", {w, w}, 1.0 / std::sqrt(double(w)));
            zeros(base + "b1", {w});
            zeros(base + "w2", {w, w});
            zeros(base + "b2", {w});
        }
    }
    gauss("trunk.in.w", {enc.input_width, kTrunkWidth}, 1.0 / std::sqrt(double(enc.input_width)));
    zeros("trunk.in.b", {kTrunkWidth});
    for (int r = 1; r <= 3; ++r) {
        const std::string base = "trunk.rb" + std::to_string(r) + ".";
        gauss(base + "w1", {kTrunkWidth, kTrunkWidth}, 1.0 / std::sqrt(double(kTrunkWidth)));
        zeros(base + "b1", {kTrunkWidth});
        gauss(base + "w2", {kTrunkWidth, kTrunkWidth}, 1.0 / std::sqrt(double(kTrunkWidth)));
        zeros(base + "b2", {kTrunkWidth});
    }
    gauss("proj.w", {kTrunkWidth, kEmbedWidth}, 1.0 / std::sqrt(double(kTrunkWidth)));
    zeros("proj.b", {kEmbedWidth});
    return enc;
}

// Flattened feature rows for a batch of states, plus per-item column spans
// for the RFFM front ends.
template <typename Real>
struct StateBatch {
    Tensor<Real> full;  // [B, W], no gradient
    std::vector<std::pair<std::size_t, std::size_t>> spans;
};

template <typename Real>
StateBatch<Real> build_state_batch(const std::vector<const AgentState*>& states,
                                   const StateSchema& schema, Variant variant,
                                   const BankSet& banks) {
    StateBatch<Real> batch;
    const std::size_t w = schema.flattened_width(variant);
    batch.full = Tensor<Real>({states.size(), w});
    for (std::size_t r = 0; r < states.size(); ++r) {
        const auto flat = flatten_state(*states[r], schema, variant, banks);
        for (std::size_t j = 0; j < w; ++j) batch.full.data[r * w + j] = static_cast<Real>(flat[j]);
    }
    batch.spans = item_offsets(schema, variant);
    return batch;
}

// Copies one item's columns out of the batch matrix as a tape input.
template <typename Real>
Tensor<Real> slice_cols_tensor(const Tensor<Real>& x, std::size_t off, std::size_t width) {
    Tensor<Real> out({x.rows(), width});
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < width; ++j) out.data[r * width + j] = x.data[r * x.cols() + off + j];
    return out;
}

// Forward pass to (trunk features [B,256], embedding [B,128] unit rows).
// For RFFM, `front_inputs` must outlive the tape: it owns the per-item
// column slices fed to the front MLPs.
template <typename Real>
std::pair<Tensor<Real>*, Tensor<Real>*> state_forward(Tape<Real>& tape, StateEncoder<Real>& enc,
                                                      StateBatch<Real>& batch,
                                                      std::vector<Tensor<Real>>* front_inputs) {
    if (batch.full.cols() != enc.input_width)
        throw std::invalid_argument("state_forward: input width " + batch.full.shape_str() +
                                    " does not match encoder width " +
                                    std::to_string(enc.input_width));
    auto& p = enc.params;
    Tensor<Real>* x = nullptr;
    if (enc.variant == Variant::kRffm) {
        if (front_inputs == nullptr)
            throw std::invalid_argument("state_forward: RFFM needs front input storage");
        front_inputs->clear();
        front_inputs->reserve(enc.schema.items.size());
        // Materialize slices first; pointers must stay stable while ops run.
        for (std::size_t i = 0; i < enc.schema.items.size(); ++i) {
            const auto [off, wid] = batch.spans[i];
            front_inputs->push_back(slice_cols_tensor(batch.full, off, wid));
        }
        std::vector<Tensor<Real>*> parts;
        for (std::size_t i = 0; i < enc.schema.items.size(); ++i) {
            const auto& it = enc.schema.items[i];
            Tensor<Real>* g = &(*front_inputs)[i];
            if (it.kind == ItemKind::kScalar) {
                const std::string base = "front." + it.name + ".";
                Tensor<Real>* h = linear(tape, g, p.find(base + "w1"), p.find(base + "b1"));
                h = gelu(tape, h);
                h = linear(tape, h, p.find(base + "w2"), p.find(base + "b2"));
                parts.push_back(add(tape, g, h));
            } else {
                parts.push_back(g);
            }
        }
        x = concat_cols(tape, parts);
    } else {
        x = tape.make(batch.full.shape);
        x->data = batch.full.data;
        x->requires_grad = false;
    }
    Tensor<Real>* h = gelu(tape, linear(tape, x, p.find("trunk.in.w"), p.find("trunk.in.b")));
    for (int r = 1; r <= 3; ++r) {
        const std::string base = "trunk.rb" + std::to_string(r) + ".";
        Tensor<Real>* inner = linear(tape, h, p.find(base + "w1"), p.find(base + "b1"));
        inner = gelu(tape, inner);
        inner = linear(tape, inner, p.find(base + "w2"), p.find(base + "b2"));
        h = add(tape, h, inner);
    }
    Tensor<Real>* proj = linear(tape, h, p.find("proj.w"), p.find("proj.b"));
    Tensor<Real>* embed = l2_normalize_rows(tape, proj);
    return {h, embed};
}

// Single-state embedding with frozen parameters.
template <typename Real>
std::vector<Real> encode_state(StateEncoder<Real>& enc, const AgentState& state) {
    Tape<Real> tape;
    StateBatch<Real> batch = build_state_batch<Real>({&state}, enc.schema, enc.variant, enc.banks);
    std::vector<Tensor<Real>> fronts;
    auto [trunk, embed] = state_forward(tape, enc, batch, &fronts);
    return embed->data;
}

template <typename Real>
struct TextEncoder {
    Vocabulary vocab;
    ParamSet<Real> params;
};

template <typename Real>
TextEncoder<Real> make_text_encoder(std::uint64_t seed, const Vocabulary& vocab = Vocabulary()) {
    TextEncoder<Real> enc;
    enc.vocab = vocab;
    auto& p = enc.params;
    auto gauss = [&](const std::string& name, std::vector<std::size_t> shape, double scale) {
        Tensor<Real>* t = p.add(name, std::move(shape));
        detail::init_normal(*t, seed, "text." + name, scale);
    };
    auto zeros = [&](const std::string& name, std::vector<std::size_t> shape) {
        p.add(name, std::move(shape));
    };
    gauss("emb", {vocab.size(), kTokenEmbedWidth}, 0.05);
    gauss("fc1.w", {kTokenEmbedWidth, kTrunkWidth}, 1.0 / std::sqrt(double(kTokenEmbedWidth)));
    zeros("fc1.b", {kTrunkWidth});
    gauss("fc2.w", {kTrunkWidth, kTrunkWidth}, 1.0 / std::sqrt(double(kTrunkWidth)));
    zeros("fc2.b", {kTrunkWidth});
    gauss("proj.w", {kTrunkWidth, kEmbedWidth}, 1.0 / std::sqrt(double(kTrunkWidth)));
    zeros("proj.b", {kEmbedWidth});
    return enc;
}

// Mean-pooling weights for a batch of texts: counts scaled by 1/length.
template <typename Real>
Tensor<Real> build_text_batch(const std::vector<const std::string*>& texts,
                              const Vocabulary& vocab) {
    Tensor<Real> counts({texts.size(), vocab.size()});
    for (std::size_t r = 0; r < texts.size(); ++r) {
        const auto row = vocab.count_vector<Real>(*texts[r]);
        for (std::size_t j = 0; j < row.size(); ++j) counts.data[r * vocab.size() + j] = row[j];
    }
    return counts;
}

// Forward pass to unit-norm text embeddings [B,128].
template <typename Real>
Tensor<Real>* text_forward(Tape<Real>& tape, TextEncoder<Real>& enc, Tensor<Real>& counts) {
    auto& p = enc.params;
    if (counts.cols() != enc.vocab.size())
        throw std::invalid_argument("text_forward: count width " + counts.shape_str() +
                                    " does not match vocabulary size " +
                                    std::to_string(enc.vocab.size()));
    Tensor<Real>* pooled = matmul(tape, &counts, p.find("emb"));
    Tensor<Real>* h = gelu(tape, linear(tape, pooled, p.find("fc1.w"), p.find("fc1.b")));
    h = gelu(tape, linear(tape, h, p.find("fc2.w"), p.find("fc2.b")));
    Tensor<Real>* proj = linear(tape, h, p.find("proj.w"), p.find("proj.b"));
    return l2_normalize_rows(tape, proj);
}

template <typename Real>
std::vector<Real> encode_text(TextEncoder<Real>& enc, const std::string& text) {
    Tape<Real> tape;
    Tensor<Real> counts = build_text_batch<Real>({&text}, enc.vocab);
    return text_forward(tape, enc, counts)->data;
}

// Classification heads over the trunk features, one per schema item.
template <typename Real>
struct PretrainHeads {
    ParamSet<Real> params;
};

template <typename Real>
PretrainHeads<Real> make_pretrain_heads(const StateSchema& schema, std::uint64_t seed) {
    PretrainHeads<Real> heads;
    for (const auto& it : schema.items) {
        const std::string base = "head." + it.name + ".";
        Tensor<Real>* w = heads.params.add(base + "w", {kTrunkWidth, std::size_t(it.n_classes)});
        detail::init_normal(*w, seed, base + "w", 1.0 / std::sqrt(double(kTrunkWidth)));
        heads.params.add(base + "b", {std::size_t(it.n_classes)});
    }
    return heads;
}

}  // namespace clsp
