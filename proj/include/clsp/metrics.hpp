#pragma once
// Retrieval metrics (R@K, per-item top-1 MAE), regression metrics, and
// embedding export. Rankings order by descending dot product; ties break
// by ascending reference index so results are platform-deterministic.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "clsp/dataset.hpp"
#include "clsp/encoders.hpp"
#include "clsp/state.hpp"
#include "clsp/tensor.hpp"

namespace clsp {

// Row-major [n, kEmbedWidth] embedding block.
struct EmbeddingMatrix {
    std::size_t n = 0;
    std::vector<float> data;

    const float* row(std::size_t i) const { return &data[i * kEmbedWidth]; }
};

// Encodes states in fixed-size chunks with no gradient bookkeeping kept.
template <typename Real>
EmbeddingMatrix embed_states(StateEncoder<Real>& enc, const std::vector<const AgentState*>& states,
                             std::size_t chunk = 256) {
    EmbeddingMatrix out;
    out.n = states.size();
    out.data.resize(states.size() * kEmbedWidth);
    std::vector<Tensor<Real>> fronts;
    for (std::size_t base = 0; base < states.size(); base += chunk) {
        const std::size_t n = std::min(chunk, states.size() - base);
        std::vector<const AgentState*> part(states.begin() + base, states.begin() + base + n);
        Tape<Real> tape;
        StateBatch<Real> batch = build_state_batch<Real>(part, enc.schema, enc.variant, enc.banks);
        auto [trunk, embed] = state_forward(tape, enc, batch, &fronts);
        for (std::size_t i = 0; i < n * kEmbedWidth; ++i)
            out.data[base * kEmbedWidth + i] = static_cast<float>(embed->data[i]);
    }
    return out;
}

template <typename Real>
EmbeddingMatrix embed_texts(TextEncoder<Real>& enc, const std::vector<const std::string*>& texts,
                            std::size_t chunk = 256) {
    EmbeddingMatrix out;
    out.n = texts.size();
    out.data.resize(texts.size() * kEmbedWidth);
    for (std::size_t base = 0; base < texts.size(); base += chunk) {
        const std::size_t n = std::min(chunk, texts.size() - base);
        std::vector<const std::string*> part(texts.begin() + base, texts.begin() + base + n);
        Tape<Real> tape;
        Tensor<Real> counts = build_text_batch<Real>(part, enc.vocab);
        Tensor<Real>* embed = text_forward(tape, enc, counts);
        for (std::size_t i = 0; i < n * kEmbedWidth; ++i)
            out.data[base * kEmbedWidth + i] = static_cast<float>(embed->data[i]);
    }
    return out;
}

namespace detail {

inline void check_retrieval_inputs(const EmbeddingMatrix& queries, const EmbeddingMatrix& refs,
                                   const std::vector<std::size_t>& pairing) {
    if (queries.n == 0) throw std::invalid_argument("retrieval: no queries");
    if (refs.n == 0) throw std::invalid_argument("retrieval: no references");
    if (pairing.size() != queries.n)
        throw std::invalid_argument("retrieval: pairing size does not match query count");
    for (std::size_t p : pairing)
        if (p >= refs.n) throw std::invalid_argument("retrieval: pairing index out of range");
}

inline double dot128(const float* a, const float* b) {
    double s = 0;
    for (std::size_t j = 0; j < kEmbedWidth; ++j) s += double(a[j]) * double(b[j]);
    return s;
}

// Rank of the paired reference (1-based) under descending similarity with
// ties broken by ascending reference index.
inline std::size_t pair_rank(const EmbeddingMatrix& queries, const EmbeddingMatrix& refs,
                             std::size_t q, std::size_t pair) {
    const float* qa = queries.row(q);
    const double pair_sim = dot128(qa, refs.row(pair));
    std::size_t ahead = 0;
    for (std::size_t r = 0; r < refs.n; ++r) {
        if (r == pair) continue;
        const double sim = dot128(qa, refs.row(r));
        if (sim > pair_sim || (sim == pair_sim && r < pair)) ++ahead;
    }
    return ahead + 1;
}

// Index of the top-1 reference under the same ordering.
inline std::size_t top1_index(const EmbeddingMatrix& queries, const EmbeddingMatrix& refs,
                              std::size_t q) {
    const float* qa = queries.row(q);
    std::size_t best = 0;
    double best_sim = dot128(qa, refs.row(0));
    for (std::size_t r = 1; r < refs.n; ++r) {
        const double sim = dot128(qa, refs.row(r));
        if (sim > best_sim) {
            best_sim = sim;
            best = r;
        }
    }
    return best;
}

}  // namespace detail

inline double recall_at_k(const EmbeddingMatrix& queries, const EmbeddingMatrix& refs,
                          const std::vector<std::size_t>& pairing, std::size_t k) {
    detail::check_retrieval_inputs(queries, refs, pairing);
    if (k < 1) throw std::invalid_argument("recall_at_k: k must be at least 1");
    if (k > refs.n) throw std::invalid_argument("recall_at_k: k exceeds reference count");
    std::vector<int> hits(queries.n, 0);
#pragma omp parallel for schedule(static)
    for (long long q = 0; q < static_cast<long long>(queries.n); ++q)
        hits[q] = detail::pair_rank(queries, refs, q, pairing[q]) <= k ? 1 : 0;
    std::size_t total = 0;
    for (int h : hits) total += h;
    return double(total) / double(queries.n);
}

enum class ErrorKind { kAbsolute, kEuclidean, kAngular };

// One evaluated item: groups of values extracted from a state. The error
// between two states is the mean over groups of the group error.
struct ItemExtractor {
    std::string name;
    ErrorKind kind = ErrorKind::kAbsolute;
    std::function<std::vector<std::vector<double>>(const AgentState&)> extract;
};

// Wrapped angular difference in degrees, always in [0, 180].
inline double angular_error(double a, double b) {
    double d = std::fmod(std::fabs(a - b), 360.0);
    if (d > 180.0) d = 360.0 - d;
    return d;
}

inline double item_error(const ItemExtractor& ex, const AgentState& retrieved,
                         const AgentState& truth) {
    const auto ga = ex.extract(retrieved);
    const auto gb = ex.extract(truth);
    if (ga.size() != gb.size() || ga.empty())
        throw std::invalid_argument("item_error: extractor group mismatch for " + ex.name);
    double total = 0;
    for (std::size_t g = 0; g < ga.size(); ++g) {
        if (ga[g].size() != gb[g].size())
            throw std::invalid_argument("item_error: group width mismatch for " + ex.name);
        switch (ex.kind) {
            case ErrorKind::kAbsolute:
                total += std::fabs(ga[g][0] - gb[g][0]);
                break;
            case ErrorKind::kEuclidean: {
                double s = 0;
                for (std::size_t j = 0; j < ga[g].size(); ++j) {
                    const double d = ga[g][j] - gb[g][j];
                    s += d * d;
                }
                total += std::sqrt(s);
                break;
            }
            case ErrorKind::kAngular:
                total += angular_error(ga[g][0], gb[g][0]);
                break;
        }
    }
    return total / double(ga.size());
}

// The Table-1 item set. Slot items average over both slots; absent slots
// contribute their zeroed raw values.
inline std::vector<ItemExtractor> default_extractors() {
    std::vector<ItemExtractor> out;
    auto single = [](double v) { return std::vector<std::vector<double>>{{v}}; };
    out.push_back({"my_hp", ErrorKind::kAbsolute,
                   [single](const AgentState& s) { return single(double(s.self.hp)); }});
    out.push_back({"my_position", ErrorKind::kEuclidean, [](const AgentState& s) {
                       return std::vector<std::vector<double>>{{s.self.x, s.self.y, s.self.z}};
                   }});
    out.push_back({"my_direction", ErrorKind::kAngular,
                   [single](const AgentState& s) { return single(s.self.direction); }});
    out.push_back({"my_speed", ErrorKind::kAbsolute,
                   [single](const AgentState& s) { return single(s.self.speed); }});
    auto slot_pair = [](const EntityBlock* slots, auto field) {
        std::vector<std::vector<double>> groups;
        for (int i = 0; i < 2; ++i) groups.push_back(field(slots[i]));
        return groups;
    };
    auto hp_of = [](const EntityBlock& e) { return std::vector<double>{double(e.hp)}; };
    auto pos_of = [](const EntityBlock& e) { return std::vector<double>{e.x, e.y, e.z}; };
    auto dist_of = [](const EntityBlock& e) { return std::vector<double>{e.distance}; };
    out.push_back({"enemy_hp", ErrorKind::kAbsolute, [slot_pair, hp_of](const AgentState& s) {
                       return slot_pair(s.enemies.data(), hp_of);
                   }});
    out.push_back({"enemy_position", ErrorKind::kEuclidean,
                   [slot_pair, pos_of](const AgentState& s) {
                       return slot_pair(s.enemies.data(), pos_of);
                   }});
    out.push_back({"enemy_distance", ErrorKind::kAbsolute,
                   [slot_pair, dist_of](const AgentState& s) {
                       return slot_pair(s.enemies.data(), dist_of);
                   }});
    out.push_back({"teammate_hp", ErrorKind::kAbsolute, [slot_pair, hp_of](const AgentState& s) {
                       return slot_pair(s.teammates.data(), hp_of);
                   }});
    out.push_back({"teammate_position", ErrorKind::kEuclidean,
                   [slot_pair, pos_of](const AgentState& s) {
                       return slot_pair(s.teammates.data(), pos_of);
                   }});
    out.push_back({"teammate_distance", ErrorKind::kAbsolute,
                   [slot_pair, dist_of](const AgentState& s) {
                       return slot_pair(s.teammates.data(), dist_of);
                   }});
    return out;
}

// Mean per-item error between each query's top-1 retrieved state and its
// true paired state.
inline std::vector<std::pair<std::string, double>> top1_mae(
    const EmbeddingMatrix& queries, const EmbeddingMatrix& refs,
    const std::vector<std::size_t>& pairing, const std::vector<const AgentState*>& ref_states,
    const std::vector<ItemExtractor>& extractors) {
    detail::check_retrieval_inputs(queries, refs, pairing);
    if (ref_states.size() != refs.n)
        throw std::invalid_argument("top1_mae: reference state count does not match embeddings");
    if (extractors.empty()) throw std::invalid_argument("top1_mae: empty extractor set");
    std::vector<std::size_t> top1(queries.n);
#pragma omp parallel for schedule(static)
    for (long long q = 0; q < static_cast<long long>(queries.n); ++q)
        top1[q] = detail::top1_index(queries, refs, q);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& ex : extractors) {
        double total = 0;
        for (std::size_t q = 0; q < queries.n; ++q)
            total += item_error(ex, *ref_states[top1[q]], *ref_states[pairing[q]]);
        out.emplace_back(ex.name, total / double(queries.n));
    }
    return out;
}

struct RegressionMetrics {
    double medae = 0;
    double mae = 0;
    double rmse = 0;
};

// Standard regression errors; the median is the lower middle for even
// counts so the value is always an observed error.
inline RegressionMetrics regression_metrics(const std::vector<double>& predictions,
                                            const std::vector<double>& targets) {
    if (predictions.size() != targets.size())
        throw std::invalid_argument("regression_metrics: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("regression_metrics: empty inputs");
    std::vector<double> abs_err(predictions.size());
    double sum_abs = 0, sum_sq = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        abs_err[i] = std::fabs(d);
        sum_abs += abs_err[i];
        sum_sq += d * d;
    }
    std::sort(abs_err.begin(), abs_err.end());
    RegressionMetrics m;
    m.medae = abs_err[(abs_err.size() - 1) / 2];
    m.mae = sum_abs / double(predictions.size());
    m.rmse = std::sqrt(sum_sq / double(predictions.size()));
    return m;
}

struct RetrievalReport {
    std::vector<std::pair<std::size_t, double>> r_at_k;
    std::vector<std::pair<std::string, double>> top1;
    std::size_t query_count = 0;
    std::size_t reference_count = 0;
};

inline RetrievalReport evaluate_retrieval(const EmbeddingMatrix& queries,
                                          const EmbeddingMatrix& refs,
                                          const std::vector<std::size_t>& pairing,
                                          const std::vector<const AgentState*>& ref_states,
                                          const std::vector<std::size_t>& ks) {
    RetrievalReport rep;
    rep.query_count = queries.n;
    rep.reference_count = refs.n;
    for (std::size_t k : ks) rep.r_at_k.emplace_back(k, recall_at_k(queries, refs, pairing, k));
    rep.top1 = top1_mae(queries, refs, pairing, ref_states, default_extractors());
    return rep;
}

inline nlohmann::json report_to_json(const RetrievalReport& rep, const nlohmann::json& config,
                                     std::uint64_t seed) {
    nlohmann::json j;
    j["query_count"] = rep.query_count;
    j["reference_count"] = rep.reference_count;
    for (const auto& [k, v] : rep.r_at_k) j["r_at_" + std::to_string(k)] = v;
    nlohmann::json mae;
    for (const auto& [name, v] : rep.top1) mae[name] = v;
    j["top1_mae"] = mae;
    j["seed"] = seed;
    j["config"] = config;
    return j;
}

// CSV with one row per state: 128 embedding columns plus ground-truth item
// columns for downstream coloring. "%.9g" keeps float round-trips exact.
// A nonempty preamble is written first as a "# " comment line.
template <typename Real>
void export_embeddings(StateEncoder<Real>& enc, const PairDataset& data,
                       const std::string& path, const std::string& preamble = "") {
    if (data.empty()) throw std::invalid_argument("export_embeddings: empty dataset");
    std::vector<const AgentState*> states;
    for (const auto& p : data) states.push_back(&p.state);
    const EmbeddingMatrix em = embed_states(enc, states);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write embeddings " + path);
    if (!preamble.empty()) out << "# " << preamble << '\n';
    out << "index";
    for (std::size_t j = 0; j < kEmbedWidth; ++j) out << ",e" << j;
    out << ",hp,x,y,z,direction,speed,alive";
    for (const char* kind : {"enemy1", "enemy2", "teammate1", "teammate2"})
        out << ',' << kind << "_present," << kind << "_hp," << kind << "_distance";
    out << '\n';
    char buf[128];
    for (std::size_t i = 0; i < em.n; ++i) {
        out << i;
        for (std::size_t j = 0; j < kEmbedWidth; ++j) {
            std::snprintf(buf, sizeof(buf), ",%.9g", double(em.row(i)[j]));
            out << buf;
        }
        const AgentState& s = *states[i];
        std::snprintf(buf, sizeof(buf), ",%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d", s.self.hp, s.self.x,
                      s.self.y, s.self.z, s.self.direction, s.self.speed,
                      static_cast<int>(s.self.alive));
        out << buf;
        const EntityBlock* slots[4] = {&s.enemies[0], &s.enemies[1], &s.teammates[0],
                                       &s.teammates[1]};
        for (const EntityBlock* e : slots) {
            std::snprintf(buf, sizeof(buf), ",%d,%d,%.9g", e->present ? 1 : 0, e->hp, e->distance);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("cannot write embeddings " + path);
}

}  // namespace clsp
