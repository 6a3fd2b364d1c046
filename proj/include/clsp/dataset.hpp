#pragma once
// State-text pair datasets: JSON Lines serialization, streaming reads with
// per-line validation, deterministic generation and splitting.

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clsp/rng.hpp"
#include "clsp/schema.hpp"
#include "clsp/state.hpp"
#include "clsp/text.hpp"

namespace clsp {

struct StateTextPair {
    AgentState state;
    std::string text;
};
using PairDataset = std::vector<StateTextPair>;

inline nlohmann::json entity_to_json(const EntityBlock& e) {
    return {{"present", e.present}, {"hp", e.hp},       {"x", e.x},
            {"y", e.y},             {"z", e.z},         {"distance", e.distance}};
}

inline nlohmann::json state_to_json(const AgentState& st) {
    nlohmann::json j;
    j["self"] = {{"hp", st.self.hp},       {"x", st.self.x},
                 {"y", st.self.y},         {"z", st.self.z},
                 {"direction", st.self.direction}, {"speed", st.self.speed},
                 {"alive", alive_name(st.self.alive)}};
    j["enemies"] = {entity_to_json(st.enemies[0]), entity_to_json(st.enemies[1])};
    j["teammates"] = {entity_to_json(st.teammates[0]), entity_to_json(st.teammates[1])};
    return j;
}

namespace detail {

template <typename T>
T require_field(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field)) throw std::runtime_error("missing field \"" + field + "\"");
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::runtime_error("field \"" + field + "\" has the wrong type");
    }
}

inline EntityBlock entity_from_json(const nlohmann::json& j) {
    EntityBlock e;
    e.present = require_field<bool>(j, "present");
    e.hp = require_field<int>(j, "hp");
    e.x = require_field<double>(j, "x");
    e.y = require_field<double>(j, "y");
    e.z = require_field<double>(j, "z");
    e.distance = require_field<double>(j, "distance");
    return e;
}

}  // namespace detail

inline AgentState state_from_json(const nlohmann::json& j) {
    using detail::require_field;
    AgentState st;
    const nlohmann::json self = require_field<nlohmann::json>(j, "self");
    st.self.hp = require_field<int>(self, "hp");
    st.self.x = require_field<double>(self, "x");
    st.self.y = require_field<double>(self, "y");
    st.self.z = require_field<double>(self, "z");
    st.self.direction = require_field<double>(self, "direction");
    st.self.speed = require_field<double>(self, "speed");
    const std::string alive = require_field<std::string>(self, "alive");
    if (alive == "normal")
        st.self.alive = Alive::kNormal;
    else if (alive == "down")
        st.self.alive = Alive::kDown;
    else if (alive == "dead")
        st.self.alive = Alive::kDead;
    else
        throw std::runtime_error("field \"alive\" has an unknown value: " + alive);
    const auto enemies = require_field<std::vector<nlohmann::json>>(j, "enemies");
    const auto teammates = require_field<std::vector<nlohmann::json>>(j, "teammates");
    if (enemies.size() != 2 || teammates.size() != 2)
        throw std::runtime_error("field \"enemies\"/\"teammates\" must have exactly 2 slots");
    for (int i = 0; i < 2; ++i) {
        st.enemies[i] = detail::entity_from_json(enemies[i]);
        st.teammates[i] = detail::entity_from_json(teammates[i]);
    }
    return st;
}

inline void write_dataset(const std::string& path, const PairDataset& pairs) {
    if (pairs.empty()) throw std::invalid_argument("write_dataset: dataset is empty");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
    for (const auto& p : pairs) {
        nlohmann::json j;
        j["state"] = state_to_json(p.state);
        j["text"] = p.text;
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write_dataset: write failed for " + path);
}

// Streams line by line; errors name the 1-based line number and field.
// Validates state invariants and that the text regenerates from the state.
inline PairDataset read_dataset(const std::string& path, const StateSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
    PairDataset pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(where + ": malformed JSON: " + e.what());
        }
        try {
            StateTextPair p;
            p.state = state_from_json(detail::require_field<nlohmann::json>(j, "state"));
            p.text = detail::require_field<std::string>(j, "text");
            validate_state(p.state);
            if (p.text != render_text(p.state, schema))
                throw std::runtime_error("field \"text\" does not match the rendered state");
            pairs.push_back(std::move(p));
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
    }
    return pairs;
}

inline PairDataset generate_dataset(std::size_t n, std::uint64_t seed, const StateSchema& schema,
                                    const GenConfig& cfg = {}) {
    Rng rng = Rng::derive(seed, "gen-data");
    PairDataset pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        StateTextPair p;
        p.state = sample_state(rng, cfg);
        p.text = render_text(p.state, schema);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

// Disjoint, exhaustive, seed-deterministic split; |test| = round(N * frac).
inline std::pair<PairDataset, PairDataset> split_pairs(const PairDataset& pairs,
                                                       double test_fraction, std::uint64_t seed) {
    if (pairs.size() < 2) throw std::invalid_argument("split_pairs: need at least 2 pairs");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split_pairs: fraction must be in (0,1)");
    const std::size_t n_test =
        static_cast<std::size_t>(std::lround(static_cast<double>(pairs.size()) * test_fraction));
    std::vector<std::size_t> idx(pairs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng = Rng::derive(seed, "split");
    shuffle(idx, rng);
    std::vector<bool> is_test(pairs.size(), false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[idx[i]] = true;
    PairDataset train, test;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        (is_test[i] ? test : train).push_back(pairs[i]);
    return {std::move(train), std::move(test)};
}

}  // namespace clsp
