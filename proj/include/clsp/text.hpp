#pragma once
// Deterministic text rendering for agent states, the tokenizer, the closed
// vocabulary, and the parse-back oracle used to verify rendering.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "clsp/schema.hpp"
#include "clsp/state.hpp"

namespace clsp {

// Qualitative band words. Each list's index is the item's class bin (or the
// 4x4 map cell for regions), so descriptions expose every discretized item
// as whole words as well as digits.
inline const std::array<const char*, 16>& region_words() {
    static const std::array<const char*, 16> w = {
        "harbor", "plains", "ridge",  "forest", "quarry", "marsh", "dunes", "mesa",
        "canyon", "delta",  "bluff",  "grove",  "basin",  "knoll", "shore", "summit"};
    return w;
}
inline const std::array<const char*, 11>& hp_words() {
    static const std::array<const char*, 11> w = {"drained", "critical", "battered", "hurting",
                                                  "bruised", "halved",   "steady",   "sturdy",
                                                  "strong",  "fresh",    "pristine"};
    return w;
}
inline const std::array<const char*, 12>& direction_words() {
    static const std::array<const char*, 12> w = {
        "north", "northnortheast", "eastnortheast", "east",  "eastsoutheast", "southsoutheast",
        "south", "southsouthwest", "westsouthwest", "west",  "westnorthwest", "northnorthwest"};
    return w;
}
inline const std::array<const char*, 10>& speed_words() {
    static const std::array<const char*, 10> w = {"still",   "creeping", "strolling", "walking",
                                                  "jogging", "trotting", "running",   "rushing",
                                                  "sprinting", "flatout"};
    return w;
}
inline const std::array<const char*, 16>& distance_words() {
    static const std::array<const char*, 16> w = {
        "pointblank", "touching", "close",   "near",    "nearby",  "middling", "moderate", "far",
        "farther",    "distant",  "remote",  "faraway", "outlying", "fringe",  "horizon",  "beyond"};
    return w;
}
inline const std::array<const char*, 8>& altitude_words() {
    static const std::array<const char*, 8> w = {"sunken", "low",  "level", "raised",
                                                 "lifted", "high", "lofty", "peak"};
    return w;
}

inline int region_cell(double x, double y) {
    const int col = std::min(3, static_cast<int>(x / (map_side() / 4)));
    const int row = std::min(3, static_cast<int>(y / (map_side() / 4)));
    return row * 4 + col;
}

namespace detail {

inline long round_i(double v) { return std::lround(v); }

inline std::string fmt_speed(double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

inline std::string entity_sentence(const StateSchema& schema, const EntityBlock& e,
                                   const std::string& kind, int index) {
    if (!e.present) return "no " + kind + " " + std::to_string(index) + " visible.";
    const int dist_bin = schema.class_of(schema.item("enemy1_distance"), e.distance);
    const int z_bin = schema.class_of(schema.item("self_z"), e.z);
    std::string s = kind + " " + std::to_string(index) + " is " + distance_words()[dist_bin] +
                    " at " + std::to_string(round_i(e.distance)) + " meters, in the " +
                    region_words()[region_cell(e.x, e.y)] + " region at " +
                    std::to_string(round_i(e.x)) + ", " + std::to_string(round_i(e.y)) +
                    ", altitude " + std::to_string(round_i(e.z)) + ", " + altitude_words()[z_bin] +
                    ", hp " + std::to_string(e.hp) + ", " + hp_words()[e.hp / 10] + ".";
    return s;
}

}  // namespace detail

// Deterministic English description covering every schema item. Positions,
// distances, and altitude round to integer meters; direction to integer
// degrees; speed to one decimal.
inline std::string render_text(const AgentState& st, const StateSchema& schema) {
    const SelfBlock& s = st.self;
    const int dir_bin = schema.class_of(schema.item("self_direction"), s.direction);
    const int speed_bin = schema.class_of(schema.item("self_speed"), s.speed);
    const int z_bin = schema.class_of(schema.item("self_z"), s.z);
    std::string out;
    out += "status ";
    out += alive_name(s.alive);
    out += ". in the ";
    out += region_words()[region_cell(s.x, s.y)];
    out += " region at " + std::to_string(detail::round_i(s.x)) + ", " +
           std::to_string(detail::round_i(s.y)) + ", altitude " +
           std::to_string(detail::round_i(s.z)) + ", ";
    out += altitude_words()[z_bin];
    out += ". my hp is " + std::to_string(s.hp) + ", ";
    out += hp_words()[s.hp / 10];
    out += ". facing ";
    out += direction_words()[dir_bin];
    out += " at " + std::to_string(detail::round_i(s.direction) % 360) + " degrees. moving at " +
           detail::fmt_speed(s.speed) + " m/s, ";
    out += speed_words()[speed_bin];
    out += ".";
    out += " " + detail::entity_sentence(schema, st.enemies[0], "enemy", 1);
    out += " " + detail::entity_sentence(schema, st.enemies[1], "enemy", 2);
    out += " " + detail::entity_sentence(schema, st.teammates[0], "teammate", 1);
    out += " " + detail::entity_sentence(schema, st.teammates[1], "teammate", 2);
    return out;
}

// Rounded values recovered from a rendered description.
struct ParsedEntity {
    bool present = false;
    long hp = 0, x = 0, y = 0, z = 0, distance = 0;
};
struct ParsedText {
    std::string alive;
    long hp = 0, x = 0, y = 0, z = 0, direction = 0;
    double speed = 0;
    std::array<ParsedEntity, 2> enemies{}, teammates{};
};

namespace detail {

inline std::string take_until(const std::string& text, std::size_t& pos, const std::string& stop) {
    const std::size_t end = text.find(stop, pos);
    if (end == std::string::npos) throw std::runtime_error("parse_text: missing '" + stop + "'");
    std::string got = text.substr(pos, end - pos);
    pos = end + stop.size();
    return got;
}

inline void expect(const std::string& text, std::size_t& pos, const std::string& lit) {
    if (text.compare(pos, lit.size(), lit) != 0)
        throw std::runtime_error("parse_text: expected '" + lit + "' at offset " +
                                 std::to_string(pos));
    pos += lit.size();
}

inline long read_long(const std::string& text, std::size_t& pos, const std::string& stop) {
    return std::stol(take_until(text, pos, stop));
}

inline ParsedEntity parse_entity(const std::string& text, std::size_t& pos,
                                 const std::string& kind, int index) {
    ParsedEntity e;
    const std::string absent = "no " + kind + " " + std::to_string(index) + " visible.";
    if (text.compare(pos, absent.size(), absent) == 0) {
        pos += absent.size();
        return e;
    }
    e.present = true;
    expect(text, pos, kind + " " + std::to_string(index) + " is ");
    take_until(text, pos, " at ");
    e.distance = read_long(text, pos, " meters, in the ");
    take_until(text, pos, " region at ");
    e.x = read_long(text, pos, ", ");
    e.y = read_long(text, pos, ", altitude ");
    e.z = read_long(text, pos, ", ");
    take_until(text, pos, ", hp ");
    e.hp = read_long(text, pos, ", ");
    take_until(text, pos, ".");
    return e;
}

}  // namespace detail

inline ParsedText parse_text(const std::string& text) {
    using namespace detail;
    ParsedText p;
    std::size_t pos = 0;
    expect(text, pos, "status ");
    p.alive = take_until(text, pos, ". in the ");
    take_until(text, pos, " region at ");
    p.x = read_long(text, pos, ", ");
    p.y = read_long(text, pos, ", altitude ");
    p.z = read_long(text, pos, ", ");
    take_until(text, pos, ". my hp is ");
    p.hp = read_long(text, pos, ", ");
    take_until(text, pos, ". facing ");
    take_until(text, pos, " at ");
    p.direction = read_long(text, pos, " degrees. moving at ");
    p.speed = std::stod(take_until(text, pos, " m/s, "));
    take_until(text, pos, ". ");
    p.enemies[0] = parse_entity(text, pos, "enemy", 1);
    expect(text, pos, " ");
    p.enemies[1] = parse_entity(text, pos, "enemy", 2);
    expect(text, pos, " ");
    p.teammates[0] = parse_entity(text, pos, "teammate", 1);
    expect(text, pos, " ");
    p.teammates[1] = parse_entity(text, pos, "teammate", 2);
    return p;
}

// Lowercases; words split on whitespace; digits and punctuation become
// single-character tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            tokens.push_back(word);
            word.clear();
        }
    };
    for (char raw : text) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   !std::isalnum(static_cast<unsigned char>(c))) {
            flush();
            tokens.emplace_back(1, c);
        } else {
            word.push_back(c);
        }
    }
    flush();
    if (tokens.empty()) throw std::invalid_argument("tokenize: empty token sequence");
    return tokens;
}

// Closed vocabulary: every token the templates can emit, with reserved ids.
class Vocabulary {
public:
    Vocabulary() : Vocabulary(builtin_tokens()) {}
    explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
        for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = static_cast<int>(i);
        if (tokens_.size() < 2 || tokens_[0] != "<pad>" || tokens_[1] != "<unk>")
            throw std::invalid_argument("vocabulary: ids 0/1 must be <pad>/<unk>");
    }

    static std::vector<std::string> builtin_tokens() {
        std::vector<std::string> t{"<pad>", "<unk>"};
        for (char d = '0'; d <= '9'; ++d) t.emplace_back(1, d);
        for (const char* p : {".", ",", "/"}) t.emplace_back(p);
        for (const char* w : {"status", "in", "the", "region", "at", "altitude", "my", "hp",
                              "is", "facing", "degrees", "moving", "m", "s", "no", "enemy",
                              "teammate", "visible", "meters", "normal", "down", "dead"})
            t.emplace_back(w);
        for (const char* w : region_words()) t.emplace_back(w);
        for (const char* w : hp_words()) t.emplace_back(w);
        for (const char* w : direction_words()) t.emplace_back(w);
        for (const char* w : speed_words()) t.emplace_back(w);
        for (const char* w : distance_words()) t.emplace_back(w);
        for (const char* w : altitude_words()) t.emplace_back(w);
        return t;
    }

    int id(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? 1 : it->second;
    }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    std::vector<int> encode(const std::string& text) const {
        std::vector<int> ids;
        for (const auto& tok : tokenize(text)) ids.push_back(id(tok));
        return ids;
    }

    // Mean-pooling weights: token counts scaled by 1/length. Exactly
    // order-invariant because only the multiset enters.
    template <typename Real>
    std::vector<Real> count_vector(const std::string& text) const {
        const std::vector<int> ids = encode(text);
        std::vector<Real> counts(size(), Real(0));
        for (int i : ids) counts[i] += Real(1);
        const Real inv = Real(1) / Real(ids.size());
        for (auto& c : counts) c *= inv;
        return counts;
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace clsp
