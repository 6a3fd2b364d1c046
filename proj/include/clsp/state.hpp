#pragma once
// Agent states: types, balanced synthetic sampling, validation,
// classification labels, and flattening into encoded feature vectors.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "clsp/encoding.hpp"
#include "clsp/rng.hpp"
#include "clsp/schema.hpp"

namespace clsp {

enum class Alive { kNormal = 0, kDown = 1, kDead = 2 };

inline const char* alive_name(Alive a) {
    switch (a) {
        case Alive::kNormal: return "normal";
        case Alive::kDown: return "down";
        case Alive::kDead: return "dead";
    }
    throw std::invalid_argument("alive_name: bad value");
}

struct SelfBlock {
    int hp = 0;  // multiples of 10 in [0,100]
    double x = 0, y = 0, z = 0;
    double direction = 0;  // degrees in [0,360)
    double speed = 0;      // m/s in [0,10]
    Alive alive = Alive::kNormal;
};

struct EntityBlock {
    bool present = false;
    int hp = 0;
    double x = 0, y = 0, z = 0;
    double distance = 0;  // 3-D Euclidean distance to self
};

struct AgentState {
    SelfBlock self;
    std::array<EntityBlock, 2> enemies{};
    std::array<EntityBlock, 2> teammates{};
};

// Generator knobs. Defaults aim every class of every item at >= 1%
// marginal frequency over large samples.
struct GenConfig {
    double p_normal = 0.70, p_down = 0.15;  // dead takes the rest
    double corner_patch_prob = 0.40;        // selves seeded near corners
    double corner_patch_size = 150.0;       // meters from the corner
    double p_both_present = 0.75, p_one_present = 0.15;
    double same_bin_prob = 0.60;  // both slots target one distance bin
};

namespace detail {

// Planar distance from (x,y) to the farthest map corner, and that corner.
inline double farthest_corner(double x, double y, double& cx, double& cy) {
    cx = x < map_side() / 2 ? map_side() : 0.0;
    cy = y < map_side() / 2 ? map_side() : 0.0;
    return std::hypot(cx - x, cy - y);
}

inline void place_entity(EntityBlock& e, const SelfBlock& self, double planar_d, Rng& rng) {
    double cx, cy;
    const double r_max = farthest_corner(self.x, self.y, cx, cy);
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
        const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double ex = self.x + planar_d * std::cos(theta);
        const double ey = self.y + planar_d * std::sin(theta);
        if (ex >= 0.0 && ex <= map_side() && ey >= 0.0 && ey <= map_side()) {
            e.x = ex;
            e.y = ey;
            placed = true;
        }
    }
    if (!placed) {
        // Aim at the farthest corner: the segment stays inside the map.
        const double ux = (cx - self.x) / r_max, uy = (cy - self.y) / r_max;
        e.x = self.x + planar_d * ux;
        e.y = self.y + planar_d * uy;
        if (e.x < 0) e.x = 0;
        if (e.x > map_side()) e.x = map_side();
        if (e.y < 0) e.y = 0;
        if (e.y > map_side()) e.y = map_side();
    }
    e.z = rng.uniform(0.0, 150.0);
    e.distance = std::sqrt((e.x - self.x) * (e.x - self.x) + (e.y - self.y) * (e.y - self.y) +
                           (e.z - self.z) * (e.z - self.z));
}

// Samples planar target distances for 0..2 present slots, biased so every
// distance bin of every slot keeps >= 1% marginal mass after sorting.
inline void fill_slots(std::array<EntityBlock, 2>& slots, const SelfBlock& self, Rng& rng,
                       const GenConfig& cfg) {
    const double u = rng.uniform();
    int count = 2;
    const double p_none = 1.0 - cfg.p_both_present - cfg.p_one_present;
    if (u < p_none)
        count = 0;
    else if (u < p_none + cfg.p_one_present)
        count = 1;

    double cx, cy;
    const double r_max = 0.999 * farthest_corner(self.x, self.y, cx, cy);
    const int n_bins = 16;
    const double bin_w = max_distance() / n_bins;
    std::vector<int> feasible;
    for (int b = 0; b < n_bins; ++b)
        if (b * bin_w + 1.0 < r_max) feasible.push_back(b);

    auto draw_in_bin = [&](int b) {
        const double lo = b * bin_w;
        const double hi = std::min((b + 1) * bin_w, r_max);
        return rng.uniform(lo, hi);
    };

    std::vector<double> ds;
    if (count == 1) {
        ds.push_back(draw_in_bin(feasible[rng.below(feasible.size())]));
    } else if (count == 2) {
        if (rng.uniform() < cfg.same_bin_prob) {
            const int b = feasible[rng.below(feasible.size())];
            ds.push_back(draw_in_bin(b));
            ds.push_back(draw_in_bin(b));
        } else {
            const std::size_t i1 = rng.below(feasible.size());
            const std::size_t i2 = i1 + rng.below(feasible.size() - i1);
            ds.push_back(draw_in_bin(feasible[i1]));
            ds.push_back(draw_in_bin(feasible[i2]));
        }
    }
    for (int i = 0; i < count; ++i) {
        slots[i].present = true;
        slots[i].hp = 10 * static_cast<int>(rng.below(11));
        place_entity(slots[i], self, ds[i], rng);
    }
    if (count == 2 && slots[0].distance > slots[1].distance) std::swap(slots[0], slots[1]);
}

}  // namespace detail

inline AgentState sample_state(Rng& rng, const GenConfig& cfg = {}) {
    AgentState st;
    const double u = rng.uniform();
    st.self.alive = u < cfg.p_normal            ? Alive::kNormal
                    : u < cfg.p_normal + cfg.p_down ? Alive::kDown
                                                    : Alive::kDead;
    st.self.hp = st.self.alive == Alive::kDead ? 0 : 10 * (1 + static_cast<int>(rng.below(10)));
    if (rng.uniform() < cfg.corner_patch_prob) {
        const bool right = rng.uniform() < 0.5, far_side = rng.uniform() < 0.5;
        const double px = rng.uniform(0.0, cfg.corner_patch_size);
        const double py = rng.uniform(0.0, cfg.corner_patch_size);
        st.self.x = right ? map_side() - px : px;
        st.self.y = far_side ? map_side() - py : py;
    } else {
        st.self.x = rng.uniform(0.0, map_side());
        st.self.y = rng.uniform(0.0, map_side());
    }
    st.self.z = rng.uniform(0.0, 150.0);
    st.self.direction = rng.uniform(0.0, 360.0);
    st.self.speed = st.self.alive == Alive::kDead ? 0.0 : rng.uniform(0.0, 10.0);
    detail::fill_slots(st.enemies, st.self, rng, cfg);
    detail::fill_slots(st.teammates, st.self, rng, cfg);
    return st;
}

// Distances can exceed the planar map diagonal by the altitude spread.
inline double max_observable_distance() { return std::hypot(max_distance(), 150.0); }

inline void validate_state(const AgentState& st) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::runtime_error("invalid state: " + field + ": " + why);
    };
    const SelfBlock& s = st.self;
    if (s.hp < 0 || s.hp > 100 || s.hp % 10 != 0) fail("self.hp", "must be a multiple of 10 in [0,100]");
    if (s.x < 0 || s.x > map_side()) fail("self.x", "out of range");
    if (s.y < 0 || s.y > map_side()) fail("self.y", "out of range");
    if (s.z < 0 || s.z > 150.0) fail("self.z", "out of range");
    if (s.direction < 0 || s.direction >= 360.0) fail("self.direction", "out of [0,360)");
    if (s.speed < 0 || s.speed > 10.0) fail("self.speed", "out of range");
    if (s.alive == Alive::kDead && (s.hp != 0 || s.speed != 0)) fail("self.alive", "dead requires hp=0 and speed=0");
    if (s.alive != Alive::kDead && s.hp < 10) fail("self.hp", "alive requires hp >= 10");

    auto check_slots = [&](const std::array<EntityBlock, 2>& slots, const std::string& base) {
        for (std::size_t i = 0; i < 2; ++i) {
            const EntityBlock& e = slots[i];
            const std::string name = base + std::to_string(i + 1);
            if (!e.present) {
                if (e.hp != 0 || e.x != 0 || e.y != 0 || e.z != 0 || e.distance != 0)
                    fail(name, "absent slot must be all zero");
                continue;
            }
            if (i == 1 && !slots[0].present) fail(name, "present slots must precede absent slots");
            if (e.hp < 0 || e.hp > 100 || e.hp % 10 != 0) fail(name + ".hp", "must be a multiple of 10 in [0,100]");
            if (e.x < 0 || e.x > map_side()) fail(name + ".x", "out of range");
            if (e.y < 0 || e.y > map_side()) fail(name + ".y", "out of range");
            if (e.z < 0 || e.z > 150.0) fail(name + ".z", "out of range");
            if (e.distance < 0 || e.distance > max_observable_distance())
                fail(name + ".distance", "out of range");
            const double d = std::sqrt((e.x - s.x) * (e.x - s.x) + (e.y - s.y) * (e.y - s.y) +
                                       (e.z - s.z) * (e.z - s.z));
            if (std::fabs(d - e.distance) > 1e-6)
                fail(name + ".distance", "inconsistent with positions");
        }
        if (slots[0].present && slots[1].present && slots[0].distance > slots[1].distance)
            fail(base + "1", "slots must be sorted by ascending distance");
    };
    check_slots(st.enemies, "enemy");
    check_slots(st.teammates, "teammate");
}

// Raw value of a schema item (alive/presence as their class index).
inline double raw_item_value(const AgentState& st, const SchemaItem& item) {
    const std::string& n = item.name;
    auto entity_of = [&](const std::string& prefix) -> const EntityBlock* {
        if (n.rfind(prefix, 0) != 0) return nullptr;
        const bool second = n[prefix.size()] == '2';
        return prefix == "enemy" ? &st.enemies[second] : &st.teammates[second];
    };
    if (n.rfind("self_", 0) == 0) {
        const std::string f = n.substr(5);
        if (f == "hp") return st.self.hp;
        if (f == "x") return st.self.x;
        if (f == "y") return st.self.y;
        if (f == "z") return st.self.z;
        if (f == "direction") return st.self.direction;
        if (f == "speed") return st.self.speed;
        if (f == "alive") return static_cast<double>(st.self.alive);
    } else if (const EntityBlock* e = n.rfind("enemy", 0) == 0 ? entity_of("enemy") : entity_of("teammate")) {
        const std::string f = n.substr(n.find('_') + 1);
        if (f == "present") return e->present ? 1.0 : 0.0;
        if (f == "hp") return e->hp;
        if (f == "x") return e->x;
        if (f == "y") return e->y;
        if (f == "z") return e->z;
        if (f == "distance") return e->distance;
    }
    throw std::invalid_argument("raw_item_value: unknown item " + n);
}

// One class index per schema item; absent slots label the bin of zero.
inline std::vector<int> build_class_labels(const AgentState& st, const StateSchema& schema) {
    std::vector<int> labels;
    labels.reserve(schema.items.size());
    for (const auto& it : schema.items) {
        const double v = raw_item_value(st, it);
        if (it.kind == ItemKind::kScalar)
            labels.push_back(schema.class_of(it, v));
        else
            labels.push_back(static_cast<int>(v));
    }
    return labels;
}

// Encoded feature vector: encode_scalar per scalar item in schema order,
// one-hot alive, and presence flags. Absent slots encode clamped zeros.
inline std::vector<double> flatten_state(const AgentState& st, const StateSchema& schema,
                                         Variant variant, const BankSet& banks) {
    std::vector<double> out;
    out.reserve(schema.flattened_width(variant));
    for (const auto& it : schema.items) {
        const double v = raw_item_value(st, it);
        if (it.kind == ItemKind::kScalar) {
            const auto enc = encode_scalar(v, it, variant, banks);
            out.insert(out.end(), enc.begin(), enc.end());
        } else if (it.kind == ItemKind::kAlive) {
            for (int c = 0; c < 3; ++c) out.push_back(c == static_cast<int>(v) ? 1.0 : 0.0);
        } else {
            out.push_back(v);
        }
    }
    return out;
}

// (offset, width) of each item's slice in the flattened vector.
inline std::vector<std::pair<std::size_t, std::size_t>> item_offsets(const StateSchema& schema,
                                                                     Variant variant) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t off = 0;
    for (const auto& it : schema.items) {
        const std::size_t w = it.width(variant);
        spans.emplace_back(off, w);
        off += w;
    }
    return spans;
}

}  // namespace clsp
