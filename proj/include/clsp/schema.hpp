#pragma once
// State schema: the ordered item table shared by encoding, labeling,
// flattening, pre-training heads, and checkpoints.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "clsp/rng.hpp"

namespace clsp {

enum class Variant { kClipBaseline, kBaseline, kMsn, kNpe, kRff, kRffm };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::kClipBaseline: return "clip-baseline";
        case Variant::kBaseline: return "baseline";
        case Variant::kMsn: return "msn";
        case Variant::kNpe: return "npe";
        case Variant::kRff: return "rff";
        case Variant::kRffm: return "rffm";
    }
    throw std::invalid_argument("variant_name: bad variant");
}

inline Variant variant_from_name(const std::string& s) {
    for (Variant v : {Variant::kClipBaseline, Variant::kBaseline, Variant::kMsn, Variant::kNpe,
                      Variant::kRff, Variant::kRffm})
        if (s == variant_name(v)) return v;
    throw std::invalid_argument("unknown variant: " + s);
}

// Scalar encoding family selected by the variant for every scalar item.
enum class EncodingKind { kIdentity, kMsn, kNpe, kRff };

inline EncodingKind encoding_kind(Variant v) {
    switch (v) {
        case Variant::kClipBaseline:
        case Variant::kBaseline: return EncodingKind::kIdentity;
        case Variant::kMsn: return EncodingKind::kMsn;
        case Variant::kNpe: return EncodingKind::kNpe;
        case Variant::kRff:
        case Variant::kRffm: return EncodingKind::kRff;
    }
    throw std::invalid_argument("encoding_kind: bad variant");
}

enum class ItemKind { kScalar, kAlive, kPresence };
enum class ItemGroup { kSelf, kEnemy, kTeam };

// MSN scales are fixed; width 4 for every scalar item under the MSN variant.
inline const std::vector<double>& msn_scales() {
    static const std::vector<double> scales{1.0, 10.0, 100.0, 1000.0};
    return scales;
}

struct SchemaItem {
    std::string name;
    ItemKind kind;
    ItemGroup group;
    double lo = 0.0, hi = 1.0;  // raw range (scalar items)
    int d = 0;                  // RFF frequency count / NPE octave count
    int n_classes = 0;          // classification classes for this item

    // Width of this item's slice of the flattened feature vector.
    std::size_t width(Variant v) const {
        if (kind == ItemKind::kAlive) return 3;
        if (kind == ItemKind::kPresence) return 1;
        switch (encoding_kind(v)) {
            case EncodingKind::kIdentity: return 1;
            case EncodingKind::kMsn: return msn_scales().size();
            case EncodingKind::kNpe:
            case EncodingKind::kRff: return 2 * static_cast<std::size_t>(d);
        }
        return 0;
    }
};

struct StateSchema {
    std::vector<SchemaItem> items;

    std::size_t flattened_width(Variant v) const {
        std::size_t w = 0;
        for (const auto& it : items) w += it.width(v);
        return w;
    }

    const SchemaItem& item(const std::string& name) const {
        for (const auto& it : items)
            if (it.name == name) return it;
        throw std::invalid_argument("unknown schema item: " + name);
    }

    std::size_t item_index(const std::string& name) const {
        for (std::size_t i = 0; i < items.size(); ++i)
            if (items[i].name == name) return i;
        throw std::invalid_argument("unknown schema item: " + name);
    }

    // Class index for a raw scalar value: uniform bins with edge clamping.
    // HP is its own rule (exact multiples of 10 map to value/10).
    int class_of(const SchemaItem& it, double v) const {
        if (it.kind != ItemKind::kScalar)
            throw std::invalid_argument("class_of: not a scalar item: " + it.name);
        if (it.name.size() >= 2 && it.name.substr(it.name.size() - 2) == "hp")
            return static_cast<int>(std::lround(v / 10.0));
        const double t = (v - it.lo) / (it.hi - it.lo);
        int c = static_cast<int>(std::floor(t * it.n_classes));
        if (c < 0) c = 0;
        if (c >= it.n_classes) c = it.n_classes - 1;
        return c;
    }

    // Stable hash over the full item table and variant; stored in
    // checkpoints so mismatched layouts are rejected at load time.
    std::uint64_t hash(Variant v) const {
        std::string s = variant_name(v);
        char buf[64];
        for (const auto& it : items) {
            s += '|';
            s += it.name;
            std::snprintf(buf, sizeof buf, ";%d;%d;%.17g;%.17g;%d;%d", static_cast<int>(it.kind),
                          static_cast<int>(it.group), it.lo, it.hi, it.d, it.n_classes);
            s += buf;
        }
        return fnv1a(s);
    }
};

inline double map_side() { return 4000.0; }
inline double max_distance() { return 4000.0 * std::sqrt(2.0); }

// The fixed desk-scale schema: one self block, 2 enemy and 2 teammate slots.
// Frequency counts d: position and distance 8, direction and speed 6, HP 4.
inline StateSchema default_schema() {
    StateSchema s;
    auto scalar = [&](std::string name, ItemGroup g, double lo, double hi, int d, int bins) {
        s.items.push_back({std::move(name), ItemKind::kScalar, g, lo, hi, d, bins});
    };
    scalar("self_hp", ItemGroup::kSelf, 0.0, 100.0, 4, 11);
    scalar("self_x", ItemGroup::kSelf, 0.0, map_side(), 8, 16);
    scalar("self_y", ItemGroup::kSelf, 0.0, map_side(), 8, 16);
    scalar("self_z", ItemGroup::kSelf, 0.0, 150.0, 8, 8);
    scalar("self_direction", ItemGroup::kSelf, 0.0, 360.0, 6, 12);
    scalar("self_speed", ItemGroup::kSelf, 0.0, 10.0, 6, 10);
    s.items.push_back({"self_alive", ItemKind::kAlive, ItemGroup::kSelf, 0, 0, 0, 3});
    auto entity = [&](const std::string& base, ItemGroup g) {
        s.items.push_back({base + "_present", ItemKind::kPresence, g, 0, 0, 0, 2});
        scalar(base + "_hp", g, 0.0, 100.0, 4, 11);
        scalar(base + "_x", g, 0.0, map_side(), 8, 16);
        scalar(base + "_y", g, 0.0, map_side(), 8, 16);
        scalar(base + "_z", g, 0.0, 150.0, 8, 8);
        scalar(base + "_distance", g, 0.0, max_distance(), 8, 16);
    };
    entity("enemy1", ItemGroup::kEnemy);
    entity("enemy2", ItemGroup::kEnemy);
    entity("teammate1", ItemGroup::kTeam);
    entity("teammate2", ItemGroup::kTeam);
    return s;
}

// Classifier target sets (self / team / enemy / all).
inline bool item_in_target_set(const SchemaItem& it, const std::string& set_name) {
    if (set_name == "all") return true;
    if (set_name == "self") return it.group == ItemGroup::kSelf;
    if (set_name == "enemy") return it.group == ItemGroup::kEnemy;
    if (set_name == "team") return it.group == ItemGroup::kTeam;
    throw std::invalid_argument("unknown classifier target set: " + set_name);
}

}  // namespace clsp
