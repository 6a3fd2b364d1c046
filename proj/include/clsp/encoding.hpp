#pragma once
// Scalar feature encodings: random Fourier features, sinusoidal positional
// encoding, multi-scale normalization, and identity passthrough.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "clsp/rng.hpp"
#include "clsp/schema.hpp"

namespace clsp {

// Realized Gaussian frequencies for one scalar item. The realized values are
// authoritative when loaded from a checkpoint; seed/sigma/d describe how
// they were drawn.
struct FrequencyBank {
    std::string item;
    std::uint64_t seed = 0;
    double sigma = 1.0;
    int d = 0;
    std::vector<double> b;
};

inline FrequencyBank make_frequency_bank(const std::string& item, std::uint64_t master_seed,
                                         double sigma, int d) {
    FrequencyBank bank;
    bank.item = item;
    bank.seed = mix64(master_seed ^ fnv1a(item));
    bank.sigma = sigma;
    bank.d = d;
    Rng rng(bank.seed);
    bank.b.resize(d);
    for (int i = 0; i < d; ++i) bank.b[i] = rng.normal(0.0, sigma);
    return bank;
}

// [cos(2 pi b_1 v) ... cos(2 pi b_d v), sin(2 pi b_1 v) ... sin(2 pi b_d v)]
inline std::vector<double> rff_encode(double v, const FrequencyBank& bank) {
    if (bank.b.empty()) throw std::invalid_argument("rff_encode: empty frequency bank");
    const std::size_t d = bank.b.size();
    std::vector<double> out(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        const double a = 2.0 * std::numbers::pi * bank.b[i] * v;
        out[i] = std::cos(a);
        out[d + i] = std::sin(a);
    }
    return out;
}

// sin/cos of pi*x with exact period-2 reduction: integers give exact zeros
// for sine, half-integers give exact zeros for cosine.
inline double sinpi(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0.0) r += 2.0;
    double sign = 1.0;
    if (r >= 1.0) {
        r -= 1.0;
        sign = -1.0;
    }
    if (r > 0.5) r = 1.0 - r;
    if (r == 0.0) return 0.0 * sign;
    if (r == 0.5) return sign;
    return sign * std::sin(std::numbers::pi * r);
}

inline double cospi(double x) { return sinpi(x + 0.5); }

// [sin(2^0 pi v), cos(2^0 pi v), ..., sin(2^{d-1} pi v), cos(2^{d-1} pi v)]
inline std::vector<double> npe_encode(double v, int octaves) {
    std::vector<double> out(2 * static_cast<std::size_t>(octaves));
    double scaled = v;
    for (int k = 0; k < octaves; ++k) {
        out[2 * k] = sinpi(scaled);
        out[2 * k + 1] = cospi(scaled);
        scaled *= 2.0;
    }
    return out;
}

// [v/s for each scale s]; takes the raw value, unclipped output.
inline std::vector<double> msn_encode(double v, const std::vector<double>& scales) {
    if (scales.empty()) throw std::invalid_argument("msn_encode: empty scale list");
    std::vector<double> out(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (scales[i] <= 0.0) throw std::invalid_argument("msn_encode: scales must be positive");
        out[i] = v / scales[i];
    }
    return out;
}

// All frequency banks for one (schema, variant, seed) triple, in item order.
// Non-RFF variants carry an empty set.
struct BankSet {
    std::vector<FrequencyBank> banks;  // one per scalar item, schema order

    const FrequencyBank& for_item(const std::string& name) const {
        for (const auto& b : banks)
            if (b.item == name) return b;
        throw std::invalid_argument("no frequency bank for item: " + name);
    }
};

inline BankSet make_bank_set(const StateSchema& schema, Variant v, std::uint64_t master_seed,
                             double sigma = 1.0) {
    BankSet set;
    if (encoding_kind(v) != EncodingKind::kRff) return set;
    for (const auto& it : schema.items)
        if (it.kind == ItemKind::kScalar)
            set.banks.push_back(make_frequency_bank(it.name, master_seed, sigma, it.d));
    return set;
}

// Clamps to the item's raw range, normalizes to [0,1] for RFF/NPE/identity,
// and dispatches to the variant's encoder. MSN receives the raw clamped
// value: its whole point is exposing magnitude at fixed scales.
inline std::vector<double> encode_scalar(double v, const SchemaItem& item, Variant variant,
                                         const BankSet& banks) {
    if (item.kind != ItemKind::kScalar)
        throw std::invalid_argument("encode_scalar: not a scalar item: " + item.name);
    double raw = v;
    if (raw < item.lo) raw = item.lo;
    if (raw > item.hi) raw = item.hi;
    const double norm = (raw - item.lo) / (item.hi - item.lo);
    switch (encoding_kind(variant)) {
        // Identity passes the clamped raw value: the baseline variants feed
        // unscaled state items, so range handling is left to the trunk.
        case EncodingKind::kIdentity: return {raw};
        case EncodingKind::kMsn: return msn_encode(raw, msn_scales());
        case EncodingKind::kNpe: return npe_encode(norm, item.d);
        case EncodingKind::kRff: return rff_encode(norm, banks.for_item(item.name));
    }
    throw std::invalid_argument("encode_scalar: bad variant");
}

}  // namespace clsp
