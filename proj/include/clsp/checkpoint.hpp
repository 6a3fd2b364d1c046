#pragma once
// Versioned binary checkpoints: magic "CLSP", format version, JSON metadata,
// frequency-bank records, and a named-tensor table with little-endian data.
// load(save(x)) reproduces every byte; realized bank values are authoritative
// on load (they are never re-drawn from the stored seed).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "clsp/encoders.hpp"
#include "clsp/encoding.hpp"
#include "clsp/schema.hpp"
#include "clsp/tensor.hpp"
#include "clsp/text.hpp"

namespace clsp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
    std::string variant;
    std::uint64_t schema_hash = 0;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::int64_t step = 0;
    std::vector<std::string> vocab;
};

template <typename Real>
struct Checkpoint {
    CheckpointMeta meta;
    std::vector<FrequencyBank> banks;
    std::vector<std::pair<std::string, Tensor<Real>>> tensors;
};

namespace detail {

template <typename Real>
constexpr const char* dtype_tag() {
    static_assert(sizeof(Real) == 4 || sizeof(Real) == 8, "unsupported element type");
    return sizeof(Real) == 4 ? "f32" : "f64";
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}
inline void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

// Cursor over a loaded file; every read checks the remaining length.
struct ByteReader {
    const std::string& path;
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw std::runtime_error(path + ": truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace detail

template <typename Real>
std::string serialize_checkpoint(const Checkpoint<Real>& ckpt) {
    using namespace detail;
    std::string out;
    out.append("CLSP");
    put_u32(out, kCheckpointVersion);

    nlohmann::json meta;
    meta["variant"] = ckpt.meta.variant;
    meta["schema_hash"] = ckpt.meta.schema_hash;
    meta["config"] = ckpt.meta.config;
    meta["seed"] = ckpt.meta.seed;
    meta["step"] = ckpt.meta.step;
    meta["vocab"] = ckpt.meta.vocab;
    const std::string meta_text = meta.dump();
    put_u64(out, meta_text.size());
    out.append(meta_text);

    put_u32(out, static_cast<std::uint32_t>(ckpt.banks.size()));
    for (const auto& bank : ckpt.banks) {
        put_str(out, bank.item);
        put_u64(out, bank.seed);
        put_f64(out, bank.sigma);
        put_u32(out, static_cast<std::uint32_t>(bank.d));
        put_u32(out, static_cast<std::uint32_t>(bank.b.size()));
        for (double v : bank.b) put_f64(out, v);
    }

    put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        put_str(out, name);
        put_str(out, dtype_tag<Real>());
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) put_u64(out, d);
        const char* raw = reinterpret_cast<const char*>(t.data.data());
        out.append(raw, t.numel() * sizeof(Real));
    }
    return out;
}

template <typename Real>
void save_checkpoint(const std::string& path, const Checkpoint<Real>& ckpt) {
    const std::string bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
}

// Parses and validates a checkpoint. The caller's compiled-in schema must
// hash to the stored value for the stored variant, or the load fails.
template <typename Real>
Checkpoint<Real> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    detail::ByteReader r{path, bytes};
    r.need(4);
    if (bytes.compare(0, 4, "CLSP") != 0) throw std::runtime_error(path + ": not a checkpoint");
    r.pos = 4;
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error(path + ": checkpoint version " + std::to_string(version) +
                                 " is not supported (loader version " +
                                 std::to_string(kCheckpointVersion) + ")");

    Checkpoint<Real> ckpt;
    const std::uint64_t meta_len = r.u64();
    r.need(meta_len);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(bytes.substr(r.pos, meta_len));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": bad checkpoint metadata: " + e.what());
    }
    r.pos += meta_len;
    try {
        ckpt.meta.variant = meta.at("variant").get<std::string>();
        ckpt.meta.schema_hash = meta.at("schema_hash").get<std::uint64_t>();
        ckpt.meta.config = meta.at("config");
        ckpt.meta.seed = meta.at("seed").get<std::uint64_t>();
        ckpt.meta.step = meta.at("step").get<std::int64_t>();
        ckpt.meta.vocab = meta.at("vocab").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": bad checkpoint metadata: " + e.what());
    }

    const Variant variant = variant_from_name(ckpt.meta.variant);
    const std::uint64_t expected = default_schema().hash(variant);
    if (ckpt.meta.schema_hash != expected)
        throw std::runtime_error(path + ": schema hash mismatch (file " +
                                 std::to_string(ckpt.meta.schema_hash) + ", loader " +
                                 std::to_string(expected) + ")");

    const std::uint32_t n_banks = r.u32();
    for (std::uint32_t i = 0; i < n_banks; ++i) {
        FrequencyBank bank;
        bank.item = r.str();
        bank.seed = r.u64();
        bank.sigma = r.f64();
        bank.d = static_cast<int>(r.u32());
        const std::uint32_t nb = r.u32();
        bank.b.resize(nb);
        for (std::uint32_t j = 0; j < nb; ++j) bank.b[j] = r.f64();
        ckpt.banks.push_back(std::move(bank));
    }

    const std::uint32_t n_tensors = r.u32();
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::string name = r.str();
        const std::string dtype = r.str();
        if (dtype != detail::dtype_tag<Real>())
            throw std::runtime_error(path + ": tensor " + name + " has dtype " + dtype +
                                     " (expected " + detail::dtype_tag<Real>() + ")");
        const std::uint32_t ndim = r.u32();
        std::vector<std::size_t> shape(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<std::size_t>(r.u64());
        Tensor<Real> t(shape);
        r.need(t.numel() * sizeof(Real));
        std::memcpy(t.data.data(), bytes.data() + r.pos, t.numel() * sizeof(Real));
        r.pos += t.numel() * sizeof(Real);
        ckpt.tensors.emplace_back(name, std::move(t));
    }
    if (r.pos != bytes.size()) throw std::runtime_error(path + ": trailing bytes after checkpoint");
    return ckpt;
}

// A full model bundle: both encoders plus optional classifier heads.
template <typename Real>
struct Model {
    StateEncoder<Real> state;
    TextEncoder<Real> text;
    PretrainHeads<Real> heads;
    bool has_heads = false;
};

template <typename Real>
Model<Real> make_model(Variant variant, const StateSchema& schema, std::uint64_t seed,
                       bool with_heads, double rff_sigma = 1.0) {
    Model<Real> m;
    m.state = make_state_encoder<Real>(variant, schema, seed);
    if (rff_sigma != 1.0) m.state.banks = make_bank_set(schema, variant, seed, rff_sigma);
    m.text = make_text_encoder<Real>(seed);
    m.has_heads = with_heads;
    if (with_heads) m.heads = make_pretrain_heads<Real>(schema, seed);
    return m;
}

template <typename Real>
Checkpoint<Real> checkpoint_from_model(const Model<Real>& m, const nlohmann::json& config,
                                       std::uint64_t seed, std::int64_t step) {
    Checkpoint<Real> ckpt;
    ckpt.meta.variant = variant_name(m.state.variant);
    ckpt.meta.schema_hash = m.state.schema.hash(m.state.variant);
    ckpt.meta.config = config;
    ckpt.meta.seed = seed;
    ckpt.meta.step = step;
    ckpt.meta.vocab = m.text.vocab.tokens();
    ckpt.banks = m.state.banks.banks;
    for (const auto& [name, t] : m.state.params.entries) ckpt.tensors.emplace_back("state." + name, t);
    for (const auto& [name, t] : m.text.params.entries) ckpt.tensors.emplace_back("text." + name, t);
    if (m.has_heads)
        for (const auto& [name, t] : m.heads.params.entries) ckpt.tensors.emplace_back(name, t);
    return ckpt;
}

template <typename Real>
Model<Real> model_from_checkpoint(const Checkpoint<Real>& ckpt) {
    const Variant variant = variant_from_name(ckpt.meta.variant);
    const StateSchema schema = default_schema();
    Model<Real> m;
    m.state = make_state_encoder<Real>(variant, schema, ckpt.meta.seed);
    m.state.banks.banks = ckpt.banks;
    m.text = make_text_encoder<Real>(ckpt.meta.seed, Vocabulary(ckpt.meta.vocab));
    bool any_heads = false;
    for (const auto& [name, t] : ckpt.tensors)
        if (name.rfind("head.", 0) == 0) any_heads = true;
    m.has_heads = any_heads;
    if (any_heads) m.heads = make_pretrain_heads<Real>(schema, ckpt.meta.seed);

    auto restore = [&](const std::string& name, const Tensor<Real>& stored) {
        Tensor<Real>* dst = nullptr;
        if (name.rfind("state.", 0) == 0) dst = m.state.params.find(name.substr(6));
        else if (name.rfind("text.", 0) == 0) dst = m.text.params.find(name.substr(5));
        else if (name.rfind("head.", 0) == 0) dst = m.heads.params.find(name);
        else throw std::runtime_error("checkpoint tensor " + name + " has no destination");
        if (dst->shape != stored.shape)
            throw std::runtime_error("checkpoint tensor " + name + " has shape " +
                                     stored.shape_str() + " (expected " + dst->shape_str() + ")");
        dst->data = stored.data;
    };
    for (const auto& [name, t] : ckpt.tensors) restore(name, t);
    return m;
}

}  // namespace clsp
