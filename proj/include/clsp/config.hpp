#pragma once
// Run configuration: a flat key=value file covering every training and
// generator knob. Unknown keys are rejected so typos fail loudly. The
// effective configuration is echoed into checkpoints and metrics files.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "clsp/optim.hpp"
#include "clsp/state.hpp"

namespace clsp {

struct RunConfig {
    // Training.
    int batch_size = 128;
    double temperature = 1.0;
    double lr = 1e-4;
    double weight_decay = 1e-4;
    int epochs = 3;
    int pretrain_epochs = 1;
    std::string target_set = "all";  // self | team | enemy | all
    std::uint64_t seed = 1;
    int eval_interval = 200;
    int eval_queries = 1000;
    int eval_loss_pairs = 256;
    bool keep_heads = true;
    double test_fraction = 0.05;
    // Generator.
    double p_normal = 0.70;
    double p_down = 0.15;
    double corner_patch_prob = 0.40;
    double corner_patch_size = 150.0;
    double p_both_present = 0.75;
    double p_one_present = 0.15;
    double same_bin_prob = 0.60;
    // Encoding.
    double rff_sigma = 1.0;

    GenConfig gen_config() const {
        GenConfig g;
        g.p_normal = p_normal;
        g.p_down = p_down;
        g.corner_patch_prob = corner_patch_prob;
        g.corner_patch_size = corner_patch_size;
        g.p_both_present = p_both_present;
        g.p_one_present = p_one_present;
        g.same_bin_prob = same_bin_prob;
        return g;
    }
    AdamWConfig adamw_config() const {
        AdamWConfig a;
        a.lr = lr;
        a.weight_decay = weight_decay;
        return a;
    }

    void validate() const {
        auto fail = [](const std::string& why) {
            throw std::invalid_argument("invalid config: " + why);
        };
        if (batch_size < 1) fail("batch_size must be at least 1");
        if (!(temperature > 0)) fail("temperature must be positive");
        if (!(lr > 0)) fail("lr must be positive");
        if (weight_decay < 0) fail("weight_decay must be nonnegative");
        if (epochs < 0 || pretrain_epochs < 0) fail("epoch counts must be nonnegative");
        if (target_set != "self" && target_set != "team" && target_set != "enemy" &&
            target_set != "all")
            fail("target_set must be one of self, team, enemy, all");
        if (eval_interval < 1) fail("eval_interval must be at least 1");
        if (eval_queries < 1 || eval_loss_pairs < 1) fail("eval sizes must be at least 1");
        if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
            fail("test_fraction must be in (0,1)");
        if (p_normal < 0 || p_down < 0 || p_normal + p_down > 1.0)
            fail("alive proportions must be nonnegative and sum to at most 1");
        if (corner_patch_prob < 0 || corner_patch_prob > 1) fail("corner_patch_prob out of [0,1]");
        if (corner_patch_size <= 0) fail("corner_patch_size must be positive");
        if (p_both_present < 0 || p_one_present < 0 || p_both_present + p_one_present > 1.0)
            fail("presence proportions must be nonnegative and sum to at most 1");
        if (same_bin_prob < 0 || same_bin_prob > 1) fail("same_bin_prob out of [0,1]");
        if (!(rff_sigma > 0)) fail("rff_sigma must be positive");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["batch_size"] = batch_size;
        j["temperature"] = temperature;
        j["lr"] = lr;
        j["weight_decay"] = weight_decay;
        j["epochs"] = epochs;
        j["pretrain_epochs"] = pretrain_epochs;
        j["target_set"] = target_set;
        j["seed"] = seed;
        j["eval_interval"] = eval_interval;
        j["eval_queries"] = eval_queries;
        j["eval_loss_pairs"] = eval_loss_pairs;
        j["keep_heads"] = keep_heads;
        j["test_fraction"] = test_fraction;
        j["p_normal"] = p_normal;
        j["p_down"] = p_down;
        j["corner_patch_prob"] = corner_patch_prob;
        j["corner_patch_size"] = corner_patch_size;
        j["p_both_present"] = p_both_present;
        j["p_one_present"] = p_one_present;
        j["same_bin_prob"] = same_bin_prob;
        j["rff_sigma"] = rff_sigma;
        return j;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T out;
    is >> out;
    if (is.fail() || !(is >> std::ws).eof())
        throw std::invalid_argument("config key " + key + ": cannot parse value \"" + value + "\"");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw std::invalid_argument("config key " + key + ": cannot parse value \"" + value +
                                "\" (expected 0/1/true/false)");
}

}  // namespace detail

// Applies one key=value assignment; unknown keys are an error.
inline void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_number;
    if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
    else if (key == "temperature") cfg.temperature = parse_number<double>(key, value);
    else if (key == "lr") cfg.lr = parse_number<double>(key, value);
    else if (key == "weight_decay") cfg.weight_decay = parse_number<double>(key, value);
    else if (key == "epochs") cfg.epochs = parse_number<int>(key, value);
    else if (key == "pretrain_epochs") cfg.pretrain_epochs = parse_number<int>(key, value);
    else if (key == "target_set") cfg.target_set = value;
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "eval_interval") cfg.eval_interval = parse_number<int>(key, value);
    else if (key == "eval_queries") cfg.eval_queries = parse_number<int>(key, value);
    else if (key == "eval_loss_pairs") cfg.eval_loss_pairs = parse_number<int>(key, value);
    else if (key == "keep_heads") cfg.keep_heads = parse_bool(key, value);
    else if (key == "test_fraction") cfg.test_fraction = parse_number<double>(key, value);
    else if (key == "p_normal") cfg.p_normal = parse_number<double>(key, value);
    else if (key == "p_down") cfg.p_down = parse_number<double>(key, value);
    else if (key == "corner_patch_prob") cfg.corner_patch_prob = parse_number<double>(key, value);
    else if (key == "corner_patch_size") cfg.corner_patch_size = parse_number<double>(key, value);
    else if (key == "p_both_present") cfg.p_both_present = parse_number<double>(key, value);
    else if (key == "p_one_present") cfg.p_one_present = parse_number<double>(key, value);
    else if (key == "same_bin_prob") cfg.same_bin_prob = parse_number<double>(key, value);
    else if (key == "rff_sigma") cfg.rff_sigma = parse_number<double>(key, value);
    else throw std::invalid_argument("unknown config key: " + key);
}

// Parses key=value text; '#' starts a comment, blank lines are skipped.
inline RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value, got \"" + line + "\"");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        try {
            set_config_key(cfg, key, value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_run_config(buf.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace clsp
