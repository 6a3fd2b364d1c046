// Command-line driver for the CLSP pipeline. One subcommand per stage:
//   gen-data   synthesize a state/text pair dataset
//   pretrain   stage-1 classification pre-training of the state encoder
//   align      stage-2 contrastive alignment of both encoders
//   eval       retrieval metrics for a checkpoint on a dataset
//   probe      expansion connector + regression probe readout
//   embed      embedding table export for external visualization
//   ablate     grid of pretrain+align runs varying one knob
// Every artifact embeds the seed and effective config; identical inputs
// produce byte-identical outputs. Errors exit nonzero with one line on
// stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clsp/checkpoint.hpp"
#include "clsp/config.hpp"
#include "clsp/connector.hpp"
#include "clsp/dataset.hpp"
#include "clsp/metrics.hpp"
#include "clsp/train.hpp"

namespace {

using Real = float;

// Shared RunConfig flag plumbing: --config file first, then repeatable
// --set key=value, then named convenience flags (applied last, in
// parse order, via CLI11 callbacks).
struct ConfigFlags {
    std::string config_path;
    std::vector<std::string> sets;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--set", sets, "config override key=value (repeatable)");
    }

    clsp::RunConfig resolve() const {
        clsp::RunConfig cfg;
        if (!config_path.empty()) cfg = clsp::load_run_config(config_path);
        for (const std::string& kv : sets) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got \"" + kv + "\"");
            clsp::set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        return cfg;
    }
};

void echo_config(const nlohmann::json& j) { std::cout << "config " << j.dump() << "\n"; }

nlohmann::json with_paths(const clsp::RunConfig& cfg,
                          std::initializer_list<std::pair<const char*, std::string>> extras) {
    nlohmann::json j = cfg.to_json();
    for (const auto& [k, v] : extras) j[k] = v;
    return j;
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
    std::vector<std::size_t> ks;
    std::istringstream is(text);
    std::string part;
    while (std::getline(is, part, ',')) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(part, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != part.size() || v < 1)
            throw std::invalid_argument("--k expects a comma list of positive integers, got \"" +
                                        text + "\"");
        ks.push_back(static_cast<std::size_t>(v));
    }
    if (ks.empty()) throw std::invalid_argument("--k list is empty");
    return ks;
}

// Retrieval report matching run_alignment's evaluation: queries are a
// seed-fixed subset of the split's texts, references are all its states.
clsp::RetrievalReport eval_retrieval_on(clsp::Model<Real>& model, const clsp::PairDataset& data,
                                        int eval_queries, std::uint64_t seed,
                                        const std::vector<std::size_t>& ks) {
    std::vector<std::size_t> qidx =
        clsp::detail::epoch_order(data.size(), seed, "align.eval", 0);
    qidx.resize(std::min<std::size_t>(eval_queries, qidx.size()));
    std::vector<const clsp::AgentState*> ref_states;
    for (const auto& p : data) ref_states.push_back(&p.state);
    std::vector<const std::string*> query_texts;
    for (std::size_t i : qidx) query_texts.push_back(&data[i].text);
    const clsp::EmbeddingMatrix refs = clsp::embed_states(model.state, ref_states);
    const clsp::EmbeddingMatrix queries = clsp::embed_texts(model.text, query_texts);
    return clsp::evaluate_retrieval(queries, refs, qidx, ref_states, ks);
}

int run_gen_data(std::size_t n, std::uint64_t seed, const std::string& out,
                 const ConfigFlags& cf) {
    clsp::RunConfig cfg = cf.resolve();
    cfg.seed = seed;
    cfg.validate();
    echo_config(with_paths(cfg, {{"command", "gen-data"}, {"n", std::to_string(n)}, {"out", out}}));
    const clsp::StateSchema schema = clsp::default_schema();
    const clsp::PairDataset pairs = clsp::generate_dataset(n, seed, schema, cfg.gen_config());
    clsp::write_dataset(out, pairs);
    std::cout << "wrote " << pairs.size() << " pairs to " << out << "\n";
    return 0;
}

int run_pretrain(const std::string& variant_name, const std::string& data_path,
                 const std::string& out, const std::string& metrics, clsp::RunConfig cfg) {
    cfg.validate();
    const clsp::Variant variant = clsp::variant_from_name(variant_name);
    echo_config(with_paths(
        cfg, {{"command", "pretrain"}, {"variant", variant_name}, {"data", data_path},
              {"out", out}, {"metrics", metrics}}));
    const clsp::PairDataset pairs = clsp::read_dataset(data_path, clsp::default_schema());
    clsp::run_pretraining<Real>(pairs, variant, cfg, out, metrics, &std::cout);
    std::cout << "wrote " << out << " and " << metrics << "\n";
    return 0;
}

int run_align(const std::string& variant_name, const std::string& data_path,
              const std::string& init_path, const std::string& out, const std::string& metrics,
              clsp::RunConfig cfg) {
    cfg.validate();
    const clsp::Variant variant = clsp::variant_from_name(variant_name);
    echo_config(with_paths(
        cfg, {{"command", "align"}, {"variant", variant_name}, {"data", data_path},
              {"init", init_path}, {"out", out}, {"metrics", metrics}}));
    const clsp::PairDataset pairs = clsp::read_dataset(data_path, clsp::default_schema());
    auto [train, test] = clsp::split_pairs(pairs, cfg.test_fraction, cfg.seed);
    clsp::Model<Real> init;
    const clsp::Model<Real>* init_ptr = nullptr;
    if (!init_path.empty()) {
        init = clsp::model_from_checkpoint(clsp::load_checkpoint<Real>(init_path));
        init_ptr = &init;
    }
    clsp::run_alignment<Real>(train, test, variant, cfg, init_ptr, out, metrics, &std::cout);
    std::cout << "wrote " << out << " and " << metrics << "\n";
    return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data_path, const std::string& k_list,
             const std::string& out, int queries, std::uint64_t seed) {
    if (queries < 1) throw std::invalid_argument("--queries must be at least 1");
    const std::vector<std::size_t> ks = parse_k_list(k_list);
    nlohmann::json cfg;
    cfg["command"] = "eval";
    cfg["ckpt"] = ckpt_path;
    cfg["data"] = data_path;
    cfg["k"] = ks;
    cfg["queries"] = queries;
    cfg["seed"] = seed;
    cfg["out"] = out;
    echo_config(cfg);
    clsp::Model<Real> model = clsp::model_from_checkpoint(clsp::load_checkpoint<Real>(ckpt_path));
    const clsp::PairDataset data = clsp::read_dataset(data_path, clsp::default_schema());
    if (data.empty()) throw std::invalid_argument("eval: empty dataset");
    const clsp::RetrievalReport rep = eval_retrieval_on(model, data, queries, seed, ks);
    const nlohmann::json report = clsp::report_to_json(rep, cfg, seed);
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write report " + out);
    f << report.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write report " + out);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_probe(const std::string& ckpt_path, bool random_init, const std::string& variant_name,
              const std::string& data_path, const std::string& out, double test_fraction,
              double rff_sigma, clsp::ProbeConfig pcfg) {
    pcfg.validate();
    if (ckpt_path.empty() == !random_init)
        throw std::invalid_argument("probe needs exactly one of --ckpt and --random-init");
    if (random_init && variant_name.empty())
        throw std::invalid_argument("--random-init requires --variant");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("--test-fraction must be in (0,1)");
    if (!(rff_sigma > 0)) throw std::invalid_argument("--rff-sigma must be positive");

    const clsp::StateSchema schema = clsp::default_schema();
    clsp::StateEncoder<Real> enc;
    std::string variant_label = variant_name;
    if (random_init) {
        const clsp::Variant variant = clsp::variant_from_name(variant_name);
        enc = clsp::make_state_encoder<Real>(variant, schema, pcfg.seed);
        if (rff_sigma != 1.0)
            enc.banks = clsp::make_bank_set(schema, variant, pcfg.seed, rff_sigma);
    } else {
        clsp::Model<Real> model =
            clsp::model_from_checkpoint(clsp::load_checkpoint<Real>(ckpt_path));
        enc = std::move(model.state);
        if (variant_label.empty()) variant_label = clsp::variant_name(enc.variant);
    }

    nlohmann::json cfg;
    cfg["command"] = "probe";
    cfg["ckpt"] = ckpt_path;
    cfg["random_init"] = random_init;
    cfg["variant"] = variant_label;
    cfg["data"] = data_path;
    cfg["out"] = out;
    cfg["test_fraction"] = test_fraction;
    cfg["rff_sigma"] = rff_sigma;
    cfg["batch_size"] = pcfg.batch_size;
    cfg["lr"] = pcfg.lr;
    cfg["lr_stage2"] = pcfg.lr_stage2;
    cfg["weight_decay"] = pcfg.weight_decay;
    cfg["epochs_stage1"] = pcfg.epochs_stage1;
    cfg["epochs_stage2"] = pcfg.epochs_stage2;
    cfg["eval_interval"] = pcfg.eval_interval;
    cfg["seed"] = pcfg.seed;
    cfg["loss_samples"] = pcfg.loss_samples;
    echo_config(cfg);

    const clsp::PairDataset pairs = clsp::read_dataset(data_path, schema);
    auto [train, test] = clsp::split_pairs(pairs, test_fraction, pcfg.seed);
    const clsp::ProbeResult<Real> result = clsp::train_probe(enc, train, test, pcfg);
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write report " + out);
    f << "# config " << cfg.dump() << "\n";
    clsp::write_probe_report(f, variant_label, result.held_out);
    if (!f) throw std::runtime_error("cannot write report " + out);
    clsp::write_probe_report(std::cout, variant_label, result.held_out);
    return 0;
}

int run_embed(const std::string& ckpt_path, const std::string& data_path, const std::string& out) {
    const clsp::Checkpoint<Real> ckpt = clsp::load_checkpoint<Real>(ckpt_path);
    clsp::Model<Real> model = clsp::model_from_checkpoint(ckpt);
    nlohmann::json cfg;
    cfg["command"] = "embed";
    cfg["ckpt"] = ckpt_path;
    cfg["data"] = data_path;
    cfg["out"] = out;
    cfg["seed"] = ckpt.meta.seed;
    echo_config(cfg);
    const clsp::PairDataset data = clsp::read_dataset(data_path, clsp::default_schema());
    clsp::export_embeddings(model.state, data, out, "config " + cfg.dump());
    std::cout << "wrote " << data.size() << " embeddings to " << out << "\n";
    return 0;
}

// One pretrain+align pipeline into `dir`; returns the final retrieval report
// on the held-out split. `train_fraction` < 1 subsets the train split.
clsp::RetrievalReport ablate_run(const clsp::PairDataset& train_full,
                                 const clsp::PairDataset& test, clsp::Variant variant,
                                 clsp::RunConfig cfg, double train_fraction,
                                 const std::string& dir) {
    std::filesystem::create_directories(dir);
    clsp::PairDataset train = train_full;
    if (train_fraction < 1.0) {
        std::vector<std::size_t> order =
            clsp::detail::epoch_order(train_full.size(), cfg.seed, "ablate.subset", 0);
        const std::size_t keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(train_full.size() * train_fraction)));
        order.resize(keep);
        train.clear();
        for (std::size_t i : order) train.push_back(train_full[i]);
    }
    clsp::Model<Real> init;
    const clsp::Model<Real>* init_ptr = nullptr;
    if (variant != clsp::Variant::kClipBaseline) {
        init = clsp::run_pretraining<Real>(train, variant, cfg, dir + "/pre.ckpt",
                                           dir + "/pre_metrics.csv", &std::cout);
        init_ptr = &init;
    }
    clsp::Model<Real> model =
        clsp::run_alignment<Real>(train, test, variant, cfg, init_ptr, dir + "/align.ckpt",
                                  dir + "/align_metrics.csv", &std::cout);
    return eval_retrieval_on(model, test, cfg.eval_queries, cfg.seed, {1, 5, 10});
}

int run_ablate(const std::string& mode, const std::string& values_list,
               const std::string& variant_name, const std::string& data_path,
               const std::string& out_dir, clsp::RunConfig cfg) {
    cfg.validate();
    if (mode != "batch" && mode != "data" && mode != "target")
        throw std::invalid_argument("--mode must be one of batch, data, target");
    std::vector<std::string> values;
    {
        std::istringstream is(values_list);
        std::string part;
        while (std::getline(is, part, ','))
            if (!part.empty()) values.push_back(part);
    }
    if (values.empty()) throw std::invalid_argument("--values list is empty");
    const clsp::Variant variant = clsp::variant_from_name(variant_name);
    echo_config(with_paths(cfg, {{"command", "ablate"}, {"mode", mode},
                                 {"values", values_list}, {"variant", variant_name},
                                 {"data", data_path}, {"out_dir", out_dir}}));

    const clsp::PairDataset pairs = clsp::read_dataset(data_path, clsp::default_schema());
    auto [train, test] = clsp::split_pairs(pairs, cfg.test_fraction, cfg.seed);
    std::filesystem::create_directories(out_dir);
    std::ofstream summary(out_dir + "/summary.csv", std::ios::trunc);
    if (!summary) throw std::runtime_error("cannot write " + out_dir + "/summary.csv");
    summary << std::setprecision(10);
    summary << "# config "
            << with_paths(cfg, {{"command", "ablate"}, {"mode", mode},
                                {"values", values_list}, {"variant", variant_name},
                                {"data", data_path}, {"out_dir", out_dir}})
                   .dump()
            << "\n";
    summary << "mode,value,variant,r_at_1,r_at_5,r_at_10\n";

    for (const std::string& value : values) {
        clsp::RunConfig run_cfg = cfg;
        double fraction = 1.0;
        if (mode == "batch") run_cfg.batch_size = clsp::detail::parse_number<int>("batch", value);
        else if (mode == "data") fraction = clsp::detail::parse_number<double>("data", value);
        else run_cfg.target_set = value;
        if (mode == "data" && !(fraction > 0.0 && fraction <= 1.0))
            throw std::invalid_argument("data fraction must be in (0,1], got " + value);
        run_cfg.validate();
        const std::string dir = out_dir + "/" + mode + "_" + value;
        std::cout << "ablate " << mode << "=" << value << " -> " << dir << "\n";
        const clsp::RetrievalReport rep = ablate_run(train, test, variant, run_cfg, fraction, dir);
        summary << mode << ',' << value << ',' << variant_name;
        for (const auto& [k, v] : rep.r_at_k) summary << ',' << v;
        summary << "\n";
        summary.flush();
    }
    std::cout << "wrote " << out_dir << "/summary.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CLSP pipeline: data generation, two-stage training, evaluation"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "synthesize a state/text pair dataset");
    std::size_t gen_n = 0;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    ConfigFlags gen_cf;
    gen->add_option("--n", gen_n, "number of pairs")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output JSONL path")->required();
    gen_cf.attach(gen);

    // Shared training flag bundle for pretrain/align/ablate.
    struct TrainFlags {
        std::string variant;
        std::string data;
        ConfigFlags cf;
        clsp::RunConfig resolve(CLI::App* cmd, int* epochs, int* batch_size, double* lr,
                                std::uint64_t* seed) const {
            clsp::RunConfig cfg = cf.resolve();
            if (cmd->count("--epochs")) {
                if (cmd->get_name() == "pretrain") cfg.pretrain_epochs = *epochs;
                else cfg.epochs = *epochs;
            }
            if (cmd->count("--batch-size")) cfg.batch_size = *batch_size;
            if (cmd->count("--lr")) cfg.lr = *lr;
            if (cmd->count("--seed")) cfg.seed = *seed;
            return cfg;
        }
    };

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "stage-1 classification pre-training");
    TrainFlags pre_f;
    std::string pre_out = "pretrain.ckpt", pre_metrics = "pretrain_metrics.csv";
    std::string pre_target;
    int pre_epochs = 0, pre_batch = 0;
    double pre_lr = 0;
    std::uint64_t pre_seed = 0;
    bool pre_drop_heads = false;
    pre->add_option("--variant", pre_f.variant, "encoder variant")->required();
    pre->add_option("--data", pre_f.data, "training JSONL path")->required();
    pre->add_option("--out", pre_out, "checkpoint path");
    pre->add_option("--metrics", pre_metrics, "metrics CSV path");
    pre->add_option("--epochs", pre_epochs, "pre-training epochs");
    pre->add_option("--batch-size", pre_batch, "batch size");
    pre->add_option("--lr", pre_lr, "learning rate");
    pre->add_option("--seed", pre_seed, "run seed");
    pre->add_option("--target-set", pre_target, "classifier targets: self|team|enemy|all");
    pre->add_flag("--drop-heads", pre_drop_heads, "exclude classifier heads from the checkpoint");
    pre_f.cf.attach(pre);

    // align
    auto* al = app.add_subcommand("align", "stage-2 contrastive alignment");
    TrainFlags al_f;
    std::string al_init, al_out = "align.ckpt", al_metrics = "align_metrics.csv";
    int al_epochs = 0, al_batch = 0;
    double al_lr = 0, al_test_fraction = 0;
    std::uint64_t al_seed = 0;
    al->add_option("--variant", al_f.variant, "encoder variant")->required();
    al->add_option("--data", al_f.data, "pair JSONL path")->required();
    al->add_option("--init", al_init, "pre-training checkpoint to start from");
    al->add_option("--out", al_out, "checkpoint path");
    al->add_option("--metrics", al_metrics, "metrics CSV path");
    al->add_option("--epochs", al_epochs, "alignment epochs");
    al->add_option("--batch-size", al_batch, "contrastive batch size");
    al->add_option("--lr", al_lr, "learning rate");
    al->add_option("--seed", al_seed, "run seed");
    al->add_option("--test-fraction", al_test_fraction, "held-out fraction in (0,1)");
    al_f.cf.attach(al);

    // eval
    auto* ev = app.add_subcommand("eval", "retrieval metrics for a checkpoint");
    std::string ev_ckpt, ev_data, ev_k = "1,5,10", ev_out = "eval_report.json";
    int ev_queries = 1000;
    std::uint64_t ev_seed = 1;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--data", ev_data, "pair JSONL path")->required();
    ev->add_option("--k", ev_k, "comma list of recall cutoffs");
    ev->add_option("--out", ev_out, "JSON report path");
    ev->add_option("--queries", ev_queries, "query subset size");
    ev->add_option("--seed", ev_seed, "query sampling seed");

    // probe
    auto* pr = app.add_subcommand("probe", "connector + regression probe readout");
    std::string pr_ckpt, pr_variant, pr_data, pr_out = "probe_report.csv";
    bool pr_random = false;
    double pr_test_fraction = 0.2, pr_sigma = 1.0;
    clsp::ProbeConfig pr_cfg;
    pr->add_option("--ckpt", pr_ckpt, "checkpoint providing the state encoder");
    pr->add_flag("--random-init", pr_random, "use a randomly initialized encoder");
    pr->add_option("--variant", pr_variant, "variant for --random-init");
    pr->add_option("--data", pr_data, "pair JSONL path")->required();
    pr->add_option("--out", pr_out, "report CSV path");
    pr->add_option("--test-fraction", pr_test_fraction, "held-out fraction in (0,1)");
    pr->add_option("--rff-sigma", pr_sigma, "frequency scale for --random-init");
    pr->add_option("--batch-size", pr_cfg.batch_size, "batch size");
    pr->add_option("--lr", pr_cfg.lr, "stage-1 learning rate");
    pr->add_option("--lr-stage2", pr_cfg.lr_stage2, "stage-2 learning rate");
    pr->add_option("--weight-decay", pr_cfg.weight_decay, "weight decay");
    pr->add_option("--epochs-stage1", pr_cfg.epochs_stage1, "frozen-encoder epochs");
    pr->add_option("--epochs-stage2", pr_cfg.epochs_stage2, "unfrozen-encoder epochs");
    pr->add_option("--eval-interval", pr_cfg.eval_interval, "steps between loss checkpoints");
    pr->add_option("--seed", pr_cfg.seed, "run seed");
    pr->add_option("--loss-samples", pr_cfg.loss_samples, "fixed loss subset size");

    // embed
    auto* em = app.add_subcommand("embed", "export the embedding table");
    std::string em_ckpt, em_data, em_out = "embeddings.csv";
    em->add_option("--ckpt", em_ckpt, "checkpoint path")->required();
    em->add_option("--data", em_data, "pair JSONL path")->required();
    em->add_option("--out", em_out, "output CSV path");

    // ablate
    auto* ab = app.add_subcommand("ablate", "grid of runs varying one knob");
    TrainFlags ab_f;
    std::string ab_mode, ab_values, ab_out_dir;
    int ab_epochs = 0, ab_batch = 0;
    double ab_lr = 0;
    std::uint64_t ab_seed = 0;
    ab->add_option("--mode", ab_mode, "knob to vary: batch|data|target")->required();
    ab->add_option("--values", ab_values, "comma list of knob values")->required();
    ab->add_option("--variant", ab_f.variant, "encoder variant")->default_val("rffm");
    ab->add_option("--data", ab_f.data, "pair JSONL path")->required();
    ab->add_option("--out-dir", ab_out_dir, "output directory")->required();
    ab->add_option("--epochs", ab_epochs, "alignment epochs");
    ab->add_option("--batch-size", ab_batch, "base batch size");
    ab->add_option("--lr", ab_lr, "learning rate");
    ab->add_option("--seed", ab_seed, "run seed");
    ab_f.cf.attach(ab);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_gen_data(gen_n, gen_seed, gen_out, gen_cf);
        if (pre->parsed()) {
            clsp::RunConfig cfg = pre_f.resolve(pre, &pre_epochs, &pre_batch, &pre_lr, &pre_seed);
            if (pre->count("--target-set")) cfg.target_set = pre_target;
            if (pre_drop_heads) cfg.keep_heads = false;
            return run_pretrain(pre_f.variant, pre_f.data, pre_out, pre_metrics, cfg);
        }
        if (al->parsed()) {
            clsp::RunConfig cfg = al_f.resolve(al, &al_epochs, &al_batch, &al_lr, &al_seed);
            if (al->count("--test-fraction")) cfg.test_fraction = al_test_fraction;
            return run_align(al_f.variant, al_f.data, al_init, al_out, al_metrics, cfg);
        }
        if (ev->parsed())
            return run_eval(ev_ckpt, ev_data, ev_k, ev_out, ev_queries, ev_seed);
        if (pr->parsed())
            return run_probe(pr_ckpt, pr_random, pr_variant, pr_data, pr_out, pr_test_fraction,
                             pr_sigma, pr_cfg);
        if (em->parsed()) return run_embed(em_ckpt, em_data, em_out);
        if (ab->parsed()) {
            clsp::RunConfig cfg = ab_f.resolve(ab, &ab_epochs, &ab_batch, &ab_lr, &ab_seed);
            return run_ablate(ab_mode, ab_values, ab_f.variant, ab_f.data, ab_out_dir, cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
