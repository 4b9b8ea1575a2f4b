// freqx command-line surface: every experiment is seeded, config-driven and
// writes CSV/SVG reports plus a manifest sufficient to reproduce the run.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freqx/concept_experiment.hpp"
#include "freqx/fed.hpp"
#include "freqx/games.hpp"
#include "freqx/report.hpp"

using namespace freqx;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 42;
    double epsilon = 1.0;
    bool epsilon_given = false;
    bool seed_given = false;
    std::string out_dir = "out";
    bool allow_zero_epsilon = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, double default_epsilon) {
    opts.epsilon = default_epsilon;
    cmd->add_option("--config", opts.config_path, "JSON configuration file; flags override its values");
    cmd->add_option("--seed", opts.seed, "root random seed (all randomness derives from it)");
    cmd->add_option("--epsilon", opts.epsilon, "augmentation coefficient");
    cmd->add_option("--out", opts.out_dir, "output directory");
}

json load_config(CommonOpts& opts, CLI::App* cmd) {
    json cfg = json::object();
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        if (!in) throw std::runtime_error("cannot open config file: " + opts.config_path);
        in >> cfg;
    }
    // flags win over the config file
    if (cmd->count("--seed") == 0 && cfg.contains("seed")) opts.seed = cfg["seed"].get<std::uint64_t>();
    if (cmd->count("--epsilon") == 0 && cfg.contains("epsilon")) opts.epsilon = cfg["epsilon"].get<double>();
    if (cmd->count("--out") == 0 && cfg.contains("out")) opts.out_dir = cfg["out"].get<std::string>();
    return cfg;
}

void check_epsilon(const CommonOpts& opts, bool zero_allowed) {
    if (opts.epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
    if (opts.epsilon == 0.0 && !(zero_allowed && opts.allow_zero_epsilon))
        throw std::invalid_argument("epsilon must be > 0 (pass --allow-zero-epsilon with `explain` to permit 0)");
}

SyntheticKind kind_from_string(const std::string& s) {
    if (s == "TwoFeatureBlobs") return SyntheticKind::TwoFeatureBlobs;
    if (s == "PlantedSignal") return SyntheticKind::PlantedSignal;
    if (s == "ConceptBlocks") return SyntheticKind::ConceptBlocks;
    throw std::invalid_argument("unknown synthetic kind: " + s);
}

// dataset block: {"path": "...", "label_column": "...", "categorical": [...]}
// or {"synthetic": {"kind": ..., "n": ..., "d": ...,
// "class_count": ..., "noise_sigma": ..., "informative_indices": [...],
// "block_size": ...}}. `fallback` fills anything unspecified.
LabeledDataset load_data(const json& cfg, const SyntheticSpec& fallback, std::uint64_t seed) {
    const json data_cfg = cfg.value("dataset", json::object());
    if (data_cfg.contains("path")) {
        CsvConfig cc;
        cc.label_column = data_cfg.value("label_column", std::string("label"));
        for (const auto& c : data_cfg.value("categorical", std::vector<std::string>{})) cc.categorical_columns.push_back(c);
        return load_csv(data_cfg["path"].get<std::string>(), cc);
    }
    SyntheticSpec spec = fallback;
    const json syn = data_cfg.value("synthetic", json::object());
    if (syn.contains("kind")) spec.kind = kind_from_string(syn["kind"].get<std::string>());
    spec.n = syn.value("n", spec.n);
    spec.d = syn.value("d", spec.d);
    spec.class_count = syn.value("class_count", spec.class_count);
    spec.noise_sigma = syn.value("noise_sigma", spec.noise_sigma);
    spec.block_size = syn.value("block_size", spec.block_size);
    if (syn.contains("informative_indices"))
        spec.informative_indices = syn["informative_indices"].get<std::vector<std::size_t>>();
    return generate_synthetic(spec, derive_seed(seed, "dataset"));
}

TrainConfig trainer_from(const json& cfg, std::uint64_t seed, std::size_t default_epochs = 60) {
    const json t = cfg.value("trainer", json::object());
    TrainConfig tc;
    tc.epochs = t.value("epochs", default_epochs);
    tc.learning_rate = t.value("learning_rate", 0.1);
    tc.batch_size = t.value("batch_size", std::size_t{16});
    tc.weight_decay = t.value("weight_decay", 0.0);
    tc.seed = derive_seed(seed, "train");
    return tc;
}

std::vector<std::size_t> hidden_from(const json& cfg, std::vector<std::size_t> def = {64, 64}) {
    if (cfg.contains("hidden")) return cfg["hidden"].get<std::vector<std::size_t>>();
    return def;
}

void write_run_manifest(const CommonOpts& opts, const std::string& experiment, const json& cfg,
                        const std::optional<std::string>& model_hash_hex = std::nullopt) {
    json m{{"experiment", experiment}, {"seed", opts.seed}, {"epsilon", opts.epsilon}, {"out", opts.out_dir},
           {"config", cfg}};
    if (model_hash_hex) m["model_hash"] = *model_hash_hex;
    write_manifest(opts.out_dir + "/manifest.json", m);
}

Vec schedule_from(const json& cfg) {
    if (cfg.contains("fractions")) return cfg["fractions"].get<Vec>();
    return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

std::vector<AttributionMap> attributions_for(const DenseNet& net, const LabeledDataset& data, double epsilon) {
    std::vector<AttributionMap> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        out.push_back(attribution_from_transform(explain_sample(net, data.sample(i), epsilon)));
    return out;
}

void write_curves_csv(const std::string& path, const Vec& fractions,
                      const std::vector<std::pair<std::string, const DeletionCurve*>>& curves) {
    CsvTable t;
    t.header = {"fraction"};
    for (const auto& [name, c] : curves) {
        t.header.push_back(name + "_mean_prob");
        t.header.push_back(name + "_flip_rate");
    }
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        Vec row{fractions[i]};
        for (const auto& [name, c] : curves) {
            row.push_back(c->mean_prob[i]);
            row.push_back(c->flip_rate[i]);
        }
        t.add_row(row);
    }
    write_csv(t, path);
}

// --------------------------------------------------------------------------
// subcommands

int cmd_train(CommonOpts& opts, CLI::App* cmd) {
    auto cfg = load_config(opts, cmd);
    check_epsilon(opts, false);
    ensure_output_dir(opts.out_dir);
    SyntheticSpec fallback;
    fallback.kind = SyntheticKind::TwoFeatureBlobs;
    fallback.n = 200;
    fallback.d = 12;
    fallback.noise_sigma = 0.6;
    auto data = load_data(cfg, fallback, opts.seed);
    auto split = split_dataset(data, cfg.value("test_fraction", 0.3), derive_seed(opts.seed, "split"));
    standardize(split);

    auto tc = trainer_from(cfg, opts.seed);
    auto hidden = hidden_from(cfg);
    Vec train_acc, test_acc;
    auto net = train(init_net(data.dim(), hidden, data.class_count, Activation::ReLU, tc.seed), split.train, tc,
                     [&](std::size_t, const DenseNet& n) {
                         train_acc.push_back(accuracy(n, split.train));
                         test_acc.push_back(accuracy(n, split.test));
                     });
    save_checkpoint(net, opts.out_dir + "/model.json");

    CsvTable t;
    t.header = {"epoch", "train_accuracy", "test_accuracy"};
    for (std::size_t e = 0; e < train_acc.size(); ++e) t.add_row({double(e), train_acc[e], test_acc[e]});
    write_csv(t, opts.out_dir + "/training.csv");
    Vec epochs(train_acc.size());
    std::iota(epochs.begin(), epochs.end(), 0.0);
    write_svg_lines(opts.out_dir + "/training.svg", epochs, {{"train", train_acc}, {"test", test_acc}},
                    "training accuracy");
    write_run_manifest(opts, "train", cfg, model_hash(net));
    std::printf("train: final train accuracy %.4f, test accuracy %.4f, model written to %s/model.json\n",
                train_acc.back(), test_acc.back(), opts.out_dir.c_str());
    return 0;
}

int cmd_explain(CommonOpts& opts, CLI::App* cmd, const std::string& model_path) {
    auto cfg = load_config(opts, cmd);
    check_epsilon(opts, true);
    ensure_output_dir(opts.out_dir);
    if (model_path.empty()) throw std::invalid_argument("explain requires --model <checkpoint.json>");
    auto net = load_checkpoint(model_path);
    SyntheticSpec fallback;
    fallback.kind = SyntheticKind::TwoFeatureBlobs;
    fallback.n = 50;
    fallback.d = net.layers.front().weights.cols;
    fallback.noise_sigma = 0.6;
    auto data = load_data(cfg, fallback, opts.seed);
    if (data.dim() != net.layers.front().weights.cols)
        throw std::invalid_argument("dataset dimension does not match the checkpoint input width");

    CsvTable scores, transformed;
    scores.header = {"sample"};
    transformed.header = {"sample"};
    for (const auto& name : data.feature_names) {
        scores.header.push_back("score_" + name);
        transformed.header.push_back("xprime_" + name);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto record = explain_sample(net, data.sample(i), opts.epsilon);
        auto attr = attribution_from_transform(record);
        Vec srow{double(i)}, trow{double(i)};
        for (std::size_t j = 0; j < data.dim(); ++j) {
            srow.push_back(attr.scores[j]);
            trow.push_back(record.input_space_x_prime[j]);
        }
        scores.add_row(srow);
        transformed.add_row(trow);
    }
    write_csv(scores, opts.out_dir + "/attributions.csv");
    write_csv(transformed, opts.out_dir + "/transformed.csv");
    write_run_manifest(opts, "explain", cfg, model_hash(net));
    std::printf("explain: wrote attributions for %zu samples to %s/attributions.csv\n", data.size(),
                opts.out_dir.c_str());
    return 0;
}

int run_deletion_games(CommonOpts& opts, CLI::App* cmd, GameDomain domain, const char* name) {
    auto cfg = load_config(opts, cmd);
    check_epsilon(opts, false);
    ensure_output_dir(opts.out_dir);
    SyntheticSpec fallback;
    fallback.kind = SyntheticKind::TwoFeatureBlobs;
    fallback.n = 150;
    fallback.d = 12;
    fallback.noise_sigma = 0.6;
    auto data = load_data(cfg, fallback, opts.seed);
    Standardizer st;
    st.fit(data.samples);
    st.apply(data.samples);
    auto tc = trainer_from(cfg, opts.seed);
    auto net = train(init_net(data.dim(), hidden_from(cfg, {16}), data.class_count, Activation::ReLU, tc.seed), data,
                     tc);
    auto ours = attributions_for(net, data, opts.epsilon);
    std::vector<AttributionMap> ctrl;
    for (std::size_t i = 0; i < data.size(); ++i)
        ctrl.push_back(random_attribution(data.dim(), derive_seed(opts.seed, "control-" + std::to_string(i))));

    Vec sched = schedule_from(cfg);
    auto most = run_game(net, data.samples, ours, sched, GameMode::DeleteMostImportant, domain);
    auto least = run_game(net, data.samples, ours, sched, GameMode::DeleteLeastImportant, domain);
    auto random_curve = run_game(net, data.samples, ctrl, sched, GameMode::DeleteMostImportant, domain);
    write_curves_csv(opts.out_dir + "/curves.csv", sched,
                     {{"delete_most", &most}, {"delete_least", &least}, {"random", &random_curve}});
    write_svg_lines(opts.out_dir + "/curves.svg", sched,
                    {{"delete_most", most.mean_prob}, {"delete_least", least.mean_prob},
                     {"random", random_curve.mean_prob}},
                    name);
    write_run_manifest(opts, name, cfg, model_hash(net));
    std::printf("%s: accuracy %.4f; curves for %zu fractions written to %s/curves.csv\n", name, accuracy(net, data),
                sched.size(), opts.out_dir.c_str());
    return 0;
}

int cmd_concepts(CommonOpts& opts, CLI::App* cmd) {
    auto cfg = load_config(opts, cmd);
    check_epsilon(opts, false);
    ensure_output_dir(opts.out_dir);
    ConceptExperimentConfig cc;
    cc.epsilon = opts.epsilon;
    cc.samples = cfg.value("samples", cc.samples);
    cc.blocks = cfg.value("blocks", cc.blocks);
    cc.block_size = cfg.value("block_size", cc.block_size);
    cc.class_count = cfg.value("class_count", cc.class_count);
    cc.noise_sigma = cfg.value("noise_sigma", cc.noise_sigma);
    cc.top_n = cfg.value("top_n", cc.top_n);
    cc.restarts = cfg.value("restarts", cc.restarts);
    std::size_t repetitions = cfg.value("repetitions", std::size_t{15});

    auto res = run_concept_study(cc, repetitions, opts.seed);
    CsvTable t;
    t.header = {"pipeline_id", "mean_N", "mean_M", "hit_rate", "max_N", "max_M", "max_hit_rate"};
    const OverlapReport* reports[] = {&res.full, &res.g1, &res.g2};
    for (std::size_t i = 0; i < 3; ++i)
        t.add_row({double(i), reports[i]->N, reports[i]->M, reports[i]->hit_rate, reports[i]->max_N, reports[i]->max_M,
                   reports[i]->max_hit_rate});
    write_csv(t, opts.out_dir + "/concepts.csv");

    Vec eps_grid = cfg.contains("epsilon_grid") ? cfg["epsilon_grid"].get<Vec>() : Vec{1.0, 10.0, 100.0};
    auto sweep = epsilon_sweep(cc, eps_grid, cfg.value("sweep_repetitions", std::size_t{5}), opts.seed);
    CsvTable s;
    s.header = {"epsilon", "mean_N", "mean_M", "mean_hit_rate"};
    for (std::size_t i = 0; i < eps_grid.size(); ++i)
        s.add_row({sweep.epsilons[i], sweep.mean_N[i], sweep.mean_M[i], sweep.mean_hit[i]});
    write_csv(s, opts.out_dir + "/epsilon_sweep.csv");
    write_svg_lines(opts.out_dir + "/epsilon_sweep.svg", sweep.epsilons, {{"mean_N", sweep.mean_N}}, "epsilon sweep");
    write_run_manifest(opts, "concepts", cfg);
    std::printf("concepts: full N %.3f, g1 N %.3f, g2 N %.3f over %zu repetitions; "
                "Spearman(epsilon, N) %.3f over grid of %zu\n",
                res.full.N, res.g1.N, res.g2.N, repetitions, sweep.spearman_eps_N, eps_grid.size());
    return 0;
}

int cmd_fed_step1(CommonOpts& opts, CLI::App* cmd) {
    auto cfg = load_config(opts, cmd);
    check_epsilon(opts, false);
    ensure_output_dir(opts.out_dir);
    SyntheticSpec fallback;
    fallback.kind = SyntheticKind::PlantedSignal;
    fallback.n = 200;
    fallback.d = 30;
    fallback.noise_sigma = 0.3;
    fallback.informative_indices = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto data = load_data(cfg, fallback, opts.seed);

    RetrainConfig rc;
    rc.k = cfg.value("k", std::size_t{10});
    rc.repetitions = cfg.value("repetitions", std::size_t{3});
    rc.hidden = hidden_from(cfg, {16});
    rc.pretrain = trainer_from(cfg, opts.seed, 40);
    rc.retrain = trainer_from(cfg, opts.seed, 30);
    rc.epsilon = opts.epsilon;
    rc.test_fraction = cfg.value("test_fraction", 0.3);
    auto curves = topk_retrain_experiment(data, rc, derive_seed(opts.seed, "fed-step1"));

    CsvTable t;
    t.header = {"epoch", "all_features", "top_k", "random_k"};
    for (std::size_t e = 0; e < curves.top_k.size(); ++e)
        t.add_row({double(e), curves.all_features[e], curves.top_k[e], curves.random_k[e]});
    write_csv(t, opts.out_dir + "/retrain.csv");
    Vec epochs(curves.top_k.size());
    std::iota(epochs.begin(), epochs.end(), 0.0);
    write_svg_lines(opts.out_dir + "/retrain.svg", epochs,
                    {{"all_features", curves.all_features}, {"top_k", curves.top_k}, {"random_k", curves.random_k}},
                    "top-k retraining");
    write_run_manifest(opts, "fed-step1", cfg);
    std::printf("fed-step1: final accuracy all %.4f, top-%zu %.4f, random-%zu %.4f over %zu repetitions\n",
                curves.all_features.back(), rc.k, curves.top_k.back(), rc.k, curves.random_k.back(), rc.repetitions);
    return 0;
}

int cmd_fed_step2(CommonOpts& opts, CLI::App* cmd) {
    auto cfg = load_config(opts, cmd);
    check_epsilon(opts, false);
    ensure_output_dir(opts.out_dir);
    SyntheticSpec fallback;
    fallback.kind = SyntheticKind::PlantedSignal;
    fallback.n = 300;
    fallback.d = 9;
    fallback.noise_sigma = 0.3;
    fallback.informative_indices = {0, 1, 2, 3};
    auto data = load_data(cfg, fallback, opts.seed);

    FedConfig fc;
    fc.clients = cfg.value("clients", std::size_t{3});
    fc.repetitions = cfg.value("repetitions", std::size_t{20});
    fc.hidden = hidden_from(cfg, {16});
    fc.trainer = trainer_from(cfg, opts.seed);
    fc.epsilon = opts.epsilon;
    fc.test_fraction = cfg.value("test_fraction", 0.3);
    auto res = fed_experiment(data, fc, derive_seed(opts.seed, "fed-step2"));

    CsvTable t;
    t.header = {"repetition", "overlap_count"};
    for (std::size_t r = 0; r < res.overlaps.size(); ++r) t.add_row({double(r), res.overlaps[r]});
    write_csv(t, opts.out_dir + "/overlaps.csv");
    write_run_manifest(opts, "fed-step2", cfg);
    std::printf("fed-step2: mean ranking overlap %.4f over %zu repetitions of %zu clients\n", res.mean_overlap,
                fc.repetitions, fc.clients);
    return 0;
}

int cmd_verify_theory(CommonOpts& opts, CLI::App* cmd) {
    auto cfg = load_config(opts, cmd);
    ensure_output_dir(opts.out_dir);
    std::size_t trials = cfg.value("trials", std::size_t{1000});
    auto rep = verify_theorem1(trials, derive_seed(opts.seed, "theory"));
    CsvTable t;
    t.header = {"checked", "passed", "failed", "skipped_degenerate", "skipped_inactive"};
    t.add_row({double(rep.checked), double(rep.passed), double(rep.failed), double(rep.skipped_degenerate),
               double(rep.skipped_inactive)});
    write_csv(t, opts.out_dir + "/theory.csv");
    write_run_manifest(opts, "verify-theory", cfg);
    std::printf("verify-theory: %zu/%zu activated unbiased pairs satisfied snr_compound > snr_original "
                "(%zu violations, %zu degenerate skipped, %zu inactive skipped)\n",
                rep.passed, rep.checked, rep.failed, rep.skipped_degenerate, rep.skipped_inactive);
    return rep.failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"freqx: frequency-domain neural-network explanation toolkit"};
    app.require_subcommand(1);

    CommonOpts train_opts, explain_opts, delins_opts, freqdig_opts, concepts_opts, fed1_opts, fed2_opts, theory_opts;
    std::string model_path;

    auto* train_cmd = app.add_subcommand("train", "train an MLP and write a checkpoint");
    add_common(train_cmd, train_opts, 1.0);

    auto* explain_cmd = app.add_subcommand("explain", "per-sample attributions and transformed samples");
    add_common(explain_cmd, explain_opts, 1.0);
    explain_cmd->add_option("--model", model_path, "model checkpoint to explain");
    explain_cmd->add_flag("--allow-zero-epsilon", explain_opts.allow_zero_epsilon,
                          "permit epsilon == 0 (identity transform)");

    auto* delins_cmd = app.add_subcommand("delins", "time-domain deletion/insertion game");
    add_common(delins_cmd, delins_opts, 1.0);

    auto* freqdig_cmd = app.add_subcommand("freqdig", "frequency-domain deletion game");
    add_common(freqdig_cmd, freqdig_opts, 1.0);

    auto* concepts_cmd = app.add_subcommand("concepts", "concept clustering study with ablations");
    add_common(concepts_cmd, concepts_opts, 100.0);

    auto* fed1_cmd = app.add_subcommand("fed-step1", "top-k feature selection and retraining");
    add_common(fed1_cmd, fed1_opts, 1000.0);

    auto* fed2_cmd = app.add_subcommand("fed-step2", "client contribution vs exact Shapley");
    add_common(fed2_cmd, fed2_opts, 1000.0);

    auto* theory_cmd = app.add_subcommand("verify-theory", "Monte-Carlo check of the SNR theorem");
    add_common(theory_cmd, theory_opts, 1.0);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_opts, train_cmd);
        if (explain_cmd->parsed()) return cmd_explain(explain_opts, explain_cmd, model_path);
        if (delins_cmd->parsed()) return run_deletion_games(delins_opts, delins_cmd, GameDomain::Time, "delins");
        if (freqdig_cmd->parsed()) return run_deletion_games(freqdig_opts, freqdig_cmd, GameDomain::Frequency, "freqdig");
        if (concepts_cmd->parsed()) return cmd_concepts(concepts_opts, concepts_cmd);
        if (fed1_cmd->parsed()) return cmd_fed_step1(fed1_opts, fed1_cmd);
        if (fed2_cmd->parsed()) return cmd_fed_step2(fed2_opts, fed2_cmd);
        if (theory_cmd->parsed()) return cmd_verify_theory(theory_opts, theory_cmd);
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << '\n';
        return 1;
    }
    return 0;
}
