// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. All runs are seeded; re-running reproduces every number.
#include <chrono>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "freqx/concept_experiment.hpp"
#include "freqx/fed.hpp"
#include "freqx/games.hpp"
#include "freqx/report.hpp"

using namespace freqx;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail, double seconds) {
    std::printf("[%s] criterion %2d (%6.2fs): %s\n", pass ? "PASS" : "FAIL", criterion, seconds, detail.c_str());
    if (!pass) ++g_failures;
}

void run(int criterion, const std::function<std::pair<bool, std::string>()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        auto [p, d] = body();
        pass = p;
        detail = d;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(criterion, pass, detail, dt);
}

constexpr std::uint64_t kSeed = 42;

LabeledDataset standardized(LabeledDataset data) {
    Standardizer s;
    s.fit(data.samples);
    s.apply(data.samples);
    return data;
}

// class-dependent constant offset on every feature: the class signal lives at
// DC in the frequency domain, so frequency ranking has a real target
LabeledDataset dc_dataset(std::size_t n, std::size_t d, double offset, double noise, std::uint64_t seed) {
    LabeledDataset out;
    out.class_count = 2;
    out.samples = Mat(n, d);
    out.labels.resize(n);
    for (std::size_t j = 0; j < d; ++j) out.feature_names.push_back("f" + std::to_string(j));
    auto rng = make_rng(seed, "dc");
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = i % 2;
        for (std::size_t j = 0; j < d; ++j) out.samples(i, j) = (c == 0 ? offset : -offset) + noise * g(rng);
        out.labels[i] = c;
    }
    return standardized(std::move(out));
}

std::vector<AttributionMap> freqx_attributions(const DenseNet& net, const LabeledDataset& data, double epsilon) {
    std::vector<AttributionMap> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        out.push_back(attribution_from_transform(explain_sample(net, data.sample(i), epsilon)));
    return out;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// --- criterion 1: Theorem-1 Monte-Carlo suite ------------------------------
std::pair<bool, std::string> criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    // roughly half of random pairs are activated and unbiased; draw enough
    // trials that at least 1000 pairs are actually checked
    auto rep = verify_theorem1(3000, derive_seed(kSeed, "theory"));
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = rep.failed == 0 && rep.checked >= 1000 && dt < 10.0;
    return {pass, fmt("snr_compound > snr_original on %zu/%zu activated unbiased pairs, %zu violations",
                      rep.passed, rep.checked, rep.failed)};
}

// --- criterion 2: spectral identities --------------------------------------
std::pair<bool, std::string> criterion2() {
    auto rng = make_rng(kSeed, "spectral-identities");
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> dim(4, 48);
        std::size_t n = dim(rng);
        Vec x(n), y(n);
        for (auto& v : x) v = g(rng);
        for (auto& v : y) v = g(rng);
        auto sx = dft_1d(x), sy = dft_1d(y);

        // Parseval: sum |X(k)|^2 == N * sum x(t)^2
        double lhs = 0.0, rhs = 0.0;
        for (auto c : sx.coefficients) lhs += std::norm(c);
        for (double v : x) rhs += v * v;
        worst = std::max(worst, std::abs(lhs - double(n) * rhs) / std::max(1.0, std::abs(lhs)));

        // conjugate symmetry of a real signal
        for (std::size_t k = 1; k < n; ++k)
            worst = std::max(worst, std::abs(sx.coefficients[k] - std::conj(sx.coefficients[n - k])));

        // mutual-energy symmetry E^k_xy == E^k_yx
        auto exy = mutual_energy(x, y), eyx = mutual_energy(y, x);
        for (std::size_t k = 0; k < n; ++k)
            worst = std::max(worst, std::abs(exy.per_frequency_mutual[k] - eyx.per_frequency_mutual[k]));

        // naive-DFT oracle agreement
        for (std::size_t k = 0; k < n; ++k) {
            Complex acc{0.0, 0.0};
            for (std::size_t t = 0; t < n; ++t)
                acc += x[t] * std::polar(1.0, -2.0 * M_PI * double(k) * double(t) / double(n));
            worst = std::max(worst, std::abs(acc - sx.coefficients[k]));
        }
    }
    return {worst <= 1e-9, fmt("Parseval/conjugate-symmetry/E-symmetry/oracle worst residual %.3g over 100 signals", worst)};
}

// --- criterion 3: frequency vs time deletion asymmetry ---------------------
std::pair<bool, std::string> criterion3() {
    auto data = dc_dataset(150, 20, 1.0, 1.5, derive_seed(kSeed, "freqdig-data"));
    TrainConfig tc{60, 0.1, 16, derive_seed(kSeed, "freqdig-train")};
    auto net = train(init_net(20, {16}, 2, Activation::ReLU, tc.seed), data, tc);
    auto attrs = freqx_attributions(net, data, 1.0);
    Vec sched{0.0, 0.1};
    auto top = run_game(net, data.samples, attrs, sched, GameMode::DeleteMostImportant, GameDomain::Frequency);
    auto bottom = run_game(net, data.samples, attrs, sched, GameMode::DeleteLeastImportant, GameDomain::Frequency);
    bool flips_ok = top.flip_rate[1] > bottom.flip_rate[1];

    // (b) frequency deletion never raises any per-frequency energy; a
    // constructed time-domain deletion injects energy at a new frequency
    bool freq_clean = true;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vec x = data.sample(i);
        auto ranking = freq_rank(attrs[i].scores);
        auto deleted = freq_delete_fraction(x, ranking, 0.1, GameMode::DeleteMostImportant);
        auto before = dft_1d(x), after = dft_1d(deleted);
        for (std::size_t k = 0; k < x.size(); ++k)
            if (std::abs(after.coefficients[k]) > std::abs(before.coefficients[k]) + 1e-9) freq_clean = false;
    }
    Vec flat(16, 1.0);
    AttributionMap m;
    m.scores.assign(16, 1.0);
    m.ranking.resize(16);
    std::iota(m.ranking.begin(), m.ranking.end(), std::size_t{0});
    auto time_deleted = time_domain_delete(flat, m, 0.07, GameMode::DeleteMostImportant);  // one sample
    auto b0 = dft_1d(flat), a0 = dft_1d(time_deleted);
    bool injected = false;
    for (std::size_t k = 1; k < 16; ++k)
        if (std::abs(a0.coefficients[k]) > std::abs(b0.coefficients[k]) + 1e-9) injected = true;

    return {flips_ok && freq_clean && injected,
            fmt("150 samples: top-10%% freq flips %.3f > bottom-10%% %.3f; freq deletion energy-clean %s; "
                "time deletion injected a new frequency %s",
                top.flip_rate[1], bottom.flip_rate[1], freq_clean ? "yes" : "NO", injected ? "yes" : "NO")};
}

// --- criterion 4: del-ins faithfulness -------------------------------------
std::pair<bool, std::string> criterion4() {
    Vec sched{0.0, 0.2, 0.4, 0.6, 0.8};
    Vec most(sched.size(), 0.0), least(sched.size(), 0.0), rnd(sched.size(), 0.0);
    for (std::uint64_t s = 0; s < 3; ++s) {
        SyntheticSpec spec;
        spec.kind = SyntheticKind::TwoFeatureBlobs;
        spec.n = 150;
        spec.d = 12;
        spec.class_count = 2;
        spec.noise_sigma = 0.6;
        auto data = standardized(generate_synthetic(spec, derive_seed(kSeed, "delins-data-" + std::to_string(s))));
        TrainConfig tc{60, 0.1, 16, derive_seed(kSeed, "delins-train-" + std::to_string(s))};
        auto net = train(init_net(12, {16}, 2, Activation::ReLU, tc.seed), data, tc);
        auto ours = freqx_attributions(net, data, 1.0);
        std::vector<AttributionMap> ctrl;
        for (std::size_t i = 0; i < data.size(); ++i)
            ctrl.push_back(random_attribution(12, derive_seed(kSeed, "delins-ctrl-" + std::to_string(s * 1000 + i))));
        auto m = run_game(net, data.samples, ours, sched, GameMode::DeleteMostImportant, GameDomain::Time);
        auto l = run_game(net, data.samples, ours, sched, GameMode::DeleteLeastImportant, GameDomain::Time);
        auto r = run_game(net, data.samples, ctrl, sched, GameMode::DeleteMostImportant, GameDomain::Time);
        for (std::size_t i = 0; i < sched.size(); ++i) {
            most[i] += m.mean_prob[i] / 3.0;
            least[i] += l.mean_prob[i] / 3.0;
            rnd[i] += r.mean_prob[i] / 3.0;
        }
    }
    bool pass = true;
    for (std::size_t i = 1; i < sched.size(); ++i) {  // fractions 0.2 .. 0.8
        if (most[i] > rnd[i]) pass = false;
        if (least[i] < rnd[i]) pass = false;
    }
    return {pass, fmt("mean prob at fractions 0.2..0.8 — DeleteMost: %.3f..%.3f <= random: %.3f..%.3f <= "
                      "DeleteLeast: %.3f..%.3f (3 seeds)",
                      most[1], most.back(), rnd[1], rnd.back(), least[1], least.back())};
}

// --- criterion 5: epsilon trend --------------------------------------------
std::pair<bool, std::string> criterion5() {
    ConceptExperimentConfig cfg;
    auto sweep = epsilon_sweep(cfg, {1.0, 10.0, 100.0}, 5, kSeed);
    bool pass = sweep.spearman_eps_N >= 0.0;
    return {pass, fmt("mean N over eps {1,10,100} = {%.2f, %.2f, %.2f}, Spearman(eps, N) = %.3f >= 0",
                      sweep.mean_N[0], sweep.mean_N[1], sweep.mean_N[2], sweep.spearman_eps_N)};
}

// --- criterion 6: concept ablation ordering --------------------------------
std::pair<bool, std::string> criterion6() {
    ConceptExperimentConfig cfg;
    auto res = run_concept_study(cfg, 15, kSeed);
    bool pass = res.full.N > res.g1.N && res.full.N > res.g2.N;
    return {pass, fmt("mean N over 15 repetitions: full %.2f > g1 %.2f and > g2 %.2f", res.full.N, res.g1.N, res.g2.N)};
}

// --- criterion 7: fed step 1, top-k retraining -----------------------------
std::pair<bool, std::string> criterion7() {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::PlantedSignal;
    spec.n = 200;
    spec.d = 30;
    spec.class_count = 2;
    spec.noise_sigma = 0.3;
    spec.informative_indices = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto data = generate_synthetic(spec, derive_seed(kSeed, "retrain-data"));
    RetrainConfig cfg;
    cfg.k = 10;
    cfg.repetitions = 3;
    cfg.hidden = {16};
    cfg.pretrain = TrainConfig{40, 0.1, 16, 0};
    cfg.retrain = TrainConfig{30, 0.1, 16, 0};
    auto curves = topk_retrain_experiment(data, cfg, derive_seed(kSeed, "retrain-run"));
    bool pass = curves.top_k.back() >= curves.random_k.back();
    return {pass, fmt("final test accuracy over 3 repetitions: top-10 %.3f >= random-10 %.3f (all features %.3f)",
                      curves.top_k.back(), curves.random_k.back(), curves.all_features.back())};
}

// --- criterion 8: fed step 2, contribution overlap -------------------------
std::pair<bool, std::string> criterion8() {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::PlantedSignal;
    spec.n = 300;
    spec.d = 9;
    spec.class_count = 2;
    spec.noise_sigma = 0.3;
    spec.informative_indices = {0, 1, 2, 3};
    auto data = generate_synthetic(spec, derive_seed(kSeed, "fed-data"));
    FedConfig cfg;
    cfg.clients = 3;
    cfg.repetitions = 20;
    cfg.hidden = {16};
    cfg.trainer = TrainConfig{60, 0.1, 16, 0};
    auto res = fed_experiment(data, cfg, derive_seed(kSeed, "fed-run"));

    // exhaustive S3 x S3 random baseline is exactly 1
    std::vector<std::size_t> p{0, 1, 2};
    std::vector<std::vector<std::size_t>> perms;
    do {
        perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    double baseline = 0.0;
    for (const auto& a : perms)
        for (const auto& b : perms) {
            std::size_t fixed = 0;
            for (std::size_t i = 0; i < 3; ++i)
                if (a[i] == b[i]) ++fixed;
            baseline += double(fixed);
        }
    baseline /= 36.0;
    bool pass = res.mean_overlap > 1.0 && baseline == 1.0;
    return {pass, fmt("mean overlap_count %.3f > 1.0 over 20 repetitions; exhaustive S3xS3 baseline = %.6f",
                      res.mean_overlap, baseline)};
}

// --- criterion 9: Shapley oracle -------------------------------------------
std::pair<bool, std::string> criterion9() {
    // efficiency on random tables
    auto rng = make_rng(kSeed, "shapley-tables");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 2 + static_cast<std::size_t>(trial % 4);
        Vec table(std::size_t{1} << n);
        for (auto& v : table) v = u(rng);
        auto phi = shapley_from_table(table, n);
        double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
        worst = std::max(worst, std::abs(sum - (table.back() - table.front())));
    }
    bool efficiency_ok = worst <= 1e-9;

    // hand table: v = [0, 1, 2, 4] -> phi = (1.5, 2.5)
    auto hand = shapley_from_table({0.0, 1.0, 2.0, 4.0}, 2);
    bool hand_ok = hand[0] == 1.5 && hand[1] == 2.5;

    // symmetry: two clients hold identical copies of the same feature; with a
    // shared training seed, their coalition values and Shapley values coincide
    SyntheticSpec spec;
    spec.kind = SyntheticKind::PlantedSignal;
    spec.n = 80;
    spec.d = 3;
    spec.class_count = 2;
    spec.noise_sigma = 0.3;
    spec.informative_indices = {0};
    auto data = generate_synthetic(spec, derive_seed(kSeed, "shapley-data"));
    for (std::size_t i = 0; i < data.size(); ++i) data.samples(i, 1) = data.samples(i, 0);  // duplicate feature
    auto split = split_dataset(data, 0.3, derive_seed(kSeed, "shapley-split"));
    standardize(split);
    ClientPartition part;
    part.clients = {{0}, {1}, {2}};
    auto phi = shapley_exact(split, part, [&](const std::vector<std::size_t>& feats) {
        TrainConfig tc{25, 0.1, 16, derive_seed(kSeed, "shapley-train")};
        auto net = train(init_net(feats.size(), {8}, 2, Activation::ReLU, tc.seed), split.train.select_features(feats),
                         tc);
        return accuracy(net, split.test.select_features(feats));
    });
    bool symmetry_ok = std::abs(phi[0] - phi[1]) <= 1e-9;

    return {efficiency_ok && hand_ok && symmetry_ok,
            fmt("efficiency residual %.3g <= 1e-9; hand table exact %s; twin clients phi (%.4f, %.4f) equal %s", worst,
                hand_ok ? "yes" : "NO", phi[0], phi[1], symmetry_ok ? "yes" : "NO")};
}

// --- criterion 10: byte-for-byte determinism -------------------------------
std::pair<bool, std::string> criterion10() {
    auto run_once = [&](const std::string& dir) {
        ensure_output_dir(dir);
        SyntheticSpec spec;
        spec.kind = SyntheticKind::TwoFeatureBlobs;
        spec.n = 80;
        spec.d = 10;
        spec.class_count = 2;
        spec.noise_sigma = 0.6;
        auto data = standardized(generate_synthetic(spec, derive_seed(kSeed, "determinism-data")));
        TrainConfig tc{40, 0.1, 16, derive_seed(kSeed, "determinism-train")};
        auto net = train(init_net(10, {12}, 2, Activation::ReLU, tc.seed), data, tc);
        auto attrs = freqx_attributions(net, data, 1.0);
        Vec sched{0.0, 0.25, 0.5, 0.75, 1.0};
        auto curve = run_game(net, data.samples, attrs, sched, GameMode::DeleteMostImportant, GameDomain::Time);

        CsvTable table;
        table.header = {"fraction", "mean_prob", "flip_rate"};
        for (std::size_t i = 0; i < sched.size(); ++i)
            table.add_row({curve.fractions[i], curve.mean_prob[i], curve.flip_rate[i]});
        write_csv(table, dir + "/curve.csv");
        save_csv(data, dir + "/dataset.csv");
        write_manifest(dir + "/manifest.json",
                       {{"seed", kSeed}, {"experiment", "delins"}, {"model_hash", model_hash(net)}});
    };
    std::string base = (std::filesystem::temp_directory_path() / "freqx-acceptance").string();
    run_once(base + "/run1");
    run_once(base + "/run2");
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool same = true;
    for (const char* f : {"/curve.csv", "/dataset.csv", "/manifest.json"}) {
        auto a = slurp(base + "/run1" + f), b = slurp(base + "/run2" + f);
        if (a.empty() || a != b) same = false;
    }
    return {same, fmt("re-run with the same seed: curve.csv, dataset.csv, manifest.json byte-identical: %s",
                      same ? "yes" : "NO")};
}

}  // namespace

int main() {
    run(1, criterion1);
    run(2, criterion2);
    run(3, criterion3);
    run(4, criterion4);
    run(5, criterion5);
    run(6, criterion6);
    run(7, criterion7);
    run(8, criterion8);
    run(9, criterion9);
    run(10, criterion10);
    if (g_failures == 0) {
        std::printf("acceptance: all 10 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
    return 1;
}
