#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqx/dataset.hpp"
#include "freqx/explain.hpp"
#include "freqx/linalg.hpp"
#include "freqx/nn.hpp"
#include "freqx/rng.hpp"

namespace freqx {

struct FeatureImportance {
    Mat per_class_mean_delta;  // class x feature, the v_c vectors
    Vec scores;                // s_j = |prod_c v_cj|
    std::vector<std::size_t> top_k;
};

// v_c = mean over class-c samples of (x' - x) in input space; s_j is the
// absolute product over classes.
inline FeatureImportance aggregate_importance(const DenseNet& net, const LabeledDataset& data, double epsilon,
                                              std::size_t k = 10) {
    data.validate();
    FeatureImportance imp;
    imp.per_class_mean_delta = Mat(data.class_count, data.dim());
    std::vector<std::size_t> counts(data.class_count, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vec x = data.sample(i);
        auto record = explain_sample(net, x, epsilon);
        std::size_t c = data.labels[i];
        ++counts[c];
        for (std::size_t j = 0; j < data.dim(); ++j)
            imp.per_class_mean_delta(c, j) += record.input_space_x_prime[j] - x[j];
    }
    for (std::size_t c = 0; c < data.class_count; ++c) {
        if (counts[c] == 0) throw std::invalid_argument("aggregate_importance: class with zero samples");
        for (std::size_t j = 0; j < data.dim(); ++j) imp.per_class_mean_delta(c, j) /= static_cast<double>(counts[c]);
    }
    imp.scores.assign(data.dim(), 1.0);
    for (std::size_t j = 0; j < data.dim(); ++j) {
        double p = 1.0;
        for (std::size_t c = 0; c < data.class_count; ++c) p *= imp.per_class_mean_delta(c, j);
        imp.scores[j] = std::abs(p);
    }
    auto order = rank_descending(imp.scores);
    imp.top_k.assign(order.begin(), order.begin() + std::min(k, order.size()));
    return imp;
}

// ---------------------------------------------------------------------------
// Step 1: feature selection and retraining

struct RetrainCurves {
    Vec all_features;     // per-epoch test accuracy, mean over repetitions
    Vec top_k;
    Vec random_k;
    std::vector<std::size_t> selected_top;     // from the last repetition
    std::vector<std::size_t> selected_random;
};

struct RetrainConfig {
    std::size_t k = 10;
    std::size_t repetitions = 3;
    std::vector<std::size_t> hidden = {64, 64};
    TrainConfig pretrain;
    TrainConfig retrain;
    double epsilon = 1000.0;
    double test_fraction = 0.3;
};

inline RetrainCurves topk_retrain_experiment(const LabeledDataset& data, const RetrainConfig& config,
                                             std::uint64_t seed) {
    if (data.dim() <= config.k) throw std::invalid_argument("topk_retrain: dataset needs more than k features");
    RetrainCurves curves;
    curves.all_features.assign(config.retrain.epochs, 0.0);
    curves.top_k.assign(config.retrain.epochs, 0.0);
    curves.random_k.assign(config.retrain.epochs, 0.0);

    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        std::uint64_t rep_seed = derive_seed(seed, "retrain-rep-" + std::to_string(rep));
        auto split = split_dataset(data, config.test_fraction, rep_seed);
        standardize(split);

        TrainConfig pre = config.pretrain;
        pre.seed = derive_seed(rep_seed, "pretrain");
        auto net = train(init_net(data.dim(), config.hidden, data.class_count, Activation::ReLU, pre.seed),
                         split.train, pre);
        auto imp = aggregate_importance(net, split.train, config.epsilon, config.k);
        curves.selected_top = imp.top_k;

        std::vector<std::size_t> all(data.dim());
        std::iota(all.begin(), all.end(), std::size_t{0});
        auto rng = make_rng(rep_seed, "random-k");
        std::shuffle(all.begin(), all.end(), rng);
        curves.selected_random.assign(all.begin(), all.begin() + config.k);

        auto run = [&](const std::vector<std::size_t>& feats, Vec& acc_out) {
            auto tr = split.train.select_features(feats);
            auto te = split.test.select_features(feats);
            TrainConfig rt = config.retrain;
            rt.seed = derive_seed(rep_seed, "retrain");
            train(init_net(feats.size(), config.hidden, data.class_count, Activation::ReLU, rt.seed), tr, rt,
                  [&](std::size_t epoch, const DenseNet& n) { acc_out[epoch] += accuracy(n, te); });
        };
        std::vector<std::size_t> everything(data.dim());
        std::iota(everything.begin(), everything.end(), std::size_t{0});
        run(everything, curves.all_features);
        run(curves.selected_top, curves.top_k);
        run(curves.selected_random, curves.random_k);
    }
    for (auto* v : {&curves.all_features, &curves.top_k, &curves.random_k})
        for (auto& a : *v) a /= static_cast<double>(config.repetitions);
    return curves;
}

// ---------------------------------------------------------------------------
// Step 2: vertical-FL contribution vs exact Shapley

struct ClientPartition {
    std::vector<std::vector<std::size_t>> clients;  // disjoint feature-index sets
    std::uint64_t seed = 0;
};

// Evenly and randomly allocate feature units to clients. A unit is a group of
// feature indices kept atomic (one-hot groups); by default each feature is
// its own unit.
inline ClientPartition partition_features(std::size_t feature_count, std::size_t client_count, std::uint64_t seed,
                                          const std::vector<std::vector<std::size_t>>& units = {}) {
    std::vector<std::vector<std::size_t>> u = units;
    if (u.empty())
        for (std::size_t j = 0; j < feature_count; ++j) u.push_back({j});
    auto rng = make_rng(seed, "partition");
    std::shuffle(u.begin(), u.end(), rng);
    ClientPartition p;
    p.seed = seed;
    p.clients.resize(client_count);
    for (std::size_t i = 0; i < u.size(); ++i)
        for (auto j : u[i]) p.clients[i % client_count].push_back(j);
    for (auto& c : p.clients) std::sort(c.begin(), c.end());
    return p;
}

// phi_i = sum over coalitions S not containing i of
// |S|! (n-|S|-1)! / n! * (v(S u {i}) - v(S)), with v indexed by bitmask.
inline Vec shapley_from_table(const Vec& value_by_mask, std::size_t client_count) {
    if (value_by_mask.size() != (std::size_t{1} << client_count))
        throw std::invalid_argument("shapley: value table size != 2^clients");
    auto factorial = [](std::size_t n) {
        double f = 1.0;
        for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
        return f;
    };
    Vec phi(client_count, 0.0);
    double n_fact = factorial(client_count);
    for (std::size_t i = 0; i < client_count; ++i) {
        for (std::size_t mask = 0; mask < value_by_mask.size(); ++mask) {
            if (mask & (std::size_t{1} << i)) continue;
            std::size_t s = static_cast<std::size_t>(std::popcount(mask));
            double weight = factorial(s) * factorial(client_count - s - 1) / n_fact;
            phi[i] += weight * (value_by_mask[mask | (std::size_t{1} << i)] - value_by_mask[mask]);
        }
    }
    return phi;
}

using CoalitionTrainer = std::function<double(const std::vector<std::size_t>& features)>;

// Trains one model per coalition; v = held-out accuracy, empty coalition =
// majority-class accuracy.
inline Vec coalition_values(const TrainTestSplit& split, const ClientPartition& partition,
                            const CoalitionTrainer& trainer) {
    std::size_t n = partition.clients.size();
    if (n > 6) throw std::invalid_argument("shapley_exact: client count exceeds exhaustive budget of 6");
    Vec values(std::size_t{1} << n, 0.0);
    // empty coalition: majority class on the test split
    std::vector<std::size_t> counts(split.test.class_count, 0);
    for (auto l : split.test.labels) ++counts[l];
    values[0] = static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                static_cast<double>(std::max<std::size_t>(1, split.test.size()));
    for (std::size_t mask = 1; mask < values.size(); ++mask) {
        std::vector<std::size_t> feats;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i))
                feats.insert(feats.end(), partition.clients[i].begin(), partition.clients[i].end());
        std::sort(feats.begin(), feats.end());
        values[mask] = trainer(feats);
    }
    return values;
}

inline Vec shapley_exact(const TrainTestSplit& split, const ClientPartition& partition,
                         const CoalitionTrainer& trainer) {
    return shapley_from_table(coalition_values(split, partition, trainer), partition.clients.size());
}

struct ContributionReport {
    Vec ours_scores;
    std::vector<std::size_t> ours_rank;  // client ids, descending score
    Vec shapley_values;
    std::vector<std::size_t> shapley_rank;
    std::size_t overlap_count = 0;  // fixed points between the two rankings
};

inline ContributionReport contribution_compare(const FeatureImportance& importance, const ClientPartition& partition,
                                               const Vec& shapley_values) {
    if (shapley_values.size() != partition.clients.size())
        throw std::invalid_argument("contribution_compare: shapley size != client count");
    ContributionReport rep;
    rep.shapley_values = shapley_values;
    for (const auto& feats : partition.clients) {
        double s = 0.0;
        for (auto j : feats) {
            if (j >= importance.scores.size())
                throw std::invalid_argument("contribution_compare: partition index outside feature space");
            s += importance.scores[j];
        }
        rep.ours_scores.push_back(s);
    }
    rep.ours_rank = rank_descending(rep.ours_scores);
    rep.shapley_rank = rank_descending(shapley_values);
    for (std::size_t i = 0; i < rep.ours_rank.size(); ++i)
        if (rep.ours_rank[i] == rep.shapley_rank[i]) ++rep.overlap_count;
    return rep;
}

// ---------------------------------------------------------------------------
// Full Step-2 experiment over repeated random partitions.

struct FedConfig {
    std::size_t clients = 3;
    std::size_t repetitions = 20;
    std::vector<std::size_t> hidden = {64, 64};
    TrainConfig trainer;
    double epsilon = 1000.0;
    double test_fraction = 0.3;
};

struct FedResult {
    Vec overlaps;  // one per repetition
    double mean_overlap = 0.0;
};

inline FedResult fed_experiment(const LabeledDataset& data, const FedConfig& config, std::uint64_t seed) {
    FedResult result;
    if (config.repetitions == 0) return result;
    auto split = split_dataset(data, config.test_fraction, derive_seed(seed, "fed-split"));
    standardize(split);

    TrainConfig pre = config.trainer;
    pre.seed = derive_seed(seed, "fed-pretrain");
    auto net = train(init_net(data.dim(), config.hidden, data.class_count, Activation::ReLU, pre.seed),
                     split.train, pre);
    auto imp = aggregate_importance(net, split.train, config.epsilon, data.dim());

    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        std::uint64_t rep_seed = derive_seed(seed, "fed-rep-" + std::to_string(rep));
        auto partition = partition_features(data.dim(), config.clients, rep_seed);
        CoalitionTrainer trainer = [&](const std::vector<std::size_t>& feats) {
            auto tr = split.train.select_features(feats);
            auto te = split.test.select_features(feats);
            TrainConfig tc = config.trainer;
            tc.seed = derive_seed(seed, "fed-coalition");  // shared init across coalitions
            auto m = train(init_net(feats.size(), config.hidden, data.class_count, Activation::ReLU, tc.seed), tr, tc);
            return accuracy(m, te);
        };
        auto phi = shapley_exact(split, partition, trainer);
        auto rep_out = contribution_compare(imp, partition, phi);
        result.overlaps.push_back(static_cast<double>(rep_out.overlap_count));
    }
    result.mean_overlap = std::accumulate(result.overlaps.begin(), result.overlaps.end(), 0.0) /
                          static_cast<double>(result.overlaps.size());
    return result;
}

}  // namespace freqx
