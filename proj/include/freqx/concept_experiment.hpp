#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqx/concepts.hpp"
#include "freqx/dataset.hpp"
#include "freqx/explain.hpp"
#include "freqx/linalg.hpp"
#include "freqx/nn.hpp"
#include "freqx/rng.hpp"

namespace freqx {

// Desk-scale concept study: contiguous feature windows of ConceptBlocks
// samples are the concept items; the ground-truth block structure is the
// reference the pipelines are scored against.

struct ConceptExperimentConfig {
    std::size_t samples = 150;
    std::size_t blocks = 10;        // also the cluster count k
    std::size_t block_size = 5;
    std::size_t class_count = 10;   // one active block per class
    double noise_sigma = 3.0;
    double epsilon = 100.0;
    std::size_t top_n = 10;
    std::size_t restarts = 3;
    std::vector<std::size_t> hidden = {32};
    TrainConfig trainer{150, 0.1, 16, 0, 0.01};
};

struct ConceptRepetition {
    std::vector<ConceptItem> items;
    RankedSelection full;       // cluster transformed windows
    RankedSelection g1;         // cluster original windows, importance kept
    RankedSelection g2;         // grouping kept, selections drawn at random
    RankedSelection reference;  // ground-truth blocks
};

inline ConceptRepetition run_concept_repetition(const ConceptExperimentConfig& config, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::ConceptBlocks;
    spec.n = config.samples;
    spec.d = config.blocks * config.block_size;
    spec.class_count = config.class_count;
    spec.noise_sigma = config.noise_sigma;
    spec.block_size = config.block_size;
    auto data = generate_synthetic(spec, derive_seed(seed, "concept-data"));

    TrainConfig tc = config.trainer;
    tc.seed = derive_seed(seed, "concept-train");
    auto net = train(init_net(data.dim(), config.hidden, data.class_count, Activation::ReLU, tc.seed), data, tc);

    ConceptRepetition rep;
    std::vector<std::size_t> true_block;  // per item
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vec x = data.sample(i);
        auto record = explain_sample(net, x, config.epsilon);
        auto attribution = attribution_from_transform(record);
        for (std::size_t b = 0; b < config.blocks; ++b) {
            ConceptItem item;
            item.item_id = rep.items.size();
            item.source_sample_id = i;
            for (std::size_t w = 0; w < config.block_size; ++w) {
                std::size_t j = b * config.block_size + w;
                item.vector_original.push_back(x[j]);
                item.vector_transformed.push_back(record.input_space_x_prime[j]);
                item.importance += attribution.scores[j];
            }
            rep.items.push_back(std::move(item));
            true_block.push_back(b);
        }
    }

    auto vectors_of = [&](bool transformed) {
        std::vector<Vec> v;
        for (const auto& it : rep.items) v.push_back(transformed ? it.vector_transformed : it.vector_original);
        return v;
    };

    auto full_grouping = kmeans(vectors_of(true), config.blocks, derive_seed(seed, "kmeans"), config.restarts);
    rep.full = rank_groups(full_grouping, rep.items, config.top_n);

    auto g1_grouping = kmeans(vectors_of(false), config.blocks, derive_seed(seed, "kmeans"), config.restarts);
    rep.g1 = rank_groups(g1_grouping, rep.items, config.top_n);

    rep.g2 = random_selection(config.blocks, config.top_n, rep.items.size(), derive_seed(seed, "g2"));

    // reference: ground-truth blocks, items ranked by window signal norm
    ConceptGrouping ref_grouping;
    ref_grouping.k = config.blocks;
    ref_grouping.groups.resize(config.blocks);
    std::vector<ConceptItem> ref_items = rep.items;
    for (std::size_t id = 0; id < ref_items.size(); ++id) {
        ref_items[id].importance = norm2(ref_items[id].vector_original);
        ref_grouping.groups[true_block[id]].member_ids.push_back(id);
    }
    rep.reference = rank_groups(ref_grouping, ref_items, config.top_n);
    return rep;
}

struct ConceptStudyResult {
    OverlapReport full, g1, g2;
};

inline ConceptStudyResult run_concept_study(const ConceptExperimentConfig& config, std::size_t repetitions,
                                            std::uint64_t seed) {
    std::vector<RankedSelection> full, g1, g2, ref;
    for (std::size_t r = 0; r < repetitions; ++r) {
        auto rep = run_concept_repetition(config, derive_seed(seed, "rep-" + std::to_string(r)));
        full.push_back(rep.full);
        g1.push_back(rep.g1);
        g2.push_back(rep.g2);
        ref.push_back(rep.reference);
    }
    return {overlap_metrics(full, ref), overlap_metrics(g1, ref), overlap_metrics(g2, ref)};
}

// Spearman rank correlation; average ranks for ties.
inline double spearman(const Vec& a, const Vec& b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman: need matched length >= 2");
    auto ranks = [](const Vec& v) {
        auto idx = rank_descending(v);
        Vec r(v.size());
        std::size_t i = 0;
        while (i < idx.size()) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
            for (std::size_t t = i; t <= j; ++t) r[idx[t]] = mean_rank;
            i = j + 1;
        }
        return r;
    };
    Vec ra = ranks(a), rb = ranks(b);
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
    double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0.0 || db == 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

struct EpsilonSweepResult {
    Vec epsilons;
    Vec mean_N, mean_M, mean_hit;
    double spearman_eps_N = 0.0;
};

inline EpsilonSweepResult epsilon_sweep(const ConceptExperimentConfig& base, const Vec& epsilons,
                                        std::size_t repetitions, std::uint64_t seed) {
    EpsilonSweepResult out;
    out.epsilons = epsilons;
    for (double eps : epsilons) {
        ConceptExperimentConfig cfg = base;
        cfg.epsilon = eps;
        auto res = run_concept_study(cfg, repetitions, seed);
        out.mean_N.push_back(res.full.N);
        out.mean_M.push_back(res.full.M);
        out.mean_hit.push_back(res.full.hit_rate);
    }
    out.spearman_eps_N = spearman(out.epsilons, out.mean_N);
    return out;
}

}  // namespace freqx
