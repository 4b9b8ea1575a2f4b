#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "freqx/explain.hpp"
#include "freqx/linalg.hpp"
#include "freqx/nn.hpp"
#include "freqx/rng.hpp"
#include "freqx/spectral.hpp"

namespace freqx {

enum class GameMode { DeleteMostImportant, DeleteLeastImportant, InsertMostImportant };
enum class GameDomain { Time, Frequency };

struct DeletionCurve {
    Vec fractions;       // strictly increasing, starts at 0
    Vec mean_prob;       // mean original-class probability at each rate
    Vec flip_rate;       // fraction of samples whose prediction changed
    GameMode mode = GameMode::DeleteMostImportant;
    GameDomain domain = GameDomain::Time;
};

// Deletion baseline is 0.0; datasets are z-scored so zero is the feature mean.
inline Vec time_domain_delete(const Vec& x, const AttributionMap& attribution, double fraction, GameMode mode) {
    if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("time_domain_delete: fraction out of [0,1]");
    if (attribution.ranking.size() != x.size()) throw std::invalid_argument("time_domain_delete: ranking size mismatch");
    std::size_t count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(x.size())));
    Vec out;
    switch (mode) {
        case GameMode::DeleteMostImportant:
            out = x;
            for (std::size_t i = 0; i < count; ++i) out[attribution.ranking[i]] = 0.0;
            break;
        case GameMode::DeleteLeastImportant:
            out = x;
            for (std::size_t i = 0; i < count; ++i) out[attribution.ranking[x.size() - 1 - i]] = 0.0;
            break;
        case GameMode::InsertMostImportant:
            out.assign(x.size(), 0.0);
            for (std::size_t i = 0; i < count; ++i) out[attribution.ranking[i]] = x[attribution.ranking[i]];
            break;
    }
    return out;
}

// Frequency importance ranking of an attribution map. Conjugate pairs
// (k, N-k) are fused so deletion keeps the perturbed signal real.
struct FrequencyRanking {
    CVec scores_freq;
    std::vector<std::size_t> order;                      // pair members adjacent
    std::vector<std::vector<std::size_t>> order_groups;  // {k} or {k, N-k}, ranked
};

inline FrequencyRanking freq_rank(const Vec& attribution_scores) {
    if (!all_finite(attribution_scores)) throw std::invalid_argument("freq_rank: non-finite scores");
    auto spec = dft_1d(attribution_scores);
    const std::size_t n = spec.size();
    FrequencyRanking r;
    r.scores_freq = spec.coefficients;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::size_t mirror = (n - k) % n;
        if (mirror == k)
            groups.push_back({k});
        else
            groups.push_back({k, mirror});
    }
    // snap numerically-zero magnitudes so structured inputs tie by index
    Vec mags(n);
    double max_mag = 0.0;
    for (std::size_t k = 0; k < n; ++k) max_mag = std::max(max_mag, mags[k] = std::abs(spec.coefficients[k]));
    for (auto& m : mags)
        if (m < 1e-12 * max_mag) m = 0.0;
    std::stable_sort(groups.begin(), groups.end(),
                     [&](const auto& a, const auto& b) { return mags[a[0]] > mags[b[0]]; });
    r.order_groups = groups;
    for (const auto& g : groups)
        for (auto k : g) r.order.push_back(k);
    return r;
}

// Zero the selected frequency coefficients of x and invert. Pairs are zeroed
// whole, so a requested count landing mid-pair rounds up to the pair.
inline Vec freq_delete(const Vec& x, const FrequencyRanking& ranking, std::size_t count, GameMode mode) {
    if (ranking.order.size() != x.size()) throw std::invalid_argument("freq_delete: ranking shape mismatch");
    auto spec = dft_1d(x);
    std::vector<std::vector<std::size_t>> groups = ranking.order_groups;
    if (mode == GameMode::DeleteLeastImportant) std::reverse(groups.begin(), groups.end());

    std::vector<bool> kill(x.size(), mode == GameMode::InsertMostImportant);
    std::size_t done = 0;
    for (const auto& g : groups) {
        if (done >= count) break;
        for (auto k : g) {
            kill[k] = (mode != GameMode::InsertMostImportant);
            ++done;
        }
    }
    for (std::size_t k = 0; k < x.size(); ++k)
        if (kill[k]) spec.coefficients[k] = Complex{0.0, 0.0};
    auto out = idft_1d_complex(spec);
    Vec real_out(out.size());
    double scale = std::max(1.0, norm2(x));
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (std::abs(out[t].imag()) > 1e-9 * scale)
            throw std::runtime_error("freq_delete: imaginary residue after inverse transform");
        real_out[t] = out[t].real();
    }
    return real_out;
}

inline Vec freq_delete_fraction(const Vec& x, const FrequencyRanking& ranking, double fraction, GameMode mode) {
    if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("freq_delete: fraction out of [0,1]");
    auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(x.size())));
    return freq_delete(x, ranking, count, mode);
}

// Seeded null baseline: a shuffled identity ranking with uniform scores.
inline AttributionMap random_attribution(std::size_t d, std::uint64_t seed) {
    AttributionMap map;
    map.scores.assign(d, 1.0);
    map.ranking.resize(d);
    std::iota(map.ranking.begin(), map.ranking.end(), std::size_t{0});
    auto rng = make_rng(seed, "random-control");
    std::shuffle(map.ranking.begin(), map.ranking.end(), rng);
    return map;
}

// Perturb every sample at each deletion rate, re-run the net, average the
// original-class probability and the prediction-flip rate.
inline DeletionCurve run_game(const DenseNet& net, const Mat& samples, const std::vector<AttributionMap>& attributions,
                              const Vec& fractions, GameMode mode, GameDomain domain) {
    if (attributions.size() != samples.rows) throw std::invalid_argument("run_game: one attribution per sample required");
    if (fractions.empty() || fractions.front() != 0.0)
        throw std::invalid_argument("run_game: fraction schedule must start at 0");
    for (std::size_t i = 1; i < fractions.size(); ++i)
        if (fractions[i] <= fractions[i - 1]) throw std::invalid_argument("run_game: fractions must strictly increase");

    std::vector<std::size_t> clean_pred(samples.rows);
    std::vector<FrequencyRanking> rankings;
    for (std::size_t s = 0; s < samples.rows; ++s) {
        clean_pred[s] = predict(net, samples.row_vec(s));
        if (domain == GameDomain::Frequency) rankings.push_back(freq_rank(attributions[s].scores));
    }

    DeletionCurve curve;
    curve.fractions = fractions;
    curve.mode = mode;
    curve.domain = domain;
    for (double f : fractions) {
        double prob_sum = 0.0;
        std::size_t flips = 0;
        for (std::size_t s = 0; s < samples.rows; ++s) {
            Vec x = samples.row_vec(s);
            Vec perturbed = (domain == GameDomain::Time) ? time_domain_delete(x, attributions[s], f, mode)
                                                         : freq_delete_fraction(x, rankings[s], f, mode);
            auto probs = class_probabilities(net, perturbed);
            prob_sum += probs[clean_pred[s]];
            if (argmax(probs) != clean_pred[s]) ++flips;
        }
        curve.mean_prob.push_back(prob_sum / static_cast<double>(samples.rows));
        curve.flip_rate.push_back(static_cast<double>(flips) / static_cast<double>(samples.rows));
    }
    return curve;
}

}  // namespace freqx
