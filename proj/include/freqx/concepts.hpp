#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "freqx/linalg.hpp"
#include "freqx/rng.hpp"

namespace freqx {

struct ConceptItem {
    std::size_t item_id = 0;
    std::size_t source_sample_id = 0;
    Vec vector_original;
    Vec vector_transformed;
    double importance = 0.0;
};

struct ConceptGroup {
    Vec centroid;
    std::vector<std::size_t> member_ids;
    double group_importance = 0.0;
};

struct ConceptGrouping {
    std::vector<ConceptGroup> groups;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    double wcss = 0.0;
};

namespace detail {

inline double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

struct KmeansRun {
    std::vector<std::size_t> assignment;
    std::vector<Vec> centroids;
    Vec wcss_history;  // per Lloyd iteration, non-increasing
    double wcss = 0.0;
};

inline KmeansRun kmeans_single(const std::vector<Vec>& points, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = points.size();
    KmeansRun run;
    // k-means++ seeding
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    run.centroids.push_back(points[first(rng)]);
    Vec d2(n);
    while (run.centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : run.centroids) best = std::min(best, sq_dist(points[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng), acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        run.centroids.push_back(points[pick]);
    }

    run.assignment.assign(n, 0);
    for (std::size_t iter = 0; iter < 300; ++iter) {
        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                double d = sq_dist(points[i], run.centroids[c]);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            run.assignment[i] = arg;
            wcss += best;
        }
        run.wcss_history.push_back(wcss);
        run.wcss = wcss;

        std::vector<Vec> next(k, Vec(points[0].size(), 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[run.assignment[i]];
            for (std::size_t j = 0; j < points[i].size(); ++j) next[run.assignment[i]][j] += points[i][j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // empty-cluster repair: reseed at the point farthest from its
                // assigned centroid
                double worst = -1.0;
                std::size_t far_pt = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    double d = sq_dist(points[i], run.centroids[run.assignment[i]]);
                    if (d > worst) {
                        worst = d;
                        far_pt = i;
                    }
                }
                next[c] = points[far_pt];
                counts[c] = 1;
                run.assignment[far_pt] = c;
            } else {
                for (auto& v : next[c]) v /= static_cast<double>(counts[c]);
            }
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(sq_dist(next[c], run.centroids[c])));
        run.centroids = std::move(next);
        if (shift < 1e-8) break;
    }
    return run;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding, best of `restarts` by WCSS.
inline ConceptGrouping kmeans(const std::vector<Vec>& points, std::size_t k, std::uint64_t seed,
                              std::size_t restarts = 3) {
    if (k == 0 || k > points.size()) throw std::invalid_argument("kmeans: need 1 <= k <= item count");
    detail::KmeansRun best;
    best.wcss = std::numeric_limits<double>::max();
    for (std::size_t r = 0; r < restarts; ++r) {
        auto rng = make_rng(seed, "kmeans-restart-" + std::to_string(r));
        auto run = detail::kmeans_single(points, k, rng);
        if (run.wcss < best.wcss) best = std::move(run);
    }
    ConceptGrouping g;
    g.k = k;
    g.seed = seed;
    g.wcss = best.wcss;
    g.groups.resize(k);
    for (std::size_t c = 0; c < k; ++c) g.groups[c].centroid = best.centroids[c];
    for (std::size_t i = 0; i < points.size(); ++i) g.groups[best.assignment[i]].member_ids.push_back(i);
    return g;
}

// exposed for the WCSS monotonicity property test
inline Vec kmeans_wcss_history(const std::vector<Vec>& points, std::size_t k, std::uint64_t seed) {
    if (k == 0 || k > points.size()) throw std::invalid_argument("kmeans: need 1 <= k <= item count");
    auto rng = make_rng(seed, "kmeans-restart-0");
    return detail::kmeans_single(points, k, rng).wcss_history;
}

// Groups ordered by descending importance (mean member importance, ties by
// group index), each holding its top items by descending item importance.
struct RankedSelection {
    std::vector<std::vector<std::size_t>> top_per_group;  // item ids

    std::set<std::size_t> all_selected() const {
        std::set<std::size_t> s;
        for (const auto& g : top_per_group) s.insert(g.begin(), g.end());
        return s;
    }
};

inline RankedSelection rank_groups(ConceptGrouping& grouping, const std::vector<ConceptItem>& items,
                                   std::size_t top_n = 10) {
    for (auto& g : grouping.groups) {
        double sum = 0.0;
        for (auto id : g.member_ids) sum += items[id].importance;
        g.group_importance = g.member_ids.empty() ? 0.0 : sum / static_cast<double>(g.member_ids.size());
    }
    std::vector<std::size_t> order(grouping.groups.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return grouping.groups[a].group_importance > grouping.groups[b].group_importance;
    });
    RankedSelection sel;
    for (auto gi : order) {
        auto members = grouping.groups[gi].member_ids;
        std::stable_sort(members.begin(), members.end(),
                         [&](std::size_t a, std::size_t b) { return items[a].importance > items[b].importance; });
        if (members.size() > top_n) members.resize(top_n);
        sel.top_per_group.push_back(std::move(members));
    }
    return sel;
}

struct OverlapReport {
    double N = 0.0;  // overlaps within matched groups
    double M = 0.0;  // overlaps across all selected
    double hit_rate = 0.0;
    double max_N = 0.0, max_M = 0.0, max_hit_rate = 0.0;
    std::size_t repetitions = 0;
    bool degenerate = false;  // M == 0 in some repetition
};

namespace detail {

inline std::size_t set_overlap(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::set<std::size_t> sa(a.begin(), a.end());
    std::size_t n = 0;
    for (auto id : b)
        if (sa.count(id)) ++n;
    return n;
}

}  // namespace detail

// Single-repetition overlap. Groups of the two selections are matched
// greedily by maximal selected-item overlap, descending.
inline std::pair<double, double> overlap_once(const RankedSelection& ours, const RankedSelection& reference) {
    auto ours_all = ours.all_selected();
    auto ref_all = reference.all_selected();
    std::size_t m = 0;
    for (auto id : ours_all)
        if (ref_all.count(id)) ++m;

    const std::size_t ga = ours.top_per_group.size(), gb = reference.top_per_group.size();
    std::vector<std::vector<std::size_t>> ov(ga, std::vector<std::size_t>(gb));
    for (std::size_t i = 0; i < ga; ++i)
        for (std::size_t j = 0; j < gb; ++j)
            ov[i][j] = detail::set_overlap(ours.top_per_group[i], reference.top_per_group[j]);
    std::vector<bool> used_a(ga, false), used_b(gb, false);
    std::size_t n = 0;
    for (std::size_t step = 0; step < std::min(ga, gb); ++step) {
        std::size_t best = 0, bi = ga, bj = gb;
        bool found = false;
        for (std::size_t i = 0; i < ga; ++i) {
            if (used_a[i]) continue;
            for (std::size_t j = 0; j < gb; ++j) {
                if (used_b[j]) continue;
                if (!found || ov[i][j] > best) {
                    best = ov[i][j];
                    bi = i;
                    bj = j;
                    found = true;
                }
            }
        }
        if (!found) break;
        used_a[bi] = true;
        used_b[bj] = true;
        n += best;
    }
    return {static_cast<double>(n), static_cast<double>(m)};
}

inline OverlapReport overlap_metrics(const std::vector<RankedSelection>& ours,
                                     const std::vector<RankedSelection>& reference) {
    if (ours.size() != reference.size() || ours.empty())
        throw std::invalid_argument("overlap_metrics: repetition counts must match and be nonzero");
    OverlapReport rep;
    rep.repetitions = ours.size();
    double hit_sum = 0.0;
    for (std::size_t r = 0; r < ours.size(); ++r) {
        auto [n, m] = overlap_once(ours[r], reference[r]);
        rep.N += n;
        rep.M += m;
        double hit = 0.0;
        if (m > 0.0)
            hit = n / m;
        else
            rep.degenerate = true;
        hit_sum += hit;
        rep.max_N = std::max(rep.max_N, n);
        rep.max_M = std::max(rep.max_M, m);
        rep.max_hit_rate = std::max(rep.max_hit_rate, hit);
    }
    rep.N /= static_cast<double>(rep.repetitions);
    rep.M /= static_cast<double>(rep.repetitions);
    rep.hit_rate = hit_sum / static_cast<double>(rep.repetitions);
    return rep;
}

// g2 ablation: keep the grouping, replace each group's top selection with a
// seeded uniform draw from the item universe.
inline RankedSelection random_selection(std::size_t group_count, std::size_t top_n, std::size_t universe,
                                        std::uint64_t seed) {
    auto rng = make_rng(seed, "g2-random-selection");
    std::vector<std::size_t> ids(universe);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    RankedSelection sel;
    std::size_t pos = 0;
    for (std::size_t g = 0; g < group_count; ++g) {
        std::vector<std::size_t> top;
        for (std::size_t i = 0; i < top_n && pos < ids.size(); ++i) top.push_back(ids[pos++]);
        sel.top_per_group.push_back(std::move(top));
    }
    return sel;
}

}  // namespace freqx
