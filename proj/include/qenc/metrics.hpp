#pragma once

// Ranking/classification metrics and the paired randomization test.

#include <cstdint>
#include <span>
#include <vector>

#include "qenc/array.hpp"

namespace qenc {

// NDCG over the full ranked list: gain 2^g - 1 (Good=2, Fair=1, Bad=0),
// discount 1/log2(rank+1). Throws std::invalid_argument when the ideal
// ranking has no nonzero gain (NDCG undefined) or the list is empty.
double ndcg_no_cutoff(std::span<const int> ranked_grades);

// Fraction of (positive, negative) pairs ranked correctly, ties 0.5.
// Rank-based O(n log n); equals the brute-force pair count.
double auc(std::span<const double> scores_pos, std::span<const double> scores_neg);

struct FisherResult {
  double p = 1.0;
  std::uint64_t permutations = 0;
  bool exhaustive = false;
};

// Two-sided paired sign-flip test on per-item metric differences.
// Exhaustive over all 2^n flips when n <= 20, otherwise Monte Carlo with
// `iterations` draws from the given seed.
FisherResult fisher_randomization_test(std::span<const double> metric_a,
                                       std::span<const double> metric_b,
                                       std::uint64_t iterations = 100000,
                                       std::uint64_t seed = 1);

// Pearson correlation of average-ranked values (ties get average ranks).
// Throws std::invalid_argument on length < 2, mismatch, or a constant side.
double spearman(std::span<const double> x, std::span<const double> y);

// average ranks (1-based) with ties averaged
std::vector<double> average_ranks(std::span<const double> v);

}  // namespace qenc
