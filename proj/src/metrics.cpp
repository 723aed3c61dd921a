#include "qenc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qenc/util.hpp"

namespace qenc {

double ndcg_no_cutoff(std::span<const int> ranked_grades) {
  if (ranked_grades.empty()) throw std::invalid_argument("ndcg: empty ranking");
  auto gain = [](int g) {
    if (g < 0) throw std::invalid_argument("ndcg: negative grade");
    return static_cast<double>((1u << g) - 1u);
  };
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked_grades.size(); ++i)
    dcg += gain(ranked_grades[i]) / std::log2(static_cast<double>(i) + 2.0);

  std::vector<int> ideal(ranked_grades.begin(), ranked_grades.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal.size(); ++i)
    idcg += gain(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
  if (idcg == 0.0)
    throw std::invalid_argument("ndcg: undefined, no nonzero gain in the ideal ranking");
  return dcg / idcg;
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double auc(std::span<const double> scores_pos, std::span<const double> scores_neg) {
  if (scores_pos.empty()) throw std::invalid_argument("auc: empty positive class");
  if (scores_neg.empty()) throw std::invalid_argument("auc: empty negative class");
  std::vector<double> all(scores_pos.begin(), scores_pos.end());
  all.insert(all.end(), scores_neg.begin(), scores_neg.end());
  std::vector<double> ranks = average_ranks(all);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < scores_pos.size(); ++i) rank_sum += ranks[i];
  const double p = static_cast<double>(scores_pos.size());
  const double n = static_cast<double>(scores_neg.size());
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * n);
}

FisherResult fisher_randomization_test(std::span<const double> metric_a,
                                       std::span<const double> metric_b,
                                       std::uint64_t iterations, std::uint64_t seed) {
  if (metric_a.size() != metric_b.size())
    throw std::invalid_argument("fisher test: paired lists differ in length (" +
                                std::to_string(metric_a.size()) + " vs " +
                                std::to_string(metric_b.size()) + ")");
  if (metric_a.empty()) throw std::invalid_argument("fisher test: empty lists");
  const std::size_t n = metric_a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = metric_a[i] - metric_b[i];
  double observed = 0.0;
  for (double d : diff) observed += d;
  observed = std::abs(observed) / static_cast<double>(n);

  FisherResult result;
  if (n <= 20) {
    result.exhaustive = true;
    const std::uint64_t total = 1ull << n;
    std::uint64_t count = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (mask >> i) & 1u ? -diff[i] : diff[i];
      if (std::abs(s) / static_cast<double>(n) >= observed) ++count;
    }
    result.permutations = total;
    result.p = static_cast<double>(count) / static_cast<double>(total);
  } else {
    Rng rng(seed);
    std::uint64_t count = 0;
    for (std::uint64_t it = 0; it < iterations; ++it) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += rng.next_u64() & 1u ? -diff[i] : diff[i];
      if (std::abs(s) / static_cast<double>(n) >= observed) ++count;
    }
    result.permutations = iterations;
    result.p = static_cast<double>(count) / static_cast<double>(iterations);
  }
  return result;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least 2 points");
  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw std::invalid_argument("spearman: undefined correlation for constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace qenc
