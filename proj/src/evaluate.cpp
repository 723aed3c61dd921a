#include "qenc/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace qenc {

RankingDataset to_ranking_dataset(const std::vector<SimilarityJudgment>& judgments,
                                  std::size_t* dropped_targets) {
  std::map<std::string, std::vector<RankedCandidate>> by_target;
  for (const auto& j : judgments) by_target[j.target].push_back({j.candidate, j.grade});
  RankingDataset data;
  std::size_t dropped = 0;
  for (auto& [target, candidates] : by_target) {
    if (candidates.size() < 2) {
      ++dropped;
      continue;
    }
    data.targets.emplace_back(target, std::move(candidates));
  }
  if (dropped_targets) *dropped_targets = dropped;
  return data;
}

namespace {

// per-target NDCG; nullopt when undefined (no nonzero gain)
std::optional<double> target_ndcg(const std::vector<RankedCandidate>& candidates,
                                  const std::string& target, const PairScorer& scorer) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scores[i] = scorer(target, candidates[i].text);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<int> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t i : order) ranked.push_back(static_cast<int>(candidates[i].grade));
  try {
    return ndcg_no_cutoff(ranked);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

}  // namespace

RankingResult evaluate_ranking(const RankingDataset& data, const PairScorer& scorer,
                               ExecPolicy policy) {
  const std::int64_t n = static_cast<std::int64_t>(data.targets.size());
  std::vector<std::optional<double>> values(data.targets.size());
  if (policy == ExecPolicy::kParallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
    for (std::int64_t i = 0; i < n; ++i)
      values[i] = target_ndcg(data.targets[i].second, data.targets[i].first, scorer);
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      values[i] = target_ndcg(data.targets[i].second, data.targets[i].first, scorer);
  }

  RankingResult result;
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!values[i]) {
      ++result.skipped;
      continue;
    }
    sum += *values[i];
    result.per_target.push_back(*values[i]);
    result.target_keys.push_back(data.targets[static_cast<std::size_t>(i)].first);
    ++result.targets;
  }
  result.mean_ndcg = result.targets ? sum / static_cast<double>(result.targets) : 0.0;
  return result;
}

ClassificationResult evaluate_classification(const ClassificationDataset& data,
                                             const PairScorer& scorer, ExecPolicy policy) {
  const std::int64_t n = static_cast<std::int64_t>(data.pairs.size());
  std::vector<double> scores(data.pairs.size());
  if (policy == ExecPolicy::kParallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (std::int64_t i = 0; i < n; ++i)
      scores[i] = scorer(data.pairs[i].a, data.pairs[i].b);
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      scores[i] = scorer(data.pairs[i].a, data.pairs[i].b);
  }
  std::vector<double> pos, neg;
  for (std::int64_t i = 0; i < n; ++i)
    (data.pairs[i].label > 0 ? pos : neg).push_back(scores[i]);
  ClassificationResult result;
  result.positives = pos.size();
  result.negatives = neg.size();
  result.auc = auc(pos, neg);
  return result;
}

TfIdfModel TfIdfModel::build(const std::vector<std::string>& log_queries) {
  TfIdfModel model;
  std::map<std::string, std::size_t> df;
  for (const auto& raw : log_queries) {
    auto tokens = normalize(raw);
    if (tokens.empty()) continue;
    ++model.documents_;
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (const auto& t : tokens) ++df[t];
  }
  const double n1 = static_cast<double>(model.documents_) + 1.0;
  model.default_idf_ = std::log(n1);
  for (const auto& [token, count] : df)
    model.idf_[token] = std::log(n1 / (static_cast<double>(count) + 1.0));
  return model;
}

double TfIdfModel::idf(const std::string& token) const {
  auto it = idf_.find(token);
  return it == idf_.end() ? default_idf_ : it->second;
}

double TfIdfModel::similarity(const std::string& a, const std::string& b) const {
  auto weights = [&](const std::string& raw) {
    std::map<std::string, double> w;
    for (const auto& t : normalize(raw)) w[t] += 1.0;
    double sq = 0.0;
    for (auto& [t, tf] : w) {
      tf *= idf(t);
      sq += tf * tf;
    }
    return std::make_pair(w, std::sqrt(sq));
  };
  auto [wa, na] = weights(a);
  auto [wb, nb] = weights(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (const auto& [t, v] : wa) {
    auto it = wb.find(t);
    if (it != wb.end()) dot += v * it->second;
  }
  return dot / (na * nb);
}

void write_metric_report(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  atomic_write(path, [&](std::ostream& os) {
    os << "# dataset\tmetric\tvalue\tn\tskipped\n";
    for (const auto& r : rows)
      os << r.dataset << '\t' << r.metric << '\t' << r.value << '\t' << r.n << '\t' << r.skipped
         << '\n';
  });
}

std::vector<HistogramBin> histogram(std::span<const double> values, double lo, double hi,
                                    std::size_t bins) {
  std::vector<HistogramBin> out(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].low = lo + width * static_cast<double>(i);
    out[i].high = i + 1 == bins ? hi : lo + width * static_cast<double>(i + 1);
  }
  for (double v : values) {
    if (v < lo || v > hi) continue;
    std::size_t idx = v >= hi ? bins - 1
                              : static_cast<std::size_t>((v - lo) / width);
    if (idx >= bins) idx = bins - 1;
    ++out[idx].count;
  }
  return out;
}

void write_histogram(const std::filesystem::path& path, const std::vector<HistogramBin>& bins,
                     const std::string& label) {
  atomic_write(path, [&](std::ostream& os) {
    os << "# " << label << "\n# bin_low\tbin_high\tcount\n";
    for (const auto& b : bins) os << b.low << '\t' << b.high << '\t' << b.count << '\n';
  });
}

}  // namespace qenc
