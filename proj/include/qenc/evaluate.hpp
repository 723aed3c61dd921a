#pragma once

// Intent-similarity evaluation harness: graded ranking (NDCG with no
// cutoff), pair classification (AUC), paired significance, and the TF-IDF
// bag-of-words baseline. Scorers see raw query text only; training code
// never touches these datasets.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qenc/dataio.hpp"
#include "qenc/metrics.hpp"
#include "qenc/parallel.hpp"
#include "qenc/vocab.hpp"

namespace qenc {

struct RankedCandidate {
  std::string text;
  Grade grade = Grade::kBad;
};

struct RankingDataset {
  // target query -> graded candidates (>= 2 per target)
  std::vector<std::pair<std::string, std::vector<RankedCandidate>>> targets;
};

struct ClassificationDataset {
  std::vector<ParaphraseExample> pairs;  // labels +1/-1
};

// Builds a ranking dataset from judgment records; targets with fewer than
// two candidates are dropped and counted.
RankingDataset to_ranking_dataset(const std::vector<SimilarityJudgment>& judgments,
                                  std::size_t* dropped_targets = nullptr);

// A pure pairwise similarity scorer over raw texts.
using PairScorer = std::function<double(const std::string&, const std::string&)>;

struct RankingResult {
  double mean_ndcg = 0.0;
  std::size_t targets = 0;   // scored targets
  std::size_t skipped = 0;   // undefined-NDCG targets
  std::vector<double> per_target;            // aligned with target_keys
  std::vector<std::string> target_keys;
};

struct ClassificationResult {
  double auc = 0.5;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Candidates are ranked by descending score; equal scores keep input order.
RankingResult evaluate_ranking(const RankingDataset& data, const PairScorer& scorer,
                               ExecPolicy policy = ExecPolicy::kParallel);

ClassificationResult evaluate_classification(const ClassificationDataset& data,
                                             const PairScorer& scorer,
                                             ExecPolicy policy = ExecPolicy::kParallel);

// ---------------------------------------------------------------------------
// TF-IDF bag-of-words baseline

class TfIdfModel {
 public:
  // idf(t) = log((N+1)/(df(t)+1)) computed over a query log sample; unseen
  // tokens fall back to log(N+1).
  static TfIdfModel build(const std::vector<std::string>& log_queries);

  double idf(const std::string& token) const;
  // cosine of sparse tf*idf vectors; 0 when either vector is empty/zero.
  double similarity(const std::string& a, const std::string& b) const;

  std::size_t documents() const { return documents_; }

 private:
  std::map<std::string, double> idf_;
  double default_idf_ = 0.0;
  std::size_t documents_ = 0;
};

// ---------------------------------------------------------------------------
// report emission

struct MetricRow {
  std::string dataset;
  std::string metric;
  double value = 0.0;
  std::size_t n = 0;
  std::size_t skipped = 0;
};

void write_metric_report(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

struct HistogramBin {
  double low = 0.0, high = 0.0;
  std::uint64_t count = 0;
};

std::vector<HistogramBin> histogram(std::span<const double> values, double lo, double hi,
                                    std::size_t bins);
void write_histogram(const std::filesystem::path& path, const std::vector<HistogramBin>& bins,
                     const std::string& label);

}  // namespace qenc
