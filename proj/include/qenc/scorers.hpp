#pragma once

// Pairwise similarity scorers over raw query texts: encoder cosine with a
// precomputed encoding cache, and the TF-IDF baseline.

#include <memory>
#include <vector>

#include "qenc/evaluate.hpp"
#include "qenc/model.hpp"

namespace qenc {

class EncoderScorer {
 public:
  EncoderScorer(std::shared_ptr<const ModelParameters> params) : params_(std::move(params)) {}

  // Encodes all texts up front (parallel); the scorer is then safe for
  // concurrent callers. Unknown texts are encoded lazily under a lock.
  void precompute(const std::vector<std::string>& texts);
  double operator()(const std::string& a, const std::string& b) const;

  PairScorer as_pair_scorer() const;
  const DenseArray& encoding(const std::string& text) const;

 private:
  struct Cache;
  std::shared_ptr<const ModelParameters> params_;
  std::shared_ptr<Cache> cache_ = make_cache();
  static std::shared_ptr<Cache> make_cache();
};

PairScorer make_tfidf_scorer(std::shared_ptr<const TfIdfModel> model);

}  // namespace qenc
