#include "qenc/scorers.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

#include "qenc/encoder.hpp"

namespace qenc {

// The frozen map is written only by precompute(), which must not overlap
// with concurrent scoring; hits on it take no lock. Texts that were never
// precomputed fall into the mutex-guarded overflow map.
struct EncoderScorer::Cache {
  std::unordered_map<std::string, DenseArray> frozen;
  mutable std::mutex mutex;
  std::unordered_map<std::string, DenseArray> overflow;
};

std::shared_ptr<EncoderScorer::Cache> EncoderScorer::make_cache() {
  return std::make_shared<Cache>();
}

void EncoderScorer::precompute(const std::vector<std::string>& texts) {
  std::vector<std::string> missing;
  for (const auto& t : texts)
    if (!cache_->frozen.count(t)) missing.push_back(t);
  if (missing.empty()) return;
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  std::vector<TokenizedQuery> tokenized;
  tokenized.reserve(missing.size());
  for (const auto& t : missing) tokenized.push_back(tokenize(t, params_->vocab));
  std::vector<DenseArray> enc = encode_batch(*params_, tokenized, ExecPolicy::kParallel);
  for (std::size_t i = 0; i < missing.size(); ++i)
    cache_->frozen.emplace(missing[i], std::move(enc[i]));
}

const DenseArray& EncoderScorer::encoding(const std::string& text) const {
  auto hit = cache_->frozen.find(text);
  if (hit != cache_->frozen.end()) return hit->second;
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->overflow.find(text);
    if (it != cache_->overflow.end()) return it->second;
  }
  DenseArray enc = encode_query(*params_, tokenize(text, params_->vocab));
  std::lock_guard<std::mutex> lock(cache_->mutex);
  return cache_->overflow.emplace(text, std::move(enc)).first->second;
}

double EncoderScorer::operator()(const std::string& a, const std::string& b) const {
  return cosine_value(encoding(a).data, encoding(b).data);
}

PairScorer EncoderScorer::as_pair_scorer() const {
  EncoderScorer copy = *this;  // shares the cache
  return [copy](const std::string& a, const std::string& b) { return copy(a, b); };
}

PairScorer make_tfidf_scorer(std::shared_ptr<const TfIdfModel> model) {
  return [model](const std::string& a, const std::string& b) { return model->similarity(a, b); };
}

}  // namespace qenc
