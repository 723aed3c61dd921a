#pragma once

// Search-session analytics: 30-minute-gap segmentation, reformulation
// distance distributions per separation class, and rank correlation of
// encoder similarities against reformulation-category labels.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qenc/dataio.hpp"
#include "qenc/evaluate.hpp"
#include "qenc/metrics.hpp"
#include "qenc/synth.hpp"

namespace qenc {

struct SessionQuery {
  std::string text;
  std::int64_t timestamp = 0;
  bool clicked = false;
};

struct Session {
  std::string user_id;
  std::vector<SessionQuery> queries;  // time ordered, < 30 min between neighbors
  std::size_t clicks = 0;
};

// Per-user time-ordered segmentation on gaps >= 30 minutes; sessions with
// fewer than 3 queries or no click are filtered out. Unordered timestamps
// within a user are sorted with a warning.
std::vector<Session> segment_sessions(const std::vector<ClickRecord>& records,
                                      Warnings* warnings = nullptr);

struct SeparationHistogram {
  std::string separation;  // "1", "2", "3" or "random"
  std::vector<HistogramBin> bins;
  std::size_t pairs = 0;
};

// Cosine-similarity histograms for query pairs separated by 1..3 positions
// within a session plus a cross-session random-pair baseline (one pair per
// session, seeded).
std::vector<SeparationHistogram> distance_distributions(const std::vector<Session>& sessions,
                                                        const PairScorer& scorer,
                                                        const std::vector<int>& separations,
                                                        std::size_t bins, std::uint64_t seed,
                                                        Warnings* warnings = nullptr);

void write_separation_histograms(const std::filesystem::path& path,
                                 const std::vector<SeparationHistogram>& histograms);

struct CategoryCorrelation {
  std::string subset;  // "all", "related", "middle"
  std::size_t n = 0;
  double rho = 0.0;
  bool skipped = false;
};

// Spearman correlation between scorer similarity and the category ordinal
// (0 TopicChange, 1 Explore, 2 Specify, 3 Paraphrase) for the All (0-3),
// Related (1-3) and Middle (2-3) subsets.
std::vector<CategoryCorrelation> category_correlation(
    const std::vector<LabeledSessionPair>& pairs, const PairScorer& scorer,
    Warnings* warnings = nullptr);

void write_category_correlations(const std::filesystem::path& path,
                                 const std::vector<CategoryCorrelation>& rows);

}  // namespace qenc
