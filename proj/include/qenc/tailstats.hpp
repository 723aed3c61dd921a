#pragma once

// Query-frequency tiers, ANN coverage/co-intent statistics per tier and
// radius, and ANN frequency augmentation for unseen-traffic analysis.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qenc/hnsw.hpp"

namespace qenc {

// query text -> occurrence count over the reference period; absent = unseen
using FrequencyTable = std::unordered_map<std::string, std::uint64_t>;

FrequencyTable load_frequency_table(const std::filesystem::path& path);
void write_frequency_table(const std::filesystem::path& path, const FrequencyTable& table,
                           const std::string& header_comment);

enum class Tier { kHead, kTorso, kTail };

// head: > 2^15 occurrences; tail: <= 2^4; torso: everything between.
Tier tier_of(std::uint64_t count);
const char* tier_name(Tier t);

struct TailStatsRow {
  Tier tier = Tier::kTail;
  double radius = 0.0;
  std::size_t n = 0;             // probes in the tier
  std::size_t covered = 0;       // probes with >= 1 neighbor within radius
  double coverage_pct = 0.0;
  double mean_neighbors = 0.0;   // among covered probes
  double co_intent_pct = 0.0;    // neighbors sharing the probe's intent
};

struct TailProbe {
  std::uint64_t id = 0;          // external id; excluded from its own results
  std::string text;
  std::vector<float> encoding;
};

// intent oracle: text -> intent label (synthetic labels at desk scale)
using IntentOracle = std::function<std::int64_t(const std::string&)>;

std::vector<TailStatsRow> tail_stats(const std::vector<TailProbe>& probes, const AnnIndex& index,
                                     const std::unordered_map<std::uint64_t, std::string>& id_text,
                                     const FrequencyTable& freq,
                                     const std::vector<double>& radii,
                                     const IntentOracle& intent, std::size_t k = 10);

void write_tail_stats(const std::filesystem::path& path, const std::vector<TailStatsRow>& rows);

// ---------------------------------------------------------------------------
// ANN frequency augmentation

struct AugmentedFrequency {
  double count = 0.0;
  std::optional<int> bin;  // floor(log2(count)); nullopt = UNSEEN (count < 1)
};

// augmented = own + penalty * sum(neighbor counts). Counts must be
// non-negative and penalty must lie in [0, 1].
AugmentedFrequency ann_frequency_augment(std::int64_t own_count,
                                         const std::vector<std::int64_t>& neighbor_counts,
                                         double penalty);

// Fraction of probes whose augmented count stays below 1 when each probe's
// neighbors within `radius` contribute with the probe-tier penalty. Radius
// <= 0 disables augmentation (the no-ANN baseline).
double unseen_fraction(const std::vector<TailProbe>& probes, const AnnIndex& index,
                       const std::unordered_map<std::uint64_t, std::string>& id_text,
                       const FrequencyTable& freq, double radius,
                       const std::map<Tier, double>& penalty_by_tier, std::size_t k = 10);

// Distribution of probes over log2 frequency bins after augmentation.
// bin = floor(log2(augmented count)); nullopt is the UNSEEN bin. Fractions
// sum to 1 over all probes.
struct FrequencyBin {
  std::optional<int> bin;
  double fraction = 0.0;
};

std::vector<FrequencyBin> augmented_bin_histogram(
    const std::vector<TailProbe>& probes, const AnnIndex& index,
    const std::unordered_map<std::uint64_t, std::string>& id_text, const FrequencyTable& freq,
    double radius, const std::map<Tier, double>& penalty_by_tier, std::size_t k = 10);

}  // namespace qenc
