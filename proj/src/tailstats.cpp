#include "qenc/tailstats.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "qenc/util.hpp"

namespace qenc {

FrequencyTable load_frequency_table(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open frequency table: " + path.string());
  FrequencyTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tab(line);
    if (fields.size() != 2)
      throw std::runtime_error("frequency table line " + std::to_string(line_no) +
                               ": expected 2 columns");
    table[fields[0]] = static_cast<std::uint64_t>(std::stoull(fields[1]));
  }
  return table;
}

void write_frequency_table(const std::filesystem::path& path, const FrequencyTable& table,
                           const std::string& header_comment) {
  // sorted for reproducible output
  std::map<std::string, std::uint64_t> sorted(table.begin(), table.end());
  atomic_write(path, [&](std::ostream& os) {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    for (const auto& [q, c] : sorted) os << q << '\t' << c << '\n';
  });
}

Tier tier_of(std::uint64_t count) {
  if (count > (1ull << 15)) return Tier::kHead;
  if (count > (1ull << 4)) return Tier::kTorso;
  return Tier::kTail;
}

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::kHead: return "head";
    case Tier::kTorso: return "torso";
    case Tier::kTail: return "tail";
  }
  return "?";
}

std::vector<TailStatsRow> tail_stats(const std::vector<TailProbe>& probes, const AnnIndex& index,
                                     const std::unordered_map<std::uint64_t, std::string>& id_text,
                                     const FrequencyTable& freq,
                                     const std::vector<double>& radii,
                                     const IntentOracle& intent, std::size_t k) {
  std::vector<TailStatsRow> rows;
  for (double radius : radii) {
    // per tier: probes, covered, neighbor count, co-intent tally
    struct Acc {
      std::size_t n = 0, covered = 0, neighbors = 0, co_intent = 0, judged = 0;
    };
    std::map<Tier, Acc> acc;
    acc[Tier::kHead];
    acc[Tier::kTorso];
    acc[Tier::kTail];

    std::vector<std::vector<float>> encodings;
    std::vector<std::uint64_t> exclude;
    encodings.reserve(probes.size());
    for (const auto& p : probes) {
      encodings.push_back(p.encoding);
      exclude.push_back(p.id);
    }
    auto results = index.search_batch(encodings, k, radius, exclude, ExecPolicy::kParallel);

    for (std::size_t i = 0; i < probes.size(); ++i) {
      auto it = freq.find(probes[i].text);
      const std::uint64_t count = it == freq.end() ? 0 : it->second;
      Acc& a = acc[tier_of(count)];
      ++a.n;
      if (results[i].empty()) continue;
      ++a.covered;
      a.neighbors += results[i].size();
      const std::int64_t probe_intent = intent(probes[i].text);
      for (const auto& nb : results[i]) {
        auto tit = id_text.find(nb.id);
        if (tit == id_text.end()) continue;
        ++a.judged;
        if (intent(tit->second) == probe_intent) ++a.co_intent;
      }
    }

    for (const auto& [tier, a] : acc) {
      TailStatsRow row;
      row.tier = tier;
      row.radius = radius;
      row.n = a.n;
      row.covered = a.covered;
      row.coverage_pct = a.n ? 100.0 * static_cast<double>(a.covered) / static_cast<double>(a.n) : 0.0;
      row.mean_neighbors =
          a.covered ? static_cast<double>(a.neighbors) / static_cast<double>(a.covered) : 0.0;
      row.co_intent_pct =
          a.judged ? 100.0 * static_cast<double>(a.co_intent) / static_cast<double>(a.judged) : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_tail_stats(const std::filesystem::path& path, const std::vector<TailStatsRow>& rows) {
  atomic_write(path, [&](std::ostream& os) {
    os << "# tier\tradius\tn\tcovered\tcoverage_pct\tmean_neighbors\tco_intent_pct\n";
    for (const auto& r : rows)
      os << tier_name(r.tier) << '\t' << r.radius << '\t' << r.n << '\t' << r.covered << '\t'
         << r.coverage_pct << '\t' << r.mean_neighbors << '\t' << r.co_intent_pct << '\n';
  });
}

AugmentedFrequency ann_frequency_augment(std::int64_t own_count,
                                         const std::vector<std::int64_t>& neighbor_counts,
                                         double penalty) {
  if (own_count < 0)
    throw std::invalid_argument("ann_frequency_augment: negative own count");
  if (penalty < 0.0 || penalty > 1.0)
    throw std::invalid_argument("ann_frequency_augment: penalty must lie in [0, 1]");
  double sum = 0.0;
  for (std::int64_t c : neighbor_counts) {
    if (c < 0) throw std::invalid_argument("ann_frequency_augment: negative neighbor count");
    sum += static_cast<double>(c);
  }
  AugmentedFrequency out;
  out.count = static_cast<double>(own_count) + penalty * sum;
  if (out.count >= 1.0) out.bin = static_cast<int>(std::floor(std::log2(out.count)));
  return out;
}

namespace {

// per-probe augmented frequencies under the tier penalties
std::vector<AugmentedFrequency> augment_probes(
    const std::vector<TailProbe>& probes, const AnnIndex& index,
    const std::unordered_map<std::uint64_t, std::string>& id_text, const FrequencyTable& freq,
    double radius, const std::map<Tier, double>& penalty_by_tier, std::size_t k) {
  std::vector<std::vector<AnnIndex::Neighbor>> results(probes.size());
  if (radius > 0.0) {
    std::vector<std::vector<float>> encodings;
    std::vector<std::uint64_t> exclude;
    for (const auto& p : probes) {
      encodings.push_back(p.encoding);
      exclude.push_back(p.id);
    }
    results = index.search_batch(encodings, k, radius, exclude, ExecPolicy::kParallel);
  }

  std::vector<AugmentedFrequency> out;
  out.reserve(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    auto it = freq.find(probes[i].text);
    const std::uint64_t own = it == freq.end() ? 0 : it->second;
    std::vector<std::int64_t> neighbor_counts;
    for (const auto& nb : results[i]) {
      auto tit = id_text.find(nb.id);
      if (tit == id_text.end()) continue;
      auto fit = freq.find(tit->second);
      neighbor_counts.push_back(fit == freq.end() ? 0 : static_cast<std::int64_t>(fit->second));
    }
    const double penalty = penalty_by_tier.at(tier_of(own));
    out.push_back(
        ann_frequency_augment(static_cast<std::int64_t>(own), neighbor_counts, penalty));
  }
  return out;
}

}  // namespace

double unseen_fraction(const std::vector<TailProbe>& probes, const AnnIndex& index,
                       const std::unordered_map<std::uint64_t, std::string>& id_text,
                       const FrequencyTable& freq, double radius,
                       const std::map<Tier, double>& penalty_by_tier, std::size_t k) {
  if (probes.empty()) return 0.0;
  std::size_t unseen = 0;
  for (const auto& aug :
       augment_probes(probes, index, id_text, freq, radius, penalty_by_tier, k))
    if (!aug.bin) ++unseen;
  return static_cast<double>(unseen) / static_cast<double>(probes.size());
}

std::vector<FrequencyBin> augmented_bin_histogram(
    const std::vector<TailProbe>& probes, const AnnIndex& index,
    const std::unordered_map<std::uint64_t, std::string>& id_text, const FrequencyTable& freq,
    double radius, const std::map<Tier, double>& penalty_by_tier, std::size_t k) {
  std::map<int, std::size_t> counts;  // INT_MIN stands in for the unseen bin
  std::size_t unseen = 0;
  for (const auto& aug :
       augment_probes(probes, index, id_text, freq, radius, penalty_by_tier, k)) {
    if (aug.bin) ++counts[*aug.bin];
    else ++unseen;
  }
  std::vector<FrequencyBin> out;
  const double n = static_cast<double>(probes.size());
  if (unseen) out.push_back({std::nullopt, static_cast<double>(unseen) / n});
  for (const auto& [bin, count] : counts)
    out.push_back({bin, static_cast<double>(count) / n});
  return out;
}

}  // namespace qenc
