#include "qenc/session.hpp"

#include <algorithm>
#include <map>
#include <ostream>

namespace qenc {

namespace {
constexpr std::int64_t kGapSeconds = 30 * 60;
}

std::vector<Session> segment_sessions(const std::vector<ClickRecord>& records,
                                      Warnings* warnings) {
  // group per user, preserving input order within a user
  std::map<std::string, std::vector<const ClickRecord*>> by_user;
  for (const ClickRecord& r : records) by_user[r.user_id].push_back(&r);

  std::vector<Session> sessions;
  for (auto& [user, recs] : by_user) {
    bool sorted = std::is_sorted(recs.begin(), recs.end(),
                                 [](const ClickRecord* a, const ClickRecord* b) {
                                   return a->timestamp < b->timestamp;
                                 });
    if (!sorted) {
      if (warnings)
        warnings->add("segment_sessions: unordered timestamps for user " + user + ", sorted");
      std::stable_sort(recs.begin(), recs.end(),
                       [](const ClickRecord* a, const ClickRecord* b) {
                         return a->timestamp < b->timestamp;
                       });
    }

    Session cur;
    cur.user_id = user;
    auto flush = [&]() {
      if (cur.queries.size() >= 3 && cur.clicks >= 1) sessions.push_back(cur);
      cur.queries.clear();
      cur.clicks = 0;
    };
    for (const ClickRecord* r : recs) {
      if (!cur.queries.empty() && r->timestamp - cur.queries.back().timestamp >= kGapSeconds)
        flush();
      cur.queries.push_back({r->query, r->timestamp, r->has_click()});
      if (r->has_click()) ++cur.clicks;
    }
    flush();
  }
  return sessions;
}

std::vector<SeparationHistogram> distance_distributions(const std::vector<Session>& sessions,
                                                        const PairScorer& scorer,
                                                        const std::vector<int>& separations,
                                                        std::size_t bins, std::uint64_t seed,
                                                        Warnings* warnings) {
  std::vector<SeparationHistogram> out;
  for (int sep : separations) {
    std::vector<double> sims;
    for (const Session& s : sessions) {
      for (std::size_t i = 0; i + static_cast<std::size_t>(sep) < s.queries.size(); ++i)
        sims.push_back(scorer(s.queries[i].text, s.queries[i + static_cast<std::size_t>(sep)].text));
    }
    SeparationHistogram h;
    h.separation = std::to_string(sep);
    h.pairs = sims.size();
    h.bins = histogram(sims, -1.0, 1.0, bins);
    if (sims.empty() && warnings)
      warnings->add("distance_distributions: no pairs at separation " + h.separation);
    out.push_back(std::move(h));
  }

  // cross-session baseline: one random pair per session
  Rng rng(seed);
  std::vector<double> sims;
  if (sessions.size() >= 2) {
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      std::size_t other = i;
      while (other == i) other = static_cast<std::size_t>(rng.below(sessions.size()));
      const Session& a = sessions[i];
      const Session& b = sessions[other];
      sims.push_back(scorer(a.queries[rng.below(a.queries.size())].text,
                            b.queries[rng.below(b.queries.size())].text));
    }
  } else if (warnings) {
    warnings->add("distance_distributions: not enough sessions for the random baseline");
  }
  SeparationHistogram rand_h;
  rand_h.separation = "random";
  rand_h.pairs = sims.size();
  rand_h.bins = histogram(sims, -1.0, 1.0, bins);
  out.push_back(std::move(rand_h));
  return out;
}

void write_separation_histograms(const std::filesystem::path& path,
                                 const std::vector<SeparationHistogram>& histograms) {
  atomic_write(path, [&](std::ostream& os) {
    os << "# separation\tbin_low\tbin_high\tcount\n";
    for (const auto& h : histograms)
      for (const auto& b : h.bins)
        os << h.separation << '\t' << b.low << '\t' << b.high << '\t' << b.count << '\n';
  });
}

std::vector<CategoryCorrelation> category_correlation(
    const std::vector<LabeledSessionPair>& pairs, const PairScorer& scorer,
    Warnings* warnings) {
  struct Subset {
    const char* name;
    int min_category;
  };
  const Subset subsets[] = {{"all", 0}, {"related", 1}, {"middle", 2}};

  std::vector<double> sims(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) sims[i] = scorer(pairs[i].a, pairs[i].b);

  std::vector<CategoryCorrelation> out;
  for (const Subset& sub : subsets) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (pairs[i].category < sub.min_category) continue;
      x.push_back(sims[i]);
      y.push_back(static_cast<double>(pairs[i].category));
    }
    CategoryCorrelation row;
    row.subset = sub.name;
    row.n = x.size();
    if (x.size() < 2) {
      row.skipped = true;
      if (warnings)
        warnings->add("category_correlation: subset " + row.subset + " has fewer than 2 pairs");
    } else {
      try {
        row.rho = spearman(x, y);
      } catch (const std::invalid_argument& e) {
        row.skipped = true;
        if (warnings) warnings->add("category_correlation: " + row.subset + ": " + e.what());
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_category_correlations(const std::filesystem::path& path,
                                 const std::vector<CategoryCorrelation>& rows) {
  atomic_write(path, [&](std::ostream& os) {
    os << "# subset\tn\trho\n";
    for (const auto& r : rows) {
      os << r.subset << '\t' << r.n << '\t';
      if (r.skipped) os << "nan";
      else os << r.rho;
      os << '\n';
    }
  });
}

}  // namespace qenc
