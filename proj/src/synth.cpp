#include "qenc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "qenc/vocab.hpp"

namespace qenc {

namespace {

constexpr const char* kConsonants = "bcdfghjklmnprstvwz";
constexpr const char* kVowels = "aeiou";

std::string random_stem(Rng& rng, std::size_t min_len = 4, std::size_t max_len = 8) {
  const std::size_t len = min_len + static_cast<std::size_t>(rng.below(max_len - min_len + 1));
  std::string s;
  for (std::size_t i = 0; i < len; ++i) {
    const char* pool = i % 2 == 0 ? kConsonants : kVowels;
    s.push_back(pool[rng.below(std::char_traits<char>::length(pool))]);
  }
  return s;
}

// morphological variant: suffix or a dropped character (typo)
std::string morph_variant(Rng& rng, const std::string& stem) {
  switch (rng.below(4)) {
    case 0: return stem + "s";
    case 1: return stem + "ing";
    case 2: return stem + "er";
    default: {
      if (stem.size() < 4) return stem + "z";
      const std::size_t drop = 1 + static_cast<std::size_t>(rng.below(stem.size() - 2));
      return stem.substr(0, drop) + stem.substr(drop + 1);
    }
  }
}

struct Intent {
  std::size_t topic = 0;
  std::vector<std::string> syn_a;       // forms of the first content token
  std::vector<std::string> syn_b;       // forms of the second content token
  std::vector<std::string> specifiers;  // appendable narrowing tokens
  std::vector<std::size_t> variants;    // query indices, canonical first
  std::vector<std::string> urls;
  std::vector<std::string> question_forms;
};

const std::vector<std::vector<std::vector<std::string>>>& question_prefixes() {
  static const std::vector<std::vector<std::vector<std::string>>> kPrefixes = {
      {{"how", "to"}, {"how", "do", "i"}},
      {{"what", "is"}, {"what", "are"}},
      {{"where", "to", "find"}, {"where", "can", "i", "find"}},
      {{"best", "way", "to"}, {"easiest", "way", "to"}},
  };
  return kPrefixes;
}

}  // namespace

Split split_of(std::size_t index) {
  const std::size_t r = index % 10;
  if (r == 0) return Split::kVal;
  if (r <= 2) return Split::kTest;
  return Split::kTrain;
}

SyntheticWorld generate_synthetic_world(const SynthConfig& cfg) {
  if (cfg.intents < 2)
    throw std::invalid_argument("generate_synthetic_world: need at least 2 intents");
  if (cfg.queries_per_intent < 2)
    throw std::invalid_argument("generate_synthetic_world: need at least 2 queries per intent");

  Rng rng(cfg.seed);
  SyntheticWorld world;
  world.config = cfg;

  const std::size_t topics =
      (cfg.intents + cfg.intents_per_topic - 1) / cfg.intents_per_topic;
  std::vector<std::string> topic_tokens;
  std::set<std::string> used_stems;
  auto fresh_stem = [&]() {
    for (int tries = 0; tries < 64; ++tries) {
      std::string s = random_stem(rng);
      if (used_stems.insert(s).second) return s;
    }
    throw std::runtime_error("generate_synthetic_world: stem pool exhausted");
  };
  for (std::size_t t = 0; t < topics; ++t) topic_tokens.push_back(fresh_stem());

  std::vector<std::string> specifier_pool;
  for (std::size_t i = 0; i < 24; ++i) specifier_pool.push_back(fresh_stem());

  // intents: two content tokens with synonym/morph variants + 3 specifiers
  std::vector<Intent> intents(cfg.intents);
  for (std::size_t k = 0; k < cfg.intents; ++k) {
    Intent& in = intents[k];
    in.topic = k / cfg.intents_per_topic;
    const std::string a = fresh_stem();
    in.syn_a = {a, fresh_stem(), morph_variant(rng, a)};
    const std::string b = fresh_stem();
    in.syn_b = {b};
    if (rng.uniform() < 0.7) in.syn_b.push_back(morph_variant(rng, b));
    if (rng.uniform() < 0.4) in.syn_b.push_back(fresh_stem());
    for (int s = 0; s < 3; ++s)
      in.specifiers.push_back(specifier_pool[rng.below(specifier_pool.size())]);
  }

  // render distinct query variants; variant 0 is the all-canonical form
  std::unordered_map<std::string, std::size_t> query_index;  // text -> queries slot
  auto add_query = [&](const std::string& text, std::size_t intent, std::size_t spec_count) {
    auto [it, inserted] = world.intent_of.emplace(text, intent);
    if (!inserted) return static_cast<std::size_t>(-1);
    world.queries.push_back({text, intent, intents[intent].topic, spec_count});
    query_index[text] = world.queries.size() - 1;
    return world.queries.size() - 1;
  };

  for (std::size_t k = 0; k < cfg.intents; ++k) {
    Intent& in = intents[k];
    const std::string canonical =
        topic_tokens[in.topic] + " " + in.syn_a[0] + " " + in.syn_b[0];
    std::size_t idx = add_query(canonical, k, 0);
    if (idx != static_cast<std::size_t>(-1)) in.variants.push_back(idx);
    int guard = 0;
    while (in.variants.size() < cfg.queries_per_intent && guard++ < 200) {
      std::string text = topic_tokens[in.topic] + " " +
                         in.syn_a[rng.below(in.syn_a.size())] + " " +
                         in.syn_b[rng.below(in.syn_b.size())];
      std::size_t specs = 0;
      if (rng.uniform() < 0.4) {
        text += " " + in.specifiers[rng.below(in.specifiers.size())];
        specs = 1;
      }
      idx = add_query(text, k, specs);
      if (idx != static_cast<std::size_t>(-1)) in.variants.push_back(idx);
    }
    // URLs cover overlapping windows of variants so co-click groups chain
    // the whole intent together while staying at <= 5 distinct queries
    const std::size_t urls = (in.variants.size() + 2) / 3;
    for (std::size_t u = 0; u < urls; ++u)
      in.urls.push_back("u" + std::to_string(k) + "_" + std::to_string(u));
  }

  // ---------------------------------------------------------------------
  // click log: coverage sessions (one per intent URL) + mixed behavior
  // sessions with reformulations and question forms

  const std::vector<std::string>* all_urls = nullptr;
  std::vector<std::string> url_pool;
  for (const Intent& in : intents)
    for (const std::string& u : in.urls) url_pool.push_back(u);
  all_urls = &url_pool;

  std::int64_t now = 1700000000;
  std::size_t session_counter = 0;
  auto click_url = [&](std::size_t intent, std::size_t variant_pos) {
    if (cfg.noise_rate > 0.0 && rng.uniform() < cfg.noise_rate)
      return (*all_urls)[rng.below(all_urls->size())];
    const Intent& in = intents[intent];
    const std::size_t u = std::min(variant_pos / 3, in.urls.size() - 1);
    return in.urls[u];
  };

  for (std::size_t k = 0; k < cfg.intents; ++k) {
    const Intent& in = intents[k];
    for (std::size_t u = 0; u < in.urls.size(); ++u) {
      const std::string session = "s" + std::to_string(session_counter);
      const std::string user = "cov" + std::to_string(session_counter);
      ++session_counter;
      now += 3600;
      std::int64_t ts = now;
      // the URL's window plus one overlapping variant from the next window
      const std::size_t begin = u * 3;
      const std::size_t end = std::min(begin + 4, in.variants.size());
      for (std::size_t v = begin; v < end; ++v) {
        ts += 60 + static_cast<std::int64_t>(rng.below(180));
        std::string url = cfg.noise_rate > 0.0 && rng.uniform() < cfg.noise_rate
                              ? (*all_urls)[rng.below(all_urls->size())]
                              : in.urls[u];
        world.clicks.push_back(
            {world.queries[in.variants[v]].text, url, ts, session, user});
      }
    }
  }

  // question forms: at most 4 distinct per intent, clicking a dedicated URL
  auto question_form = [&](std::size_t intent) -> std::string {
    Intent& in = intents[intent];
    if (in.question_forms.size() >= 4 && rng.uniform() < 0.8)
      return in.question_forms[rng.below(in.question_forms.size())];
    const auto& groups = question_prefixes();
    const auto& prefix = groups[rng.below(groups.size())][rng.below(2)];
    std::string text = join(prefix, ' ');
    const std::size_t variant = in.variants[rng.below(in.variants.size())];
    text += " " + world.queries[variant].text;
    if (world.intent_of.count(text) == 0 && in.question_forms.size() < 4) {
      add_query(text, intent, world.queries[variant].specifiers);
      in.question_forms.push_back(text);
    }
    return world.intent_of.count(text) ? text
           : in.question_forms.empty() ? world.queries[variant].text
                                       : in.question_forms[0];
  };

  for (std::size_t s = 0; s < cfg.mixed_sessions; ++s) {
    const std::string session = "m" + std::to_string(s);
    const std::string user = "mu" + std::to_string(s / 3);
    now += 2700 + static_cast<std::int64_t>(rng.below(1800));  // >= 45 min gap
    std::int64_t ts = now;
    const std::size_t len = 3 + static_cast<std::size_t>(rng.below(4));
    std::size_t intent = static_cast<std::size_t>(rng.below(cfg.intents));
    std::size_t variant_pos = static_cast<std::size_t>(rng.below(intents[intent].variants.size()));
    std::string prev_text;

    for (std::size_t step = 0; step < len; ++step) {
      if (step > 0) {
        const double r = rng.uniform();
        if (r < 0.55) {
          // same intent, another variant with a comparable specifier set
          const Intent& in = intents[intent];
          for (int tries = 0; tries < 8; ++tries) {
            std::size_t cand = static_cast<std::size_t>(rng.below(in.variants.size()));
            const auto& cur = world.queries[in.variants[variant_pos]];
            const auto& nxt = world.queries[in.variants[cand]];
            if (cand != variant_pos && (cur.specifiers == 0 || nxt.specifiers == 0 ||
                                        cur.specifiers == nxt.specifiers)) {
              variant_pos = cand;
              break;
            }
          }
        } else if (r < 0.80) {
          // same topic, different intent
          const std::size_t topic = intents[intent].topic;
          const std::size_t lo = topic * cfg.intents_per_topic;
          const std::size_t hi = std::min(lo + cfg.intents_per_topic, cfg.intents);
          if (hi - lo > 1) {
            std::size_t next = intent;
            while (next == intent) next = lo + static_cast<std::size_t>(rng.below(hi - lo));
            intent = next;
          } else {
            intent = static_cast<std::size_t>(rng.below(cfg.intents));
          }
          variant_pos = static_cast<std::size_t>(rng.below(intents[intent].variants.size()));
        } else {
          // topic change
          std::size_t next = intent;
          while (intents[next].topic == intents[intent].topic)
            next = static_cast<std::size_t>(rng.below(cfg.intents));
          intent = next;
          variant_pos = static_cast<std::size_t>(rng.below(intents[intent].variants.size()));
        }
      }

      ts += 60 + static_cast<std::int64_t>(rng.below(240));
      std::string text = world.queries[intents[intent].variants[variant_pos]].text;
      std::string url = "-";
      if (cfg.question_rate > 0.0 && rng.uniform() < cfg.question_rate) {
        text = question_form(intent);
        if (rng.uniform() < 0.7) url = "q" + std::to_string(intent) + "_qa";
      } else if (rng.uniform() < 0.7) {
        url = click_url(intent, variant_pos);
      }
      world.clicks.push_back({text, url, ts, session, user});

      if (step > 0) {
        const SynthQuery& qa = world.queries[query_index.at(prev_text)];
        const SynthQuery& qb = world.queries[query_index.at(text)];
        int category;
        if (qa.topic != qb.topic) category = 0;                      // topic change
        else if (qa.intent != qb.intent) category = 1;               // explore
        else if (qa.specifiers != qb.specifiers) category = 2;       // specify
        else category = 3;                                           // paraphrase
        world.session_pairs.push_back({prev_text, text, category});
      }
      prev_text = text;
    }
  }

  // ---------------------------------------------------------------------
  // graded similarity judgments

  for (std::size_t t = 0; t < cfg.judgment_targets; ++t) {
    const std::size_t k = t % cfg.intents;
    const Intent& in = intents[k];
    const std::size_t target_idx = in.variants[rng.below(in.variants.size())];
    const SynthQuery& target = world.queries[target_idx];

    std::set<std::string> seen{target.text};
    std::vector<SimilarityJudgment> locals;
    auto grade_of = [&](const SynthQuery& cand) {
      if (cand.intent != target.intent) return Grade::kBad;
      return cand.specifiers == target.specifiers ? Grade::kGood : Grade::kFair;
    };
    int good = 0;
    for (int tries = 0; tries < 24 && locals.size() < 2 + rng.below(2); ++tries) {
      const SynthQuery& cand = world.queries[in.variants[rng.below(in.variants.size())]];
      if (!seen.insert(cand.text).second) continue;
      Grade g = grade_of(cand);
      if (g == Grade::kGood) ++good;
      locals.push_back({target.text, cand.text, g});
    }
    if (good == 0) continue;  // keep NDCG defined for every emitted target
    // cross-intent distractors: one same-topic, two from other topics
    for (int c = 0; c < 3; ++c) {
      std::size_t other = k;
      if (c == 0) {
        const std::size_t lo = in.topic * cfg.intents_per_topic;
        const std::size_t hi = std::min(lo + cfg.intents_per_topic, cfg.intents);
        if (hi - lo > 1)
          while (other == k) other = lo + static_cast<std::size_t>(rng.below(hi - lo));
      }
      while (other == k) other = static_cast<std::size_t>(rng.below(cfg.intents));
      const Intent& oin = intents[other];
      const SynthQuery& cand = world.queries[oin.variants[rng.below(oin.variants.size())]];
      if (!seen.insert(cand.text).second) continue;
      locals.push_back({target.text, cand.text, Grade::kBad});
    }
    if (locals.size() >= 2)
      world.judgments.insert(world.judgments.end(), locals.begin(), locals.end());
  }

  // ---------------------------------------------------------------------
  // paraphrase pairs: +1 iff same intent and same specifier footprint;
  // negatives mix cross-intent pairs with same-intent specifier changes

  auto sample_variant = [&](std::size_t k) -> const SynthQuery& {
    const Intent& in = intents[k];
    return world.queries[in.variants[rng.below(in.variants.size())]];
  };

  for (std::size_t i = 0; i < cfg.paraphrase_pairs; ++i) {
    const std::size_t k = static_cast<std::size_t>(rng.below(cfg.intents));
    ParaphraseExample ex;
    ex.task = ParaphraseTask::kQuery;
    const double r = rng.uniform();
    if (r < 0.34) {
      // positive: synonym-level variation, same specifier count
      ex.label = 1;
      const SynthQuery& a = sample_variant(k);
      for (int tries = 0; tries < 16; ++tries) {
        const SynthQuery& b = sample_variant(k);
        if (b.text != a.text && b.specifiers == a.specifiers) {
          ex.a = a.text;
          ex.b = b.text;
          break;
        }
      }
    } else if (r < 0.67) {
      // hard negative: same intent, different specifier footprint
      ex.label = -1;
      const SynthQuery& a = sample_variant(k);
      for (int tries = 0; tries < 16; ++tries) {
        const SynthQuery& b = sample_variant(k);
        if (b.text != a.text && b.specifiers != a.specifiers) {
          ex.a = a.text;
          ex.b = b.text;
          break;
        }
      }
    } else {
      // easy negative: different intents
      ex.label = -1;
      std::size_t other = k;
      while (other == k) other = static_cast<std::size_t>(rng.below(cfg.intents));
      ex.a = sample_variant(k).text;
      ex.b = sample_variant(other).text;
    }
    if (ex.a.empty() || ex.b.empty()) continue;
    world.query_paraphrases.push_back(ex);

    // question task mirrors the query task through prefix templates
    const auto& groups = question_prefixes();
    const std::size_t g = rng.below(groups.size());
    ParaphraseExample qe = ex;
    qe.task = ParaphraseTask::kQuestion;
    qe.a = join(groups[g][rng.below(2)], ' ') + " " + ex.a;
    const std::size_t g2 = ex.label == 1 ? g : rng.below(groups.size());
    qe.b = join(groups[g2][rng.below(2)], ' ') + " " + ex.b;
    world.question_paraphrases.push_back(qe);
  }

  // ---------------------------------------------------------------------
  // long-tail frequency profile over a seeded rank permutation

  std::vector<std::size_t> rank_order(world.queries.size());
  for (std::size_t i = 0; i < rank_order.size(); ++i) rank_order[i] = i;
  rng.shuffle(rank_order);
  const std::size_t unseen =
      static_cast<std::size_t>(cfg.unseen_fraction * static_cast<double>(rank_order.size()));
  // amplitude scales with the seen-query count so the profile spans the
  // head/torso/tail tiers at any world size: the top rank clears 2^15 and
  // the last rank lands around 4
  const double seen_count = static_cast<double>(rank_order.size() - unseen);
  const double amplitude = std::max(4.0 * std::pow(seen_count, 1.6), 40000.0);
  std::size_t rank = 1;
  for (std::size_t pos = unseen; pos < rank_order.size(); ++pos, ++rank) {
    const double zipf = amplitude / std::pow(static_cast<double>(rank), 1.6);
    world.frequency[world.queries[rank_order[pos]].text] =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(zipf));
  }

  return world;
}

namespace {

void write_query_oracle(const std::filesystem::path& path, const SyntheticWorld& world,
                        const std::string& stamp) {
  atomic_write(path, [&](std::ostream& os) {
    os << "# " << stamp << "\n# query\tintent\ttopic\tspecifiers\n";
    for (const auto& q : world.queries)
      os << q.text << '\t' << q.intent << '\t' << q.topic << '\t' << q.specifiers << '\n';
  });
}

void write_session_pairs(const std::filesystem::path& path,
                         const std::vector<LabeledSessionPair>& pairs,
                         const std::string& stamp) {
  atomic_write(path, [&](std::ostream& os) {
    os << "# " << stamp << "\n# query_a\tquery_b\tcategory\n";
    for (const auto& p : pairs) os << p.a << '\t' << p.b << '\t' << p.category << '\n';
  });
}

void write_split(const std::filesystem::path& dir, const std::string& base,
                 const std::vector<ParaphraseExample>& all, const std::string& stamp) {
  std::vector<ParaphraseExample> train, val, test;
  for (std::size_t i = 0; i < all.size(); ++i) {
    switch (split_of(i)) {
      case Split::kTrain: train.push_back(all[i]); break;
      case Split::kVal: val.push_back(all[i]); break;
      case Split::kTest: test.push_back(all[i]); break;
    }
  }
  write_paraphrase_pairs(dir / (base + "_train.tsv"), train, stamp);
  write_paraphrase_pairs(dir / (base + "_val.tsv"), val, stamp);
  write_paraphrase_pairs(dir / (base + "_test.tsv"), test, stamp);
}

}  // namespace

void write_world(const SyntheticWorld& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stamp = "seed=" + std::to_string(world.config.seed) +
                            " intents=" + std::to_string(world.config.intents);
  write_clicks(dir / "clicks.tsv", world.clicks, stamp);
  write_frequency_table(dir / "frequency.tsv", world.frequency, stamp);
  write_query_oracle(dir / "queries.tsv", world, stamp);
  write_judgments(dir / "judgments.tsv", world.judgments, stamp);
  write_split(dir, "para_query", world.query_paraphrases, stamp);
  write_split(dir, "para_question", world.question_paraphrases, stamp);
  write_session_pairs(dir / "session_pairs.tsv", world.session_pairs, stamp);
}

std::vector<LabeledSessionPair> load_session_pairs(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open session pairs: " + path.string());
  std::vector<LabeledSessionPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split_tab(line);
    if (f.size() != 3)
      throw std::runtime_error("session pairs line " + std::to_string(line_no) +
                               ": expected 3 columns");
    const int cat = std::stoi(f[2]);
    if (cat < 0 || cat > 3)
      throw std::runtime_error("session pairs line " + std::to_string(line_no) +
                               ": category out of range");
    out.push_back({f[0], f[1], cat});
  }
  return out;
}

std::vector<SynthQuery> load_query_oracle(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open query oracle: " + path.string());
  std::vector<SynthQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split_tab(line);
    if (f.size() != 4)
      throw std::runtime_error("query oracle line " + std::to_string(line_no) +
                               ": expected 4 columns");
    SynthQuery q;
    q.text = f[0];
    q.intent = static_cast<std::size_t>(std::stoull(f[1]));
    q.topic = static_cast<std::size_t>(std::stoull(f[2]));
    q.specifiers = static_cast<std::size_t>(std::stoull(f[3]));
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace qenc
