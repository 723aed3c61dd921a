// Acceptance suite: runs the full desk-scale pipeline end to end and prints
// one PASS/FAIL line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "qenc/cli.hpp"
#include "qenc/encfile.hpp"
#include "qenc/encoder.hpp"
#include "qenc/evaluate.hpp"
#include "qenc/hnsw.hpp"
#include "qenc/scorers.hpp"
#include "qenc/session.hpp"
#include "qenc/synth.hpp"
#include "qenc/tailstats.hpp"
#include "qenc/trainer.hpp"

using namespace qenc;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) return "<missing:" + p.string() + ">";
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// criterion 1: gradient correctness of every layer and both loss families

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_group;
  std::set<std::string> groups_covered;

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ModelDims dims = helpers::toy_dims();
    dims.word_dim = 3 + seed % 3;
    dims.char_filters = 2 + seed % 3;
    dims.gru_hidden = 3 + seed % 4;
    ModelParameters p = init_parameters(dims, helpers::toy_vocab(), seed);

    const TokenizedQuery qa = tokenize("horse racing", p.vocab);
    const TokenizedQuery qb = tokenize("racing alpha beta", p.vocab);
    const TokenizedQuery qc = tokenize("soup", p.vocab);
    const int label = seed % 2 ? 1 : -1;

    // composite touches the word/char embeddings, both highways, both GRU
    // directions, the residual mix and both loss families
    auto eval = [&]() {
      Tape tape;
      ParamIds ids = register_parameters(tape, p);
      Tape::Id ea = encode_on_tape(tape, ids, p, qa);
      Tape::Id eb = encode_on_tape(tape, ids, p, qb);
      Tape::Id ec = encode_on_tape(tape, ids, p, qc);
      Tape::Id co = coclick_loss_on_tape(tape, tape.cosine(ea, eb), tape.cosine(ea, ec));
      Tape::Id para = paraphrase_loss_on_tape(tape, tape.cosine(eb, ec), label);
      return tape.value(tape.add(co, para)).data[0];
    };

    GradientMap analytic;
    {
      Tape tape;
      ParamIds ids = register_parameters(tape, p);
      Tape::Id ea = encode_on_tape(tape, ids, p, qa);
      Tape::Id eb = encode_on_tape(tape, ids, p, qb);
      Tape::Id ec = encode_on_tape(tape, ids, p, qc);
      Tape::Id co = coclick_loss_on_tape(tape, tape.cosine(ea, eb), tape.cosine(ea, ec));
      Tape::Id para = paraphrase_loss_on_tape(tape, tape.cosine(eb, ec), label);
      tape.backward(tape.add(co, para));
      for (const auto& [name, id] : ids.groups) {
        analytic[name] = tape.grad(id);
        groups_covered.insert(name);
      }
    }

    auto rep = oracles::fd_check_params(p, analytic, eval);
    if (rep.max_rel_err > worst) {
      worst = rep.max_rel_err;
      worst_group = rep.worst_group;
    }
  }

  const double elapsed = seconds_since(t0);
  const bool pass = worst < 1e-3 && elapsed < 300.0 && groups_covered.size() == 28;
  report(1, pass, "finite-difference gradients for every layer and loss",
         "max_rel_err=" + fmt(worst) + " worst=" + worst_group +
             " groups=" + std::to_string(groups_covered.size()) + " time=" + fmt(elapsed) + "s");
}

// ---------------------------------------------------------------------------
// shared pipeline state

struct Pipeline {
  helpers::TempDir tmp{"acceptance"};
  SyntheticWorld world;
  std::vector<CoClickGroup> groups;
  ModelParameters phase1;
  ModelParameters phase2;
  TrainResult phase1_result;
  double phase1_seconds = 0.0;
};

TrainConfig phase1_config() {
  TrainConfig tc;
  tc.adam.learning_rate = 1e-3;
  tc.batch_size = 64;
  tc.eval_every = 20;
  tc.patience = 3;
  tc.max_epochs = 40;
  tc.seed = 1;
  return tc;
}

Pipeline build_pipeline() {
  Pipeline pl;
  SynthConfig sc;  // K=200 intents, 10 queries/intent, noise 0.05
  sc.seed = 20240501;
  pl.world = generate_synthetic_world(sc);
  write_world(pl.world, pl.tmp / "world");
  pl.groups = build_coclick_groups(pl.world.clicks);

  std::vector<std::string> corpus;
  for (const auto& c : pl.world.clicks) corpus.push_back(c.query);
  ModelDims dims;  // desk-scale defaults
  pl.phase1 = init_parameters(dims, Vocabulary::build(corpus, 5000, 64), 1);

  const auto t0 = std::chrono::steady_clock::now();
  pl.phase1_result = train_phase1(pl.phase1, pl.groups, phase1_config());
  pl.phase1_seconds = seconds_since(t0);
  return pl;
}

// criterion 2: validation loss falls and intents separate by >= 0.3

void criterion_training(Pipeline& pl) {
  const bool loss_down =
      pl.phase1_result.final_validation_loss < pl.phase1_result.initial_validation_loss;

  // held-out pairs: never sharing a co-click group
  std::set<std::pair<std::string, std::string>> co_members;
  for (const auto& g : pl.groups)
    for (std::size_t i = 0; i < g.queries.size(); ++i)
      for (std::size_t j = i + 1; j < g.queries.size(); ++j)
        co_members.insert({std::min(g.queries[i], g.queries[j]),
                           std::max(g.queries[i], g.queries[j])});

  auto params = std::make_shared<ModelParameters>(pl.phase1);
  EncoderScorer scorer(params);
  std::vector<std::string> texts;
  for (const auto& q : pl.world.queries) texts.push_back(q.text);
  scorer.precompute(texts);

  Rng rng(99);
  double same = 0.0, cross = 0.0;
  std::size_t n_same = 0, n_cross = 0;
  while (n_same < 500 || n_cross < 500) {
    const auto& a = pl.world.queries[rng.below(pl.world.queries.size())];
    const auto& b = pl.world.queries[rng.below(pl.world.queries.size())];
    if (a.text == b.text) continue;
    const bool same_intent = a.intent == b.intent;
    if (same_intent && co_members.count({std::min(a.text, b.text), std::max(a.text, b.text)}))
      continue;
    if (same_intent && n_same < 500) {
      same += scorer(a.text, b.text);
      ++n_same;
    } else if (!same_intent && n_cross < 500) {
      cross += scorer(a.text, b.text);
      ++n_cross;
    }
  }
  const double separation = same / double(n_same) - cross / double(n_cross);

  const bool pass = loss_down && separation >= 0.3 && pl.phase1_seconds < 1800.0;
  report(2, pass, "phase-1 efficacy on the synthetic oracle world",
         "val_loss " + fmt(pl.phase1_result.initial_validation_loss) + " -> " +
             fmt(pl.phase1_result.final_validation_loss) + ", separation=" + fmt(separation) +
             ", time=" + fmt(pl.phase1_seconds) + "s");
}

// criterion 3: GEN beats TF-IDF on NDCG with Fisher p < 0.05 over >= 300 targets

void criterion_ranking(Pipeline& pl, const ModelParameters& model) {
  RankingDataset data = to_ranking_dataset(pl.world.judgments);

  auto params = std::make_shared<ModelParameters>(model);
  EncoderScorer gen(params);
  std::vector<std::string> texts;
  for (const auto& [t, cands] : data.targets) {
    texts.push_back(t);
    for (const auto& c : cands) texts.push_back(c.text);
  }
  gen.precompute(texts);

  std::vector<std::string> corpus;
  for (const auto& c : pl.world.clicks) corpus.push_back(c.query);
  auto tfidf = std::make_shared<TfIdfModel>(TfIdfModel::build(corpus));

  RankingResult rg = evaluate_ranking(data, gen.as_pair_scorer());
  RankingResult rt = evaluate_ranking(data, make_tfidf_scorer(tfidf));
  FisherResult fisher =
      fisher_randomization_test(rg.per_target, rt.per_target, 100000, 1);

  // a label-blind scorer anchors the bottom of the ordering
  PairScorer random_scorer = [](const std::string& a, const std::string& b) {
    return double(std::hash<std::string>{}(a + "\x1f" + b) % 4096) / 4096.0;
  };
  RankingResult rr = evaluate_ranking(data, random_scorer);

  const bool pass = rg.targets >= 300 && rg.mean_ndcg > rt.mean_ndcg &&
                    rg.mean_ndcg > rr.mean_ndcg && fisher.p < 0.05 &&
                    rg.target_keys == rt.target_keys;
  report(3, pass, "trained encoder beats TF-IDF on mean NDCG with significance",
         "gen=" + fmt(rg.mean_ndcg) + " tfidf=" + fmt(rt.mean_ndcg) +
             " random=" + fmt(rr.mean_ndcg) + " p=" + fmt(fisher.p) +
             " targets=" + std::to_string(rg.targets));
}

// criterion 4: phase-2 fine-tuning lifts held-out paraphrase AUC by >= 0.02

void criterion_multitask(Pipeline& pl) {
  Phase2Data data;
  // a slice of the co-click corpus joins the two paraphrase tasks
  std::vector<std::size_t> order(pl.groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(77);
  shuffle_rng.shuffle(order);
  const std::size_t keep = std::max<std::size_t>(4, pl.groups.size() * 15 / 100);
  for (std::size_t i = 0; i < keep; ++i) data.coclick.push_back(pl.groups[order[i]]);

  ClassificationDataset heldout;
  for (std::size_t i = 0; i < pl.world.query_paraphrases.size(); ++i) {
    const auto& ex = pl.world.query_paraphrases[i];
    switch (split_of(i)) {
      case Split::kTrain: data.query_train.push_back(ex); break;
      case Split::kVal: data.query_val.push_back(ex); break;
      case Split::kTest: heldout.pairs.push_back(ex); break;
    }
  }
  for (std::size_t i = 0; i < pl.world.question_paraphrases.size(); ++i) {
    const auto& ex = pl.world.question_paraphrases[i];
    switch (split_of(i)) {
      case Split::kTrain: data.question_train.push_back(ex); break;
      case Split::kVal: data.question_val.push_back(ex); break;
      case Split::kTest: heldout.pairs.push_back(ex); break;
    }
  }

  auto auc_of = [&](const ModelParameters& m) {
    auto params = std::make_shared<ModelParameters>(m);
    EncoderScorer scorer(params);
    std::vector<std::string> texts;
    for (const auto& p : heldout.pairs) {
      texts.push_back(p.a);
      texts.push_back(p.b);
    }
    scorer.precompute(texts);
    return evaluate_classification(heldout, scorer.as_pair_scorer()).auc;
  };

  const double before = auc_of(pl.phase1);

  TrainConfig tc;
  tc.adam.learning_rate = 1e-3;
  tc.batch_size = 64;
  tc.eval_every = 20;
  tc.patience = 4;
  tc.max_epochs = 25;
  tc.seed = 2;
  pl.phase2 = pl.phase1;
  TrainResult r = train_phase2(pl.phase2, data, tc);
  const double after = auc_of(pl.phase2);

  const bool pass = after - before >= 0.02;
  report(4, pass, "multi-task fine-tuning improves held-out paraphrase AUC by >= 0.02",
         "auc " + fmt(before) + " -> " + fmt(after) + " (delta=" + fmt(after - before) +
             ", steps=" + std::to_string(r.steps) + ")");
}

// ---------------------------------------------------------------------------
// criterion 5: NCE equals brute force on 1000 random batches

void criterion_nce() {
  Rng rng(4242);
  std::size_t mismatches = 0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 4 + rng.below(28);
    const std::size_t dim = 3 + rng.below(12);
    std::vector<DenseArray> enc;
    std::vector<std::vector<double>> raw;
    std::vector<std::uint32_t> groups;
    for (std::size_t i = 0; i < n; ++i) {
      auto v = helpers::random_vector(rng, dim);
      if (i > 0 && rng.uniform() < 0.15) v = enc[rng.below(i)];  // ties
      enc.push_back(v);
      raw.push_back(v.data);
      groups.push_back(static_cast<std::uint32_t>(rng.below(2 + rng.below(6))));
    }
    const std::size_t anchor = rng.below(n);
    bool eligible = false;
    for (auto g : groups) eligible = eligible || g != groups[anchor];
    if (!eligible) continue;
    ++checked;
    if (nce_select_negative(anchor, groups, enc) != oracles::nce_scan(anchor, groups, raw))
      ++mismatches;
  }
  report(5, mismatches == 0 && checked >= 900, "NCE negative selection matches brute force",
         std::to_string(checked) + " batches, " + std::to_string(mismatches) + " mismatches");
}

// criterion 6: metric implementations match oracles to 1e-9 + worked examples

void criterion_metrics() {
  Rng rng(31337);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(14);
    std::vector<int> grades(n);
    bool nonzero = false;
    for (auto& g : grades) {
      g = static_cast<int>(rng.below(3));
      nonzero = nonzero || g > 0;
    }
    if (!nonzero) grades[rng.below(n)] = 2;
    worst = std::max(worst, std::abs(ndcg_no_cutoff(grades) - oracles::ndcg_brute(grades)));
  }
  for (int t = 0; t < 100; ++t) {
    std::vector<double> pos(1 + rng.below(15)), neg(1 + rng.below(15));
    for (auto& v : pos) v = rng.below(6) / 3.0;
    for (auto& v : neg) v = rng.below(6) / 3.0;
    worst = std::max(worst, std::abs(auc(pos, neg) - oracles::auc_brute(pos, neg)));
  }
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + rng.below(12);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform();
      y[i] = t % 2 ? rng.uniform() : std::floor(rng.uniform() * 3.0);
    }
    if (y[0] == y[1] && std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
      y[0] += 0.5;
    worst = std::max(worst, std::abs(spearman(x, y) - oracles::spearman_brute(x, y)));
  }

  const bool worked = std::abs(ndcg_no_cutoff(std::vector<int>{0, 1, 2}) - 0.58688) < 1e-5 &&
                      std::abs(auc(std::vector<double>{0.9, 0.4},
                                   std::vector<double>{0.6, 0.1}) - 0.75) < 1e-12 &&
                      std::abs(spearman(std::vector<double>{1, 2, 3},
                                        std::vector<double>{1, 3, 2}) - 0.5) < 1e-12;
  report(6, worst < 1e-9 && worked, "NDCG/AUC/Spearman match oracles and worked examples",
         "max_abs_diff=" + fmt(worst) + " over 300 instances");
}

// ---------------------------------------------------------------------------
// criterion 7: ANN recall, exactness at full ef, latency at 100k

void criterion_ann() {
  Rng rng(7001);
  const std::size_t dim = 32;

  // recall on 10k random unit vectors with the pinned parameters
  std::vector<std::uint64_t> ids(10000);
  std::vector<std::vector<float>> pts;
  pts.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i] = i;
    pts.push_back(helpers::random_unit_f32(rng, dim));
  }
  HnswParams hp;  // M=16, ef_construction=200, ef_search=64
  AnnIndex index = AnnIndex::build(ids, pts, hp);

  std::size_t hits = 0, total = 0;
  for (int t = 0; t < 500; ++t) {
    auto q = helpers::random_unit_f32(rng, dim);
    auto got = index.search(q, 10, 2.0);
    auto want = oracles::nn_scan(pts, ids, q, 10, 2.0);
    std::set<std::uint64_t> got_ids;
    for (const auto& nb : got) got_ids.insert(nb.id);
    for (const auto& w : want) {
      ++total;
      hits += got_ids.count(w.id);
    }
  }
  const double recall = double(hits) / double(total);

  // with ef = index size the result must equal the exact scan
  bool exact_ok = true;
  for (int t = 0; t < 25 && exact_ok; ++t) {
    auto q = helpers::random_unit_f32(rng, dim);
    auto got = index.search(q, 10, 2.0, std::nullopt, index.size());
    auto want = oracles::nn_scan(pts, ids, q, 10, 2.0);
    exact_ok = got.size() == want.size();
    for (std::size_t i = 0; exact_ok && i < got.size(); ++i)
      exact_ok = got[i].id == want[i].id && std::abs(got[i].distance - want[i].dist) < 1e-12;
  }

  // latency at 100k points
  std::vector<std::uint64_t> big_ids(100000);
  std::vector<std::vector<float>> big_pts;
  big_pts.reserve(big_ids.size());
  for (std::size_t i = 0; i < big_ids.size(); ++i) {
    big_ids[i] = i;
    big_pts.push_back(helpers::random_unit_f32(rng, dim));
  }
  AnnIndex big = AnnIndex::build(big_ids, big_pts, hp);
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t sink = 0;
  const int probes = 1000;
  for (int t = 0; t < probes; ++t) {
    auto q = helpers::random_unit_f32(rng, dim);
    sink += big.search(q, 10, 2.0).size();
  }
  const double mean_ms = seconds_since(t0) * 1000.0 / probes;

  const bool pass = recall >= 0.95 && exact_ok && mean_ms < 5.0 && sink > 0;
  report(7, pass, "ANN fidelity: recall@10, full-ef exactness, latency",
         "recall=" + fmt(recall) + " exact=" + (exact_ok ? std::string("yes") : std::string("no")) +
             " mean_search=" + fmt(mean_ms) + "ms@100k");
}

// ---------------------------------------------------------------------------
// criteria 8 + 9: tail sparsity and co-intent structure on the trained world

void criterion_tail(Pipeline& pl) {
  // index: queries seen in the reference period; probes: every query
  auto params = std::make_shared<ModelParameters>(pl.phase1);
  EncoderScorer scorer(params);
  std::vector<std::string> all_texts;
  for (const auto& q : pl.world.queries) all_texts.push_back(q.text);
  scorer.precompute(all_texts);

  std::vector<std::uint64_t> ids;
  std::vector<std::vector<float>> vectors;
  std::unordered_map<std::uint64_t, std::string> id_text;
  std::unordered_map<std::string, std::uint64_t> text_id;
  for (const auto& q : pl.world.queries) {
    if (!pl.world.frequency.count(q.text)) continue;  // unseen stays out of the index
    const std::uint64_t id = ids.size();
    ids.push_back(id);
    vectors.push_back(to_f32(scorer.encoding(q.text)));
    id_text[id] = q.text;
    text_id[q.text] = id;
  }
  HnswParams hp;
  hp.seed = 5;
  AnnIndex index = AnnIndex::build(ids, vectors, hp);

  std::vector<TailProbe> probes;
  for (const auto& q : pl.world.queries) {
    auto it = text_id.find(q.text);
    const std::uint64_t self =
        it == text_id.end() ? std::numeric_limits<std::uint64_t>::max() : it->second;
    probes.push_back({self, q.text, to_f32(scorer.encoding(q.text))});
  }

  const std::vector<double> radii = {0.15, 0.10, 0.05};
  std::map<Tier, double> penalties{
      {Tier::kHead, 0.92}, {Tier::kTorso, 0.80}, {Tier::kTail, 0.47}};

  const double unseen_none =
      unseen_fraction(probes, index, id_text, pl.world.frequency, 0.0, penalties);
  const double unseen_015 =
      unseen_fraction(probes, index, id_text, pl.world.frequency, 0.15, penalties);
  const double unseen_010 =
      unseen_fraction(probes, index, id_text, pl.world.frequency, 0.10, penalties);
  const double unseen_005 =
      unseen_fraction(probes, index, id_text, pl.world.frequency, 0.05, penalties);

  // per-probe nesting of result sets as the radius grows
  bool nested = true;
  std::vector<std::vector<float>> probe_vecs;
  std::vector<std::uint64_t> probe_excl;
  for (const auto& p : probes) {
    probe_vecs.push_back(p.encoding);
    probe_excl.push_back(p.id);
  }
  auto r005 = index.search_batch(probe_vecs, 10, 0.05, probe_excl);
  auto r010 = index.search_batch(probe_vecs, 10, 0.10, probe_excl);
  auto r015 = index.search_batch(probe_vecs, 10, 0.15, probe_excl);
  for (std::size_t i = 0; i < probes.size() && nested; ++i) {
    std::set<std::uint64_t> s10, s15;
    for (const auto& nb : r010[i]) s10.insert(nb.id);
    for (const auto& nb : r015[i]) s15.insert(nb.id);
    for (const auto& nb : r005[i]) nested = nested && s10.count(nb.id) == 1;
    for (const auto& nb : r010[i]) nested = nested && s15.count(nb.id) == 1;
  }

  const bool pass8 = unseen_015 < unseen_none && unseen_015 <= unseen_010 &&
                     unseen_010 <= unseen_005 && nested;
  report(8, pass8, "ANN augmentation shrinks the unseen bin, monotone in radius",
         "unseen none=" + fmt(unseen_none) + " r0.05=" + fmt(unseen_005) +
             " r0.10=" + fmt(unseen_010) + " r0.15=" + fmt(unseen_015) +
             (nested ? ", nested" : ", NOT nested"));

  // pooled co-intent per radius from the tier stats
  IntentOracle intent = [&](const std::string& text) { return pl.world.intent_oracle(text); };
  auto rows = tail_stats(probes, index, id_text, pl.world.frequency, radii, intent);
  std::map<double, std::pair<double, double>> pooled;  // radius -> (co_intent weighted, judged)
  for (const auto& r : rows) {
    const double judged = r.mean_neighbors * double(r.covered);
    pooled[r.radius].first += r.co_intent_pct * judged;
    pooled[r.radius].second += judged;
  }
  const double co15 = pooled[0.15].first / std::max(pooled[0.15].second, 1.0);
  const double co10 = pooled[0.10].first / std::max(pooled[0.10].second, 1.0);
  const double co05 = pooled[0.05].first / std::max(pooled[0.05].second, 1.0);
  const bool pass9 = co05 >= co10 - 1e-9 && co10 >= co15 - 1e-9;
  report(9, pass9, "co-intent share is nondecreasing as the radius shrinks",
         "co% r0.15=" + fmt(co15) + " r0.10=" + fmt(co10) + " r0.05=" + fmt(co05));
}

// ---------------------------------------------------------------------------
// criterion 10: byte-identical artifacts under identical seeds

void criterion_determinism(Pipeline& pl) {
  const auto dir = pl.tmp.path();
  const auto cfg_path = dir / "det.cfg";
  {
    std::ofstream os(cfg_path);
    os << "model.word_dim = 16\nmodel.char_dim = 8\nmodel.char_filters = 8\n";
    os << "model.char_window = 4\nmodel.gru_hidden = 12\n";
    os << "train.clicks = " << (dir / "world" / "clicks.tsv").string() << "\n";
    os << "train.learning_rate = 1e-3\ntrain.batch_size = 32\ntrain.eval_every = 10\n";
    os << "train.max_epochs = 2\n";
  }
  auto run = [&](const std::vector<std::string>& args) { return cli_main(args) == 0; };

  bool ok = true;
  for (const char* tag : {"a", "b"}) {
    ok = ok && run({"--config", cfg_path.string(), "train", "--phase", "1", "--seed", "9",
                    "--out", (dir / ("det_model_" + std::string(tag) + ".bin")).string(),
                    "--curve", (dir / ("det_curve_" + std::string(tag) + ".tsv")).string()});
  }
  const bool train_same = slurp(dir / "det_model_a.bin") == slurp(dir / "det_model_b.bin") &&
                          slurp(dir / "det_curve_a.tsv") == slurp(dir / "det_curve_b.tsv");

  const auto probe = dir / "det_probe.txt";
  {
    std::ofstream os(probe);
    int kept = 0;
    for (const auto& q : pl.world.queries) {
      os << q.text << "\n";
      if (++kept == 300) break;
    }
  }
  for (const char* tag : {"a", "b"}) {
    ok = ok && run({"encode", "--model", (dir / "det_model_a.bin").string(), "--input",
                    probe.string(), "--output",
                    (dir / ("det_enc_" + std::string(tag) + ".bin")).string()});
  }
  const bool encode_same = slurp(dir / "det_enc_a.bin") == slurp(dir / "det_enc_b.bin");

  for (const char* tag : {"a", "b"}) {
    ok = ok && run({"ann", "build", "--input", (dir / "det_enc_a.bin").string(), "--output",
                    (dir / ("det_idx_" + std::string(tag) + ".bin")).string(), "--seed", "13"});
  }
  const bool ann_same = slurp(dir / "det_idx_a.bin") == slurp(dir / "det_idx_b.bin");

  report(10, ok && train_same && encode_same && ann_same,
         "train/encode/ann-build re-runs are byte-identical",
         std::string("train=") + (train_same ? "same" : "DIFF") +
             " encode=" + (encode_same ? "same" : "DIFF") +
             " ann=" + (ann_same ? "same" : "DIFF"));
}

}  // namespace

int main() {
  std::printf("acceptance suite: desk-scale synthetic pipeline\n");
  const auto t0 = std::chrono::steady_clock::now();

  criterion_gradients();

  Pipeline pl = build_pipeline();
  criterion_training(pl);
  criterion_multitask(pl);          // fills pl.phase2
  criterion_ranking(pl, pl.phase2); // final model vs the TF-IDF baseline
  criterion_nce();
  criterion_metrics();
  criterion_ann();
  criterion_tail(pl);
  criterion_determinism(pl);

  std::printf("%s: %d failure(s), total time %.1fs\n", g_failures ? "FAILURE" : "SUCCESS",
              g_failures, seconds_since(t0));
  return g_failures;
}
