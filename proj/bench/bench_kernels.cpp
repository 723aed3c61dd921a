// Benchmark comparing the serial reference kernels with their OpenMP
// twins: batch encoding, the brute-force exact scan, ranking evaluation
// and HNSW batch search. Prints a timing table and verifies on the fly
// that both policies produce identical results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "qenc/encoder.hpp"
#include "qenc/evaluate.hpp"
#include "qenc/hnsw.hpp"
#include "qenc/scorers.hpp"
#include "qenc/synth.hpp"
#include "qenc/trainer.hpp"

using namespace qenc;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Timed {
  double serial_s = 0.0;
  double parallel_s = 0.0;
  bool identical = false;
};

void print_row(const char* name, const Timed& t, std::size_t items) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx   %s   (%zu items)\n", name,
              t.serial_s * 1e3, t.parallel_s * 1e3,
              t.parallel_s > 0 ? t.serial_s / t.parallel_s : 0.0,
              t.identical ? "identical" : "MISMATCH!", items);
}

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    const double u1 = rng.uniform_pos(), u2 = rng.uniform();
    x = static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2));
    norm += static_cast<double>(x) * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x = static_cast<float>(x / norm);
  return v;
}

}  // namespace

int main() {
  std::printf("kernel benchmark, %d thread(s)\n", max_threads());
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  // a small world and a briefly trained model give realistic encodings
  SynthConfig sc;
  sc.intents = 60;
  sc.queries_per_intent = 8;
  sc.seed = 3;
  SyntheticWorld world = generate_synthetic_world(sc);
  std::vector<std::string> corpus;
  for (const auto& c : world.clicks) corpus.push_back(c.query);
  ModelDims dims;
  ModelParameters params = init_parameters(dims, Vocabulary::build(corpus, 5000, 64), 3);
  {
    TrainConfig tc;
    tc.adam.learning_rate = 1e-3;
    tc.batch_size = 64;
    tc.eval_every = 50;
    tc.max_epochs = 2;
    tc.seed = 3;
    train_phase1(params, build_coclick_groups(world.clicks), tc);
  }

  std::vector<TokenizedQuery> queries;
  for (const auto& q : world.queries) queries.push_back(tokenize(q.text, params.vocab));

  // batch encoding
  {
    Timed t;
    double t0 = now_s();
    auto serial = encode_batch(params, queries, ExecPolicy::kSerial);
    t.serial_s = now_s() - t0;
    t0 = now_s();
    auto parallel = encode_batch(params, queries, ExecPolicy::kParallel);
    t.parallel_s = now_s() - t0;
    t.identical = serial.size() == parallel.size();
    for (std::size_t i = 0; t.identical && i < serial.size(); ++i)
      t.identical = std::memcmp(serial[i].data.data(), parallel[i].data.data(),
                                serial[i].size() * sizeof(Real)) == 0;
    print_row("encode_batch", t, queries.size());
  }

  // exact scan and HNSW batch search over random unit vectors
  Rng rng(11);
  const std::size_t n_points = 40000, dim = 32, n_probes = 200;
  std::vector<std::uint64_t> ids(n_points);
  std::vector<std::vector<float>> points;
  points.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    ids[i] = i;
    points.push_back(random_unit(rng, dim));
  }
  std::vector<std::vector<float>> probes;
  for (std::size_t i = 0; i < n_probes; ++i) probes.push_back(random_unit(rng, dim));

  {
    Timed t;
    double t0 = now_s();
    auto serial = exact_search_batch(ids, points, probes, 10, 2.0, {}, ExecPolicy::kSerial);
    t.serial_s = now_s() - t0;
    t0 = now_s();
    auto parallel = exact_search_batch(ids, points, probes, 10, 2.0, {}, ExecPolicy::kParallel);
    t.parallel_s = now_s() - t0;
    t.identical = true;
    for (std::size_t i = 0; t.identical && i < n_probes; ++i) {
      t.identical = serial[i].size() == parallel[i].size();
      for (std::size_t j = 0; t.identical && j < serial[i].size(); ++j)
        t.identical = serial[i][j].id == parallel[i][j].id &&
                      serial[i][j].distance == parallel[i][j].distance;
    }
    print_row("exact_search_batch", t, n_probes);
  }

  {
    AnnIndex index = AnnIndex::build(ids, points, {});
    Timed t;
    double t0 = now_s();
    auto serial = index.search_batch(probes, 10, 2.0, {}, ExecPolicy::kSerial);
    t.serial_s = now_s() - t0;
    t0 = now_s();
    auto parallel = index.search_batch(probes, 10, 2.0, {}, ExecPolicy::kParallel);
    t.parallel_s = now_s() - t0;
    t.identical = true;
    for (std::size_t i = 0; t.identical && i < n_probes; ++i) {
      t.identical = serial[i].size() == parallel[i].size();
      for (std::size_t j = 0; t.identical && j < serial[i].size(); ++j)
        t.identical = serial[i][j].id == parallel[i][j].id;
    }
    print_row("hnsw search_batch", t, n_probes);
  }

  // ranking evaluation over judgment targets
  {
    RankingDataset data = to_ranking_dataset(world.judgments);
    auto shared = std::make_shared<ModelParameters>(params);
    EncoderScorer scorer(shared);
    std::vector<std::string> texts;
    for (const auto& [target, cands] : data.targets) {
      texts.push_back(target);
      for (const auto& c : cands) texts.push_back(c.text);
    }
    scorer.precompute(texts);
    PairScorer ps = scorer.as_pair_scorer();

    Timed t;
    double t0 = now_s();
    RankingResult serial = evaluate_ranking(data, ps, ExecPolicy::kSerial);
    t.serial_s = now_s() - t0;
    t0 = now_s();
    RankingResult parallel = evaluate_ranking(data, ps, ExecPolicy::kParallel);
    t.parallel_s = now_s() - t0;
    t.identical = serial.per_target == parallel.per_target &&
                  serial.mean_ndcg == parallel.mean_ndcg;
    print_row("evaluate_ranking", t, data.targets.size());
  }

  return 0;
}
