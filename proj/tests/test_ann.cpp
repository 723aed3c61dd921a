#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <queue>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "qenc/hnsw.hpp"
#include "qenc/tailstats.hpp"

using namespace qenc;
using helpers::random_unit_f32;

namespace {

struct Cloud {
  std::vector<std::uint64_t> ids;
  std::vector<std::vector<float>> points;
};

Cloud random_cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Cloud c;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    c.ids.push_back(i);
    c.points.push_back(random_unit_f32(rng, dim));
  }
  return c;
}

bool same_results(const std::vector<AnnIndex::Neighbor>& a,
                  const std::vector<oracles::ScanHit>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id) return false;
    if (std::abs(a[i].distance - b[i].dist) > 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("a one-point index returns exactly that point") {
  Cloud c = random_cloud(1, 8, 5);
  AnnIndex index = AnnIndex::build(c.ids, c.points, {});
  auto r = index.search(c.points[0], 10, 2.0);
  REQUIRE(r.size() == 1);
  CHECK(r[0].id == 0);
  CHECK(r[0].distance == doctest::Approx(0.0).epsilon(1e-9));

  // excluded self -> nothing left
  CHECK(index.search(c.points[0], 10, 2.0, std::uint64_t{0}).empty());
}

TEST_CASE("build rejects duplicate ids, ragged dimensions and bad search arguments") {
  Cloud c = random_cloud(4, 6, 2);
  auto dup = c.ids;
  dup[3] = 1;
  CHECK_THROWS_AS(AnnIndex::build(dup, c.points, {}), std::invalid_argument);

  auto ragged = c.points;
  ragged[2].pop_back();
  CHECK_THROWS_AS(AnnIndex::build(c.ids, ragged, {}), std::invalid_argument);

  AnnIndex index = AnnIndex::build(c.ids, c.points, {});
  std::vector<float> short_q(5, 0.1f);
  CHECK_THROWS_AS(index.search(short_q, 10, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(index.search(c.points[0], 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(index.search(c.points[0], 5, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(index.search(c.points[0], 5, -0.1), std::invalid_argument);
}

TEST_CASE("exact duplicates are retrievable at distance zero") {
  Cloud c = random_cloud(6, 8, 11);
  c.points[3] = c.points[0];  // duplicate vector, distinct id
  AnnIndex index = AnnIndex::build(c.ids, c.points, {});
  auto r = index.search(c.points[0], 10, 2.0, std::uint64_t{0});
  REQUIRE(!r.empty());
  CHECK(r[0].id == 3);
  CHECK(r[0].distance == doctest::Approx(0.0).epsilon(1e-9));

  // radius 0 with no duplicates present -> empty
  Cloud d = random_cloud(20, 8, 12);
  AnnIndex index2 = AnnIndex::build(d.ids, d.points, {});
  CHECK(index2.search(d.points[4], 10, 0.0, std::uint64_t{4}).empty());
}

TEST_CASE("an all-identical cloud still answers every probe") {
  std::vector<std::uint64_t> ids;
  std::vector<std::vector<float>> pts;
  Rng rng(3);
  auto v = random_unit_f32(rng, 6);
  for (std::size_t i = 0; i < 50; ++i) {
    ids.push_back(i);
    pts.push_back(v);
  }
  AnnIndex index = AnnIndex::build(ids, pts, {});
  for (std::size_t i = 0; i < 50; ++i) {
    auto r = index.search(pts[i], 10, 0.15, ids[i]);
    CHECK(!r.empty());
    for (const auto& nb : r) CHECK(nb.distance == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("same seed builds an identical graph, different seeds usually differ") {
  Cloud c = random_cloud(300, 12, 9);
  HnswParams p;
  p.seed = 4;
  AnnIndex a = AnnIndex::build(c.ids, c.points, p);
  AnnIndex b = AnnIndex::build(c.ids, c.points, p);
  REQUIRE(a.size() == b.size());
  CHECK(a.max_level() == b.max_level());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a.level_of(i) == b.level_of(i));
    for (int l = 0; l <= a.level_of(i); ++l) CHECK(a.neighbors(i, l) == b.neighbors(i, l));
  }
}

TEST_CASE("layer 0 is connected over all inserted nodes") {
  Cloud c = random_cloud(500, 10, 21);
  AnnIndex index = AnnIndex::build(c.ids, c.points, {});
  std::vector<char> seen(index.size(), 0);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t visited = 0;
  while (!frontier.empty()) {
    const std::size_t cur = frontier.front();
    frontier.pop();
    ++visited;
    for (std::uint32_t nb : index.neighbors(cur, 0)) {
      if (!seen[nb]) {
        seen[nb] = 1;
        frontier.push(nb);
      }
    }
  }
  CHECK(visited == index.size());

  // link budgets hold: M per layer, 2M at layer 0
  for (std::size_t i = 0; i < index.size(); ++i) {
    CHECK(index.neighbors(i, 0).size() <= 2 * index.params().M);
    for (int l = 1; l <= index.level_of(i); ++l)
      CHECK(index.neighbors(i, l).size() <= index.params().M);
  }
}

TEST_CASE("with ef_search at index size the search equals the exact scan") {
  Cloud c = random_cloud(400, 16, 33);
  AnnIndex index = AnnIndex::build(c.ids, c.points, {});
  Rng rng(55);
  for (int t = 0; t < 50; ++t) {
    const std::size_t probe = rng.below(c.points.size());
    for (double radius : {0.05, 0.15, 0.6, 2.0}) {
      auto got = index.search(c.points[probe], 10, radius, c.ids[probe], index.size());
      auto want = oracles::nn_scan(c.points, c.ids, c.points[probe], 10, radius,
                                   static_cast<std::int64_t>(c.ids[probe]));
      CHECK(same_results(got, want));
    }
  }
}

TEST_CASE("reported distances match an independent recomputation within 1e-6") {
  Cloud c = random_cloud(300, 12, 41);
  AnnIndex index = AnnIndex::build(c.ids, c.points, {});
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    auto q = random_unit_f32(rng, 12);
    for (const auto& nb : index.search(q, 10, 2.0)) {
      double dot = 0.0, qn = 0.0, pn = 0.0;
      const auto& p = c.points[nb.id];
      for (std::size_t d = 0; d < q.size(); ++d) {
        dot += static_cast<double>(q[d]) * p[d];
        qn += static_cast<double>(q[d]) * q[d];
        pn += static_cast<double>(p[d]) * p[d];
      }
      const double expect = 1.0 - dot / (std::sqrt(qn) * std::sqrt(pn));
      CHECK(nb.distance == doctest::Approx(expect).epsilon(1e-6));
    }
  }
}

TEST_CASE("growing the radius or k never drops a previously returned neighbor") {
  Cloud c = random_cloud(600, 10, 77);
  AnnIndex index = AnnIndex::build(c.ids, c.points, {});
  Rng rng(8);
  for (int t = 0; t < 25; ++t) {
    auto q = random_unit_f32(rng, 10);
    std::vector<AnnIndex::Neighbor> prev;
    for (double radius : {0.05, 0.10, 0.15, 0.4, 1.0}) {
      auto cur = index.search(q, 10, radius);
      std::set<std::uint64_t> cur_ids;
      for (const auto& nb : cur) cur_ids.insert(nb.id);
      for (const auto& nb : prev) CHECK(cur_ids.count(nb.id) == 1);
      prev = cur;
    }
    std::vector<AnnIndex::Neighbor> prev_k;
    for (std::size_t k : {1, 3, 8, 20}) {
      auto cur = index.search(q, k, 1.0);
      std::set<std::uint64_t> cur_ids;
      for (const auto& nb : cur) cur_ids.insert(nb.id);
      for (const auto& nb : prev_k) CHECK(cur_ids.count(nb.id) == 1);
      prev_k = cur;
    }
  }
}

TEST_CASE("recall@10 stays high on random unit vectors at small scale") {
  Cloud c = random_cloud(2000, 24, 101);
  HnswParams p;  // M=16, ef_construction=200, ef_search=64
  AnnIndex index = AnnIndex::build(c.ids, c.points, p);
  Rng rng(9);
  std::size_t hit = 0, total = 0;
  for (int t = 0; t < 50; ++t) {
    auto q = random_unit_f32(rng, 24);
    auto got = index.search(q, 10, 2.0);
    auto want = oracles::nn_scan(c.points, c.ids, q, 10, 2.0);
    std::set<std::uint64_t> got_ids;
    for (const auto& nb : got) got_ids.insert(nb.id);
    for (const auto& w : want) {
      ++total;
      hit += got_ids.count(w.id);
    }
  }
  CHECK(static_cast<double>(hit) / static_cast<double>(total) >= 0.95);
}

TEST_CASE("index files round-trip byte-identically and load searches the same") {
  helpers::TempDir tmp("ann");
  Cloud c = random_cloud(250, 8, 13);
  HnswParams p;
  p.seed = 99;
  AnnIndex index = AnnIndex::build(c.ids, c.points, p);
  index.save(tmp / "a.bin");
  AnnIndex loaded = AnnIndex::load(tmp / "a.bin");
  CHECK(loaded.size() == index.size());
  CHECK(loaded.dim() == index.dim());

  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    auto q = random_unit_f32(rng, 8);
    auto a = index.search(q, 5, 1.0);
    auto b = loaded.search(q, 5, 1.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == b[i].id);
      CHECK(a[i].distance == b[i].distance);
    }
  }

  loaded.save(tmp / "b.bin");
  std::ifstream fa(tmp / "a.bin", std::ios::binary);
  std::ifstream fb(tmp / "b.bin", std::ios::binary);
  std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(da == db);

  std::ofstream bad(tmp / "bad.bin", std::ios::binary);
  bad << "JUNK";
  bad.close();
  CHECK_THROWS_AS(AnnIndex::load(tmp / "bad.bin"), std::runtime_error);
}

TEST_CASE("serial and parallel batch search agree exactly") {
  Cloud c = random_cloud(500, 12, 19);
  AnnIndex index = AnnIndex::build(c.ids, c.points, {});
  std::vector<std::vector<float>> probes(c.points.begin(), c.points.begin() + 100);
  std::vector<std::uint64_t> exclude(c.ids.begin(), c.ids.begin() + 100);
  auto serial = index.search_batch(probes, 10, 0.5, exclude, ExecPolicy::kSerial);
  auto parallel = index.search_batch(probes, 10, 0.5, exclude, ExecPolicy::kParallel);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    REQUIRE(serial[i].size() == parallel[i].size());
    for (std::size_t j = 0; j < serial[i].size(); ++j) {
      CHECK(serial[i][j].id == parallel[i][j].id);
      CHECK(serial[i][j].distance == parallel[i][j].distance);
    }
  }
}

TEST_CASE("library exact_search matches the oracle scan in both policies") {
  Cloud c = random_cloud(400, 10, 23);
  Rng rng(2);
  std::vector<std::vector<float>> probes;
  for (int t = 0; t < 20; ++t) {
    auto q = random_unit_f32(rng, 10);
    probes.push_back(q);
    auto want = oracles::nn_scan(c.points, c.ids, q, 7, 0.8);
    auto serial = exact_search(c.ids, c.points, q, 7, 0.8, std::nullopt, ExecPolicy::kSerial);
    auto parallel = exact_search(c.ids, c.points, q, 7, 0.8, std::nullopt, ExecPolicy::kParallel);
    CHECK(same_results(serial, want));
    CHECK(same_results(parallel, want));
  }
  auto batch_serial = exact_search_batch(c.ids, c.points, probes, 7, 0.8, {}, ExecPolicy::kSerial);
  auto batch_parallel =
      exact_search_batch(c.ids, c.points, probes, 7, 0.8, {}, ExecPolicy::kParallel);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    auto want = oracles::nn_scan(c.points, c.ids, probes[i], 7, 0.8);
    CHECK(same_results(batch_serial[i], want));
    CHECK(same_results(batch_parallel[i], want));
  }
}

// ---------------------------------------------------------------------------
// frequency tiers and augmentation

TEST_CASE("tier boundaries follow the powers-of-two cutoffs") {
  CHECK(tier_of(0) == Tier::kTail);
  CHECK(tier_of(16) == Tier::kTail);
  CHECK(tier_of(17) == Tier::kTorso);
  CHECK(tier_of(32768) == Tier::kTorso);
  CHECK(tier_of(32769) == Tier::kHead);
  CHECK(tier_of(33000) == Tier::kHead);
}

TEST_CASE("ann_frequency_augment bins and error paths") {
  auto unseen = ann_frequency_augment(0, {}, 0.47);
  CHECK(!unseen.bin.has_value());

  auto one_nb = ann_frequency_augment(0, {8}, 1.0);
  REQUIRE(one_nb.bin.has_value());
  CHECK(one_nb.count == doctest::Approx(8.0));
  CHECK(*one_nb.bin == 3);

  auto fractional = ann_frequency_augment(0, {1}, 0.47);
  CHECK(!fractional.bin.has_value());  // 0.47 < 1 stays unseen

  auto mixed = ann_frequency_augment(5, {4, 4}, 0.5);
  REQUIRE(mixed.bin.has_value());
  CHECK(mixed.count == doctest::Approx(9.0));
  CHECK(*mixed.bin == 3);

  CHECK_THROWS_AS(ann_frequency_augment(-1, {}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ann_frequency_augment(0, {-2}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ann_frequency_augment(0, {}, 1.5), std::invalid_argument);
}

TEST_CASE("augmented bin histogram conserves mass and moves it out of the unseen bin") {
  Rng rng(17);
  // two clusters of near-identical vectors; the unseen ones sit next to
  // heavily seen neighbors
  std::vector<std::uint64_t> ids;
  std::vector<std::vector<float>> pts;
  std::unordered_map<std::uint64_t, std::string> id_text;
  FrequencyTable freq;
  std::vector<TailProbe> probes;
  auto base = random_unit_f32(rng, 8);
  for (std::size_t i = 0; i < 12; ++i) {
    std::string text = "q" + std::to_string(i);
    auto v = base;
    v[0] += 0.001f * static_cast<float>(i % 3);
    if (i % 2 == 0) {  // seen, indexed
      ids.push_back(i);
      pts.push_back(v);
      id_text[i] = text;
      freq[text] = 12;
    }
    probes.push_back({i, text, v});
  }
  AnnIndex index = AnnIndex::build(ids, pts, {});
  std::map<Tier, double> penalties{
      {Tier::kHead, 0.9}, {Tier::kTorso, 0.8}, {Tier::kTail, 0.47}};

  auto none = augmented_bin_histogram(probes, index, id_text, freq, 0.0, penalties);
  auto wide = augmented_bin_histogram(probes, index, id_text, freq, 0.15, penalties);
  auto mass = [](const std::vector<FrequencyBin>& h) {
    double s = 0.0;
    for (const auto& b : h) s += b.fraction;
    return s;
  };
  CHECK(mass(none) == doctest::Approx(1.0));
  CHECK(mass(wide) == doctest::Approx(1.0));
  auto unseen_of = [](const std::vector<FrequencyBin>& h) {
    for (const auto& b : h)
      if (!b.bin) return b.fraction;
    return 0.0;
  };
  CHECK(unseen_of(none) == doctest::Approx(0.5));  // half the probes are unseen
  CHECK(unseen_of(wide) < unseen_of(none));
  CHECK(unseen_of(wide) ==
        doctest::Approx(unseen_fraction(probes, index, id_text, freq, 0.15, penalties)));
}

TEST_CASE("tail_stats covers an all-identical cloud completely at distance zero") {
  Rng rng(4);
  auto v = random_unit_f32(rng, 6);
  std::vector<std::uint64_t> ids;
  std::vector<std::vector<float>> pts;
  std::vector<TailProbe> probes;
  std::unordered_map<std::uint64_t, std::string> id_text;
  FrequencyTable freq;
  for (std::size_t i = 0; i < 20; ++i) {
    ids.push_back(i);
    pts.push_back(v);
    const std::string text = "query " + std::to_string(i);
    probes.push_back({i, text, v});
    id_text[i] = text;
    freq[text] = 10;  // tail tier
  }
  AnnIndex index = AnnIndex::build(ids, pts, {});
  auto rows = tail_stats(probes, index, id_text, freq, {0.15}, [](const std::string&) {
    return std::int64_t{1};
  });
  bool found_tail = false;
  for (const auto& r : rows) {
    if (r.tier == Tier::kTail) {
      found_tail = true;
      CHECK(r.n == 20);
      CHECK(r.coverage_pct == doctest::Approx(100.0));
      CHECK(r.co_intent_pct == doctest::Approx(100.0));
    } else {
      CHECK(r.n == 0);
    }
  }
  CHECK(found_tail);
}
