#include "qenc/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "qenc/util.hpp"

namespace qenc {

namespace {

constexpr char kMagic[8] = {'Q', 'E', 'N', 'C', 'A', 'N', 'N', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr double kNormFloor = 1e-12;

double f32_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::max(std::sqrt(s), kNormFloor);
}

double f32_dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

}  // namespace

double cosine_distance_f32(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_distance: dimension mismatch " +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  return 1.0 - f32_dot(a, b) / (f32_norm(a) * f32_norm(b));
}

double AnnIndex::dist(std::span<const float> q, double q_norm, std::size_t node) const {
  const float* v = vectors_.data() + node * dim_;
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i)
    s += static_cast<double>(q[i]) * static_cast<double>(v[i]);
  return 1.0 - s / (q_norm * norms_[node]);
}

double AnnIndex::dist_nodes(std::size_t a, std::size_t b) const {
  const float* va = vectors_.data() + a * dim_;
  double s = 0.0;
  const float* vb = vectors_.data() + b * dim_;
  for (std::size_t i = 0; i < dim_; ++i)
    s += static_cast<double>(va[i]) * static_cast<double>(vb[i]);
  return 1.0 - s / (norms_[a] * norms_[b]);
}

namespace {

// per-thread visited marks, reset by epoch bump instead of refill
struct VisitScratch {
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
};

VisitScratch& visit_scratch(std::size_t n) {
  static thread_local VisitScratch scratch;
  if (scratch.stamp.size() < n) scratch.stamp.assign(n, 0);
  if (++scratch.epoch == 0) {
    std::fill(scratch.stamp.begin(), scratch.stamp.end(), 0);
    scratch.epoch = 1;
  }
  return scratch;
}

}  // namespace

std::vector<AnnIndex::Scored> AnnIndex::search_layer(std::span<const float> q, double q_norm,
                                                     std::uint32_t entry, std::size_t ef,
                                                     int level) const {
  // min-heap of candidates to expand, max-heap of current best ef results
  auto worse = [](const Scored& a, const Scored& b) { return b < a; };
  std::priority_queue<Scored, std::vector<Scored>, decltype(worse)> candidates(worse);
  std::priority_queue<Scored> results;

  VisitScratch& visited = visit_scratch(ids_.size());
  const std::uint32_t mark = visited.epoch;
  const double d0 = dist(q, q_norm, entry);
  candidates.push({d0, entry});
  results.push({d0, entry});
  visited.stamp[entry] = mark;

  while (!candidates.empty()) {
    const Scored c = candidates.top();
    if (results.size() >= ef && results.top() < c) break;
    candidates.pop();
    for (std::uint32_t nb : links_[c.id][static_cast<std::size_t>(level)]) {
      if (visited.stamp[nb] == mark) continue;
      visited.stamp[nb] = mark;
      const double d = dist(q, q_norm, nb);
      const Scored s{d, nb};
      if (results.size() < ef || s < results.top()) {
        candidates.push(s);
        results.push(s);
        if (results.size() > ef) results.pop();
      }
    }
  }
  std::vector<Scored> out;
  out.reserve(results.size());
  while (!results.empty()) {
    out.push_back(results.top());
    results.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::uint32_t AnnIndex::greedy_descend(std::span<const float> q, double q_norm,
                                       std::uint32_t entry, int level) const {
  std::uint32_t cur = entry;
  double best = dist(q, q_norm, cur);
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::uint32_t nb : links_[cur][static_cast<std::size_t>(level)]) {
      const double d = dist(q, q_norm, nb);
      if (d < best || (d == best && nb < cur)) {
        best = d;
        cur = nb;
        moved = true;
      }
    }
  }
  return cur;
}

std::vector<AnnIndex::Scored> AnnIndex::select_neighbors(const std::vector<Scored>& candidates,
                                                         std::size_t m) const {
  // heuristic selection; pruned candidates fill remaining slots so nodes
  // keep their link budget even among near-duplicates
  std::vector<Scored> selected;
  std::vector<Scored> pruned;
  for (const Scored& c : candidates) {
    if (selected.size() >= m) break;
    bool keep = true;
    for (const Scored& s : selected) {
      if (dist_nodes(c.id, s.id) < c.dist) {
        keep = false;
        break;
      }
    }
    if (keep)
      selected.push_back(c);
    else
      pruned.push_back(c);
  }
  for (const Scored& p : pruned) {
    if (selected.size() >= m) break;
    selected.push_back(p);
  }
  return selected;
}

void AnnIndex::shrink(std::size_t node, int level, std::size_t limit) {
  auto& list = links_[node][static_cast<std::size_t>(level)];
  if (list.size() <= limit) return;
  std::vector<Scored> candidates;
  candidates.reserve(list.size());
  for (std::uint32_t nb : list) candidates.push_back({dist_nodes(node, nb), nb});
  std::sort(candidates.begin(), candidates.end());
  std::vector<Scored> kept = select_neighbors(candidates, limit);
  list.clear();
  for (const Scored& s : kept) list.push_back(s.id);
  std::sort(list.begin(), list.end());
}

AnnIndex AnnIndex::build(std::span<const std::uint64_t> ids,
                         const std::vector<std::vector<float>>& vectors,
                         const HnswParams& params) {
  if (ids.size() != vectors.size())
    throw std::invalid_argument("ann build: ids and vectors differ in length");
  if (ids.empty()) throw std::invalid_argument("ann build: empty input");
  if (params.M < 2) throw std::invalid_argument("ann build: M must be >= 2");
  {
    std::unordered_set<std::uint64_t> seen;
    for (std::uint64_t id : ids)
      if (!seen.insert(id).second)
        throw std::invalid_argument("ann build: duplicate id " + std::to_string(id));
  }

  AnnIndex index;
  index.params_ = params;
  index.dim_ = vectors[0].size();
  if (index.dim_ == 0) throw std::invalid_argument("ann build: zero-dimensional vectors");
  index.ids_.assign(ids.begin(), ids.end());
  index.vectors_.resize(ids.size() * index.dim_);
  index.norms_.resize(ids.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != index.dim_)
      throw std::invalid_argument("ann build: vector " + std::to_string(i) + " has dimension " +
                                  std::to_string(vectors[i].size()) + ", expected " +
                                  std::to_string(index.dim_));
    std::copy(vectors[i].begin(), vectors[i].end(), index.vectors_.begin() + static_cast<std::ptrdiff_t>(i * index.dim_));
    index.norms_[i] = f32_norm(vectors[i]);
  }

  Rng rng(params.seed);
  const double ml = 1.0 / std::log(static_cast<double>(params.M));
  index.levels_.resize(ids.size());
  index.links_.resize(ids.size());

  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int level = static_cast<int>(std::floor(-std::log(rng.uniform_pos()) * ml));
    index.levels_[i] = level;
    index.links_[i].assign(static_cast<std::size_t>(level) + 1, {});

    if (i == 0) {
      index.entry_ = 0;
      index.max_level_ = level;
      continue;
    }

    std::span<const float> q = index.vector_of(i);
    const double q_norm = index.norms_[i];
    std::uint32_t cur = index.entry_;
    for (int l = index.max_level_; l > level; --l)
      cur = index.greedy_descend(q, q_norm, cur, l);

    for (int l = std::min(level, index.max_level_); l >= 0; --l) {
      std::vector<Scored> found =
          index.search_layer(q, q_norm, cur, params.ef_construction, l);
      std::vector<Scored> chosen = index.select_neighbors(found, params.M);
      auto& my = index.links_[i][static_cast<std::size_t>(l)];
      for (const Scored& s : chosen) {
        my.push_back(s.id);
        auto& theirs = index.links_[s.id][static_cast<std::size_t>(l)];
        theirs.push_back(static_cast<std::uint32_t>(i));
        if (theirs.size() > index.max_links(l)) {
          index.shrink(s.id, l, index.max_links(l));
        } else {
          std::sort(theirs.begin(), theirs.end());
        }
      }
      std::sort(my.begin(), my.end());
      cur = found.front().id;
    }

    if (level > index.max_level_) {
      index.max_level_ = level;
      index.entry_ = static_cast<std::uint32_t>(i);
    }
  }
  return index;
}

std::vector<AnnIndex::Neighbor> AnnIndex::search(std::span<const float> query, std::size_t k,
                                                 double radius,
                                                 std::optional<std::uint64_t> exclude_id,
                                                 std::size_t ef_override) const {
  if (query.size() != dim_)
    throw std::invalid_argument("ann search: query dimension " + std::to_string(query.size()) +
                                " does not match index dimension " + std::to_string(dim_));
  if (k < 1) throw std::invalid_argument("ann search: k must be >= 1");
  if (radius < 0.0 || radius > 2.0)
    throw std::invalid_argument("ann search: radius must lie in [0, 2]");

  const double q_norm = f32_norm(query);
  std::uint32_t cur = entry_;
  for (int l = max_level_; l > 0; --l) cur = greedy_descend(query, q_norm, cur, l);

  const std::size_t ef = std::max(ef_override ? ef_override : params_.ef_search, k);
  std::vector<Scored> found = search_layer(query, q_norm, cur, ef, 0);

  // map to external ids first; final order is (distance, external id)
  std::vector<Neighbor> out;
  std::vector<std::pair<double, std::uint64_t>> scored;
  scored.reserve(found.size());
  for (const Scored& s : found) {
    if (exclude_id && ids_[s.id] == *exclude_id) continue;
    if (s.dist > radius) continue;
    scored.emplace_back(s.dist, ids_[s.id]);
  }
  std::sort(scored.begin(), scored.end());
  for (const auto& [d, id] : scored) {
    out.push_back({id, d});
    if (out.size() >= k) break;
  }
  return out;
}

std::vector<std::vector<AnnIndex::Neighbor>> AnnIndex::search_batch(
    const std::vector<std::vector<float>>& queries, std::size_t k, double radius,
    std::span<const std::uint64_t> exclude_ids, ExecPolicy policy) const {
  if (!exclude_ids.empty() && exclude_ids.size() != queries.size())
    throw std::invalid_argument("search_batch: exclude id list must match query count");
  std::vector<std::vector<Neighbor>> out(queries.size());
  const std::int64_t n = static_cast<std::int64_t>(queries.size());
  auto run = [&](std::int64_t i) {
    std::optional<std::uint64_t> exclude;
    if (!exclude_ids.empty()) exclude = exclude_ids[static_cast<std::size_t>(i)];
    out[i] = search(queries[static_cast<std::size_t>(i)], k, radius, exclude);
  };
  if (policy == ExecPolicy::kParallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (std::int64_t i = 0; i < n; ++i) run(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) run(i);
  }
  return out;
}

void AnnIndex::save(const std::filesystem::path& path) const {
  atomic_write(path, [&](std::ostream& os) {
    os.write(kMagic, 8);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(dim_));
    write_u64(os, ids_.size());
    write_u32(os, static_cast<std::uint32_t>(params_.M));
    write_u32(os, static_cast<std::uint32_t>(params_.ef_construction));
    write_u32(os, static_cast<std::uint32_t>(params_.ef_search));
    write_u64(os, params_.seed);
    write_u32(os, entry_);
    write_u32(os, static_cast<std::uint32_t>(max_level_));
    for (std::uint64_t id : ids_) write_u64(os, id);
    for (float v : vectors_) write_f32(os, v);
    for (int l : levels_) write_u32(os, static_cast<std::uint32_t>(l));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      for (int l = 0; l <= levels_[i]; ++l) {
        const auto& list = links_[i][static_cast<std::size_t>(l)];
        write_varint(os, list.size());
        std::uint32_t prev = 0;
        for (std::size_t j = 0; j < list.size(); ++j) {
          // lists are sorted ascending; store deltas
          write_varint(os, j == 0 ? list[j] : list[j] - prev);
          prev = list[j];
        }
      }
    }
    write_u32(os, 0x454E4421);
  });
}

AnnIndex AnnIndex::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open index: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("ann index: bad magic bytes in " + path.string());
  if (read_u32(is) != kVersion) throw std::runtime_error("ann index: unsupported version");

  AnnIndex index;
  index.dim_ = read_u32(is);
  const std::uint64_t count = read_u64(is);
  index.params_.M = read_u32(is);
  index.params_.ef_construction = read_u32(is);
  index.params_.ef_search = read_u32(is);
  index.params_.seed = read_u64(is);
  index.entry_ = read_u32(is);
  index.max_level_ = static_cast<int>(read_u32(is));
  if (index.dim_ == 0 || count == 0) throw std::runtime_error("ann index: empty header");

  index.ids_.resize(count);
  for (auto& id : index.ids_) id = read_u64(is);
  index.vectors_.resize(count * index.dim_);
  for (auto& v : index.vectors_) v = read_f32(is);
  index.levels_.resize(count);
  for (auto& l : index.levels_) l = static_cast<int>(read_u32(is));
  index.links_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    index.links_[i].resize(static_cast<std::size_t>(index.levels_[i]) + 1);
    for (int l = 0; l <= index.levels_[i]; ++l) {
      const std::uint64_t n = read_varint(is);
      auto& list = index.links_[i][static_cast<std::size_t>(l)];
      list.resize(n);
      std::uint32_t prev = 0;
      for (std::size_t j = 0; j < n; ++j) {
        prev = j == 0 ? static_cast<std::uint32_t>(read_varint(is))
                      : prev + static_cast<std::uint32_t>(read_varint(is));
        if (prev >= count) throw std::runtime_error("ann index: neighbor id out of range");
        list[j] = prev;
      }
    }
  }
  if (read_u32(is) != 0x454E4421) throw std::runtime_error("ann index: missing end marker");

  index.norms_.resize(count);
  for (std::size_t i = 0; i < count; ++i) index.norms_[i] = f32_norm(index.vector_of(i));
  return index;
}

std::vector<AnnIndex::Neighbor> exact_search(std::span<const std::uint64_t> ids,
                                             const std::vector<std::vector<float>>& vectors,
                                             std::span<const float> query, std::size_t k,
                                             double radius,
                                             std::optional<std::uint64_t> exclude_id,
                                             ExecPolicy policy) {
  std::vector<double> dists(vectors.size());
  const std::int64_t n = static_cast<std::int64_t>(vectors.size());
  if (policy == ExecPolicy::kParallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < n; ++i)
      dists[i] = cosine_distance_f32(query, vectors[static_cast<std::size_t>(i)]);
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      dists[i] = cosine_distance_f32(query, vectors[static_cast<std::size_t>(i)]);
  }
  std::vector<std::pair<double, std::uint64_t>> scored;
  scored.reserve(vectors.size());
  for (std::int64_t i = 0; i < n; ++i) {
    if (exclude_id && ids[static_cast<std::size_t>(i)] == *exclude_id) continue;
    if (dists[i] > radius) continue;
    scored.emplace_back(dists[i], ids[static_cast<std::size_t>(i)]);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<AnnIndex::Neighbor> out;
  for (const auto& [d, id] : scored) {
    out.push_back({id, d});
    if (out.size() >= k) break;
  }
  return out;
}


std::vector<std::vector<AnnIndex::Neighbor>> exact_search_batch(
    std::span<const std::uint64_t> ids, const std::vector<std::vector<float>>& vectors,
    const std::vector<std::vector<float>>& queries, std::size_t k, double radius,
    std::span<const std::uint64_t> exclude_ids, ExecPolicy policy) {
  if (!exclude_ids.empty() && exclude_ids.size() != queries.size())
    throw std::invalid_argument("exact_search_batch: exclude id list must match query count");
  std::vector<std::vector<AnnIndex::Neighbor>> out(queries.size());
  const std::int64_t n = static_cast<std::int64_t>(queries.size());
  auto run = [&](std::int64_t i) {
    std::optional<std::uint64_t> exclude;
    if (!exclude_ids.empty()) exclude = exclude_ids[static_cast<std::size_t>(i)];
    out[i] = exact_search(ids, vectors, queries[static_cast<std::size_t>(i)], k, radius, exclude,
                          ExecPolicy::kSerial);
  };
  if (policy == ExecPolicy::kParallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
    for (std::int64_t i = 0; i < n; ++i) run(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) run(i);
  }
  return out;
}

}  // namespace qenc

