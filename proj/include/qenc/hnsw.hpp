#pragma once

// Hierarchical navigable small-world index over query encodings with
// cosine-distance (1 - cosine) radius search.
//
// Construction is the standard algorithm: geometric level assignment with
// normalization 1/ln(M), greedy descent from the entry point above the
// node's level, ef_construction-bounded candidate search per layer, and the
// neighbor-selection heuristic (pruned candidates fill leftover slots).
// All tie-breaks order by (distance, id), and neighbor lists are kept
// sorted by id, so builds are deterministic under a fixed seed.
//
// Construction is single-writer; a built (or loaded) index is immutable
// and safe for concurrent searchers.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "qenc/parallel.hpp"

namespace qenc {

struct HnswParams {
  std::size_t M = 16;                // max neighbors per node per layer (2M at layer 0)
  std::size_t ef_construction = 200;
  std::size_t ef_search = 64;
  std::uint64_t seed = 0;
};

class AnnIndex {
 public:
  struct Neighbor {
    std::uint64_t id = 0;      // external id
    double distance = 0.0;     // cosine distance in [0, 2]
  };

  // Throws on duplicate external ids or inconsistent dimensions.
  static AnnIndex build(std::span<const std::uint64_t> ids,
                        const std::vector<std::vector<float>>& vectors,
                        const HnswParams& params);

  // Up to k results with distance <= radius, ascending by (distance, id).
  // When exclude_id is given, that node is dropped from the results (self
  // lookup). ef_override > 0 replaces ef_search, e.g. index size for an
  // exhaustive search.
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k, double radius,
                               std::optional<std::uint64_t> exclude_id = std::nullopt,
                               std::size_t ef_override = 0) const;

  // exclude_ids, when non-empty, holds one id to drop per query (self ids).
  std::vector<std::vector<Neighbor>> search_batch(
      const std::vector<std::vector<float>>& queries, std::size_t k, double radius,
      std::span<const std::uint64_t> exclude_ids = {},
      ExecPolicy policy = ExecPolicy::kParallel) const;

  void save(const std::filesystem::path& path) const;
  static AnnIndex load(const std::filesystem::path& path);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const HnswParams& params() const { return params_; }
  int max_level() const { return max_level_; }
  int level_of(std::size_t internal) const { return levels_[internal]; }
  std::uint64_t external_id(std::size_t internal) const { return ids_[internal]; }
  const std::vector<std::uint32_t>& neighbors(std::size_t internal, int level) const {
    return links_[internal][static_cast<std::size_t>(level)];
  }
  std::span<const float> vector_of(std::size_t internal) const {
    return {vectors_.data() + internal * dim_, dim_};
  }

 private:
  AnnIndex() = default;

  double dist(std::span<const float> q, double q_norm, std::size_t node) const;
  double dist_nodes(std::size_t a, std::size_t b) const;

  struct Scored {
    double dist;
    std::uint32_t id;
    bool operator<(const Scored& o) const {
      return dist < o.dist || (dist == o.dist && id < o.id);
    }
  };

  std::vector<Scored> search_layer(std::span<const float> q, double q_norm,
                                   std::uint32_t entry, std::size_t ef, int level) const;
  std::uint32_t greedy_descend(std::span<const float> q, double q_norm, std::uint32_t entry,
                               int level) const;
  std::vector<Scored> select_neighbors(const std::vector<Scored>& candidates,
                                       std::size_t m) const;
  void shrink(std::size_t node, int level, std::size_t limit);
  std::size_t max_links(int level) const { return level == 0 ? 2 * params_.M : params_.M; }

  HnswParams params_;
  std::size_t dim_ = 0;
  std::vector<std::uint64_t> ids_;
  std::vector<float> vectors_;       // count x dim
  std::vector<double> norms_;
  std::vector<int> levels_;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // [node][level]
  std::uint32_t entry_ = 0;
  int max_level_ = -1;
};

// Brute-force scan over the same vectors; the parallel kernel used by the
// benchmark and as a cross-check at small scale.
std::vector<AnnIndex::Neighbor> exact_search(std::span<const std::uint64_t> ids,
                                             const std::vector<std::vector<float>>& vectors,
                                             std::span<const float> query, std::size_t k,
                                             double radius,
                                             std::optional<std::uint64_t> exclude_id,
                                             ExecPolicy policy = ExecPolicy::kSerial);

// Batch scan, parallel over probes.
std::vector<std::vector<AnnIndex::Neighbor>> exact_search_batch(
    std::span<const std::uint64_t> ids, const std::vector<std::vector<float>>& vectors,
    const std::vector<std::vector<float>>& queries, std::size_t k, double radius,
    std::span<const std::uint64_t> exclude_ids = {},
    ExecPolicy policy = ExecPolicy::kParallel);

double cosine_distance_f32(std::span<const float> a, std::span<const float> b);

}  // namespace qenc
