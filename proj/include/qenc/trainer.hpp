#pragma once

// Two-phase learning. Phase 1: co-click weak supervision with in-batch
// NCE negatives. Phase 2: multi-task fine-tuning mixing co-click pairs with
// query/question paraphrase classification in every mini-batch.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "qenc/dataio.hpp"
#include "qenc/losses.hpp"
#include "qenc/model.hpp"
#include "qenc/optimizer.hpp"

namespace qenc {

enum class NceCandidates { kAllOutOfGroup, kPositivesOnly };

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 256;
  std::size_t eval_every = 50;   // batches between validation evaluations
  std::size_t patience = 3;      // evaluations without improvement before stopping
  std::size_t max_epochs = 1000;
  std::size_t max_steps = std::numeric_limits<std::size_t>::max();  // 0 = no training
  double val_fraction = 0.1;
  Real clip_norm = 5.0;
  NceCandidates nce = NceCandidates::kAllOutOfGroup;
  std::uint64_t seed = 1;
  bool check_finite = true;   // assert parameters finite after each step
  bool restore_best = true;   // roll back to the best validation checkpoint

  // phase-2 task switches
  bool task_coclick = true;
  bool task_query = true;
  bool task_question = true;
};

struct CoClickPair {
  TokenizedQuery q;
  TokenizedQuery q_pos;
  std::uint32_t group = 0;
};
using CoClickBatch = std::vector<CoClickPair>;

struct LossCurvePoint {
  std::size_t step = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  std::vector<LossCurvePoint> curve;
  double initial_validation_loss = 0.0;
  double final_validation_loss = 0.0;
  std::size_t steps = 0;
};

// Picks the in-batch adversarial negative for `anchor`: the encoding with
// the highest cosine to the anchor among entries whose group differs from
// the anchor's (ties broken by lowest index). `eligible`, when non-empty,
// further restricts the candidate set. Throws when no candidate exists.
std::size_t nce_select_negative(std::size_t anchor,
                                std::span<const std::uint32_t> groups,
                                std::span<const DenseArray> encodings,
                                std::span<const char> eligible = {});

// Mean co-click loss of fixed validation pairs under the current parameters.
double coclick_validation_loss(const ModelParameters& params,
                               const std::vector<CoClickPair>& pairs,
                               const TrainConfig& config);

TrainResult train_phase1(ModelParameters& params, const std::vector<CoClickGroup>& corpus,
                         const TrainConfig& config);

struct Phase2Data {
  std::vector<CoClickGroup> coclick;
  std::vector<ParaphraseExample> query_train, query_val;
  std::vector<ParaphraseExample> question_train, question_val;
};

TrainResult train_phase2(ModelParameters& params, const Phase2Data& data,
                         const TrainConfig& config);

void write_loss_curve(const std::filesystem::path& path, const std::vector<LossCurvePoint>& curve);

}  // namespace qenc
