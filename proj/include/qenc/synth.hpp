#pragma once

// Synthetic search-log generator. Builds a world of latent intents grouped
// into topics, renders each intent as several surface queries (synonym
// substitutions, morphological variants, optional specifier tokens),
// simulates click sessions over per-intent URLs, and emits every dataset the
// pipeline consumes: click logs, co-click supervision, graded similarity
// judgments, paraphrase pairs, reformulation-labeled session pairs, and a
// long-tail frequency table. Every query maps to exactly one intent; that
// mapping is the oracle downstream checks rely on.

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "qenc/dataio.hpp"
#include "qenc/tailstats.hpp"

namespace qenc {

struct SynthConfig {
  std::size_t intents = 200;           // K latent intents (>= 2)
  std::size_t queries_per_intent = 10;
  std::uint64_t seed = 1;
  double noise_rate = 0.05;            // clicks diverted to a random URL
  std::size_t intents_per_topic = 4;
  std::size_t mixed_sessions = 300;    // reformulation-behavior sessions
  double question_rate = 0.15;         // mixed-session queries in question form
  double unseen_fraction = 0.35;       // queries absent from the frequency table
  std::size_t judgment_targets = 400;
  std::size_t paraphrase_pairs = 1500; // per task, split 70/10/20 train/val/test
};

struct SynthQuery {
  std::string text;           // normalized token text
  std::size_t intent = 0;
  std::size_t topic = 0;
  std::size_t specifiers = 0; // appended specifier-token count
};

// reformulation categories: 0 TopicChange, 1 Explore, 2 Specify, 3 Paraphrase
struct LabeledSessionPair {
  std::string a, b;
  int category = 0;
};

struct SyntheticWorld {
  SynthConfig config;
  std::vector<SynthQuery> queries;  // all distinct query texts, oracle-labeled
  std::unordered_map<std::string, std::size_t> intent_of;
  std::vector<ClickRecord> clicks;
  std::vector<SimilarityJudgment> judgments;
  std::vector<ParaphraseExample> query_paraphrases;
  std::vector<ParaphraseExample> question_paraphrases;
  std::vector<LabeledSessionPair> session_pairs;
  FrequencyTable frequency;         // seen queries only; absent = unseen

  std::int64_t intent_oracle(const std::string& text) const {
    auto it = intent_of.find(text);
    return it == intent_of.end() ? -1 : static_cast<std::int64_t>(it->second);
  }
};

// Deterministic under config.seed. Throws when intents < 2.
SyntheticWorld generate_synthetic_world(const SynthConfig& config);

// deterministic 70/10/20 split by record index
enum class Split { kTrain, kVal, kTest };
Split split_of(std::size_t index);

// Writes clicks.tsv, frequency.tsv, queries.tsv, judgments.tsv,
// para_{query,question}_{train,val,test}.tsv and session_pairs.tsv.
void write_world(const SyntheticWorld& world, const std::filesystem::path& dir);

std::vector<LabeledSessionPair> load_session_pairs(const std::filesystem::path& path);
// queries.tsv loader: text -> (intent, topic, specifiers)
std::vector<SynthQuery> load_query_oracle(const std::filesystem::path& path);

}  // namespace qenc
