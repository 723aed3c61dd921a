#pragma once

// Dataset record types, tab-separated loaders and co-click group
// construction. All files are UTF-8 TSV, one record per line; lines
// starting with '#' are headers/comments. Malformed lines are reported
// with their line number; more than 1% bad lines aborts the load.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qenc/util.hpp"

namespace qenc {

struct ClickRecord {
  std::string query;
  std::string url;        // "-" means the query had no click
  std::int64_t timestamp = 0;
  std::string session_id;
  std::string user_id;

  bool has_click() const { return !url.empty() && url != "-"; }
};

struct CoClickGroup {
  std::string url;
  std::vector<std::string> queries;  // normalized texts, sorted, unique
};

enum class Grade : int { kBad = 0, kFair = 1, kGood = 2 };

struct SimilarityJudgment {
  std::string target;
  std::string candidate;
  Grade grade = Grade::kBad;
};

enum class ParaphraseTask { kQuery, kQuestion };

struct ParaphraseExample {
  std::string a, b;
  int label = 1;  // +1 or -1
  ParaphraseTask task = ParaphraseTask::kQuery;
};

struct LoadReport {
  std::size_t lines = 0;       // data lines seen (excl. comments/blank)
  std::size_t bad = 0;
  std::vector<std::string> errors;  // "line N: reason", capped
  void add_error(std::size_t line_no, const std::string& reason);
};

// Groups clicked queries per URL. Query texts are deduplicated after
// normalization; groups need 2..5 distinct queries, larger ones are
// dropped. Output is sorted by URL, so it is invariant to record order.
std::vector<CoClickGroup> build_coclick_groups(const std::vector<ClickRecord>& clicks,
                                               Warnings* warnings = nullptr);

std::vector<ClickRecord> load_clicks(const std::filesystem::path& path, LoadReport* report = nullptr);
std::vector<SimilarityJudgment> load_judgments(const std::filesystem::path& path,
                                               LoadReport* report = nullptr);
std::vector<ParaphraseExample> load_paraphrase_pairs(const std::filesystem::path& path,
                                                     LoadReport* report = nullptr);

void write_clicks(const std::filesystem::path& path, const std::vector<ClickRecord>& records,
                  const std::string& header_comment);
void write_judgments(const std::filesystem::path& path,
                     const std::vector<SimilarityJudgment>& records,
                     const std::string& header_comment);
void write_paraphrase_pairs(const std::filesystem::path& path,
                            const std::vector<ParaphraseExample>& records,
                            const std::string& header_comment);

const char* grade_name(Grade g);

}  // namespace qenc
