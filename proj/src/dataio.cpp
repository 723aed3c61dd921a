#include "qenc/dataio.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "qenc/vocab.hpp"

namespace qenc {

void LoadReport::add_error(std::size_t line_no, const std::string& reason) {
  ++bad;
  if (errors.size() < 100)
    errors.push_back("line " + std::to_string(line_no) + ": " + reason);
}

const char* grade_name(Grade g) {
  switch (g) {
    case Grade::kGood: return "Good";
    case Grade::kFair: return "Fair";
    case Grade::kBad: return "Bad";
  }
  return "?";
}

std::vector<CoClickGroup> build_coclick_groups(const std::vector<ClickRecord>& clicks,
                                               Warnings* warnings) {
  std::map<std::string, std::set<std::string>> by_url;
  std::size_t skipped = 0;
  for (const ClickRecord& r : clicks) {
    if (!r.has_click()) continue;
    auto tokens = normalize(r.query);
    if (tokens.empty()) {
      ++skipped;
      continue;
    }
    by_url[r.url].insert(join(tokens, ' '));
  }
  if (skipped && warnings)
    warnings->add("build_coclick_groups: skipped " + std::to_string(skipped) +
                  " records with empty queries");

  std::vector<CoClickGroup> groups;
  for (auto& [url, queries] : by_url) {
    if (queries.size() < 2 || queries.size() > 5) continue;
    CoClickGroup g;
    g.url = url;
    g.queries.assign(queries.begin(), queries.end());
    groups.push_back(std::move(g));
  }
  return groups;
}

namespace {

// Shared line-walking scaffold for all TSV loaders.
template <typename Fn>
void load_tsv(const std::filesystem::path& path, LoadReport* report, Fn&& per_line) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    ++rep.lines;
    try {
      per_line(split_tab(line));
    } catch (const std::exception& e) {
      rep.add_error(line_no, e.what());
    }
  }
  if (rep.lines == 0) rep.errors.push_back("warning: no records in " + path.string());
  if (rep.lines > 0 && static_cast<double>(rep.bad) > 0.01 * static_cast<double>(rep.lines))
    throw std::runtime_error("too many malformed lines in " + path.string() + ": " +
                             std::to_string(rep.bad) + " of " + std::to_string(rep.lines));
}

std::int64_t parse_i64(const std::string& s, const char* what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (...) {
    throw std::runtime_error(std::string("bad ") + what + " '" + s + "'");
  }
  if (pos != s.size()) throw std::runtime_error(std::string("bad ") + what + " '" + s + "'");
  return v;
}

}  // namespace

std::vector<ClickRecord> load_clicks(const std::filesystem::path& path, LoadReport* report) {
  std::vector<ClickRecord> out;
  load_tsv(path, report, [&](const std::vector<std::string>& f) {
    if (f.size() != 5)
      throw std::runtime_error("expected 5 columns (query, url, timestamp, session, user), got " +
                               std::to_string(f.size()));
    ClickRecord r;
    r.query = f[0];
    r.url = f[1];
    r.timestamp = parse_i64(f[2], "timestamp");
    r.session_id = f[3];
    r.user_id = f[4];
    if (r.query.empty()) throw std::runtime_error("empty query");
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<SimilarityJudgment> load_judgments(const std::filesystem::path& path,
                                               LoadReport* report) {
  std::vector<SimilarityJudgment> out;
  load_tsv(path, report, [&](const std::vector<std::string>& f) {
    if (f.size() != 3)
      throw std::runtime_error("expected 3 columns (target, candidate, grade), got " +
                               std::to_string(f.size()));
    SimilarityJudgment j;
    j.target = f[0];
    j.candidate = f[1];
    if (f[2] == "Good") j.grade = Grade::kGood;
    else if (f[2] == "Fair") j.grade = Grade::kFair;
    else if (f[2] == "Bad") j.grade = Grade::kBad;
    else throw std::runtime_error("bad grade '" + f[2] + "' (expected Good|Fair|Bad)");
    if (j.target.empty() || j.candidate.empty()) throw std::runtime_error("empty query text");
    out.push_back(std::move(j));
  });
  return out;
}

std::vector<ParaphraseExample> load_paraphrase_pairs(const std::filesystem::path& path,
                                                     LoadReport* report) {
  std::vector<ParaphraseExample> out;
  load_tsv(path, report, [&](const std::vector<std::string>& f) {
    if (f.size() != 4)
      throw std::runtime_error("expected 4 columns (a, b, label, task), got " +
                               std::to_string(f.size()));
    ParaphraseExample p;
    p.a = f[0];
    p.b = f[1];
    if (f[2] == "+1" || f[2] == "1") p.label = 1;
    else if (f[2] == "-1") p.label = -1;
    else throw std::runtime_error("bad label '" + f[2] + "' (expected +1 or -1)");
    if (f[3] == "query") p.task = ParaphraseTask::kQuery;
    else if (f[3] == "question") p.task = ParaphraseTask::kQuestion;
    else throw std::runtime_error("bad task '" + f[3] + "' (expected query|question)");
    if (p.a.empty() || p.b.empty()) throw std::runtime_error("empty query text");
    out.push_back(std::move(p));
  });
  return out;
}

void write_clicks(const std::filesystem::path& path, const std::vector<ClickRecord>& records,
                  const std::string& header_comment) {
  atomic_write(path, [&](std::ostream& os) {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    for (const auto& r : records)
      os << r.query << '\t' << r.url << '\t' << r.timestamp << '\t' << r.session_id << '\t'
         << r.user_id << '\n';
  });
}

void write_judgments(const std::filesystem::path& path,
                     const std::vector<SimilarityJudgment>& records,
                     const std::string& header_comment) {
  atomic_write(path, [&](std::ostream& os) {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    for (const auto& j : records)
      os << j.target << '\t' << j.candidate << '\t' << grade_name(j.grade) << '\n';
  });
}

void write_paraphrase_pairs(const std::filesystem::path& path,
                            const std::vector<ParaphraseExample>& records,
                            const std::string& header_comment) {
  atomic_write(path, [&](std::ostream& os) {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    for (const auto& p : records)
      os << p.a << '\t' << p.b << '\t' << (p.label > 0 ? "+1" : "-1") << '\t'
         << (p.task == ParaphraseTask::kQuery ? "query" : "question") << '\n';
  });
}

}  // namespace qenc
