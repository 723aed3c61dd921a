#include "qenc/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace qenc {

namespace {

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_strip_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c);
}

}  // namespace

std::vector<std::string> normalize(const std::string& raw) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&]() {
    // strip leading/trailing ASCII punctuation
    std::size_t b = 0, e = cur.size();
    while (b < e && is_strip_punct(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && is_strip_punct(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) tokens.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (unsigned char c : raw) {
    if (is_space_byte(c)) {
      flush();
    } else {
      cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    }
  }
  flush();
  return tokens;
}

std::string normalized_text(const std::string& raw) {
  auto tokens = normalize(raw);
  if (tokens.empty()) throw std::invalid_argument("empty query after normalization: \"" + raw + "\"");
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<char32_t> utf8_codepoints(const std::string& s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0 && i + 1 < s.size()) {
      cp = static_cast<char32_t>((c & 0x1F) << 6 | (s[i + 1] & 0x3F));
      len = 2;
    } else if ((c & 0xF0) == 0xE0 && i + 2 < s.size()) {
      cp = static_cast<char32_t>((c & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F));
      len = 3;
    } else if ((c & 0xF8) == 0xF0 && i + 3 < s.size()) {
      cp = static_cast<char32_t>((c & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 |
                                 (s[i + 2] & 0x3F) << 6 | (s[i + 3] & 0x3F));
      len = 4;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus,
                             std::size_t token_cap, std::size_t char_cap) {
  // std::map keeps tie-breaking lexicographic without an extra sort key
  std::map<std::string, std::uint64_t> token_count;
  std::map<char32_t, std::uint64_t> char_count;
  for (const auto& raw : corpus) {
    for (const auto& tok : normalize(raw)) {
      ++token_count[tok];
      for (char32_t cp : utf8_codepoints(tok)) ++char_count[cp];
    }
  }

  std::vector<std::pair<std::string, std::uint64_t>> toks(token_count.begin(), token_count.end());
  std::stable_sort(toks.begin(), toks.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::pair<char32_t, std::uint64_t>> chars(char_count.begin(), char_count.end());
  std::stable_sort(chars.begin(), chars.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.id_to_token_ = {kPadLiteral, kOovLiteral};
  for (const auto& [tok, cnt] : toks) {
    if (v.id_to_token_.size() >= token_cap) break;
    v.id_to_token_.push_back(tok);
  }
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i)
    v.token_to_id_[v.id_to_token_[i]] = static_cast<std::uint32_t>(i);

  // sentinels encoded as noncharacter code points
  v.id_to_char_ = {0xFFFE, 0xFFFF};
  for (const auto& [cp, cnt] : chars) {
    if (v.id_to_char_.size() >= char_cap) break;
    v.id_to_char_.push_back(cp);
  }
  for (std::size_t i = 0; i < v.id_to_char_.size(); ++i)
    v.char_to_id_[v.id_to_char_[i]] = static_cast<std::uint32_t>(i);
  return v;
}

std::uint32_t Vocabulary::token_id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kOovId : it->second;
}

std::uint32_t Vocabulary::char_id(char32_t cp) const {
  auto it = char_to_id_.find(cp);
  return it == char_to_id_.end() ? kCharUnkId : it->second;
}

std::vector<std::string> Vocabulary::token_rows() const { return id_to_token_; }

std::vector<std::string> Vocabulary::char_rows() const {
  std::vector<std::string> rows;
  rows.reserve(id_to_char_.size());
  rows.push_back(kCharPadLiteral);
  rows.push_back(kCharUnkLiteral);
  for (std::size_t i = 2; i < id_to_char_.size(); ++i) rows.push_back(utf8_encode(id_to_char_[i]));
  return rows;
}

Vocabulary Vocabulary::from_rows(const std::vector<std::string>& tokens,
                                 const std::vector<std::string>& chars) {
  if (tokens.size() < 2 || tokens[0] != kPadLiteral || tokens[1] != kOovLiteral)
    throw std::runtime_error("vocabulary block: missing pad/oov sentinels");
  if (chars.size() < 2 || chars[0] != kCharPadLiteral || chars[1] != kCharUnkLiteral)
    throw std::runtime_error("character block: missing pad/unk sentinels");
  Vocabulary v;
  v.id_to_token_ = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    v.token_to_id_[tokens[i]] = static_cast<std::uint32_t>(i);
  v.id_to_char_ = {0xFFFE, 0xFFFF};
  for (std::size_t i = 2; i < chars.size(); ++i) {
    auto cps = utf8_codepoints(chars[i]);
    if (cps.size() != 1)
      throw std::runtime_error("character block: entry is not a single code point");
    v.id_to_char_.push_back(cps[0]);
  }
  for (std::size_t i = 0; i < v.id_to_char_.size(); ++i)
    v.char_to_id_[v.id_to_char_[i]] = static_cast<std::uint32_t>(i);
  return v;
}

std::string TokenizedQuery::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

TokenizedQuery tokenize(const std::string& raw, const Vocabulary& vocab) {
  TokenizedQuery q;
  q.tokens = normalize(raw);
  if (q.tokens.empty())
    throw std::invalid_argument("empty query after normalization: \"" + raw + "\"");
  q.ids.reserve(q.tokens.size());
  for (const auto& tok : q.tokens) q.ids.push_back(vocab.token_id(tok));
  return q;
}

std::vector<std::uint32_t> char_ids(const std::string& token, const Vocabulary& vocab,
                                    std::size_t window) {
  auto cps = utf8_codepoints(token);
  std::vector<std::uint32_t> ids;
  ids.reserve(std::max(cps.size(), window));
  for (char32_t cp : cps) ids.push_back(vocab.char_id(cp));
  while (ids.size() < window) ids.push_back(Vocabulary::kCharPadId);
  return ids;
}

}  // namespace qenc
