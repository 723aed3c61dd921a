#pragma once

// Query normalization and the word/character vocabularies.
//
// Normalization is deliberately plain: lowercase ASCII letters, split on
// whitespace, strip leading/trailing ASCII punctuation from each token.
// Non-ASCII bytes pass through untouched; characters are handled as UTF-8
// code points so multi-byte characters count as one unit.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace qenc {

// Vocabulary-free normalization. Returns the token list; empty when the
// query normalizes to nothing.
std::vector<std::string> normalize(const std::string& raw);

// Canonical text form used for deduplication: normalized tokens joined by
// single spaces. Throws std::invalid_argument for empty queries.
std::string normalized_text(const std::string& raw);

// Decodes a UTF-8 string into code points; invalid bytes become U+FFFD.
std::vector<char32_t> utf8_codepoints(const std::string& s);
std::string utf8_encode(char32_t cp);

class Vocabulary {
 public:
  static constexpr std::uint32_t kPadId = 0;
  static constexpr std::uint32_t kOovId = 1;
  static constexpr std::uint32_t kCharPadId = 0;
  static constexpr std::uint32_t kCharUnkId = 1;

  Vocabulary() = default;

  // Builds from a corpus of raw query texts. Tokens and characters are
  // ranked by frequency (ties by lexicographic order) and capped.
  static Vocabulary build(const std::vector<std::string>& corpus,
                          std::size_t token_cap, std::size_t char_cap);

  std::uint32_t token_id(const std::string& token) const;
  std::uint32_t char_id(char32_t cp) const;

  std::size_t size() const { return id_to_token_.size(); }       // includes pad/oov
  std::size_t char_size() const { return id_to_char_.size(); }   // includes pad/unk

  const std::string& token_of(std::uint32_t id) const { return id_to_token_.at(id); }
  char32_t char_of(std::uint32_t id) const { return id_to_char_.at(id); }

  // Serialization hooks used by the checkpoint format: tokens in id order,
  // characters in id order as UTF-8 strings. Sentinel slots use the
  // reserved literals below.
  std::vector<std::string> token_rows() const;
  std::vector<std::string> char_rows() const;
  static Vocabulary from_rows(const std::vector<std::string>& tokens,
                              const std::vector<std::string>& chars);

  static constexpr const char* kPadLiteral = "<pad>";
  static constexpr const char* kOovLiteral = "<oov>";
  static constexpr const char* kCharPadLiteral = "<cpad>";
  static constexpr const char* kCharUnkLiteral = "<cunk>";

 private:
  std::unordered_map<std::string, std::uint32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<char32_t, std::uint32_t> char_to_id_;
  std::vector<char32_t> id_to_char_;
};

struct TokenizedQuery {
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> ids;  // word ids, parallel to tokens

  std::string text() const;
};

// Normalize + map to vocabulary ids. Throws std::invalid_argument when the
// query is empty after normalization.
TokenizedQuery tokenize(const std::string& raw, const Vocabulary& vocab);

// Character ids of a token, right-padded with the pad character so at least
// one convolution window of width `window` exists.
std::vector<std::uint32_t> char_ids(const std::string& token, const Vocabulary& vocab,
                                    std::size_t window);

}  // namespace qenc
