#pragma once

// Encoding file: binary header (magic, version, count, dim) followed by
// little-endian float32 rows, plus a sibling "<path>.ids.tsv" mapping row
// ids to query texts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qenc {

struct EncodingFile {
  std::size_t dim = 0;
  std::vector<std::vector<float>> rows;
  std::vector<std::string> texts;  // texts[i] belongs to rows[i]; id == i
};

void write_encodings(const std::filesystem::path& path, const EncodingFile& file);
EncodingFile load_encodings(const std::filesystem::path& path, bool with_texts = true);

std::filesystem::path idmap_path(const std::filesystem::path& encodings_path);

}  // namespace qenc
