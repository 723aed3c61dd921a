#include "qenc/encfile.hpp"

#include <fstream>
#include <stdexcept>

#include "qenc/util.hpp"

namespace qenc {

namespace {
constexpr char kMagic[8] = {'Q', 'E', 'N', 'C', 'V', 'E', 'C', '1'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::filesystem::path idmap_path(const std::filesystem::path& encodings_path) {
  std::filesystem::path p = encodings_path;
  p += ".ids.tsv";
  return p;
}

void write_encodings(const std::filesystem::path& path, const EncodingFile& file) {
  if (file.rows.size() != file.texts.size())
    throw std::invalid_argument("write_encodings: rows and texts differ in length");
  atomic_write(path, [&](std::ostream& os) {
    os.write(kMagic, 8);
    write_u32(os, kVersion);
    write_u64(os, file.rows.size());
    write_u32(os, static_cast<std::uint32_t>(file.dim));
    for (const auto& row : file.rows) {
      if (row.size() != file.dim)
        throw std::invalid_argument("write_encodings: row dimension mismatch");
      for (float v : row) write_f32(os, v);
    }
  });
  atomic_write(idmap_path(path), [&](std::ostream& os) {
    os << "# id\tquery\n";
    for (std::size_t i = 0; i < file.texts.size(); ++i) os << i << '\t' << file.texts[i] << '\n';
  });
}

EncodingFile load_encodings(const std::filesystem::path& path, bool with_texts) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open encodings: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("encodings: bad magic bytes in " + path.string());
  if (read_u32(is) != kVersion) throw std::runtime_error("encodings: unsupported version");
  EncodingFile file;
  const std::uint64_t count = read_u64(is);
  file.dim = read_u32(is);
  file.rows.resize(count);
  for (auto& row : file.rows) {
    row.resize(file.dim);
    for (float& v : row) v = read_f32(is);
  }

  if (with_texts) {
    std::ifstream ids(idmap_path(path));
    if (!ids)
      throw std::runtime_error("cannot open id map: " + idmap_path(path).string());
    file.texts.resize(count);
    std::string line;
    std::size_t seen = 0;
    while (std::getline(ids, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto f = split_tab(line);
      if (f.size() != 2) throw std::runtime_error("id map: expected 2 columns");
      const std::size_t id = static_cast<std::size_t>(std::stoull(f[0]));
      if (id >= count) throw std::runtime_error("id map: id out of range");
      file.texts[id] = f[1];
      ++seen;
    }
    if (seen != count) throw std::runtime_error("id map: row count mismatch");
  }
  return file;
}

}  // namespace qenc
