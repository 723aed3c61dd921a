#pragma once

// Small shared utilities: deterministic RNG, little-endian binary IO,
// atomic file writes, TSV helpers.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace qenc {

// mt19937_64 with explicit bit-to-double mapping so streams are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]; safe for log()
  double uniform_pos() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling keeps the distribution exact
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do { x = gen_(); } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// binary IO (explicit little-endian)

void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f32(std::ostream& os, float v);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);
void write_bytes(std::ostream& os, std::string_view s);

// varint (LEB128) for delta-encoded adjacency lists
void write_varint(std::ostream& os, std::uint64_t v);
std::uint64_t read_varint(std::istream& is);

// Writes through a temp file in the same directory, then renames.
void atomic_write(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& fn);

// ---------------------------------------------------------------------------
// text helpers

std::vector<std::string> split_tab(const std::string& line);
std::string join(const std::vector<std::string>& parts, char sep);

struct Warnings {
  std::vector<std::string> messages;
  void add(std::string msg) { messages.push_back(std::move(msg)); }
  std::size_t count() const { return messages.size(); }
};

}  // namespace qenc
