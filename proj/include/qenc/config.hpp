#pragma once

// Key-value run configuration: "key = value" lines, '#' comments, flags
// override file values. Keys are dotted, e.g. train.learning_rate.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace qenc {

class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::filesystem::path& path);

  // "key=value" override, as passed via --set
  void set_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // all keys with the given prefix, e.g. "eval."
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace qenc
