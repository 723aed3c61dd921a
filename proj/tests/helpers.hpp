#pragma once

// Shared fixtures: tiny models, random arrays, temp directories.

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "qenc/model.hpp"
#include "qenc/util.hpp"

namespace helpers {

using qenc::DenseArray;
using qenc::ModelDims;
using qenc::ModelParameters;
using qenc::Real;
using qenc::Rng;
using qenc::Vocabulary;

inline ModelDims toy_dims() {
  ModelDims d;
  d.word_dim = 4;
  d.char_dim = 3;
  d.char_filters = 3;
  d.char_window = 3;
  d.gru_hidden = 5;
  return d;
}

inline Vocabulary toy_vocab() {
  const std::vector<std::string> corpus = {
      "alpha beta", "beta gamma", "gamma delta", "delta echo", "echo alpha",
      "horse racing", "racing horse", "cream of mushroom soup recipe"};
  return Vocabulary::build(corpus, 64, 32);
}

inline ModelParameters toy_model(std::uint64_t seed = 7) {
  return qenc::init_parameters(toy_dims(), toy_vocab(), seed);
}

inline DenseArray random_vector(Rng& rng, std::size_t n, Real lo = -1.0, Real hi = 1.0) {
  DenseArray a = DenseArray::zeros({n});
  for (Real& v : a.data) v = rng.uniform(lo, hi);
  return a;
}

inline DenseArray random_matrix(Rng& rng, std::size_t r, std::size_t c, Real lo = -1.0,
                                Real hi = 1.0) {
  DenseArray a = DenseArray::zeros({r, c});
  for (Real& v : a.data) v = rng.uniform(lo, hi);
  return a;
}

inline std::vector<float> random_unit_f32(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    // Box-Muller gives a uniform direction
    const double u1 = rng.uniform_pos();
    const double u2 = rng.uniform();
    x = static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2));
    norm += static_cast<double>(x) * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x = static_cast<float>(x / norm);
  return v;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("qenc_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path operator/(const std::string& name) const { return dir_ / name; }

 private:
  std::filesystem::path dir_;
};

}  // namespace helpers
