#pragma once

// Dense row-major arrays. Everything on the training path runs in 64-bit
// precision; 32-bit is used only at the file-format boundary.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qenc {

using Real = double;

struct DenseArray {
  std::vector<std::size_t> shape;
  std::vector<Real> data;

  DenseArray() = default;
  DenseArray(std::vector<std::size_t> s, std::vector<Real> d)
      : shape(std::move(s)), data(std::move(d)) {}

  static DenseArray zeros(std::vector<std::size_t> s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return DenseArray(std::move(s), std::vector<Real>(n, 0.0));
  }

  static DenseArray vector(std::vector<Real> d) {
    std::vector<std::size_t> s{d.size()};
    return DenseArray(std::move(s), std::move(d));
  }

  static DenseArray scalar(Real v) { return DenseArray({1}, {v}); }

  std::size_t size() const { return data.size(); }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  bool is_scalar() const { return size() == 1 && shape.size() == 1; }

  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  Real& at(std::size_t i) { return data[i]; }
  Real at(std::size_t i) const { return data[i]; }
  Real& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool all_finite() const {
    for (Real v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::string shape_str(const DenseArray& a) {
  std::string s = "[";
  for (std::size_t i = 0; i < a.shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(a.shape[i]);
  }
  return s + "]";
}

inline bool same_shape(const DenseArray& a, const DenseArray& b) {
  return a.shape == b.shape;
}

// Plain (non-differentiable) vector math used by NCE scans, evaluation
// scorers and the ANN index.
Real dot(const std::vector<Real>& a, const std::vector<Real>& b);
Real norm(const std::vector<Real>& a);

// cosine with a zero-norm guard; throws std::invalid_argument naming the
// degenerate side.
Real cosine_value(const std::vector<Real>& a, const std::vector<Real>& b,
                  Real eps = 1e-12);

}  // namespace qenc
