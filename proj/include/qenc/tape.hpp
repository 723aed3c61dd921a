#pragma once

// Reverse-mode automatic differentiation over a linear tape of primitive
// operations. Node ids are assigned in construction order, so walking the
// tape backwards visits nodes in reverse topological order exactly once.
//
// The primitive set is the minimum the encoder and losses need: affine map,
// pointwise nonlinearities, elementwise sum/product, concatenation,
// row stacking, max/mean over positions, embedding-row lookup and a fused
// cosine. The only broadcast is vector-plus-matrix-row; every other shape
// mismatch is an error naming the primitive and both shapes.
//
// Tape construction is single-threaded; one backward() call per tape.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "qenc/array.hpp"

namespace qenc {

class Tape {
 public:
  using Id = std::uint32_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf holding its own value (inputs, constants).
  Id leaf(DenseArray value);
  // Leaf referencing external storage (model parameters). The referenced
  // array must outlive the tape.
  Id leaf_ref(const DenseArray* value);

  const DenseArray& value(Id id) const;
  // Valid after backward(); zero for nodes the output does not depend on.
  DenseArray grad(Id id) const;

  // --- primitives -----------------------------------------------------
  Id row(Id matrix, std::size_t r);            // [m,n] -> [n]
  Id matvec(Id w, Id x);                       // [m,n] x [n] -> [m]
  Id add(Id a, Id b);                          // same shape, or [p,d] + [d]
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);                          // elementwise
  Id scale(Id a, Real c);
  Id one_minus(Id a);                          // 1 - x
  Id sigmoid(Id a);
  Id tanh(Id a);
  Id relu(Id a);
  Id concat(std::span<const Id> parts);        // vectors -> vector
  Id concat(Id a, Id b);
  Id concat(Id a, Id b, Id c);
  Id stack_rows(std::span<const Id> rows);     // n x [d] -> [n,d]
  Id max_over_positions(Id m);                 // [p,d] -> [d], ties -> lowest row
  Id mean_over_positions(Id m);                // [p,d] -> [d]
  Id sum(Id a);                                // [n] -> scalar
  Id cosine(Id a, Id b, Real eps = 1e-12);     // [n],[n] -> scalar in [-1,1]

  // Accumulates gradients of `output` (must be scalar) w.r.t. every node.
  void backward(Id output);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kRow, kMatVec, kAdd, kSub, kMul, kScale, kOneMinus,
    kSigmoid, kTanh, kRelu, kConcat, kStackRows, kMaxPos, kMeanPos,
    kSum, kCosine,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::vector<Id> inputs;
    const DenseArray* ref = nullptr;  // set for leaf_ref
    DenseArray value;
    Real aux = 0.0;          // scale factor / cosine epsilon
    std::size_t index = 0;   // row index for kRow
  };

  Id push(Node n);
  DenseArray& grad_buf(Id id);
  void backward_node(Id id);
  static const char* op_name(Op op);

  std::vector<Node> nodes_;
  std::vector<DenseArray> grads_;
  std::vector<char> grad_set_;
};

}  // namespace qenc
