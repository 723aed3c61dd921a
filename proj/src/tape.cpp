#include "qenc/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace qenc {

namespace {

[[noreturn]] void shape_error(const char* op, const DenseArray& a, const DenseArray& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) +
                              " vs " + shape_str(b));
}

}  // namespace

Real dot(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Real norm(const std::vector<Real>& a) { return std::sqrt(dot(a, a)); }

Real cosine_value(const std::vector<Real>& a, const std::vector<Real>& b, Real eps) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine: length mismatch " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  Real na = norm(a), nb = norm(b);
  if (na <= eps) throw std::invalid_argument("cosine: first argument has near-zero norm");
  if (nb <= eps) throw std::invalid_argument("cosine: second argument has near-zero norm");
  return dot(a, b) / (na * nb);
}

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kRow: return "row";
    case Op::kMatVec: return "matvec";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kOneMinus: return "one_minus";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kConcat: return "concat";
    case Op::kStackRows: return "stack_rows";
    case Op::kMaxPos: return "max_over_positions";
    case Op::kMeanPos: return "mean_over_positions";
    case Op::kSum: return "sum";
    case Op::kCosine: return "cosine";
  }
  return "?";
}

Tape::Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(DenseArray value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Id Tape::leaf_ref(const DenseArray* value) {
  Node n;
  n.op = Op::kLeaf;
  n.ref = value;
  return push(std::move(n));
}

const DenseArray& Tape::value(Id id) const {
  const Node& n = nodes_.at(id);
  return n.ref ? *n.ref : n.value;
}

DenseArray Tape::grad(Id id) const {
  if (id < grad_set_.size() && grad_set_[id]) return grads_[id];
  DenseArray z = value(id);
  std::fill(z.data.begin(), z.data.end(), 0.0);
  return z;
}

Tape::Id Tape::row(Id matrix, std::size_t r) {
  const DenseArray& m = value(matrix);
  if (!m.is_matrix() || r >= m.rows())
    throw std::invalid_argument("row: index " + std::to_string(r) + " out of range for " +
                                shape_str(m));
  Node n;
  n.op = Op::kRow;
  n.inputs = {matrix};
  n.index = r;
  n.value = DenseArray::zeros({m.cols()});
  for (std::size_t c = 0; c < m.cols(); ++c) n.value.data[c] = m.at(r, c);
  return push(std::move(n));
}

Tape::Id Tape::matvec(Id w, Id x) {
  const DenseArray& wm = value(w);
  const DenseArray& xv = value(x);
  if (!wm.is_matrix() || !xv.is_vector() || wm.cols() != xv.size())
    shape_error("matvec", wm, xv);
  Node n;
  n.op = Op::kMatVec;
  n.inputs = {w, x};
  n.value = DenseArray::zeros({wm.rows()});
  for (std::size_t r = 0; r < wm.rows(); ++r) {
    Real s = 0.0;
    const Real* row = wm.data.data() + r * wm.cols();
    for (std::size_t c = 0; c < wm.cols(); ++c) s += row[c] * xv.data[c];
    n.value.data[r] = s;
  }
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  const DenseArray& av = value(a);
  const DenseArray& bv = value(b);
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a, b};
  if (same_shape(av, bv)) {
    n.value = av;
    for (std::size_t i = 0; i < bv.size(); ++i) n.value.data[i] += bv.data[i];
  } else if (av.is_matrix() && bv.is_vector() && av.cols() == bv.size()) {
    // matrix + row vector broadcast
    n.value = av;
    for (std::size_t r = 0; r < av.rows(); ++r)
      for (std::size_t c = 0; c < av.cols(); ++c) n.value.at(r, c) += bv.data[c];
  } else {
    shape_error("add", av, bv);
  }
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  const DenseArray& av = value(a);
  const DenseArray& bv = value(b);
  if (!same_shape(av, bv)) shape_error("sub", av, bv);
  Node n;
  n.op = Op::kSub;
  n.inputs = {a, b};
  n.value = av;
  for (std::size_t i = 0; i < bv.size(); ++i) n.value.data[i] -= bv.data[i];
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  const DenseArray& av = value(a);
  const DenseArray& bv = value(b);
  if (!same_shape(av, bv)) shape_error("mul", av, bv);
  Node n;
  n.op = Op::kMul;
  n.inputs = {a, b};
  n.value = av;
  for (std::size_t i = 0; i < bv.size(); ++i) n.value.data[i] *= bv.data[i];
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, Real c) {
  Node n;
  n.op = Op::kScale;
  n.inputs = {a};
  n.aux = c;
  n.value = value(a);
  for (Real& v : n.value.data) v *= c;
  return push(std::move(n));
}

Tape::Id Tape::one_minus(Id a) {
  Node n;
  n.op = Op::kOneMinus;
  n.inputs = {a};
  n.value = value(a);
  for (Real& v : n.value.data) v = 1.0 - v;
  return push(std::move(n));
}

Tape::Id Tape::sigmoid(Id a) {
  Node n;
  n.op = Op::kSigmoid;
  n.inputs = {a};
  n.value = value(a);
  for (Real& v : n.value.data) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(n));
}

Tape::Id Tape::tanh(Id a) {
  Node n;
  n.op = Op::kTanh;
  n.inputs = {a};
  n.value = value(a);
  for (Real& v : n.value.data) v = std::tanh(v);
  return push(std::move(n));
}

Tape::Id Tape::relu(Id a) {
  Node n;
  n.op = Op::kRelu;
  n.inputs = {a};
  n.value = value(a);
  for (Real& v : n.value.data) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Tape::Id Tape::concat(std::span<const Id> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Node n;
  n.op = Op::kConcat;
  std::size_t total = 0;
  for (Id p : parts) {
    const DenseArray& v = value(p);
    if (!v.is_vector())
      throw std::invalid_argument(std::string("concat: input is not a vector ") + shape_str(v));
    total += v.size();
    n.inputs.push_back(p);
  }
  n.value = DenseArray::zeros({total});
  std::size_t off = 0;
  for (Id p : parts) {
    const DenseArray& v = value(p);
    for (std::size_t i = 0; i < v.size(); ++i) n.value.data[off + i] = v.data[i];
    off += v.size();
  }
  return push(std::move(n));
}

Tape::Id Tape::concat(Id a, Id b) {
  std::array<Id, 2> ids{a, b};
  return concat(std::span<const Id>(ids));
}

Tape::Id Tape::concat(Id a, Id b, Id c) {
  std::array<Id, 3> ids{a, b, c};
  return concat(std::span<const Id>(ids));
}

Tape::Id Tape::stack_rows(std::span<const Id> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  const std::size_t d = value(rows[0]).size();
  Node n;
  n.op = Op::kStackRows;
  for (Id r : rows) {
    const DenseArray& v = value(r);
    if (!v.is_vector() || v.size() != d) shape_error("stack_rows", value(rows[0]), v);
    n.inputs.push_back(r);
  }
  n.value = DenseArray::zeros({rows.size(), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const DenseArray& v = value(rows[r]);
    for (std::size_t c = 0; c < d; ++c) n.value.at(r, c) = v.data[c];
  }
  return push(std::move(n));
}

Tape::Id Tape::max_over_positions(Id m) {
  const DenseArray& mv = value(m);
  if (!mv.is_matrix())
    throw std::invalid_argument("max_over_positions: expected a matrix, got " + shape_str(mv));
  Node n;
  n.op = Op::kMaxPos;
  n.inputs = {m};
  n.value = DenseArray::zeros({mv.cols()});
  for (std::size_t c = 0; c < mv.cols(); ++c) {
    Real best = mv.at(0, c);
    for (std::size_t r = 1; r < mv.rows(); ++r)
      if (mv.at(r, c) > best) best = mv.at(r, c);
    n.value.data[c] = best;
  }
  return push(std::move(n));
}

Tape::Id Tape::mean_over_positions(Id m) {
  const DenseArray& mv = value(m);
  if (!mv.is_matrix())
    throw std::invalid_argument("mean_over_positions: expected a matrix, got " + shape_str(mv));
  Node n;
  n.op = Op::kMeanPos;
  n.inputs = {m};
  n.value = DenseArray::zeros({mv.cols()});
  const Real inv = 1.0 / static_cast<Real>(mv.rows());
  for (std::size_t c = 0; c < mv.cols(); ++c) {
    Real s = 0.0;
    for (std::size_t r = 0; r < mv.rows(); ++r) s += mv.at(r, c);
    n.value.data[c] = s * inv;
  }
  return push(std::move(n));
}

Tape::Id Tape::sum(Id a) {
  const DenseArray& av = value(a);
  Node n;
  n.op = Op::kSum;
  n.inputs = {a};
  Real s = 0.0;
  for (Real v : av.data) s += v;
  n.value = DenseArray::scalar(s);
  return push(std::move(n));
}

Tape::Id Tape::cosine(Id a, Id b, Real eps) {
  const DenseArray& av = value(a);
  const DenseArray& bv = value(b);
  if (!av.is_vector() || !bv.is_vector() || av.size() != bv.size())
    shape_error("cosine", av, bv);
  Real na = norm(av.data), nb = norm(bv.data);
  if (na <= eps) throw std::invalid_argument("cosine: first argument has near-zero norm");
  if (nb <= eps) throw std::invalid_argument("cosine: second argument has near-zero norm");
  Node n;
  n.op = Op::kCosine;
  n.inputs = {a, b};
  n.aux = eps;
  n.value = DenseArray::scalar(dot(av.data, bv.data) / (na * nb));
  return push(std::move(n));
}

DenseArray& Tape::grad_buf(Id id) {
  if (!grad_set_[id]) {
    const DenseArray& v = value(id);
    grads_[id] = DenseArray::zeros(v.shape);
    grad_set_[id] = 1;
  }
  return grads_[id];
}

void Tape::backward(Id output) {
  const DenseArray& out = value(output);
  if (!out.is_scalar())
    throw std::invalid_argument("backward: output must be a scalar, got " + shape_str(out));
  grads_.assign(nodes_.size(), DenseArray{});
  grad_set_.assign(nodes_.size(), 0);
  grad_buf(output).data[0] = 1.0;
  for (Id id = output + 1; id-- > 0;) {
    if (!grad_set_[id]) continue;
    backward_node(id);
  }
}

void Tape::backward_node(Id id) {
  const Node& n = nodes_[id];
  const DenseArray& g = grads_[id];
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kRow: {
      const DenseArray& m = value(n.inputs[0]);
      DenseArray& gm = grad_buf(n.inputs[0]);
      for (std::size_t c = 0; c < m.cols(); ++c) gm.at(n.index, c) += g.data[c];
      break;
    }
    case Op::kMatVec: {
      const DenseArray& w = value(n.inputs[0]);
      const DenseArray& x = value(n.inputs[1]);
      DenseArray& gw = grad_buf(n.inputs[0]);
      DenseArray& gx = grad_buf(n.inputs[1]);
      for (std::size_t r = 0; r < w.rows(); ++r) {
        const Real gr = g.data[r];
        if (gr == 0.0) continue;
        Real* gwr = gw.data.data() + r * w.cols();
        const Real* wr = w.data.data() + r * w.cols();
        for (std::size_t c = 0; c < w.cols(); ++c) {
          gwr[c] += gr * x.data[c];
          gx.data[c] += gr * wr[c];
        }
      }
      break;
    }
    case Op::kAdd: {
      const DenseArray& a = value(n.inputs[0]);
      const DenseArray& b = value(n.inputs[1]);
      DenseArray& ga = grad_buf(n.inputs[0]);
      DenseArray& gb = grad_buf(n.inputs[1]);
      if (same_shape(a, b)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga.data[i] += g.data[i];
          gb.data[i] += g.data[i];
        }
      } else {
        // matrix + row vector
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t c = 0; c < a.cols(); ++c) gb.data[c] += g.at(r, c);
      }
      break;
    }
    case Op::kSub: {
      DenseArray& ga = grad_buf(n.inputs[0]);
      DenseArray& gb = grad_buf(n.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i];
        gb.data[i] -= g.data[i];
      }
      break;
    }
    case Op::kMul: {
      const DenseArray& a = value(n.inputs[0]);
      const DenseArray& b = value(n.inputs[1]);
      DenseArray& ga = grad_buf(n.inputs[0]);
      DenseArray& gb = grad_buf(n.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i] * b.data[i];
        gb.data[i] += g.data[i] * a.data[i];
      }
      break;
    }
    case Op::kScale: {
      DenseArray& ga = grad_buf(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * n.aux;
      break;
    }
    case Op::kOneMinus: {
      DenseArray& ga = grad_buf(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] -= g.data[i];
      break;
    }
    case Op::kSigmoid: {
      DenseArray& ga = grad_buf(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Real s = n.value.data[i];
        ga.data[i] += g.data[i] * s * (1.0 - s);
      }
      break;
    }
    case Op::kTanh: {
      DenseArray& ga = grad_buf(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Real t = n.value.data[i];
        ga.data[i] += g.data[i] * (1.0 - t * t);
      }
      break;
    }
    case Op::kRelu: {
      const DenseArray& x = value(n.inputs[0]);
      DenseArray& ga = grad_buf(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x.data[i] > 0.0) ga.data[i] += g.data[i];
      break;
    }
    case Op::kConcat: {
      std::size_t off = 0;
      for (Id in : n.inputs) {
        DenseArray& gi = grad_buf(in);
        for (std::size_t i = 0; i < gi.size(); ++i) gi.data[i] += g.data[off + i];
        off += gi.size();
      }
      break;
    }
    case Op::kStackRows: {
      const std::size_t d = n.value.cols();
      for (std::size_t r = 0; r < n.inputs.size(); ++r) {
        DenseArray& gi = grad_buf(n.inputs[r]);
        for (std::size_t c = 0; c < d; ++c) gi.data[c] += g.data[r * d + c];
      }
      break;
    }
    case Op::kMaxPos: {
      const DenseArray& m = value(n.inputs[0]);
      DenseArray& gm = grad_buf(n.inputs[0]);
      for (std::size_t c = 0; c < m.cols(); ++c) {
        std::size_t amax = 0;
        Real best = m.at(0, c);
        for (std::size_t r = 1; r < m.rows(); ++r)
          if (m.at(r, c) > best) { best = m.at(r, c); amax = r; }
        gm.at(amax, c) += g.data[c];
      }
      break;
    }
    case Op::kMeanPos: {
      const DenseArray& m = value(n.inputs[0]);
      DenseArray& gm = grad_buf(n.inputs[0]);
      const Real inv = 1.0 / static_cast<Real>(m.rows());
      for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) gm.at(r, c) += g.data[c] * inv;
      break;
    }
    case Op::kSum: {
      DenseArray& ga = grad_buf(n.inputs[0]);
      for (Real& v : ga.data) v += g.data[0];
      break;
    }
    case Op::kCosine: {
      const DenseArray& a = value(n.inputs[0]);
      const DenseArray& b = value(n.inputs[1]);
      DenseArray& ga = grad_buf(n.inputs[0]);
      DenseArray& gb = grad_buf(n.inputs[1]);
      const Real na = norm(a.data), nb = norm(b.data);
      const Real c = n.value.data[0];
      const Real g0 = g.data[0];
      const Real inv_ab = 1.0 / (na * nb);
      const Real inv_a2 = 1.0 / (na * na);
      const Real inv_b2 = 1.0 / (nb * nb);
      for (std::size_t i = 0; i < a.size(); ++i) {
        ga.data[i] += g0 * (b.data[i] * inv_ab - c * a.data[i] * inv_a2);
        gb.data[i] += g0 * (a.data[i] * inv_ab - c * b.data[i] * inv_b2);
      }
      break;
    }
  }
}

}  // namespace qenc
