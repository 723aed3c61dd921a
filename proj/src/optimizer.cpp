#include "qenc/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace qenc {

Real clip_by_global_norm(GradientMap& grads, Real max_norm) {
  Real sq = 0.0;
  for (const auto& [name, g] : grads)
    for (Real v : g.data) sq += v * v;
  const Real norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Real s = max_norm / norm;
    for (auto& [name, g] : grads)
      for (Real& v : g.data) v *= s;
  }
  return norm;
}

void adam_step(ModelParameters& params, const GradientMap& grads, OptimizerState& state) {
  const AdamConfig& c = state.config;
  state.step += 1;
  const Real bc1 = 1.0 - std::pow(c.beta1, static_cast<Real>(state.step));
  const Real bc2 = 1.0 - std::pow(c.beta2, static_cast<Real>(state.step));

  params.for_each_group([&](const std::string& name, DenseArray& p) {
    auto it = grads.find(name);
    if (it == grads.end()) return;
    const DenseArray& g = it->second;
    if (!same_shape(g, p))
      throw std::runtime_error("adam_step: gradient shape " + shape_str(g) +
                               " does not match parameter " + name + " " + shape_str(p));
    if (!g.all_finite())
      throw std::runtime_error("adam_step: non-finite gradient in group " + name);

    DenseArray& m = state.m.try_emplace(name, DenseArray::zeros(p.shape)).first->second;
    DenseArray& v = state.v.try_emplace(name, DenseArray::zeros(p.shape)).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m.data[i] = c.beta1 * m.data[i] + (1.0 - c.beta1) * g.data[i];
      v.data[i] = c.beta2 * v.data[i] + (1.0 - c.beta2) * g.data[i] * g.data[i];
      const Real mhat = m.data[i] / bc1;
      const Real vhat = v.data[i] / bc2;
      p.data[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  });
}

}  // namespace qenc
