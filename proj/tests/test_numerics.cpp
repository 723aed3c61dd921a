#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "helpers.hpp"
#include "oracles.hpp"
#include "qenc/tape.hpp"

using namespace qenc;
using helpers::random_matrix;
using helpers::random_vector;

TEST_CASE("relu, sigmoid and max-over-positions forward values") {
  Tape t;
  Tape::Id x = t.leaf(DenseArray::vector({-1.0, 0.0, 2.0}));
  const DenseArray& r = t.value(t.relu(x));
  CHECK(r.data == std::vector<Real>{0.0, 0.0, 2.0});

  Tape::Id z = t.leaf(DenseArray::vector({0.0}));
  CHECK(t.value(t.sigmoid(z)).data[0] == doctest::Approx(0.5));

  // positions are rows: [[1,5],[3,2]] -> columnwise max [3,5]
  Tape::Id m = t.leaf(DenseArray({2, 2}, {1.0, 5.0, 3.0, 2.0}));
  const DenseArray& mx = t.value(t.max_over_positions(m));
  CHECK(mx.data == std::vector<Real>{3.0, 5.0});

  const DenseArray& mean = t.value(t.mean_over_positions(m));
  CHECK(mean.data == std::vector<Real>{2.0, 3.5});
}

TEST_CASE("shape mismatches are rejected with the primitive and both shapes") {
  Tape t;
  Tape::Id a = t.leaf(DenseArray::vector({1.0, 2.0}));
  Tape::Id b = t.leaf(DenseArray::vector({1.0, 2.0, 3.0}));
  CHECK_THROWS_WITH_AS(t.add(a, b), "add: shape mismatch [2] vs [3]", std::invalid_argument);

  Tape::Id w = t.leaf(DenseArray({2, 2}, {1.0, 0.0, 0.0, 1.0}));
  CHECK_THROWS_WITH_AS(t.matvec(w, b), "matvec: shape mismatch [2,2] vs [3]",
                       std::invalid_argument);
  CHECK_THROWS_AS(t.mul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(t.sub(a, b), std::invalid_argument);
}

TEST_CASE("cosine forward values and degenerate inputs") {
  Tape t;
  Tape::Id e1 = t.leaf(DenseArray::vector({1.0, 0.0}));
  Tape::Id e2 = t.leaf(DenseArray::vector({0.0, 1.0}));
  Tape::Id e3 = t.leaf(DenseArray::vector({1.0, 1.0}));
  CHECK(t.value(t.cosine(e1, e1)).data[0] == doctest::Approx(1.0));
  CHECK(t.value(t.cosine(e1, e2)).data[0] == doctest::Approx(0.0));
  CHECK(t.value(t.cosine(e3, e1)).data[0] == doctest::Approx(0.70711).epsilon(1e-5));

  Tape::Id zero = t.leaf(DenseArray::vector({0.0, 0.0}));
  CHECK_THROWS_WITH_AS(t.cosine(zero, e1), "cosine: first argument has near-zero norm",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(t.cosine(e1, zero), "cosine: second argument has near-zero norm",
                       std::invalid_argument);
}

TEST_CASE("backward on textbook scalars") {
  {
    // f(x) = x*x at x=3 -> 6
    Tape t;
    Tape::Id x = t.leaf(DenseArray::vector({3.0}));
    t.backward(t.mul(x, x));
    CHECK(t.grad(x).data[0] == doctest::Approx(6.0));
  }
  {
    // f(x) = sigmoid(x) at 0 -> 0.25
    Tape t;
    Tape::Id x = t.leaf(DenseArray::vector({0.0}));
    t.backward(t.sigmoid(x));
    CHECK(t.grad(x).data[0] == doctest::Approx(0.25));
  }
  {
    // non-scalar output rejected
    Tape t;
    Tape::Id x = t.leaf(DenseArray::vector({1.0, 2.0}));
    Tape::Id y = t.relu(x);
    CHECK_THROWS_AS(t.backward(y), std::invalid_argument);
  }
}

TEST_CASE("gradient of an unused parameter is exactly zero") {
  Tape t;
  Tape::Id used = t.leaf(DenseArray::vector({1.0, -2.0}));
  Tape::Id unused = t.leaf(DenseArray::vector({5.0, 5.0, 5.0}));
  t.backward(t.sum(t.relu(used)));
  const DenseArray g = t.grad(unused);
  CHECK(g.shape == std::vector<std::size_t>{3});
  for (Real v : g.data) CHECK(v == 0.0);
}

namespace {

// weighted sum reduces any output to a scalar so every element's gradient
// flows; weights are fixed per case
double run_case(Tape::Id (*build)(Tape&, const std::vector<Tape::Id>&),
                std::vector<DenseArray>& inputs, const DenseArray& weights,
                std::vector<DenseArray>* analytic) {
  Tape t;
  std::vector<Tape::Id> ids;
  for (const auto& in : inputs) ids.push_back(t.leaf(in));
  Tape::Id out = build(t, ids);
  Tape::Id w = t.leaf(weights);
  Tape::Id scalar = t.sum(t.mul(out, w));
  if (analytic) {
    t.backward(scalar);
    analytic->clear();
    for (Tape::Id id : ids) analytic->push_back(t.grad(id));
  }
  return t.value(scalar).data[0];
}

void check_primitive(const char* name, Tape::Id (*build)(Tape&, const std::vector<Tape::Id>&),
                     std::vector<DenseArray> inputs, std::vector<std::size_t> out_shape,
                     std::uint64_t seed) {
  Rng rng(seed);
  DenseArray weights = DenseArray::zeros(out_shape);
  for (Real& v : weights.data) v = rng.uniform(-1.0, 1.0);

  std::vector<DenseArray> analytic;
  run_case(build, inputs, weights, &analytic);
  auto report = oracles::fd_check_arrays(
      inputs, analytic, [&]() { return run_case(build, inputs, weights, nullptr); });
  INFO(name << " seed=" << seed << " worst=" << report.worst_group);
  CHECK(report.max_rel_err < 1e-3);
}

}  // namespace

TEST_CASE("every primitive's backward matches central finite differences on 20 seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 977);
    const std::size_t n = 2 + seed % 4;
    const std::size_t m = 3 + seed % 3;

    check_primitive(
        "matvec", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.matvec(in[0], in[1]); },
        {random_matrix(rng, m, n), random_vector(rng, n)}, {m}, seed);
    check_primitive(
        "add", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.add(in[0], in[1]); },
        {random_vector(rng, n), random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "add_broadcast",
        +[](Tape& t, const std::vector<Tape::Id>& in) { return t.add(in[0], in[1]); },
        {random_matrix(rng, m, n), random_vector(rng, n)}, {m, n}, seed);
    check_primitive(
        "sub", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.sub(in[0], in[1]); },
        {random_vector(rng, n), random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "mul", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.mul(in[0], in[1]); },
        {random_vector(rng, n), random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "sigmoid", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.sigmoid(in[0]); },
        {random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "tanh", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.tanh(in[0]); },
        {random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "relu", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.relu(in[0]); },
        {random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "one_minus", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.one_minus(in[0]); },
        {random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "scale", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.scale(in[0], -1.7); },
        {random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "concat", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.concat(in[0], in[1]); },
        {random_vector(rng, n), random_vector(rng, m)}, {n + m}, seed);
    check_primitive(
        "stack_max",
        +[](Tape& t, const std::vector<Tape::Id>& in) {
          return t.max_over_positions(t.stack_rows(in));
        },
        {random_vector(rng, n), random_vector(rng, n), random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "stack_mean",
        +[](Tape& t, const std::vector<Tape::Id>& in) {
          return t.mean_over_positions(t.stack_rows(in));
        },
        {random_vector(rng, n), random_vector(rng, n)}, {n}, seed);
    check_primitive(
        "cosine", +[](Tape& t, const std::vector<Tape::Id>& in) { return t.cosine(in[0], in[1]); },
        {random_vector(rng, n), random_vector(rng, n)}, {1}, seed);
    check_primitive(
        "row",
        +[](Tape& t, const std::vector<Tape::Id>& in) { return t.row(in[0], 1); },
        {random_matrix(rng, m, n)}, {n}, seed);
  }
}

TEST_CASE("tape replay is deterministic bit for bit") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    Tape t;
    Tape::Id w = t.leaf(random_matrix(rng, 4, 3));
    Tape::Id x = t.leaf(random_vector(rng, 3));
    Tape::Id h = t.tanh(t.matvec(w, x));
    Tape::Id out = t.sum(t.mul(h, t.sigmoid(h)));
    return t.value(out).data[0];
  };
  const double a = run(42);
  const double b = run(42);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("gradients accumulate across reused nodes") {
  // f = sum(x * x) + sum(x): df/dx_i = 2 x_i + 1
  Tape t;
  Tape::Id x = t.leaf(DenseArray::vector({1.5, -0.5}));
  Tape::Id out = t.add(t.sum(t.mul(x, x)), t.sum(x));
  t.backward(out);
  const DenseArray g = t.grad(x);
  CHECK(g.data[0] == doctest::Approx(4.0));
  CHECK(g.data[1] == doctest::Approx(0.0));
}
