#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "transgauss/autodiff.hpp"
#include "transgauss/rng.hpp"

using namespace transgauss;
using ad::Tape;
using ad::Var;

namespace {

// generic check: d/dx sum(w . f(x)) against central differences
template <typename BuildFn>
void check_primitive(BuildFn&& build, std::vector<double> x, double tol = 1e-6) {
  Rng rng(123);
  std::vector<double> w(64);
  for (double& v : w) v = rng.uniform(-1, 1);

  auto value = [&](std::span<const double> params) {
    Tape t;
    Var in = t.leaf(params);
    Var out = build(t, in);
    double acc = 0.0;
    auto vals = t.value(out);
    for (std::size_t i = 0; i < vals.size(); ++i) acc += w[i] * vals[i];
    return acc;
  };

  Tape t;
  Var in = t.leaf(x);
  Var out = build(t, in);
  std::vector<Var> weighted;
  for (int i = 0; i < t.size(out); ++i)
    weighted.push_back(t.scale(t.index(out, i), w[i]));
  Var loss = t.sum(t.concat(weighted));
  t.backward(loss);
  const auto grad = t.grad(in);

  const auto report =
      ad::grad_check(value, grad, std::span<double>(x.data(), x.size()), 1e-5, tol);
  CHECK_MESSAGE(report.pass, "max rel err ", report.max_rel_err, " at coord ",
                report.worst_coord);
}

}  // namespace

TEST_CASE("elementwise primitives match central differences") {
  std::vector<double> x{0.31, -0.77, 1.21, -1.64};
  check_primitive([](Tape& t, Var v) { return t.square(v); }, x);
  check_primitive([](Tape& t, Var v) { return t.exp(v); }, x);
  check_primitive([](Tape& t, Var v) { return t.tanh(v); }, x);
  check_primitive([](Tape& t, Var v) { return t.sigmoid(v); }, x);
  check_primitive([](Tape& t, Var v) { return t.relu(v); }, x);
  check_primitive([](Tape& t, Var v) { return t.elu(v); }, x);
  check_primitive([](Tape& t, Var v) { return t.scale(v, -2.5); }, x);
  check_primitive([](Tape& t, Var v) { return t.add_const(v, 3.25); }, x);
  check_primitive([](Tape& t, Var v) { return t.softmax(v); }, x);
  std::vector<double> positive{0.4, 1.7, 2.3, 0.9};
  check_primitive([](Tape& t, Var v) { return t.log(v); }, positive);
  check_primitive([](Tape& t, Var v) { return t.reciprocal(v); }, positive);
}

TEST_CASE("binary primitives match central differences") {
  std::vector<double> x{0.31, -0.77, 1.21, -1.64, 0.5, -0.25, 0.75, 1.5};
  check_primitive(
      [](Tape& t, Var v) {
        Var a = t.gather_row(v, 4, 0);
        Var b = t.gather_row(v, 4, 1);
        return t.concat({t.add(a, b), t.sub(a, b), t.mul(a, b)});
      },
      x);
  check_primitive(
      [](Tape& t, Var v) {
        Var a = t.gather_row(v, 4, 0);
        Var b = t.gather_row(v, 4, 1);
        return t.concat({t.dot(a, b), t.sum(a), t.scale_by(a, t.index(b, 2))});
      },
      x);
}

TEST_CASE("affine matches central differences for weights, input and bias") {
  // pack W (2x3), x (3), b (2) into one parameter vector
  std::vector<double> packed{0.3, -0.2, 0.7, 1.1, 0.05, -0.6, 0.25, -1.2, 0.8, 0.1, -0.4};
  check_primitive(
      [](Tape& t, Var v) {
        Var all = v;
        Var w = t.concat({t.gather_row(all, 1, 0), t.gather_row(all, 1, 1),
                          t.gather_row(all, 1, 2), t.gather_row(all, 1, 3),
                          t.gather_row(all, 1, 4), t.gather_row(all, 1, 5)});
        Var x = t.concat({t.gather_row(all, 1, 6), t.gather_row(all, 1, 7),
                          t.gather_row(all, 1, 8)});
        Var b = t.concat({t.gather_row(all, 1, 9), t.gather_row(all, 1, 10)});
        return t.affine(w, x, b, 2, 3);
      },
      packed);
}

TEST_CASE("affine forward equals a hand matvec") {
  Tape t;
  Var w = t.leaf({1.0, 2.0, 3.0, 4.0});  // [[1,2],[3,4]]
  Var x = t.leaf({5.0, 6.0});
  Var b = t.leaf({0.5, -0.5});
  Var y = t.affine(w, x, b, 2, 2);
  CHECK(t.value(y)[0] == 1 * 5 + 2 * 6 + 0.5);
  CHECK(t.value(y)[1] == 3 * 5 + 4 * 6 - 0.5);
}

TEST_CASE("relu derivative uses the right derivative at the kink") {
  Tape t;
  Var x = t.leaf({-1.0, 2.0, 0.0});
  Var y = t.sum(t.relu(x));
  t.backward(y);
  const auto g = t.grad(x);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 1.0);
  CHECK(g[2] == 1.0);
}

TEST_CASE("elu derivative at -1 is exp(-1)") {
  Tape t;
  Var x = t.leaf({-1.0});
  Var y = t.sum(t.elu(x));
  t.backward(y);
  CHECK(t.grad(x)[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("softmax of a constant vector is uniform") {
  Tape t;
  Var x = t.leaf({0.0, 0.0, 0.0});
  Var y = t.softmax(x);
  for (double v : t.value(y)) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("gradient of sum of squares") {
  Tape t;
  Var x = t.leaf({1.0, 2.0});
  Var loss = t.sum(t.square(x));
  t.backward(loss);
  CHECK(t.grad(x)[0] == 2.0);
  CHECK(t.grad(x)[1] == 4.0);
}

TEST_CASE("two paths to the same parameter accumulate") {
  Tape t;
  Var x = t.leaf({3.0});
  Var loss = t.add(t.scale(x, 2.0), t.square(x));  // 2x + x^2, d/dx = 2 + 2x = 8
  t.backward(t.sum(loss));
  CHECK(t.grad(x)[0] == 8.0);
}

TEST_CASE("shape mismatches are rejected with the primitive named") {
  Tape t;
  Var a = t.leaf({1.0, 2.0});
  Var b = t.leaf({1.0});
  CHECK_THROWS_AS(t.add(a, b), std::invalid_argument);
  CHECK_THROWS_WITH_AS(t.affine(a, a, Var{-1}, 3, 2), doctest::Contains("affine"),
                       std::invalid_argument);
  CHECK_THROWS_AS(t.backward(a), std::invalid_argument);  // non-scalar loss
}

TEST_CASE("gather_row and index route gradients to the right slots") {
  Tape t;
  Var m = t.leaf({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});  // 3x2
  Var row = t.gather_row(m, 2, 1);
  CHECK(t.value(row)[0] == 3.0);
  CHECK(t.value(row)[1] == 4.0);
  Var loss = t.add(t.sum(t.scale(row, 2.0)), t.index(m, 5));
  t.backward(loss);
  const auto g = t.grad(m);
  CHECK(g[0] == 0.0);
  CHECK(g[2] == 2.0);
  CHECK(g[3] == 2.0);
  CHECK(g[5] == 1.0);
}

TEST_CASE("identical tapes give bit-identical gradients") {
  auto run = [] {
    Tape t;
    Rng rng(202);
    std::vector<double> xs(32);
    for (double& v : xs) v = rng.uniform(-1, 1);
    Var x = t.leaf(xs);
    Var h = t.tanh(t.affine(t.leaf(std::vector<double>(32 * 4, 0.01)), x, Var{-1}, 4, 32));
    Var loss = t.sum(t.square(h));
    t.backward(loss);
    auto g = t.grad(x);
    return std::vector<double>(g.begin(), g.end());
  };
  const auto a = run();
  const auto b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("linear functions pass grad_check almost exactly") {
  std::vector<double> x{0.2, -0.4, 0.6};
  const std::vector<double> w{1.5, -2.0, 0.25};
  auto value = [&](std::span<const double> p) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) acc += w[i] * p[i];
    return acc;
  };
  const auto report = ad::grad_check(value, w, std::span<double>(x.data(), x.size()), 1e-5, 1e-9);
  CHECK(report.pass);
}

TEST_CASE("tape reset reuses storage across builds") {
  Tape t;
  for (int rep = 0; rep < 3; ++rep) {
    t.reset();
    Var x = t.leaf({1.0, -2.0, 3.0});
    Var loss = t.sum(t.square(x));
    CHECK(t.scalar(loss) == doctest::Approx(14.0));
    t.backward(loss);
    CHECK(t.grad(x)[2] == 6.0);
  }
}
