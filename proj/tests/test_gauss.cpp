#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "transgauss/gauss.hpp"
#include "transgauss/rng.hpp"

using namespace transgauss;

namespace {
constexpr double kPi = 3.14159265358979323846;

EmbeddingSet random_embedding(int entities, int base_rels, int dim, std::uint64_t seed,
                              double eps = 1e-6) {
  EmbeddingSet emb(entities, base_rels, dim, eps);
  Rng rng(seed);
  for (double& x : emb.entity_table()) x = rng.uniform(-1.0, 1.0);
  for (double& x : emb.delta_table()) x = rng.uniform(-1.0, 1.0);
  for (double& x : emb.m_raw_table()) x = rng.uniform(-1.5, 1.5);
  return emb;
}
}  // namespace

TEST_CASE("elu matches its defining formula") {
  CHECK(elu(0.0) == 0.0);
  CHECK(elu(2.0) == 2.0);
  CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
  CHECK(elu(-1.0) == doctest::Approx(-0.632120558829).epsilon(1e-9));
}

TEST_CASE("variance_of is elu(m)+1+eps") {
  const double eps = 1e-6;
  RelationParams rel;
  rel.delta = {0.0, 0.0, 0.0};
  rel.m_raw = {0.0, -30.0, 2.0};
  const auto var = variance_of(rel, eps);
  CHECK(var[0] == doctest::Approx(1.0 + eps).epsilon(1e-15));
  CHECK(std::fabs(var[1] - eps) < 1e-12);
  CHECK(var[2] == doctest::Approx(3.0 + eps).epsilon(1e-15));
  for (double v : var) CHECK(v > eps * 0.999);
}

TEST_CASE("log_density of the standard normal at its mode") {
  DiagGaussian g{{0.0}, {1.0}};
  const std::vector<double> x{0.0};
  CHECK(log_density(x, g) == doctest::Approx(-0.5 * std::log(2.0 * kPi)).epsilon(1e-14));
  CHECK(log_density(x, g) == doctest::Approx(-0.91893853320467274).epsilon(1e-14));
}

TEST_CASE("log_density rejects dimension mismatch") {
  DiagGaussian g{{0.0, 0.0}, {1.0, 1.0}};
  const std::vector<double> x{0.0};
  CHECK_THROWS_AS(log_density(x, g), std::invalid_argument);
}

TEST_CASE("log_density is exactly translation invariant") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 4;
    DiagGaussian g;
    std::vector<double> x(d), c(d);
    for (int j = 0; j < d; ++j) {
      g.mean.push_back(rng.uniform(-2, 2));
      g.var.push_back(std::exp(rng.uniform(-1, 1)));
      x[j] = rng.uniform(-2, 2);
      c[j] = rng.uniform(-2, 2);
    }
    const double base = log_density(x, g);
    DiagGaussian shifted = g;
    std::vector<double> xs(d);
    for (int j = 0; j < d; ++j) {
      shifted.mean[j] = g.mean[j] + c[j];
      xs[j] = x[j] + c[j];
    }
    // identical floating-point subtraction pattern gives exact equality
    CHECK(log_density(xs, shifted) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("d=2 log density matches the product of univariate densities") {
  DiagGaussian g{{0.0, 0.0}, {1.0, 4.0}};
  const std::vector<double> x{1.0, 0.0};
  // independent high-precision oracle: product of per-dimension normal pdfs
  const long double p1 =
      std::exp(-0.5L * 1.0L) / std::sqrt(2.0L * static_cast<long double>(kPi) * 1.0L);
  const long double p2 = 1.0L / std::sqrt(2.0L * static_cast<long double>(kPi) * 4.0L);
  const double expected = static_cast<double>(std::log(p1 * p2));
  CHECK(log_density(x, g) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("log_density decreases monotonically in per-coordinate distance") {
  DiagGaussian g{{0.5, -0.25}, {0.7, 2.0}};
  double prev = log_density(std::vector<double>{0.5, -0.25}, g);
  for (double step = 0.25; step < 3.0; step += 0.25) {
    const double cur = log_density(std::vector<double>{0.5 + step, -0.25}, g);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("triplet_context adds the translation to the subject vector") {
  EmbeddingSet emb(2, 1, 2, 1e-6);
  auto vs = emb.entity_vec(0);
  vs[0] = 1.0;
  vs[1] = 1.0;
  auto d0 = emb.delta(0);
  d0[0] = 0.5;
  d0[1] = -1.0;
  const DiagGaussian g = triplet_context(emb, 0, RelationId{0, false});
  CHECK(g.mean[0] == 1.5);
  CHECK(g.mean[1] == 0.0);
  CHECK(g.var[0] == doctest::Approx(1.0 + 1e-6));
}

TEST_CASE("null relation leaves the subject as the mean") {
  EmbeddingSet emb = random_embedding(3, 1, 4, 17);
  std::fill(emb.delta(0).begin(), emb.delta(0).end(), 0.0);
  std::fill(emb.m_raw(0).begin(), emb.m_raw(0).end(), 0.0);
  const DiagGaussian g = triplet_context(emb, 1, RelationId{0, false});
  const auto vs = emb.entity_vec(1);
  for (int j = 0; j < 4; ++j) {
    CHECK(g.mean[j] == vs[j]);
    CHECK(g.var[j] == doctest::Approx(1.0 + 1e-6));
  }
}

TEST_CASE("triplet_context equals single-step path_context") {
  EmbeddingSet emb = random_embedding(5, 2, 3, 29);
  for (int s = 0; s < 5; ++s) {
    for (int b = 0; b < 2; ++b) {
      for (bool inv : {false, true}) {
        const RelationId r{b, inv};
        const DiagGaussian a = triplet_context(emb, s, r);
        const DiagGaussian p = path_context(emb, s, RelationPath{r});
        CHECK(a.mean == p.mean);
        CHECK(a.var == p.var);
      }
    }
  }
}

TEST_CASE("repeated relation doubles mean shift and variance") {
  EmbeddingSet emb = random_embedding(3, 1, 3, 37);
  const RelationId r{0, false};
  const DiagGaussian two = path_context(emb, 0, RelationPath{r, r});
  const auto vs = emb.entity_vec(0);
  const auto d0 = emb.delta(0);
  const auto var = emb.variance(r);
  for (int j = 0; j < 3; ++j) {
    CHECK(two.mean[j] == doctest::Approx(vs[j] + 2.0 * d0[j]).epsilon(1e-15));
    CHECK(two.var[j] == doctest::Approx(2.0 * var[j]).epsilon(1e-15));
  }
}

TEST_CASE("path_context is order independent") {
  EmbeddingSet emb = random_embedding(3, 2, 3, 41);
  const RelationId a{0, false}, b{1, true};
  const DiagGaussian ab = path_context(emb, 1, RelationPath{a, b});
  const DiagGaussian ba = path_context(emb, 1, RelationPath{b, a});
  for (int j = 0; j < 3; ++j) {
    CHECK(ab.mean[j] == doctest::Approx(ba.mean[j]).epsilon(1e-15));
    CHECK(ab.var[j] == doctest::Approx(ba.var[j]).epsilon(1e-15));
  }
}

TEST_CASE("convolution semigroup: variances and means add across path splits") {
  EmbeddingSet emb = random_embedding(4, 3, 5, 43);
  const RelationPath p1{{0, false}, {1, true}};
  const RelationPath p2{{2, false}};
  RelationPath joined = p1;
  joined.steps.insert(joined.steps.end(), p2.steps.begin(), p2.steps.end());
  const DiagGaussian full = path_context(emb, 2, joined);
  const DiagGaussian head = path_context(emb, 2, p1);
  for (int j = 0; j < 5; ++j) {
    const auto var2 = emb.variance(p2.steps[0]);
    const auto d2 = emb.delta(emb.slot(p2.steps[0]));
    CHECK(full.var[j] == doctest::Approx(head.var[j] + var2[j]).epsilon(1e-14));
    CHECK(full.mean[j] == doctest::Approx(head.mean[j] + d2[j]).epsilon(1e-14));
  }
}

TEST_CASE("path_context moments match Monte-Carlo convolution") {
  // X = v_s + sum_t (delta_t + sigma_t Z_t) with independent Z_t ~ N(0, I)
  EmbeddingSet emb = random_embedding(3, 2, 3, 53);
  const RelationPath path{{0, false}, {1, false}};
  const DiagGaussian ctx = path_context(emb, 0, path);

  const int n = 100000;
  Rng rng(99);
  std::vector<double> sum(3, 0.0), sumsq(3, 0.0);
  std::vector<std::vector<double>> sigmas;
  for (const RelationId& step : path.steps) {
    auto var = emb.variance(step);
    for (double& v : var) v = std::sqrt(v);
    sigmas.push_back(std::move(var));
  }
  const auto vs = emb.entity_vec(0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) {
      double x = vs[j];
      for (std::size_t t = 0; t < path.steps.size(); ++t)
        x += emb.delta(emb.slot(path.steps[t]))[j] + sigmas[t][j] * rng.normal();
      sum[j] += x;
      sumsq[j] += x * x;
    }
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = sum[j] / n;
    const double var = sumsq[j] / n - mean * mean;
    const double se_mean = std::sqrt(ctx.var[j] / n);
    const double se_var = ctx.var[j] * std::sqrt(2.0 / (n - 1.0));
    CHECK(std::fabs(mean - ctx.mean[j]) < 3.0 * se_mean);
    CHECK(std::fabs(var - ctx.var[j]) < 3.0 * se_var);
  }
}

TEST_CASE("weighted_context with a one-hot weight reduces to triplet_context") {
  EmbeddingSet emb = random_embedding(4, 2, 3, 59);
  std::vector<double> alpha(emb.num_relation_slots(), 0.0);
  alpha[2] = 1.0;  // slot 2 = inverse of base relation 0
  const DiagGaussian w = weighted_context(emb, 1, alpha);
  const DiagGaussian t = triplet_context(emb, 1, RelationId{0, true});
  for (int j = 0; j < 3; ++j) {
    CHECK(w.mean[j] == doctest::Approx(t.mean[j]).epsilon(1e-15));
    CHECK(w.var[j] == doctest::Approx(t.var[j] + emb.eps()).epsilon(1e-12));
  }
}

TEST_CASE("all-zero weights give a near point mass at the entity") {
  EmbeddingSet emb = random_embedding(4, 2, 3, 61);
  const std::vector<double> alpha(emb.num_relation_slots(), 0.0);
  const DiagGaussian g = weighted_context(emb, 2, alpha);
  const auto ve = emb.entity_vec(2);
  for (int j = 0; j < 3; ++j) {
    CHECK(g.mean[j] == ve[j]);
    CHECK(g.var[j] == emb.eps());
  }
}

TEST_CASE("unit weights on two relations reproduce the two-step path") {
  EmbeddingSet emb = random_embedding(4, 2, 3, 67);
  std::vector<double> alpha(emb.num_relation_slots(), 0.0);
  alpha[0] = 1.0;
  alpha[1] = 1.0;
  const DiagGaussian w = weighted_context(emb, 0, alpha);
  const DiagGaussian p = path_context(emb, 0, RelationPath{{0, false}, {1, false}});
  for (int j = 0; j < 3; ++j) {
    CHECK(w.mean[j] == doctest::Approx(p.mean[j]).epsilon(1e-14));
    CHECK(w.var[j] == doctest::Approx(p.var[j] + emb.eps()).epsilon(1e-12));
  }
}

TEST_CASE("conjunction of one context is the log density") {
  EmbeddingSet emb = random_embedding(3, 1, 3, 71);
  const DiagGaussian g = triplet_context(emb, 0, RelationId{0, false});
  const auto x = emb.entity_vec(1);
  CHECK(conjunction_score(x, {g}) == log_density(x, g));
  CHECK_THROWS_AS(conjunction_score(x, {}), std::invalid_argument);
}

TEST_CASE("duplicated context doubles the score and keeps the argmax") {
  EmbeddingSet emb = random_embedding(6, 1, 3, 73);
  const DiagGaussian g = triplet_context(emb, 0, RelationId{0, false});
  int best_single = -1, best_double = -1;
  double bs = -1e300, bd = -1e300;
  for (int e = 0; e < 6; ++e) {
    const auto x = emb.entity_vec(e);
    const double s1 = conjunction_score(x, {g});
    const double s2 = conjunction_score(x, {g, g});
    CHECK(s2 == doctest::Approx(2.0 * s1).epsilon(1e-14));
    if (s1 > bs) { bs = s1; best_single = e; }
    if (s2 > bd) { bd = s2; best_double = e; }
  }
  CHECK(best_single == best_double);
}

TEST_CASE("conjunction ranking equals the renormalized product-Gaussian ranking") {
  // closed form: precision Lambda = sum Lambda_e, mean = Lambda^-1 sum Lambda_e mu_e
  Rng rng(79);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 3;
    const int n_ctx = 2 + static_cast<int>(rng.index(2));
    std::vector<DiagGaussian> contexts(n_ctx);
    for (auto& g : contexts) {
      for (int j = 0; j < d; ++j) {
        g.mean.push_back(rng.uniform(-2, 2));
        g.var.push_back(std::exp(rng.uniform(-1.5, 1.5)));
      }
    }
    DiagGaussian product;
    product.mean.assign(d, 0.0);
    product.var.assign(d, 0.0);
    for (int j = 0; j < d; ++j) {
      double lambda = 0.0, weighted = 0.0;
      for (const auto& g : contexts) {
        lambda += 1.0 / g.var[j];
        weighted += g.mean[j] / g.var[j];
      }
      product.var[j] = 1.0 / lambda;
      product.mean[j] = weighted / lambda;
    }

    std::vector<std::vector<double>> candidates(40, std::vector<double>(d));
    for (auto& c : candidates)
      for (double& x : c) x = rng.uniform(-3, 3);

    std::vector<int> order_conj(candidates.size()), order_prod(candidates.size());
    std::iota(order_conj.begin(), order_conj.end(), 0);
    order_prod = order_conj;
    std::vector<double> s_conj, s_prod;
    for (const auto& c : candidates) {
      s_conj.push_back(conjunction_score(c, contexts));
      s_prod.push_back(log_density(c, product));
    }
    auto by = [](const std::vector<double>& s) {
      return [&s](int a, int b) { return s[a] != s[b] ? s[a] > s[b] : a < b; };
    };
    std::sort(order_conj.begin(), order_conj.end(), by(s_conj));
    std::sort(order_prod.begin(), order_prod.end(), by(s_prod));
    CHECK(order_conj == order_prod);
  }
}

TEST_CASE("unit variance reduces to the TransE geometry") {
  EmbeddingSet emb = random_embedding(10, 2, 4, 83);
  emb.set_unit_variance(true);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int s = static_cast<int>(rng.index(10));
    const RelationId r{static_cast<int>(rng.index(2)), rng.index(2) == 1};
    const DiagGaussian ctx = triplet_context(emb, s, r);
    for (double v : ctx.var) CHECK(v == 1.0);

    int best_density = -1, best_transe = -1;
    double bd = -1e300, bt = -1e300;
    for (int o = 0; o < 10; ++o) {
      const auto vo = emb.entity_vec(o);
      const double score = log_density(vo, ctx);
      double dist2 = 0.0;
      for (int j = 0; j < 4; ++j) {
        const double diff = vo[j] - ctx.mean[j];
        dist2 += diff * diff;
      }
      // full normalized density = -1/2 ||v_s + delta - v_o||^2 - (d/2) ln(2 pi)
      CHECK(score ==
            doctest::Approx(-0.5 * dist2 - 2.0 * std::log(2.0 * kPi)).epsilon(1e-12));
      if (score > bd) { bd = score; best_density = o; }
      if (-dist2 > bt) { bt = -dist2; best_transe = o; }
    }
    CHECK(best_density == best_transe);
  }
}

TEST_CASE("embedding checkpoint round trip is exact") {
  EmbeddingSet emb = random_embedding(5, 2, 3, 89);
  emb.set_names({"a", "b", "c", "d", "e"}, {"r0", "r1"});
  const auto file = std::filesystem::temp_directory_path() / "tg_emb_roundtrip.json";
  emb.save(file, "transgaussian", "{}");
  const EmbeddingSet loaded = EmbeddingSet::load(file);
  REQUIRE(loaded.dim() == emb.dim());
  REQUIRE(loaded.num_entities() == emb.num_entities());
  CHECK_FALSE(loaded.unit_variance());
  for (int e = 0; e < 5; ++e) {
    const auto a = emb.entity_vec(e);
    const std::string& name = emb.entity_names()[e];
    int le = -1;
    for (int i = 0; i < 5; ++i)
      if (loaded.entity_names()[i] == name) le = i;
    REQUIRE(le >= 0);
    const auto b = loaded.entity_vec(le);
    for (int j = 0; j < 3; ++j) CHECK(a[j] == b[j]);
  }
}
