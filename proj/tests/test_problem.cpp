#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sfwkit/problem.hpp"

using namespace sfwkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// central finite difference of the loss value, the derivative oracle
double fd_deriv(const loss_model& loss, std::size_t i, double z, double h = 1e-6) {
  return (loss.value(i, z + h) - loss.value(i, z - h)) / (2.0 * h);
}

dvec random_l1_ball_point(std::mt19937_64& rng, std::size_t d, double radius) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  dvec w(d);
  double norm = 0.0;
  for (auto& v : w) {
    v = gauss(rng);
    norm += std::abs(v);
  }
  const double scale = radius * unif(rng) / norm;
  for (auto& v : w) v *= scale;
  return w;
}

}  // namespace

TEST_CASE("loss values on examples", "[problem]") {
  const loss_model logit(loss_kind::logistic, {1.0});
  CHECK_THAT(logit.value(0, 0.0), WithinAbs(0.6931471805599453, 1e-15));

  const loss_model sq(loss_kind::squared, {3.0});
  CHECK(sq.value(0, 3.0) == 0.0);

  const loss_model gm(loss_kind::geman_mcclure, {0.0});
  CHECK_THAT(gm.value(0, 1.0), WithinAbs(0.5, 1e-15));
}

TEST_CASE("loss derivatives on examples", "[problem]") {
  const loss_model logit(loss_kind::logistic, {1.0});
  CHECK_THAT(logit.deriv(0, 0.0), WithinAbs(-0.5, 1e-15));
  CHECK_THAT(logit.deriv(0, 0.0), WithinAbs(fd_deriv(logit, 0, 0.0), 1e-9));

  const loss_model sq(loss_kind::squared, {2.0});
  CHECK(sq.deriv(0, 5.0) == 3.0);

  const loss_model gm(loss_kind::geman_mcclure, {0.0});
  CHECK(gm.deriv(0, 0.0) == 0.0);
}

TEST_CASE("derivatives match finite differences", "[problem]") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (loss_kind kind : {loss_kind::logistic, loss_kind::squared, loss_kind::geman_mcclure}) {
    for (int trial = 0; trial < 100; ++trial) {
      double y = unif(rng);
      if (kind == loss_kind::logistic) y = y >= 0.0 ? 1.0 : -1.0;
      const double z = unif(rng);
      const loss_model loss(kind, {y});
      const double exact = loss.deriv(0, z);
      const double approx = fd_deriv(loss, 0, z);
      const double scale = std::max(1.0, std::abs(exact));
      CHECK_THAT(exact, WithinAbs(approx, 1e-6 * scale));
    }
  }
}

TEST_CASE("logistic loss is overflow-safe", "[problem]") {
  for (double y : {1.0, -1.0}) {
    const loss_model loss(loss_kind::logistic, {y});
    for (double z : {1e4, -1e4}) {
      CHECK(std::isfinite(loss.value(0, z)));
      CHECK(std::isfinite(loss.deriv(0, z)));
    }
  }
}

TEST_CASE("logistic targets must be labels", "[problem]") {
  CHECK_THROWS_AS(loss_model(loss_kind::logistic, {0.5}), std::invalid_argument);
  CHECK_NOTHROW(loss_model(loss_kind::squared, {0.5}));
}

TEST_CASE("objective on examples", "[problem]") {
  const problem p1(design_matrix::from_rows({{1}}), loss_model(loss_kind::squared, {0.0}));
  CHECK(p1.objective({0.0}) == 0.0);

  const problem p2(design_matrix::from_rows({{1}}), loss_model(loss_kind::squared, {2.0}));
  CHECK_THAT(p2.objective({0.0}), WithinAbs(2.0, 1e-15));

  // any X with X w = 0 contributes log 2 per sample
  const problem p3(design_matrix::from_rows({{1, 2}, {3, 4}, {-1, 0}, {0, 5}}),
                   loss_model(loss_kind::logistic, {1.0, -1.0, 1.0, -1.0}));
  CHECK_THAT(p3.objective({0.0, 0.0}), WithinAbs(std::log(2.0), 1e-15));
}

TEST_CASE("grad_table on examples", "[problem]") {
  const problem p(design_matrix::from_rows({{1, 0}, {0, 1}}), loss_model(loss_kind::squared, {0.0, 0.0}));
  const dvec g = p.grad_table({2.0, -2.0});
  REQUIRE(g.size() == 2);
  CHECK_THAT(g[0], WithinAbs(1.0, 1e-15));
  CHECK_THAT(g[1], WithinAbs(-1.0, 1e-15));

  // zero residuals give the zero table
  const problem pz(design_matrix::from_rows({{1, 0}, {0, 1}}), loss_model(loss_kind::squared, {2.0, -2.0}));
  CHECK(pz.grad_table({2.0, -2.0}) == dvec{0.0, 0.0});

  const problem pl(design_matrix::from_rows({{1}}), loss_model(loss_kind::logistic, {1.0}));
  CHECK_THAT(pl.grad_table({0.0})[0], WithinAbs(-0.5, 1e-15));
}

TEST_CASE("smoothness constants", "[problem]") {
  CHECK(smoothness_constant(loss_kind::squared) == 1.0);
  CHECK(smoothness_constant(loss_kind::logistic) == 0.25);
  CHECK(smoothness_constant(loss_kind::geman_mcclure) == 2.0);

  // logistic: sup sigma(z)(1 - sigma(z)) over a fine grid
  double sup_logit = 0.0;
  for (double z = -20.0; z <= 20.0; z += 1e-3) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    sup_logit = std::max(sup_logit, s * (1.0 - s));
  }
  CHECK_THAT(sup_logit, WithinAbs(0.25, 1e-6));

  // geman-mcclure: sup |g''(u)| with g''(u) = (2 - 6u^2)/(1+u^2)^3
  double sup_gm = 0.0;
  for (double u = -50.0; u <= 50.0; u += 1e-4) {
    const double q = 1.0 + u * u;
    sup_gm = std::max(sup_gm, std::abs(2.0 - 6.0 * u * u) / (q * q * q));
  }
  CHECK(sup_gm <= 2.0 + 1e-12);
  CHECK_THAT(sup_gm, WithinAbs(2.0, 1e-6));
}

TEST_CASE("lp smoothness of the gradient table", "[problem]") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> gauss;
  const double inf = std::numeric_limits<double>::infinity();
  for (loss_kind kind : {loss_kind::logistic, loss_kind::squared, loss_kind::geman_mcclure}) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng() % 20;
      const std::size_t d = 1 + rng() % 8;
      std::vector<dvec> rows(n, dvec(d));
      dvec y(n);
      for (auto& row : rows)
        for (auto& v : row) v = gauss(rng);
      for (auto& v : y) v = kind == loss_kind::logistic ? (gauss(rng) >= 0.0 ? 1.0 : -1.0) : gauss(rng);
      const problem p(design_matrix::from_rows(rows), loss_model(kind, y));
      const double L = p.loss().smoothness();

      const dvec w = random_l1_ball_point(rng, d, 1.0);
      const dvec wb = random_l1_ball_point(rng, d, 1.0);
      const dvec ga = p.grad_table(w);
      const dvec gb = p.grad_table(wb);
      const dvec ta = matvec(p.X(), w);
      const dvec tb = matvec(p.X(), wb);
      dvec gdiff(n), tdiff(n);
      for (std::size_t i = 0; i < n; ++i) {
        gdiff[i] = ga[i] - gb[i];
        tdiff[i] = ta[i] - tb[i];
      }
      for (double pnorm : {1.0, 2.0, inf}) {
        const double lhs = lp_norm(gdiff, pnorm);
        const double rhs = L / static_cast<double>(n) * lp_norm(tdiff, pnorm);
        CHECK(lhs <= rhs + 1e-12);
      }
    }
  }
}

TEST_CASE("problem validates target length", "[problem]") {
  CHECK_THROWS_AS(problem(design_matrix::from_rows({{1.0}}), loss_model(loss_kind::squared, {1.0, 2.0})),
                  std::invalid_argument);
}
