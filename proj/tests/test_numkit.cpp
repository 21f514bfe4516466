#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sfwkit/numkit.hpp"

using namespace sfwkit;

namespace {

// dense reference kernels, kept independent of the CSR code paths
double dense_row_dot(const std::vector<dvec>& rows, std::size_t i, const dvec& w) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += rows[i][j] * w[j];
  return s;
}

std::pair<std::size_t, double> scan_argmax_abs(const dvec& r) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < r.size(); ++j)
    if (std::abs(r[j]) > std::abs(r[best])) best = j;
  return {best, r[best]};
}

std::vector<dvec> random_rows(std::mt19937_64& rng, std::size_t n, std::size_t d, double density) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  std::vector<dvec> rows(n, dvec(d, 0.0));
  for (auto& row : rows)
    for (auto& v : row)
      if (unif(rng) < density) v = gauss(rng);
  return rows;
}

}  // namespace

TEST_CASE("row_dot on examples", "[numkit]") {
  const auto X = design_matrix::from_rows({{1, 0}, {0, 2}});
  CHECK(row_dot(X, 1, {3, 4}) == 8.0);

  const auto S = design_matrix::csr_from_rows({{0.5, 0, -2}});
  REQUIRE(S.nnz() == 2);
  CHECK(row_dot(S, 0, {2, 9, 1}) == -1.0);
  CHECK(row_dot(S, 0, {0, 0, 0}) == 0.0);

  CHECK_THROWS_AS(row_dot(X, 2, {1, 1}), std::out_of_range);
  CHECK_THROWS_AS(row_dot(X, 0, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("scatter_axpy on examples", "[numkit]") {
  const auto X = design_matrix::from_rows({{1, 0}});
  dvec r{0, 0};
  scatter_axpy(r, 2.0, X, 0);
  CHECK(r == dvec{2, 0});

  const auto S = design_matrix::csr_from_rows({{0.5, 0, -2}});
  dvec q{1, -1, 0};
  scatter_axpy(q, -1.0, S, 0);
  CHECK(q == dvec{0.5, -1, 2});

  scatter_axpy(q, 0.0, S, 0);
  CHECK(q == dvec{0.5, -1, 2});
}

TEST_CASE("argmax_abs on examples", "[numkit]") {
  CHECK(argmax_abs(dvec{1, -3, 2}) == std::pair<std::size_t, double>{1, -3.0});
  CHECK(argmax_abs(dvec{0, 0}) == std::pair<std::size_t, double>{0, 0.0});
  CHECK(argmax_abs(dvec{5}) == std::pair<std::size_t, double>{0, 5.0});
  CHECK_THROWS_AS(argmax_abs(dvec{}), std::invalid_argument);
}

TEST_CASE("sparse kernels agree with the dense path", "[numkit]") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const std::size_t d = 1 + rng() % 200;
    const auto rows = random_rows(rng, n, d, 0.3);
    const auto sparse = design_matrix::csr_from_rows(rows);
    const auto dense = design_matrix::from_rows(rows);

    dvec w(d);
    for (auto& v : w) v = gauss(rng);
    const std::size_t i = rng() % n;
    CHECK_THAT(row_dot(sparse, i, w), Catch::Matchers::WithinAbs(dense_row_dot(rows, i, w), 1e-12));
    CHECK_THAT(row_dot(dense, i, w), Catch::Matchers::WithinAbs(dense_row_dot(rows, i, w), 1e-12));

    dvec r_sparse(d, 0.0), r_dense(d, 0.0);
    const double c = gauss(rng);
    scatter_axpy(r_sparse, c, sparse, i);
    scatter_axpy(r_dense, c, dense, i);
    for (std::size_t j = 0; j < d; ++j) CHECK_THAT(r_sparse[j], Catch::Matchers::WithinAbs(r_dense[j], 1e-12));

    const auto [js, vs] = argmax_abs(r_sparse);
    const auto [jref, vref] = scan_argmax_abs(r_dense);
    CHECK(js == jref);
    CHECK_THAT(vs, Catch::Matchers::WithinAbs(vref, 1e-12));
  }
}

TEST_CASE("tracker matches a fresh full scan after random updates", "[numkit]") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    const std::size_t d = 1 + rng() % 60;
    const auto rows = random_rows(rng, n, d, 0.4);
    const auto X = design_matrix::csr_from_rows(rows);

    dvec r(d, 0.0);
    argmax_tracker tracker(r);
    for (int step = 0; step < 200; ++step) {
      scatter_axpy(r, gauss(rng), X, rng() % n, &tracker);
      if (step % 3 == 0) {
        const auto [jt, vt] = tracker.query();
        const auto [jref, vref] = scan_argmax_abs(r);
        REQUIRE(jt == jref);
        REQUIRE(vt == vref);
      }
    }
  }
}

TEST_CASE("tracker resolves exact ties to the smallest index", "[numkit]") {
  dvec r{0.0, 2.0, -2.0};
  argmax_tracker tracker(r);
  CHECK(tracker.query() == std::pair<std::size_t, double>{1, 2.0});
  r[0] = -2.0;
  tracker.update(0, -2.0);
  CHECK(tracker.query() == std::pair<std::size_t, double>{0, -2.0});
}

TEST_CASE("design_matrix validates its invariants", "[numkit]") {
  CHECK_THROWS_AS(design_matrix::csr(1, 3, {0, 2}, {0, 0}, {1.0, 2.0}), std::invalid_argument);  // dup col
  CHECK_THROWS_AS(design_matrix::csr(1, 3, {0, 2}, {2, 1}, {1.0, 2.0}), std::invalid_argument);  // descending
  CHECK_THROWS_AS(design_matrix::csr(1, 3, {0, 1}, {3}, {1.0}), std::invalid_argument);          // col >= d
  CHECK_THROWS_AS(design_matrix::csr(1, 3, {0, 1}, {0}, {0.0}), std::invalid_argument);          // explicit zero
  CHECK_THROWS_AS(design_matrix::csr(2, 3, {0, 1}, {0}, {1.0}), std::invalid_argument);          // offsets size
  CHECK_THROWS_AS(design_matrix::dense(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);           // size

  const auto S = design_matrix::csr_from_rows({{0, 1.5, 0}, {2.0, 0, -1.0}});
  CHECK(S.nnz() == 3);
  CHECK(S(0, 1) == 1.5);
  CHECK(S(0, 0) == 0.0);
  const auto D = S.densified();
  CHECK_FALSE(D.is_sparse());
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(D(i, j) == S(i, j));
}

TEST_CASE("matvec and transpose_apply are consistent", "[numkit]") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  const auto rows = random_rows(rng, 7, 5, 0.6);
  const auto X = design_matrix::csr_from_rows(rows);
  dvec w(5), alpha(7);
  for (auto& v : w) v = gauss(rng);
  for (auto& v : alpha) v = gauss(rng);
  // <X w, alpha> == <w, X^T alpha>
  const double lhs = dot(matvec(X, w), alpha);
  const double rhs = dot(w, transpose_apply(X, alpha));
  CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-12));
}
