#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sfwkit/bench.hpp"
#include "sfwkit/diagnostics.hpp"

using namespace sfwkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const double inf = std::numeric_limits<double>::infinity();

problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t d, loss_kind kind) {
  dataset ds = synth_dataset(rng(), n, d, 0.6,
                             kind == loss_kind::logistic ? task_kind::classification : task_kind::regression);
  return problem(std::move(ds.X), loss_model(kind, std::move(ds.y)));
}
}  // namespace

TEST_CASE("h_error on examples", "[diagnostics]") {
  CHECK(h_error({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  CHECK(h_error({0.0, 0.0}, {0.5, -0.5}) == 1.0);
  CHECK(h_error({1.0}, {-1.0}) == 2.0);
  CHECK_THROWS_AS(h_error({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("exact_gap on examples", "[diagnostics]") {
  // zero gradient everywhere: stationary
  const problem pz(design_matrix::from_rows({{1, 0}, {0, 1}}), loss_model(loss_kind::squared, {0.0, 0.0}));
  const constraint_set unit{constraint_kind::l1_ball, 1.0};
  CHECK_THAT(exact_gap(pz, unit, {0.0, 0.0}), WithinAbs(0.0, 1e-15));

  // grad table at w = 0 is (1, -2), so g = lambda * ||r||_inf = 10
  const problem p2(design_matrix::from_rows({{1, 0}, {0, 1}}), loss_model(loss_kind::squared, {-2.0, 4.0}));
  const constraint_set l5{constraint_kind::l1_ball, 5.0};
  const double g = exact_gap(p2, l5, {0.0, 0.0});
  CHECK_THAT(g, WithinAbs(10.0, 1e-12));
  // brute-force oracle over the vertex list
  const dvec r_true = transpose_apply(p2.X(), p2.grad_table({0.0, 0.0}));
  double best = -inf;
  for (const auto& s : vertices(l5, 2)) best = std::max(best, -s.dot(r_true));
  CHECK_THAT(g, WithinAbs(best, 1e-12));

  CHECK_THROWS_AS(exact_gap(p2, unit, {3.0, 0.0}), std::invalid_argument);
}

TEST_CASE("exact_gap vanishes at an interior optimum", "[diagnostics]") {
  const problem p(design_matrix::from_rows({{1, 0}, {0, 1}}), loss_model(loss_kind::squared, {0.0, 0.0}));
  const constraint_set set{constraint_kind::l1_ball, 1.0};
  // the unconstrained optimum w = 0 lies inside the ball
  CHECK(exact_gap(p, set, {0.0, 0.0}) <= 1e-9);
  // and a deterministic run drives the gap toward it
  run_options opt;
  opt.kind = solver_kind::fw;
  opt.grad_budget = 4000 * p.n();
  opt.trace_every = 1000;
  opt.exact_diagnostics = true;
  const auto trace = run_solver(p, set, opt);
  CHECK(*trace.back().exact_gap < *trace[1].exact_gap);
  CHECK(*trace.back().exact_gap >= -1e-9);
}

TEST_CASE("stochastic_gap on examples", "[diagnostics]") {
  const constraint_set l2{constraint_kind::l1_ball, 2.0};
  const problem p(design_matrix::from_rows({{1.0}}), loss_model(loss_kind::squared, {0.0}));
  solver_state st = init_state(p, l2, solver_kind::sfw, 0, dvec{0.0});

  // r = 0 gives a zero gap
  CHECK(stochastic_gap(st, l2) == 0.0);

  // w = 0, r = (3): ghat = lambda * ||r||_inf = 6
  st.alpha = {3.0};
  st.r = {3.0};
  st.tracker.emplace(st.r);
  CHECK_THAT(stochastic_gap(st, l2), WithinAbs(6.0, 1e-15));

  // alpha equal to the true gradient collapses ghat onto g
  std::mt19937_64 rng(9);
  const problem q = random_problem(rng, 8, 4, loss_kind::squared);
  const constraint_set set{constraint_kind::l1_ball, 1.0};
  solver_state sq = init_state(q, set, solver_kind::sfw, 0);
  sq.alpha = q.grad_table(sq.w);
  sq.r = transpose_apply(q.X(), sq.alpha);
  sq.tracker.emplace(sq.r);
  CHECK_THAT(stochastic_gap(sq, set), WithinAbs(exact_gap(q, set, sq.w), 1e-12));
}

TEST_CASE("gap_discrepancy_bound", "[diagnostics]") {
  CHECK(gap_discrepancy_bound(5.0, 0.0) == 0.0);
  CHECK(gap_discrepancy_bound(2.0, 1.5) == 3.0);
  CHECK_THROWS_AS(gap_discrepancy_bound(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("gap discrepancy bound holds pointwise on live traces", "[diagnostics]") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    const loss_kind kind = trial % 2 == 0 ? loss_kind::logistic : loss_kind::squared;
    const problem p = random_problem(rng, 10 + rng() % 40, 3 + rng() % 10, kind);
    const constraint_set set{constraint_kind::l1_ball, 1.0 + (trial % 3)};
    const double dinf = diameter(set, p.X(), inf);
    for (solver_kind sk :
         {solver_kind::sfw, solver_kind::fw, solver_kind::mokhtari, solver_kind::lufreund}) {
      run_options opt;
      opt.kind = sk;
      opt.batch_size = 2;
      opt.grad_budget = 40 * p.n();
      opt.seed = trial;
      opt.trace_every = 5;
      opt.exact_diagnostics = true;
      const auto trace = run_solver(p, set, opt);
      for (const auto& row : trace) {
        REQUIRE(row.exact_gap.has_value());
        REQUIRE(row.h_error.has_value());
        const double slack = gap_discrepancy_bound(dinf, *row.h_error) +
                             1e-9 * (1.0 + std::abs(*row.exact_gap));
        REQUIRE(std::abs(*row.exact_gap - row.stochastic_gap) <= slack);
        REQUIRE(*row.exact_gap >= -1e-9);
      }
    }
  }
}

TEST_CASE("recurrence worst case on examples", "[diagnostics]") {
  const auto u = recurrence_worst_case({0.5, 1.0, 0.0}, 4);
  REQUIRE(u.size() == 5);
  CHECK(u[0] == 0.0);
  CHECK_THAT(u[1], WithinAbs(0.25, 1e-15));
  CHECK_THAT(u[2], WithinAbs(0.5 * (0.25 + 1.0 / 3.0), 1e-15));

  // K -> 0 leaves pure geometric decay
  const auto v = recurrence_worst_case({0.5, 1e-300, 2.0}, 10);
  for (std::size_t t = 0; t <= 10; ++t) CHECK_THAT(v[t], WithinAbs(2.0 * std::pow(0.5, double(t)), 1e-12));

  for (double x : recurrence_worst_case({0.9, 3.0, 0.0}, 50)) CHECK(x >= 0.0);

  CHECK_THROWS_AS(recurrence_worst_case({0.5, 1.0, 0.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(recurrence_params(1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(recurrence_params(0.5, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(recurrence_params(0.5, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("recurrence_closed_form_bound on examples", "[diagnostics]") {
  CHECK_THAT(recurrence_closed_form_bound({0.5, 1.0, 0.0}, 2), WithinAbs(0.5 + 0.5 * std::log(2.0), 1e-15));
  CHECK_THAT(recurrence_closed_form_bound({0.5, 1e-300, 0.0}, 5), WithinAbs(0.0, 1e-290));
  CHECK_THROWS_AS(recurrence_closed_form_bound({0.5, 1.0, 0.0}, 1), std::invalid_argument);
}

TEST_CASE("recurrence_closed_form_bound reproduces the specialized H_t bound", "[diagnostics]") {
  // rho = 1 - 1/n and K = 2 L D1 / n turn the generic bound into the H_t rate
  for (const auto& [n, L, D1, H0] : std::vector<std::tuple<std::size_t, double, double, double>>{
           {2, 1.0, 1.0, 0.0}, {5, 0.25, 3.0, 1.5}, {50, 2.0, 10.0, 7.0}}) {
    const double nd = static_cast<double>(n);
    const double rho = 1.0 - 1.0 / nd;
    const recurrence_params params{rho, 2.0 * L * D1 / nd, H0};
    for (std::size_t t : {2ul, 7ul, 40ul, 500ul}) {
      const double td = static_cast<double>(t);
      const double specialized = 2.0 * L * D1 / nd *
                               (2.0 * (nd - 1.0) / (td + 2.0) + std::pow(rho, td / 2.0) * std::log(td)) +
                           std::pow(rho, td) * H0;
      CHECK_THAT(recurrence_closed_form_bound(params, t), WithinRel(specialized, 1e-12));
    }
  }
}

TEST_CASE("extremal recurrence stays under the closed-form bound", "[diagnostics]") {
  for (double rho : {0.5, 0.9, 0.99}) {
    for (double K : {0.1, 1.0, 10.0}) {
      for (double u0 : {0.0, 1.0, 100.0}) {
        const recurrence_params params{rho, K, u0};
        const auto u = recurrence_worst_case(params, 2000);
        for (std::size_t t = 2; t <= 2000; ++t) REQUIRE(u[t] <= recurrence_closed_form_bound(params, t) + 1e-12);
      }
    }
  }
}

TEST_CASE("taylor constants on examples", "[diagnostics]") {
  CHECK(taylor_constants(2, 1).first == 0.0);  // log 1 = 0

  const auto [b2, c2] = taylor_constants(2, 2);
  CHECK_THAT(c2, WithinAbs(1.75, 1e-15));

  // n = 2: the full series sums to 1/(1-rho)^2 - 1 = 3 <= n^2 = 4
  const auto [bl, cl] = taylor_constants(2, 2000);
  CHECK_THAT(cl, WithinAbs(3.0, 1e-9));
  CHECK(cl <= 4.0);

  CHECK_THROWS_AS(taylor_constants(1, 10), std::invalid_argument);
  CHECK_THROWS_AS(taylor_constants(2, 0), std::invalid_argument);
}

TEST_CASE("taylor constants respect the cubic and quadratic caps", "[diagnostics]") {
  for (std::size_t n : {2ul, 3ul, 8ul, 16ul, 64ul}) {
    const double nd = static_cast<double>(n);
    for (std::size_t t : {10ul, 100ul, 1000ul}) {
      const auto [b, c] = taylor_constants(n, t);
      CHECK(b <= 16.0 * nd * nd * nd);
      CHECK(c <= nd * nd);
    }
  }
}

TEST_CASE("convex_rate_bound on examples", "[diagnostics]") {
  rate_constants c;
  c.L = 1.0;
  c.D1 = c.D2 = c.Dinf = 1.0;
  c.n = 1;
  CHECK_THAT(convex_rate_bound(c, 2), WithinAbs(17.0 / 3.0, 1e-12));

  rate_constants zero;
  zero.n = 3;
  CHECK(convex_rate_bound(zero, 5) == 0.0);

  // with eps0 = H0 = 0 the bound decays monotonically in the tail
  c.n = 10;
  double prev = convex_rate_bound(c, 100);
  for (std::size_t t = 101; t <= 300; ++t) {
    const double cur = convex_rate_bound(c, t);
    CHECK(cur <= prev);
    prev = cur;
  }
  CHECK(convex_rate_bound(c, 100000000) < 1e-5);

  CHECK_THROWS_AS(convex_rate_bound(c, 1), std::invalid_argument);
}

TEST_CASE("fw_rate_bound on examples", "[diagnostics]") {
  CHECK(fw_rate_bound(1.0, 2.0, 8) == 1.0);
  CHECK(fw_rate_bound(1.0, 2.0, 100000000) < 1e-6);
  CHECK(fw_rate_bound(1.0, 0.0, 3) == 0.0);
  CHECK_THROWS_AS(fw_rate_bound(1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("expected H enumeration on examples", "[diagnostics]") {
  // grad table at w = (1,-1) is (0.5,-0.5); alpha = 0
  const problem p(design_matrix::from_rows({{1, 0}, {0, 1}}), loss_model(loss_kind::squared, {0.0, 0.0}));
  const constraint_set set{constraint_kind::l1_ball, 2.0};
  solver_state st = init_state(p, set, solver_kind::sfw, 0, dvec{1.0, -1.0});
  CHECK_THAT(expected_h_enumeration(st, p), WithinAbs(0.5, 1e-15));

  // exact table: zero error regardless of the sample
  st.alpha = p.grad_table(st.w);
  CHECK(expected_h_enumeration(st, p) == 0.0);

  // n = 1: the single coordinate is always refreshed
  const problem p1(design_matrix::from_rows({{1.0}}), loss_model(loss_kind::squared, {5.0}));
  const constraint_set unit{constraint_kind::l1_ball, 1.0};
  solver_state s1 = init_state(p1, unit, solver_kind::sfw, 0);
  s1.alpha = {123.0};
  CHECK(expected_h_enumeration(s1, p1) == 0.0);
}

TEST_CASE("enumeration equals the closed-form contraction", "[diagnostics]") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 19;
    const problem p = random_problem(rng, n, 2 + rng() % 6, loss_kind::squared);
    const constraint_set set{constraint_kind::l1_ball, 1.0};
    solver_state st = init_state(p, set, solver_kind::sfw, trial);
    for (auto& a : st.alpha) a = gauss(rng);
    const double expected = (1.0 - 1.0 / static_cast<double>(n)) * h_error(st.alpha, p.grad_table(st.w));
    CHECK_THAT(expected_h_enumeration(st, p), WithinAbs(expected, 1e-12));
  }
}
