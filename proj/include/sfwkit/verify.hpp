#pragma once

#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfwkit/bench.hpp"
#include "sfwkit/diagnostics.hpp"

namespace sfwkit {

struct check_result {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace verify_detail {

constexpr double inf_p = std::numeric_limits<double>::infinity();

struct failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void expect(bool ok, const std::string& what) {
  if (!ok) throw failure(what);
}

inline problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t d, loss_kind kind,
                              double density = 0.6) {
  dataset ds = synth_dataset(rng(), n, d, density,
                             kind == loss_kind::logistic ? task_kind::classification : task_kind::regression);
  return problem(std::move(ds.X), loss_model(kind, std::move(ds.y)));
}

inline dvec random_direction(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> gauss;
  dvec r(d);
  for (auto& v : r) v = gauss(rng);
  return r;
}

inline void check_lmo_brute_force(std::mt19937_64& rng) {
  for (constraint_kind kind : {constraint_kind::l1_ball, constraint_kind::simplex, constraint_kind::linf_ball}) {
    const constraint_set set{kind, 1.5};
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t d = 1 + rng() % 10;
      const dvec r = random_direction(rng, d);
      const vertex_step s = lmo(set, r);
      double best = inf_p;
      for (const auto& v : vertices(set, d)) best = std::min(best, v.dot(r));
      expect(std::abs(s.dot(r) - best) <= 1e-12, "lmo misses the vertex minimum");
      expect(membership_residual(set, s.to_dense(d)) <= 1e-15, "lmo output leaves the set");
    }
  }
}

inline void check_diameters(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  for (constraint_kind kind : {constraint_kind::l1_ball, constraint_kind::simplex}) {
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 1 + rng() % 8, d = 1 + rng() % 8;
      std::vector<dvec> rows(n, dvec(d));
      for (auto& row : rows)
        for (auto& v : row) v = gauss(rng);
      const auto X = design_matrix::from_rows(rows);
      const constraint_set set{kind, 2.0};
      const auto verts = vertices(set, d);
      for (double p : {1.0, 2.0, inf_p}) {
        double brute = 0.0;
        for (std::size_t a = 0; a < verts.size(); ++a)
          for (std::size_t b = a + 1; b < verts.size(); ++b) {
            const dvec xa = matvec(X, verts[a].to_dense(d));
            const dvec xb = matvec(X, verts[b].to_dense(d));
            dvec diff(xa.size());
            for (std::size_t i = 0; i < xa.size(); ++i) diff[i] = xa[i] - xb[i];
            brute = std::max(brute, lp_norm(diff, p));
          }
        expect(std::abs(diameter(set, X, p) - brute) <= 1e-12 * (1.0 + brute),
               "diameter closed form disagrees with brute force");
      }
    }
  }
}

inline void check_kappa(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  const constraint_set unit{constraint_kind::l1_ball, 1.0};
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 20, d = 1 + rng() % 10;
    std::vector<dvec> rows(n, dvec(d));
    for (auto& row : rows) {
      for (auto& v : row)
        if (rng() % 2 == 0) v = gauss(rng);
      if (l1_norm(row) == 0.0) row[0] = 1.0;
    }
    const auto X = design_matrix::csr_from_rows(rows);
    const double k = kappa(X);
    expect(k >= 1.0 && k <= static_cast<double>(n), "kappa outside [1, n]");
    expect(diameter(unit, X, 1.0) / diameter(unit, X, inf_p) == k, "D1/Dinf != kappa");
  }
}

inline void check_finite_differences(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (loss_kind kind : {loss_kind::logistic, loss_kind::squared, loss_kind::geman_mcclure}) {
    for (int trial = 0; trial < 100; ++trial) {
      double y = unif(rng);
      if (kind == loss_kind::logistic) y = y >= 0.0 ? 1.0 : -1.0;
      const loss_model loss(kind, {y});
      const double z = unif(rng);
      const double fd = (loss.value(0, z + 1e-6) - loss.value(0, z - 1e-6)) / 2e-6;
      const double scale = std::max(1.0, std::abs(loss.deriv(0, z)));
      expect(std::abs(loss.deriv(0, z) - fd) <= 1e-6 * scale, "derivative mismatch vs finite differences");
    }
  }
}

inline void check_lp_smoothness(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  for (loss_kind kind : {loss_kind::logistic, loss_kind::squared, loss_kind::geman_mcclure}) {
    for (int trial = 0; trial < 100; ++trial) {
      const problem p = random_problem(rng, 2 + rng() % 15, 1 + rng() % 6, kind);
      auto ball_point = [&](std::size_t d) {
        dvec w = random_direction(rng, d);
        const double s = unif(rng) / std::max(l1_norm(w), 1e-300);
        for (auto& v : w) v *= s;
        return w;
      };
      const dvec w = ball_point(p.d()), wb = ball_point(p.d());
      const dvec ga = p.grad_table(w), gb = p.grad_table(wb);
      const dvec ta = matvec(p.X(), w), tb = matvec(p.X(), wb);
      dvec gd(p.n()), td(p.n());
      for (std::size_t i = 0; i < p.n(); ++i) {
        gd[i] = ga[i] - gb[i];
        td[i] = ta[i] - tb[i];
      }
      for (double pn : {1.0, 2.0, inf_p})
        expect(lp_norm(gd, pn) <= p.loss().smoothness() / static_cast<double>(p.n()) * lp_norm(td, pn) + 1e-12,
               "lp smoothness inequality violated");
    }
  }
}

inline void check_sparse_dense_kernels(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng() % 50, d = 1 + rng() % 50;
    std::vector<dvec> rows(n, dvec(d, 0.0));
    for (auto& row : rows)
      for (auto& v : row)
        if (rng() % 3 == 0) v = gauss(rng);
    const auto sparse = design_matrix::csr_from_rows(rows);
    const auto dense = design_matrix::from_rows(rows);
    const dvec w = random_direction(rng, d);
    const std::size_t i = rng() % n;
    expect(std::abs(row_dot(sparse, i, w) - row_dot(dense, i, w)) <= 1e-12, "row_dot paths disagree");
    dvec rs(d, 0.0), rd(d, 0.0);
    const double c = gauss(rng);
    scatter_axpy(rs, c, sparse, i);
    scatter_axpy(rd, c, dense, i);
    for (std::size_t j = 0; j < d; ++j)
      expect(std::abs(rs[j] - rd[j]) <= 1e-12, "scatter_axpy paths disagree");
    const auto [ja, va] = argmax_abs(rs);
    const auto [jb, vb] = argmax_abs(rd);
    expect(ja == jb && std::abs(va - vb) <= 1e-12, "argmax_abs paths disagree");
  }
}

inline void check_tracker(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng() % 20, d = 1 + rng() % 40;
    std::vector<dvec> rows(n, dvec(d, 0.0));
    for (auto& row : rows)
      for (auto& v : row)
        if (rng() % 2 == 0) v = gauss(rng);
    const auto X = design_matrix::csr_from_rows(rows);
    dvec r(d, 0.0);
    argmax_tracker tracker(r);
    for (int step = 0; step < 300; ++step) {
      scatter_axpy(r, gauss(rng), X, rng() % n, &tracker);
      const auto [jt, vt] = tracker.query();
      const auto [jr, vr] = argmax_abs(r);
      expect(jt == jr && vt == vr, "tracker disagrees with a full scan");
    }
  }
}

inline void check_gap_discrepancy(std::mt19937_64& rng) {
  for (int trial = 0; trial < 8; ++trial) {
    const loss_kind kind = trial % 2 == 0 ? loss_kind::logistic : loss_kind::squared;
    const problem p = random_problem(rng, 5 + rng() % 45, 2 + rng() % 18, kind);
    const constraint_set set{constraint_kind::l1_ball, 1.0 + (trial % 3)};
    const double dinf = diameter(set, p.X(), inf_p);
    for (solver_kind sk : {solver_kind::sfw, solver_kind::fw, solver_kind::mokhtari, solver_kind::lufreund}) {
      run_options opt;
      opt.kind = sk;
      opt.batch_size = 1 + trial % 3;
      opt.grad_budget = 30 * p.n();
      opt.seed = trial;
      opt.trace_every = 7;
      opt.exact_diagnostics = true;
      for (const auto& row : run_solver(p, set, opt)) {
        expect(std::abs(*row.exact_gap - row.stochastic_gap) <=
                   dinf * *row.h_error + 1e-9 * (1.0 + std::abs(*row.exact_gap)),
               "gap discrepancy exceeds Dinf * H");
        expect(*row.exact_gap >= -1e-9, "exact gap negative");
      }
    }
  }
}

inline void check_sufficient_decrease(std::mt19937_64& rng) {
  for (int rep = 0; rep < 2; ++rep) {
    const problem p = random_problem(rng, 10, 4, loss_kind::squared);
    const constraint_set set{constraint_kind::l1_ball, 1.0};
    const double L = p.loss().smoothness();
    const double D2 = diameter(set, p.X(), 2.0);
    const double Dinf = diameter(set, p.X(), inf_p);
    // reference optimum from a long deterministic run (1e6 gradient-equivalents)
    run_options ref;
    ref.kind = solver_kind::fw;
    ref.grad_budget = 1000000;
    ref.trace_every = 100000;
    const double f_star = run_solver(p, set, ref).back().objective;

    solver_state st = init_state(p, set, solver_kind::sfw, rep);
    const schedule sch{solver_kind::sfw, 0};
    double eps_prev = p.objective(st.w) - f_star;
    for (std::size_t t = 1; t <= 300; ++t) {
      const dvec w_prev = st.w;
      sample_batch_inplace(st.rng, st.pool, 1, st.batch);
      sfw_step(st, p, set, sch, st.batch);
      const double H = h_error(st.alpha, p.grad_table(w_prev));
      const double eps_t = p.objective(st.w) - f_star;
      expect(eps_t <= sufficient_decrease_bound(eps_prev, step_size(sch, t).gamma, L, D2, Dinf, H, p.n()) + 1e-9,
             "per-step sufficient-decrease inequality violated");
      eps_prev = eps_t;
    }
  }
}

inline void check_expected_table_error(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 19;
    const problem p = random_problem(rng, n, 2 + rng() % 6, loss_kind::squared);
    const constraint_set set{constraint_kind::l1_ball, 1.0};
    solver_state st = init_state(p, set, solver_kind::sfw, trial);
    for (auto& a : st.alpha) a = gauss(rng);
    const double lhs = expected_h_enumeration(st, p);
    const double rhs = (1.0 - 1.0 / static_cast<double>(n)) * h_error(st.alpha, p.grad_table(st.w));
    expect(std::abs(lhs - rhs) <= 1e-12 * (1.0 + rhs), "enumeration equality violated");
  }
}

inline void check_recurrence_domination() {
  for (double rho : {0.5, 0.9, 0.99})
    for (double K : {0.1, 1.0, 10.0})
      for (double u0 : {0.0, 1.0, 100.0}) {
        const recurrence_params params{rho, K, u0};
        const auto u = recurrence_worst_case(params, 10000);
        for (std::size_t t = 2; t <= 10000; ++t)
          expect(u[t] <= recurrence_closed_form_bound(params, t) + 1e-12, "recurrence domination violated");
      }
}

inline void check_taylor_caps() {
  for (std::size_t n = 2; n <= 64; ++n) {
    const double nd = static_cast<double>(n);
    for (std::size_t t : {10ul, 100ul, 1000ul, 10000ul}) {
      const auto [b, c] = taylor_constants(n, t);
      expect(b <= 16.0 * nd * nd * nd, "B_t exceeds 16 n^3");
      expect(c <= nd * nd, "C_t exceeds n^2");
    }
  }
}

inline void check_rate_evaluators() {
  rate_constants c;
  c.L = 1.0;
  c.D1 = c.D2 = c.Dinf = 1.0;
  c.n = 1;
  expect(std::abs(convex_rate_bound(c, 2) - 17.0 / 3.0) <= 1e-12, "convex-rate evaluator off at the hand value");
  c.n = 10;
  double prev = convex_rate_bound(c, 50);
  for (std::size_t t = 51; t <= 500; ++t) {
    const double cur = convex_rate_bound(c, t);
    expect(cur <= prev, "convex-rate bound not decaying with eps0 = H0 = 0");
    prev = cur;
  }
  expect(fw_rate_bound(1.0, 2.0, 8) == 1.0, "fw rate evaluator off at the hand value");
}

inline void check_batch_collapse(std::mt19937_64& rng) {
  const problem p = random_problem(rng, 12, 5, loss_kind::squared);
  const constraint_set set{constraint_kind::l1_ball, 1.0};
  solver_state a = init_state(p, set, solver_kind::sfw, 3);
  solver_state b = init_state(p, set, solver_kind::fw, 3);
  std::vector<std::size_t> all(p.n());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (int step = 0; step < 8; ++step) {
    sfw_step(a, p, set, {solver_kind::sfw, 0}, all);
    fw_step(b, p, set, {solver_kind::fw, 0});
    for (std::size_t j = 0; j < p.d(); ++j)
      expect(std::abs(a.w[j] - b.w[j]) <= 1e-12, "exhaustive batch does not collapse onto fw");
  }
}

inline void check_feasibility_consistency(std::mt19937_64& rng) {
  for (constraint_kind ck : {constraint_kind::l1_ball, constraint_kind::simplex, constraint_kind::linf_ball}) {
    const constraint_set set{ck, 1.5};
    for (solver_kind sk : {solver_kind::sfw, solver_kind::fw, solver_kind::mokhtari, solver_kind::lufreund}) {
      const problem p = random_problem(rng, 12, 5, loss_kind::squared);
      run_options opt;
      opt.kind = sk;
      opt.batch_size = 2;
      opt.grad_budget = 50 * p.n();
      opt.trace_every = 10;
      opt.exact_diagnostics = true;  // the run itself asserts feasibility and r-consistency
      run_solver(p, set, opt);
    }
  }
}

inline void check_determinism(std::mt19937_64& rng) {
  const problem p = random_problem(rng, 20, 6, loss_kind::logistic);
  const constraint_set set{constraint_kind::l1_ball, 2.0};
  run_options opt;
  opt.batch_size = 3;
  opt.grad_budget = 300;
  opt.seed = 99;
  const auto a = run_solver(p, set, opt);
  const auto b = run_solver(p, set, opt);
  expect(a.size() == b.size(), "trace lengths differ across identical runs");
  for (std::size_t k = 0; k < a.size(); ++k)
    expect(a[k].objective == b[k].objective && a[k].stochastic_gap == b[k].stochastic_gap,
           "traces differ across identical runs");
}

inline void check_gap_estimator_collapse(std::mt19937_64& rng) {
  const problem p = random_problem(rng, 15, 6, loss_kind::squared);
  const constraint_set set{constraint_kind::l1_ball, 1.0};
  solver_state st = init_state(p, set, solver_kind::sfw, 1);
  st.alpha = p.grad_table(st.w);
  st.r = transpose_apply(p.X(), st.alpha);
  st.tracker.emplace(st.r);
  expect(std::abs(stochastic_gap(st, set) - exact_gap(p, set, st.w)) <= 1e-12,
         "exact table does not collapse ghat onto g");
}

}  // namespace verify_detail

/// Runs the numerical property battery behind the `verify` CLI subcommand.
/// Deterministic for a fixed seed.
inline std::vector<check_result> run_verification(std::uint64_t seed = 20200213) {
  namespace vd = verify_detail;
  std::mt19937_64 rng(seed);
  const std::vector<std::pair<std::string, std::function<void()>>> checks = {
      {"lmo_matches_brute_force", [&] { vd::check_lmo_brute_force(rng); }},
      {"diameter_closed_forms", [&] { vd::check_diameters(rng); }},
      {"kappa_bounds_and_ratio", [&] { vd::check_kappa(rng); }},
      {"loss_derivatives_vs_finite_differences", [&] { vd::check_finite_differences(rng); }},
      {"lp_smoothness", [&] { vd::check_lp_smoothness(rng); }},
      {"sparse_dense_kernels", [&] { vd::check_sparse_dense_kernels(rng); }},
      {"argmax_tracker", [&] { vd::check_tracker(rng); }},
      {"gap_discrepancy_pointwise", [&] { vd::check_gap_discrepancy(rng); }},
      {"sufficient_decrease_per_step", [&] { vd::check_sufficient_decrease(rng); }},
      {"table_error_expectation_enumeration", [&] { vd::check_expected_table_error(rng); }},
      {"recurrence_bound_domination", [] { vd::check_recurrence_domination(); }},
      {"taylor_constant_caps", [] { vd::check_taylor_caps(); }},
      {"rate_bound_evaluators", [] { vd::check_rate_evaluators(); }},
      {"exhaustive_batch_collapse", [&] { vd::check_batch_collapse(rng); }},
      {"feasibility_and_consistency", [&] { vd::check_feasibility_consistency(rng); }},
      {"determinism", [&] { vd::check_determinism(rng); }},
      {"gap_estimator_collapse", [&] { vd::check_gap_estimator_collapse(rng); }},
  };
  std::vector<check_result> results;
  for (const auto& [name, fn] : checks) {
    check_result res{name, true, ""};
    try {
      fn();
    } catch (const std::exception& e) {
      res.pass = false;
      res.detail = e.what();
    }
    results.push_back(std::move(res));
  }
  return results;
}

inline nlohmann::json verification_report(const std::vector<check_result>& results) {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    checks.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    all = all && r.pass;
  }
  return {{"all_pass", all}, {"checks", checks}};
}

}  // namespace sfwkit
