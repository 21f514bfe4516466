#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfwkit/constraints.hpp"
#include "sfwkit/problem.hpp"

namespace sfwkit {

enum class solver_kind { sfw, fw, mokhtari, lufreund };

inline const char* to_string(solver_kind k) {
  switch (k) {
    case solver_kind::sfw: return "sfw";
    case solver_kind::fw: return "fw";
    case solver_kind::mokhtari: return "mokhtari";
    case solver_kind::lufreund: return "lufreund";
  }
  return "?";
}

inline solver_kind parse_solver_kind(const std::string& s) {
  if (s == "sfw") return solver_kind::sfw;
  if (s == "fw") return solver_kind::fw;
  if (s == "mokhtari") return solver_kind::mokhtari;
  if (s == "lufreund") return solver_kind::lufreund;
  throw std::invalid_argument("unknown solver kind: " + s);
}

/// Step-size schedule family. n_b is the batch count floor(n/b), used only
/// by the lufreund schedule.
struct schedule {
  solver_kind kind = solver_kind::sfw;
  std::size_t n_b = 0;
};

struct step_sizes {
  double gamma = 0.0;
  std::optional<double> aux;  // rho for mokhtari, delta for lufreund
};

/// Closed-form step sizes at iteration t >= 1:
///   sfw, fw:   gamma = 2/(t+2)
///   mokhtari:  gamma = 1/(t+1),                      rho   = 1/(t+1)^(2/3)
///   lufreund:  gamma = 2(2nb+t)/((t+1)(4nb+t+1)),    delta = 2nb/(2nb+t+1)
inline step_sizes step_size(const schedule& s, std::size_t t) {
  if (t == 0) throw std::invalid_argument("step_size: schedules start at t = 1");
  const double td = static_cast<double>(t);
  switch (s.kind) {
    case solver_kind::sfw:
    case solver_kind::fw:
      return {2.0 / (td + 2.0), std::nullopt};
    case solver_kind::mokhtari:
      return {1.0 / (td + 1.0), 1.0 / std::pow(td + 1.0, 2.0 / 3.0)};
    case solver_kind::lufreund: {
      if (s.n_b == 0) throw std::invalid_argument("step_size: lufreund schedule needs n_b >= 1");
      const double nb = static_cast<double>(s.n_b);
      const double gamma = 2.0 * (2.0 * nb + td) / ((td + 1.0) * (4.0 * nb + td + 1.0));
      const double delta = 2.0 * nb / (2.0 * nb + td + 1.0);
      return {gamma, delta};
    }
  }
  throw std::logic_error("step_size: unreachable");
}

using rng_t = std::mt19937_64;

/// b distinct indices, uniform over size-b subsets of {0..n-1}. The pool is a
/// permutation of {0..n-1}; a partial Fisher-Yates pass leaves it reusable.
inline void sample_batch_inplace(rng_t& rng, std::vector<std::size_t>& pool, std::size_t b,
                                 std::vector<std::size_t>& batch) {
  const std::size_t n = pool.size();
  if (b < 1 || b > n) throw std::invalid_argument("sample_batch: need 1 <= b <= n");
  batch.clear();
  for (std::size_t k = 0; k < b; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(pool[k], pool[pick(rng)]);
    batch.push_back(pool[k]);
  }
}

inline std::vector<std::size_t> sample_batch(rng_t& rng, std::size_t n, std::size_t b) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> batch;
  sample_batch_inplace(rng, pool, b, batch);
  return batch;
}

/// Mutable per-run state shared by all four methods. w stays feasible, r
/// mirrors X^T alpha, and the tracker (l1 constraints only) mirrors r.
struct solver_state {
  dvec w;
  dvec alpha;
  dvec r;
  std::optional<argmax_tracker> tracker;
  std::size_t t = 0;
  std::size_t grad_calls = 0;
  rng_t rng;
  dvec sigma;                      // lufreund only: averaged arguments, sigma_0 = X w_0
  std::vector<std::size_t> pool;   // sampling pool, a permutation of {0..n-1}
  std::vector<std::size_t> batch;  // scratch for the current batch
};

inline solver_state init_state(const problem& p, const constraint_set& set, solver_kind kind,
                               std::uint64_t seed, std::optional<dvec> w0 = std::nullopt) {
  solver_state st;
  if (w0) {
    if (w0->size() != p.d()) throw std::invalid_argument("init_state: w0 length != d");
    if (!contains(set, *w0)) throw std::invalid_argument("init_state: w0 is infeasible");
    st.w = std::move(*w0);
  } else {
    // deterministic feasible extreme point: the LMO output for r = 0
    st.w = lmo(set, dvec(p.d(), 0.0)).to_dense(p.d());
  }
  st.alpha.assign(p.n(), 0.0);
  st.r.assign(p.d(), 0.0);
  if (set.kind == constraint_kind::l1_ball && kind != solver_kind::fw) st.tracker.emplace(st.r);
  st.rng.seed(seed);
  if (kind == solver_kind::lufreund) st.sigma = matvec(p.X(), st.w);
  st.pool.resize(p.n());
  std::iota(st.pool.begin(), st.pool.end(), std::size_t{0});
  return st;
}

namespace detail {

inline void require_feasible(const solver_state& st, const constraint_set& set) {
  if (membership_residual(set, st.w) > 1e-9)
    throw std::runtime_error("solver step: incoming iterate violates the constraint set");
}

inline void require_batch(const std::vector<std::size_t>& batch, std::size_t n) {
  if (batch.empty()) throw std::invalid_argument("solver step: empty batch");
  for (std::size_t i : batch)
    if (i >= n) throw std::invalid_argument("solver step: batch index out of range");
}

inline vertex_step lmo_on_r(solver_state& st, const constraint_set& set) {
  if (st.tracker) return lmo(set, *st.tracker);
  return lmo(set, st.r);
}

// w <- (1-gamma) w + gamma s
inline void convex_update(dvec& w, double gamma, const vertex_step& s) {
  const double keep = 1.0 - gamma;
  for (double& x : w) x *= keep;
  for (const auto& [j, v] : s.support) w[j] += gamma * v;
}

// alpha[i] <- a_new, propagating the delta into r (and tracker)
inline void refresh_coordinate(solver_state& st, const problem& p, std::size_t i, double a_new) {
  const double delta = a_new - st.alpha[i];
  if (delta != 0.0)
    scatter_axpy(st.r, delta, p.X(), i, st.tracker ? &*st.tracker : nullptr);
  st.alpha[i] = a_new;
}

}  // namespace detail

/// One SFW iteration: refresh alpha on the batch (alpha_i = (1/n) f_i'(x_i^T w)),
/// scatter the deltas into r, then a single LMO and convex update with
/// gamma_t = 2/(t+2).
inline void sfw_step(solver_state& st, const problem& p, const constraint_set& set,
                     const schedule& sch, const std::vector<std::size_t>& batch) {
  detail::require_feasible(st, set);
  detail::require_batch(batch, p.n());
  const std::size_t t = st.t + 1;
  const double gamma = step_size(sch, t).gamma;
  const double inv_n = 1.0 / static_cast<double>(p.n());
  for (std::size_t i : batch) {
    const double theta_i = row_dot(p.X(), i, st.w);
    detail::refresh_coordinate(st, p, i, inv_n * p.loss().deriv(i, theta_i));
  }
  st.grad_calls += batch.size();
  const vertex_step s = detail::lmo_on_r(st, set);
  detail::convex_update(st.w, gamma, s);
  st.t = t;
}

/// One deterministic FW iteration: full gradient table, fresh r = X^T alpha,
/// LMO, convex update with gamma_t = 2/(t+2). Costs n gradient calls.
inline void fw_step(solver_state& st, const problem& p, const constraint_set& set,
                    const schedule& sch) {
  detail::require_feasible(st, set);
  const std::size_t t = st.t + 1;
  const double gamma = step_size(sch, t).gamma;
  st.alpha = p.grad_table(st.w);
  st.r = transpose_apply(p.X(), st.alpha);
  if (st.tracker) st.tracker.emplace(st.r);  // the wholesale r rewrite invalidates it
  st.grad_calls += p.n();
  const vertex_step s = lmo(set, st.r);
  detail::convex_update(st.w, gamma, s);
  st.t = t;
}

/// One iteration of the momentum baseline: for sampled i,
/// alpha_i = (1-rho_t) alpha_i + rho_t f_i'(x_i^T w) (no 1/n factor),
/// then LMO and convex update with gamma_t = 1/(t+1). The decay touches only
/// the sampled coordinates; entries outside the batch keep their full weight.
inline void mokhtari_step(solver_state& st, const problem& p, const constraint_set& set,
                          const schedule& sch, const std::vector<std::size_t>& batch) {
  detail::require_feasible(st, set);
  detail::require_batch(batch, p.n());
  const std::size_t t = st.t + 1;
  const auto sizes = step_size(sch, t);
  if (!sizes.aux) throw std::invalid_argument("mokhtari_step: schedule lacks the momentum step size");
  const double rho = *sizes.aux;
  for (std::size_t i : batch) {
    const double theta_i = row_dot(p.X(), i, st.w);
    const double g = p.loss().deriv(i, theta_i);
    detail::refresh_coordinate(st, p, i, (1.0 - rho) * st.alpha[i] + rho * g);
  }
  st.grad_calls += batch.size();
  const vertex_step s = detail::lmo_on_r(st, set);
  detail::convex_update(st.w, sizes.gamma, s);
  st.t = t;
}

/// One iteration of the averaged-argument baseline. Order matters: the LMO
/// consumes the previous r, then sigma_i = (1-delta_t) sigma_i + delta_t x_i^T s_t,
/// alpha_i = (1/n) f_i'(sigma_i), and the convex update uses that same s_t.
inline void lufreund_step(solver_state& st, const problem& p, const constraint_set& set,
                          const schedule& sch, const std::vector<std::size_t>& batch) {
  detail::require_feasible(st, set);
  detail::require_batch(batch, p.n());
  if (st.sigma.size() != p.n()) throw std::invalid_argument("lufreund_step: state lacks sigma = X w0");
  const std::size_t t = st.t + 1;
  const auto sizes = step_size(sch, t);
  if (!sizes.aux) throw std::invalid_argument("lufreund_step: schedule lacks the averaging step size");
  const double delta = *sizes.aux;
  const vertex_step s = detail::lmo_on_r(st, set);
  const double inv_n = 1.0 / static_cast<double>(p.n());
  for (std::size_t i : batch) {
    const double xs = s.row_dot(p.X(), i);
    st.sigma[i] = (1.0 - delta) * st.sigma[i] + delta * xs;
    detail::refresh_coordinate(st, p, i, inv_n * p.loss().deriv(i, st.sigma[i]));
  }
  st.grad_calls += batch.size();
  detail::convex_update(st.w, sizes.gamma, s);
  st.t = t;
}

/// Per-checkpoint record. exact_gap and h_error are present only when exact
/// diagnostics were requested (they cost a full gradient pass).
struct trace_row {
  std::size_t t = 0;
  std::size_t grad_calls = 0;
  double objective = 0.0;
  double stochastic_gap = 0.0;
  std::optional<double> exact_gap;
  std::optional<double> h_error;
  std::int64_t wall_nanos = 0;
};

struct run_options {
  solver_kind kind = solver_kind::sfw;
  std::size_t batch_size = 1;
  std::size_t grad_budget = 0;
  std::uint64_t seed = 0;
  std::size_t trace_every = 1;
  std::optional<double> gap_stop;
  bool exact_diagnostics = false;
  std::optional<dvec> w0;
};

namespace detail {

inline double checkpoint_gap(solver_state& st, const constraint_set& set, const dvec& w_at) {
  const vertex_step s = lmo_on_r(st, set);
  return dot(st.r, w_at) - s.dot(st.r);
}

inline double max_abs_entry(const design_matrix& X) {
  double m = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i)
    X.for_each_in_row(i, [&](std::size_t, double v) { m = std::max(m, std::abs(v)); });
  return m;
}

}  // namespace detail

/// Runs one solver to its gradient budget (or to the gap-stop threshold),
/// starting from alpha_0 = 0, r_0 = 0 and the default vertex w_0 unless
/// overridden. Emits one trace row at t = 0 and one per checkpoint; the gaps
/// in a row at iteration t are evaluated against w_{t-1}, matching the
/// estimator they certify, while the objective is f(X w_t).
inline std::vector<trace_row> run_solver(const problem& p, const constraint_set& set,
                                         const run_options& opt) {
  if (opt.batch_size < 1 || opt.batch_size > p.n())
    throw std::invalid_argument("run_solver: need 1 <= batch_size <= n");
  if (opt.trace_every < 1) throw std::invalid_argument("run_solver: trace_every must be >= 1");
  if (opt.kind == solver_kind::fw && opt.grad_budget > 0 && opt.grad_budget < p.n())
    throw std::invalid_argument("run_solver: fw needs grad_budget >= n");

  solver_state st = init_state(p, set, opt.kind, opt.seed, opt.w0);
  schedule sch{opt.kind, 0};
  if (opt.kind == solver_kind::lufreund) sch.n_b = p.n() / opt.batch_size;

  const auto start = std::chrono::steady_clock::now();
  const double x_max = opt.exact_diagnostics ? detail::max_abs_entry(p.X()) : 0.0;
  std::vector<trace_row> trace;

  auto emit = [&](const dvec& w_prev) -> trace_row& {
    trace_row row;
    row.t = st.t;
    row.grad_calls = st.grad_calls;
    row.objective = p.objective(st.w);
    if (!std::isfinite(row.objective)) throw std::runtime_error("run_solver: objective diverged");
    row.stochastic_gap = detail::checkpoint_gap(st, set, w_prev);
    if (opt.exact_diagnostics) {
      const dvec grad = p.grad_table(w_prev);
      const dvec r_true = transpose_apply(p.X(), grad);
      row.exact_gap = gap_value(set, r_true, w_prev);
      double h = 0.0;
      for (std::size_t i = 0; i < grad.size(); ++i) h += std::abs(st.alpha[i] - grad[i]);
      row.h_error = h;
      // drift check: r must mirror X^T alpha
      const dvec r_alpha = transpose_apply(p.X(), st.alpha);
      double drift = 0.0;
      for (std::size_t j = 0; j < st.r.size(); ++j) drift = std::max(drift, std::abs(st.r[j] - r_alpha[j]));
      if (drift > 1e-9 * (1.0 + l1_norm(st.alpha) * x_max))
        throw std::runtime_error("run_solver: r drifted away from X^T alpha");
    }
    row.wall_nanos =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    trace.push_back(std::move(row));
    return trace.back();
  };

  const auto& row0 = emit(st.w);
  if (opt.gap_stop && row0.stochastic_gap < *opt.gap_stop) return trace;

  const std::size_t per_iter = opt.kind == solver_kind::fw ? p.n() : opt.batch_size;
  dvec w_prev;
  while (st.grad_calls + per_iter <= opt.grad_budget) {
    const bool last = st.grad_calls + 2 * per_iter > opt.grad_budget;
    const bool checkpoint = last || ((st.t + 1) % opt.trace_every == 0);
    if (checkpoint) w_prev = st.w;
    switch (opt.kind) {
      case solver_kind::fw:
        fw_step(st, p, set, sch);
        break;
      case solver_kind::sfw:
        sample_batch_inplace(st.rng, st.pool, opt.batch_size, st.batch);
        sfw_step(st, p, set, sch, st.batch);
        break;
      case solver_kind::mokhtari:
        sample_batch_inplace(st.rng, st.pool, opt.batch_size, st.batch);
        mokhtari_step(st, p, set, sch, st.batch);
        break;
      case solver_kind::lufreund:
        sample_batch_inplace(st.rng, st.pool, opt.batch_size, st.batch);
        lufreund_step(st, p, set, sch, st.batch);
        break;
    }
    if (checkpoint) {
      const auto& row = emit(w_prev);
      if (opt.gap_stop && row.stochastic_gap < *opt.gap_stop) break;
    }
  }
  return trace;
}

}  // namespace sfwkit
