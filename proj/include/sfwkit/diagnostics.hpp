#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sfwkit/solvers.hpp"

namespace sfwkit {

/// H = ||alpha - grad||_1, the l1 error of the gradient table.
inline double h_error(const dvec& alpha, const dvec& grad) {
  if (alpha.size() != grad.size()) throw std::invalid_argument("h_error: length mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) h += std::abs(alpha[i] - grad[i]);
  return h;
}

/// True Frank-Wolfe gap g = max_{s in C} <grad f(Xw), X(w - s)>, computed
/// from a fresh gradient pass. Always >= 0 up to rounding since w is feasible.
inline double exact_gap(const problem& p, const constraint_set& set, const dvec& w) {
  if (!contains(set, w)) throw std::invalid_argument("exact_gap: w is infeasible");
  const dvec r_true = transpose_apply(p.X(), p.grad_table(w));
  return gap_value(set, r_true, w);
}

/// Stochastic Frank-Wolfe gap from the maintained r = X^T alpha; costs one
/// LMO and a dot product, no gradient evaluations.
inline double stochastic_gap(solver_state& st, const constraint_set& set) {
  const vertex_step s = st.tracker ? lmo(set, *st.tracker) : lmo(set, st.r);
  return dot(st.r, st.w) - s.dot(st.r);
}

/// |g - ghat| <= Dinf * H.
inline double gap_discrepancy_bound(double dinf, double h) {
  if (dinf < 0.0 || h < 0.0) throw std::invalid_argument("gap_discrepancy_bound: negative input");
  return dinf * h;
}

/// Sufficient-decrease upper bound on the suboptimality after one convex
/// update with direction alpha: (1-gamma) eps_prev + gamma^2 L D2^2/(2n)
/// + gamma Dinf H. Valid for convex losses and any alpha.
inline double sufficient_decrease_bound(double eps_prev, double gamma, double L, double D2,
                                        double Dinf, double H, std::size_t n) {
  return (1.0 - gamma) * eps_prev + gamma * gamma * L * D2 * D2 / (2.0 * static_cast<double>(n)) +
         gamma * Dinf * H;
}

/// Parameters of the scalar recurrence u_t <= rho (u_{t-1} + K/(t+1)).
struct recurrence_params {
  double rho;
  double K;
  double u0;

  recurrence_params(double rho_, double K_, double u0_) : rho(rho_), K(K_), u0(u0_) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("recurrence_params: need 0 < rho < 1");
    if (!(K > 0.0)) throw std::invalid_argument("recurrence_params: need K > 0");
    if (u0 < 0.0) throw std::invalid_argument("recurrence_params: need u0 >= 0");
  }
};

/// The extremal sequence: the recurrence simulated with equality,
/// u_t = rho (u_{t-1} + K/(t+1)). Returns u_0..u_{t_max}.
inline dvec recurrence_worst_case(const recurrence_params& p, std::size_t t_max) {
  if (t_max < 2) throw std::invalid_argument("recurrence_worst_case: t_max >= 2");
  dvec u(t_max + 1);
  u[0] = p.u0;
  for (std::size_t t = 1; t <= t_max; ++t)
    u[t] = p.rho * (u[t - 1] + p.K / static_cast<double>(t + 1));
  return u;
}

/// Closed-form bound dominating the recurrence for t >= 2:
/// K (rho/(1-rho) * 2/(t+2) + rho^{t/2} log t) + rho^t u0.
inline double recurrence_closed_form_bound(const recurrence_params& p, std::size_t t) {
  if (t < 2) throw std::invalid_argument("recurrence_closed_form_bound: defined for t >= 2");
  const double td = static_cast<double>(t);
  const double log_rho = std::log(p.rho);
  const double rho_half_t = std::exp(0.5 * td * log_rho);
  const double rho_t = std::exp(td * log_rho);
  return p.K * (p.rho / (1.0 - p.rho) * 2.0 / (td + 2.0) + rho_half_t * std::log(td)) + rho_t * p.u0;
}

/// Partial sums behind the telescoped rate, with rho = 1 - 1/n:
/// B_t = sum_{k=1}^t (k+1) rho^{k/2} log k   (<= 16 n^3)
/// C_t = sum_{k=1}^t (k+1) rho^k             (<= n^2)
inline std::pair<double, double> taylor_constants(std::size_t n, std::size_t t) {
  if (n < 2) throw std::invalid_argument("taylor_constants: n >= 2");
  if (t < 1) throw std::invalid_argument("taylor_constants: t >= 1");
  const double rho = 1.0 - 1.0 / static_cast<double>(n);
  double b = 0.0, c = 0.0;
  for (std::size_t k = 1; k <= t; ++k) {
    const double kd = static_cast<double>(k);
    b += (kd + 1.0) * std::pow(rho, kd / 2.0) * std::log(kd);
    c += (kd + 1.0) * std::pow(rho, kd);
  }
  return {b, c};
}

/// Every constant of the convex-rate bound.
struct rate_constants {
  double L = 0.0;
  double D1 = 0.0;
  double D2 = 0.0;
  double Dinf = 0.0;
  std::size_t n = 1;
  double H0 = 0.0;
  double eps0 = 0.0;
};

/// Expected-suboptimality bound at iteration t >= 2:
/// 2L (D2^2 + 4(n-1) D1 Dinf)/n * t/((t+1)(t+2))
///   + (2 eps0 + (2 Dinf H0 + 64 L D1 Dinf) n^2) / ((t+1)(t+2)).
inline double convex_rate_bound(const rate_constants& c, std::size_t t) {
  if (t < 2) throw std::invalid_argument("convex_rate_bound: defined for t >= 2");
  if (c.n < 1) throw std::invalid_argument("convex_rate_bound: n >= 1");
  const double td = static_cast<double>(t);
  const double nd = static_cast<double>(c.n);
  const double denom = (td + 1.0) * (td + 2.0);
  const double lead = 2.0 * c.L * ((c.D2 * c.D2 + 4.0 * (nd - 1.0) * c.D1 * c.Dinf) / nd) * td / denom;
  const double tail = (2.0 * c.eps0 + (2.0 * c.Dinf * c.H0 + 64.0 * c.L * c.D1 * c.Dinf) * nd * nd) / denom;
  return lead + tail;
}

/// Deterministic FW rate: eps_t <= 2 L D2^2 / t.
inline double fw_rate_bound(double L, double D2, std::size_t t) {
  if (t < 1) throw std::invalid_argument("fw_rate_bound: t >= 1");
  return 2.0 * L * D2 * D2 / static_cast<double>(t);
}

/// Exact conditional expectation of H_t from a fixed pre-step state, by
/// enumerating the n equally likely sampled indices and recomputing H for
/// each. Equals (1 - 1/n) ||alpha - grad f(Xw)||_1 up to rounding.
inline double expected_h_enumeration(const solver_state& st, const problem& p) {
  const std::size_t n = p.n();
  if (n > 10000) throw std::invalid_argument("expected_h_enumeration: n capped at 1e4");
  if (st.alpha.size() != n) throw std::invalid_argument("expected_h_enumeration: state/problem mismatch");
  const dvec grad = p.grad_table(st.w);
  double total = 0.0;
  dvec candidate = st.alpha;
  for (std::size_t i = 0; i < n; ++i) {
    const double saved = candidate[i];
    candidate[i] = grad[i];  // the refresh SFW would apply had it sampled i
    total += h_error(candidate, grad);
    candidate[i] = saved;
  }
  return total / static_cast<double>(n);
}

}  // namespace sfwkit
