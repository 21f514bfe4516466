#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfwkit/numkit.hpp"

namespace sfwkit {

struct capacity_error : std::length_error {
  using std::length_error::length_error;
};

enum class constraint_kind { l1_ball, simplex, linf_ball };

inline const char* to_string(constraint_kind k) {
  switch (k) {
    case constraint_kind::l1_ball: return "l1";
    case constraint_kind::simplex: return "simplex";
    case constraint_kind::linf_ball: return "linf";
  }
  return "?";
}

/// Compact convex constraint set with radius lambda.
/// l1_ball: {||w||_1 <= lambda}; simplex: {w >= 0, sum w = lambda};
/// linf_ball: {||w||_inf <= lambda}.
struct constraint_set {
  constraint_kind kind;
  double radius;

  constraint_set(constraint_kind k, double lambda) : kind(k), radius(lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("constraint_set: radius must be positive and finite");
  }
};

/// Parses "l1:<lambda>", "simplex:<lambda>", or "linf:<lambda>".
inline constraint_set parse_constraint(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("constraint spec must look like l1:<lambda>");
  const std::string name = spec.substr(0, colon);
  double lambda = 0.0;
  try {
    std::size_t pos = 0;
    lambda = std::stod(spec.substr(colon + 1), &pos);
    if (pos != spec.size() - colon - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("constraint spec has a bad radius: " + spec);
  }
  if (name == "l1") return {constraint_kind::l1_ball, lambda};
  if (name == "simplex") return {constraint_kind::simplex, lambda};
  if (name == "linf") return {constraint_kind::linf_ball, lambda};
  throw std::invalid_argument("unknown constraint kind: " + name);
}

inline std::string to_spec(const constraint_set& set) {
  return std::string(to_string(set.kind)) + ":" + std::to_string(set.radius);
}

/// Extreme point described by its support; one pair for the l1 ball,
/// d pairs for the linf ball.
struct vertex_step {
  std::vector<std::pair<std::size_t, double>> support;

  dvec to_dense(std::size_t d) const {
    dvec s(d, 0.0);
    for (const auto& [j, v] : support) s.at(j) = v;
    return s;
  }

  double dot(const dvec& r) const {
    double acc = 0.0;
    for (const auto& [j, v] : support) acc += v * r.at(j);
    return acc;
  }

  /// x_i^T s.
  double row_dot(const design_matrix& X, std::size_t i) const {
    double acc = 0.0;
    for (const auto& [j, v] : support) acc += v * X(i, j);
    return acc;
  }
};

namespace detail {
// sign with sign(0) := +1, including -0.0
inline double sign_pos(double x) { return x >= 0.0 ? 1.0 : -1.0; }
}  // namespace detail

/// Linear minimization oracle: an extreme point minimizing <s, r> over the set.
/// Ties resolve to the smallest index; sign(0) := +1.
inline vertex_step lmo(const constraint_set& set, const dvec& r) {
  if (r.empty()) throw std::invalid_argument("lmo: empty direction");
  switch (set.kind) {
    case constraint_kind::l1_ball: {
      const auto [j, v] = argmax_abs(r);
      return {{{j, -set.radius * detail::sign_pos(v)}}};
    }
    case constraint_kind::simplex: {
      std::size_t best = 0;
      for (std::size_t j = 1; j < r.size(); ++j)
        if (r[j] < r[best]) best = j;
      return {{{best, set.radius}}};
    }
    case constraint_kind::linf_ball: {
      vertex_step s;
      s.support.reserve(r.size());
      for (std::size_t j = 0; j < r.size(); ++j) s.support.emplace_back(j, -set.radius * detail::sign_pos(r[j]));
      return s;
    }
  }
  throw std::logic_error("lmo: unreachable");
}

/// l1-ball fast path: one tracker query instead of a full scan.
inline vertex_step lmo(const constraint_set& set, argmax_tracker& tracker) {
  if (set.kind != constraint_kind::l1_ball)
    throw std::invalid_argument("lmo(tracker): tracker-backed oracle is l1-only");
  const auto [j, v] = tracker.query();
  return {{{j, -set.radius * detail::sign_pos(v)}}};
}

inline constexpr std::size_t vertex_cap = 4096;

/// Full extreme-point list in deterministic order; throws capacity_error past
/// the cap (2d for l1, d for simplex, 2^d for linf).
inline std::vector<vertex_step> vertices(const constraint_set& set, std::size_t d) {
  if (d == 0) throw std::invalid_argument("vertices: dimension must be >= 1");
  switch (set.kind) {
    case constraint_kind::l1_ball: {
      if (2 * d > vertex_cap) throw capacity_error("vertices: 2d exceeds cap");
      std::vector<vertex_step> out;
      out.reserve(2 * d);
      for (std::size_t j = 0; j < d; ++j) {
        out.push_back({{{j, set.radius}}});
        out.push_back({{{j, -set.radius}}});
      }
      return out;
    }
    case constraint_kind::simplex: {
      if (d > vertex_cap) throw capacity_error("vertices: d exceeds cap");
      std::vector<vertex_step> out;
      out.reserve(d);
      for (std::size_t j = 0; j < d; ++j) out.push_back({{{j, set.radius}}});
      return out;
    }
    case constraint_kind::linf_ball: {
      if (d >= 64 || (std::size_t{1} << d) > vertex_cap) throw capacity_error("vertices: 2^d exceeds cap");
      const std::size_t count = std::size_t{1} << d;
      std::vector<vertex_step> out;
      out.reserve(count);
      for (std::size_t mask = 0; mask < count; ++mask) {
        vertex_step s;
        s.support.reserve(d);
        for (std::size_t j = 0; j < d; ++j)
          s.support.emplace_back(j, (mask >> j) & 1 ? -set.radius : set.radius);
        out.push_back(std::move(s));
      }
      return out;
    }
  }
  throw std::logic_error("vertices: unreachable");
}

/// Distance of w from the set's membership equalities; 0 for exact members.
inline double membership_residual(const constraint_set& set, const dvec& w) {
  switch (set.kind) {
    case constraint_kind::l1_ball:
      return std::max(0.0, l1_norm(w) - set.radius);
    case constraint_kind::simplex: {
      double sum = 0.0, neg = 0.0;
      for (double x : w) {
        sum += x;
        neg = std::max(neg, -x);
      }
      return std::max(std::abs(sum - set.radius), neg);
    }
    case constraint_kind::linf_ball:
      return std::max(0.0, linf_norm(w) - set.radius);
  }
  return 0.0;
}

inline bool contains(const constraint_set& set, const dvec& w, double tol = 1e-9) {
  return membership_residual(set, w) <= tol;
}

/// <r, w> - min_{s in C} <r, s>: the Frank-Wolfe gap value for direction r at w.
inline double gap_value(const constraint_set& set, const dvec& r, const dvec& w) {
  return dot(r, w) - lmo(set, r).dot(r);
}

namespace detail {
struct column_stats {
  dvec abs_sum;  // per-column sum_i |X_ij|
  dvec sq_sum;   // per-column sum_i X_ij^2
  dvec abs_max;  // per-column max_i |X_ij|
};

inline column_stats compute_column_stats(const design_matrix& X) {
  column_stats s{dvec(X.cols(), 0.0), dvec(X.cols(), 0.0), dvec(X.cols(), 0.0)};
  for (std::size_t i = 0; i < X.rows(); ++i)
    X.for_each_in_row(i, [&](std::size_t j, double v) {
      s.abs_sum[j] += std::abs(v);
      s.sq_sum[j] += v * v;
      s.abs_max[j] = std::max(s.abs_max[j], std::abs(v));
    });
  return s;
}

inline std::vector<dvec> columns_dense(const design_matrix& X) {
  std::vector<dvec> cols(X.cols(), dvec(X.rows(), 0.0));
  for (std::size_t i = 0; i < X.rows(); ++i)
    X.for_each_in_row(i, [&](std::size_t j, double v) { cols[j][i] = v; });
  return cols;
}

inline double norm_p_of_diff(const dvec& a, const dvec& b, double p) {
  dvec diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return lp_norm(diff, p);
}
}  // namespace detail

/// D_p = max_{u,v in C} ||X(u-v)||_p for p in {1, 2, inf}.
/// l1 ball: closed form 2*lambda*max_j ||X e_j||_p (u-v ranges over the
/// 2*lambda l1 ball and z -> ||Xz||_p is convex, so the max sits at +-2*lambda e_j).
/// simplex: lambda * max_{j,k} ||X(e_j - e_k)||_p over column pairs.
/// linf ball: brute force over vertex pairs, subject to the vertex cap.
inline double diameter(const constraint_set& set, const design_matrix& X, double p) {
  if (!(p == 1.0 || p == 2.0 || std::isinf(p))) throw std::invalid_argument("diameter: p must be 1, 2, or inf");
  const std::size_t d = X.cols();
  if (d == 0) return 0.0;
  switch (set.kind) {
    case constraint_kind::l1_ball: {
      const auto stats = detail::compute_column_stats(X);
      double best = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double cn = p == 1.0 ? stats.abs_sum[j] : (p == 2.0 ? std::sqrt(stats.sq_sum[j]) : stats.abs_max[j]);
        best = std::max(best, cn);
      }
      return 2.0 * set.radius * best;
    }
    case constraint_kind::simplex: {
      const std::vector<dvec> cols = detail::columns_dense(X);
      double best = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j + 1; k < d; ++k)
          best = std::max(best, detail::norm_p_of_diff(cols[j], cols[k], p));
      return set.radius * best;
    }
    case constraint_kind::linf_ball: {
      const auto verts = vertices(set, d);
      std::vector<dvec> images;
      images.reserve(verts.size());
      for (const auto& s : verts) images.push_back(matvec(X, s.to_dense(d)));
      double best = 0.0;
      for (std::size_t a = 0; a < images.size(); ++a)
        for (std::size_t b = a + 1; b < images.size(); ++b)
          best = std::max(best, detail::norm_p_of_diff(images[a], images[b], p));
      return best;
    }
  }
  throw std::logic_error("diameter: unreachable");
}

/// kappa = ||X||_{1,1} / ||X||_{1,inf} = (max_j sum_i |X_ij|) / (max_ij |X_ij|);
/// equals D_1/D_inf for l1-ball constraints. Lies in [1, n].
inline double kappa(const design_matrix& X) {
  const auto stats = detail::compute_column_stats(X);
  double max_col_sum = 0.0, max_entry = 0.0;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    max_col_sum = std::max(max_col_sum, stats.abs_sum[j]);
    max_entry = std::max(max_entry, stats.abs_max[j]);
  }
  if (max_entry == 0.0) throw std::domain_error("kappa: undefined for the all-zero matrix");
  return max_col_sum / max_entry;
}

}  // namespace sfwkit
