#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "sfwkit/numkit.hpp"

namespace sfwkit {

enum class loss_kind { logistic, squared, geman_mcclure };

inline const char* to_string(loss_kind k) {
  switch (k) {
    case loss_kind::logistic: return "logistic";
    case loss_kind::squared: return "squared";
    case loss_kind::geman_mcclure: return "geman_mcclure";
  }
  return "?";
}

inline loss_kind parse_loss_kind(const std::string& s) {
  if (s == "logistic") return loss_kind::logistic;
  if (s == "squared") return loss_kind::squared;
  if (s == "geman" || s == "geman_mcclure") return loss_kind::geman_mcclure;
  throw std::invalid_argument("unknown loss kind: " + s);
}

/// Per-sample smoothness constant: sup |f_i''|.
inline double smoothness_constant(loss_kind k) {
  switch (k) {
    case loss_kind::logistic: return 0.25;       // sup sigma(z)(1-sigma(z))
    case loss_kind::squared: return 1.0;
    case loss_kind::geman_mcclure: return 2.0;   // |g''| = |2-6u^2|/(1+u^2)^3, max at u=0
  }
  return 0.0;
}

/// Family of per-sample scalar losses f_i(z) with targets y_i.
/// logistic: log(1+exp(-y z)), y in {-1,+1}
/// squared:  (z-y)^2 / 2
/// geman_mcclure: u^2/(1+u^2), u = z-y  (smooth, bounded, non-convex)
class loss_model {
 public:
  loss_model(loss_kind kind, dvec targets) : kind_(kind), y_(std::move(targets)) {
    if (!all_finite(y_)) throw std::invalid_argument("loss_model: non-finite target");
    if (kind_ == loss_kind::logistic) {
      for (double v : y_)
        if (v != 1.0 && v != -1.0) throw std::invalid_argument("loss_model: logistic targets must be -1 or +1");
    }
  }

  loss_kind kind() const { return kind_; }
  std::size_t size() const { return y_.size(); }
  const dvec& targets() const { return y_; }
  double smoothness() const { return smoothness_constant(kind_); }

  double value(std::size_t i, double z) const {
    const double y = target(i);
    switch (kind_) {
      case loss_kind::logistic: {
        // log(1+exp(-yz)) = log(1+exp(-|yz|)) + max(0, -yz); never overflows
        const double m = y * z;
        return std::log1p(std::exp(-std::abs(m))) + std::max(0.0, -m);
      }
      case loss_kind::squared: {
        const double u = z - y;
        return 0.5 * u * u;
      }
      case loss_kind::geman_mcclure: {
        const double u = z - y;
        return u * u / (1.0 + u * u);
      }
    }
    return 0.0;
  }

  double deriv(std::size_t i, double z) const {
    const double y = target(i);
    switch (kind_) {
      case loss_kind::logistic: {
        // -y / (1+exp(yz)); exponentiate only the non-positive argument
        const double m = y * z;
        if (m >= 0.0) {
          const double e = std::exp(-m);
          return -y * e / (1.0 + e);
        }
        return -y / (1.0 + std::exp(m));
      }
      case loss_kind::squared:
        return z - y;
      case loss_kind::geman_mcclure: {
        const double u = z - y;
        const double q = 1.0 + u * u;
        return 2.0 * u / (q * q);
      }
    }
    return 0.0;
  }

 private:
  double target(std::size_t i) const {
    if (i >= y_.size()) throw std::out_of_range("loss_model: sample index out of range");
    return y_[i];
  }

  loss_kind kind_;
  dvec y_;
};

/// Finite-sum objective f(Xw) = (1/n) sum_i f_i(x_i^T w).
/// Read-only after construction; one instance may back concurrent runs.
class problem {
 public:
  problem(design_matrix X, loss_model loss) : X_(std::move(X)), loss_(std::move(loss)) {
    if (loss_.size() != X_.rows()) throw std::invalid_argument("problem: target length != row count");
    if (X_.rows() == 0) throw std::invalid_argument("problem: empty dataset");
  }

  const design_matrix& X() const { return X_; }
  const loss_model& loss() const { return loss_; }
  std::size_t n() const { return X_.rows(); }
  std::size_t d() const { return X_.cols(); }

  double objective_from_theta(const dvec& theta) const {
    if (theta.size() != n()) throw std::invalid_argument("objective_from_theta: theta length != n");
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) s += loss_.value(i, theta[i]);
    return s / static_cast<double>(n());
  }

  double objective(const dvec& w) const { return objective_from_theta(matvec(X_, w)); }

  /// [grad f(theta)]_i = (1/n) f_i'(theta_i); the exact estimator target for alpha_t.
  dvec grad_table_from_theta(const dvec& theta) const {
    if (theta.size() != n()) throw std::invalid_argument("grad_table_from_theta: theta length != n");
    dvec g(theta.size());
    const double inv_n = 1.0 / static_cast<double>(n());
    for (std::size_t i = 0; i < theta.size(); ++i) g[i] = inv_n * loss_.deriv(i, theta[i]);
    return g;
  }

  dvec grad_table(const dvec& w) const { return grad_table_from_theta(matvec(X_, w)); }

 private:
  design_matrix X_;
  loss_model loss_;
};

}  // namespace sfwkit
