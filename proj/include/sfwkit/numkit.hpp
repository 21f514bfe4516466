#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sfwkit {

using dvec = std::vector<double>;

inline bool all_finite(const dvec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double dot(const dvec& a, const dvec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double l1_norm(const dvec& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double linf_norm(const dvec& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

inline double lp_norm(const dvec& v, double p) {
  if (p == 1.0) return l1_norm(v);
  if (std::isinf(p)) return linf_norm(v);
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

/// n x d data matrix, stored dense row-major or as a CSR triple.
/// Explicit zeros are rejected in CSR form so that "row support" is
/// exactly the set of stored entries. Read-only after construction and
/// shareable across concurrent solver runs.
class design_matrix {
 public:
  static design_matrix dense(std::size_t n, std::size_t d, dvec values) {
    if (values.size() != n * d) throw std::invalid_argument("design_matrix::dense: values size != n*d");
    if (!all_finite(values)) throw std::invalid_argument("design_matrix::dense: non-finite entry");
    design_matrix m;
    m.n_ = n;
    m.d_ = d;
    m.sparse_ = false;
    m.values_ = std::move(values);
    return m;
  }

  static design_matrix csr(std::size_t n, std::size_t d, std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices, dvec values) {
    if (row_offsets.size() != n + 1) throw std::invalid_argument("design_matrix::csr: row_offsets size != n+1");
    if (row_offsets.front() != 0) throw std::invalid_argument("design_matrix::csr: row_offsets[0] != 0");
    if (row_offsets.back() != values.size() || col_indices.size() != values.size())
      throw std::invalid_argument("design_matrix::csr: offsets/indices/values inconsistent");
    for (std::size_t i = 0; i < n; ++i) {
      if (row_offsets[i] > row_offsets[i + 1]) throw std::invalid_argument("design_matrix::csr: row_offsets not monotone");
      for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
        if (col_indices[k] >= d) throw std::invalid_argument("design_matrix::csr: column index out of range");
        if (k > row_offsets[i] && col_indices[k] <= col_indices[k - 1])
          throw std::invalid_argument("design_matrix::csr: column indices not strictly increasing in row " + std::to_string(i));
        if (!std::isfinite(values[k]) || values[k] == 0.0)
          throw std::invalid_argument("design_matrix::csr: stored values must be finite and nonzero");
      }
    }
    design_matrix m;
    m.n_ = n;
    m.d_ = d;
    m.sparse_ = true;
    m.row_offsets_ = std::move(row_offsets);
    m.col_indices_ = std::move(col_indices);
    m.values_ = std::move(values);
    return m;
  }

  /// Dense matrix from a row list; convenience for tests and small problems.
  static design_matrix from_rows(const std::vector<dvec>& rows) {
    const std::size_t n = rows.size();
    const std::size_t d = n == 0 ? 0 : rows[0].size();
    dvec values;
    values.reserve(n * d);
    for (const auto& row : rows) {
      if (row.size() != d) throw std::invalid_argument("design_matrix::from_rows: ragged rows");
      values.insert(values.end(), row.begin(), row.end());
    }
    return dense(n, d, std::move(values));
  }

  /// CSR matrix from a row list, dropping zeros.
  static design_matrix csr_from_rows(const std::vector<dvec>& rows) {
    const std::size_t n = rows.size();
    const std::size_t d = n == 0 ? 0 : rows[0].size();
    std::vector<std::size_t> offs{0};
    std::vector<std::size_t> cols;
    dvec vals;
    for (const auto& row : rows) {
      if (row.size() != d) throw std::invalid_argument("design_matrix::csr_from_rows: ragged rows");
      for (std::size_t j = 0; j < d; ++j) {
        if (row[j] != 0.0) {
          cols.push_back(j);
          vals.push_back(row[j]);
        }
      }
      offs.push_back(vals.size());
    }
    return csr(n, d, std::move(offs), std::move(cols), std::move(vals));
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  bool is_sparse() const { return sparse_; }
  std::size_t nnz() const { return sparse_ ? values_.size() : n_ * d_; }

  double operator()(std::size_t i, std::size_t j) const {
    check_row(i);
    if (j >= d_) throw std::out_of_range("design_matrix: column index out of range");
    if (!sparse_) return values_[i * d_ + j];
    const auto begin = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto end = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
  }

  /// Visits the stored entries of row i as f(column, value). For CSR this is
  /// exactly the row support; for dense storage it is all d columns.
  template <class F>
  void for_each_in_row(std::size_t i, F&& f) const {
    check_row(i);
    if (sparse_) {
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) f(col_indices_[k], values_[k]);
    } else {
      for (std::size_t j = 0; j < d_; ++j) f(j, values_[i * d_ + j]);
    }
  }

  design_matrix densified() const {
    if (!sparse_) return *this;
    dvec values(n_ * d_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) values[i * d_ + col_indices_[k]] = values_[k];
    return dense(n_, d_, std::move(values));
  }

 private:
  void check_row(std::size_t i) const {
    if (i >= n_) throw std::out_of_range("design_matrix: row index out of range");
  }

  std::size_t n_ = 0;
  std::size_t d_ = 0;
  bool sparse_ = false;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  dvec values_;
};

/// Incremental argmax over |r_j| with lazy invalidation: updates push a new
/// heap entry, queries pop entries whose recorded magnitude no longer matches.
/// Amortized query cost is proportional to the updates since the last query,
/// not to the dimension. Single-writer; not for concurrent mutation.
class argmax_tracker {
 public:
  explicit argmax_tracker(const dvec& r) : value_(r) {
    for (std::size_t j = 0; j < value_.size(); ++j) heap_.push({std::abs(value_[j]), j});
  }

  std::size_t size() const { return value_.size(); }
  double value_at(std::size_t j) const { return value_.at(j); }

  void update(std::size_t j, double new_value) {
    value_.at(j) = new_value;
    heap_.push({std::abs(new_value), j});
  }

  /// Smallest index attaining max |r_j|, with the signed value.
  std::pair<std::size_t, double> query() {
    if (value_.empty()) throw std::invalid_argument("argmax_tracker: empty vector");
    while (heap_.top().mag != std::abs(value_[heap_.top().idx])) heap_.pop();
    const std::size_t j = heap_.top().idx;
    return {j, value_[j]};
  }

 private:
  struct entry {
    double mag;
    std::size_t idx;
  };
  struct order {
    bool operator()(const entry& a, const entry& b) const {
      if (a.mag != b.mag) return a.mag < b.mag;
      return a.idx > b.idx;  // ties resolve to the smallest index at the top
    }
  };

  dvec value_;
  std::priority_queue<entry, std::vector<entry>, order> heap_;
};

/// x_i^T w; touches only the row support in CSR form.
inline double row_dot(const design_matrix& X, std::size_t i, const dvec& w) {
  if (w.size() != X.cols()) throw std::invalid_argument("row_dot: w length != column count");
  double s = 0.0;
  X.for_each_in_row(i, [&](std::size_t j, double v) { s += v * w[j]; });
  return s;
}

/// r += c * x_i on the row support; keeps the tracker (if any) in sync for
/// the touched coordinates.
inline void scatter_axpy(dvec& r, double c, const design_matrix& X, std::size_t i,
                         argmax_tracker* tracker = nullptr) {
  if (r.size() != X.cols()) throw std::invalid_argument("scatter_axpy: r length != column count");
  if (c == 0.0) return;
  X.for_each_in_row(i, [&](std::size_t j, double v) {
    r[j] += c * v;
    if (tracker) tracker->update(j, r[j]);
  });
}

/// Smallest index maximizing |r_j|, and the signed r_j.
inline std::pair<std::size_t, double> argmax_abs(const dvec& r) {
  if (r.empty()) throw std::invalid_argument("argmax_abs: empty vector");
  std::size_t best = 0;
  double best_mag = std::abs(r[0]);
  for (std::size_t j = 1; j < r.size(); ++j) {
    const double mag = std::abs(r[j]);
    if (mag > best_mag) {
      best = j;
      best_mag = mag;
    }
  }
  return {best, r[best]};
}

inline std::pair<std::size_t, double> argmax_abs(argmax_tracker& tracker) { return tracker.query(); }

/// theta = X w.
inline dvec matvec(const design_matrix& X, const dvec& w) {
  dvec theta(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) theta[i] = row_dot(X, i, w);
  return theta;
}

/// X^T alpha, built by scattering each row's contribution.
inline dvec transpose_apply(const design_matrix& X, const dvec& alpha) {
  if (alpha.size() != X.rows()) throw std::invalid_argument("transpose_apply: alpha length != row count");
  dvec r(X.cols(), 0.0);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double c = alpha[i];
    if (c == 0.0) continue;
    X.for_each_in_row(i, [&](std::size_t j, double v) { r[j] += c * v; });
  }
  return r;
}

}  // namespace sfwkit
