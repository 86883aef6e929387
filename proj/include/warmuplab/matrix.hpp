#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "warmuplab/errors.hpp"

namespace warmuplab {

/// Dense row-major matrix of doubles. Vectors are n x 1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw ShapeMismatch("matrix dimensions must be >= 1");
  }
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) throw ShapeMismatch("matrix dimensions must be >= 1");
    if (data_.size() != rows * cols) throw ShapeMismatch("data size does not match dimensions");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("subtract: shapes differ");
  Matrix c = a;
  for (std::size_t k = 0; k < c.size(); ++k) c[k] -= b[k];
  return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("add: shapes differ");
  Matrix c = a;
  for (std::size_t k = 0; k < c.size(); ++k) c[k] += b[k];
  return c;
}

inline Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= s;
  return c;
}

struct SvdResult {
  Matrix u;                       // m x r, orthonormal columns for positive singular values
  std::vector<double> sigma;      // min(m, n) values, descending
  Matrix v;                       // n x r
  std::size_t rank = 0;           // number of singular values above the numerical cutoff
};

namespace detail {

// One-sided Jacobi on the columns of a tall (m >= n) matrix.
// Rotates column pairs until all are mutually orthogonal to working precision.
inline SvdResult jacobi_svd_tall(Matrix b) {
  const std::size_t m = b.rows(), n = b.cols();
  Matrix v = Matrix::identity(n);
  const double tol = 1e-12;
  const std::size_t max_sweeps = 10 * std::max<std::size_t>(n * n, 16);

  bool converged = false;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = b(i, p), bq = b(i, q);
          app += bp * bp;
          aqq += bq * bq;
          apq += bp * bq;
        }
        if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
        converged = false;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = b(i, p), bq = b(i, q);
          b(i, p) = c * bp - s * bq;
          b(i, q) = s * bp + c * bq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) throw NumericalError("jacobi svd did not converge within the sweep cap");

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += b(i, j) * b(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t c) { return sigma[a] > sigma[c]; });

  const double smax = sigma.empty() ? 0.0 : sigma[order[0]];
  const double cutoff = smax * 1e-13 * static_cast<double>(std::max(m, n));

  SvdResult r;
  r.sigma.resize(n);
  std::size_t rank = 0;
  for (std::size_t j = 0; j < n; ++j) {
    r.sigma[j] = sigma[order[j]];
    if (r.sigma[j] > cutoff && r.sigma[j] > 0.0) ++rank;
  }
  r.rank = rank;
  r.u = rank ? Matrix(m, rank) : Matrix(m, 1);
  r.v = rank ? Matrix(n, rank) : Matrix(n, 1);
  if (rank == 0) return r;
  for (std::size_t j = 0; j < rank; ++j) {
    const std::size_t src = order[j];
    const double inv = 1.0 / r.sigma[j];
    for (std::size_t i = 0; i < m; ++i) r.u(i, j) = b(i, src) * inv;
    for (std::size_t i = 0; i < n; ++i) r.v(i, j) = v(i, src);
  }
  return r;
}

}  // namespace detail

/// Compact SVD: M = U diag(sigma_1..r) V^T with sigma sorted descending.
/// sigma always carries all min(m, n) values; U/V carry only the rank columns.
inline SvdResult svd(const Matrix& m) {
  if (!m.all_finite()) throw DegenerateInput("svd: non-finite entries");
  if (m.rows() >= m.cols()) return detail::jacobi_svd_tall(m);
  SvdResult t = detail::jacobi_svd_tall(m.transposed());
  std::swap(t.u, t.v);
  return t;
}

/// All min(m, n) singular values, descending.
inline std::vector<double> singular_values(const Matrix& m) { return svd(m).sigma; }

/// Nearest semi-orthogonal matrix U_r V_r^T over strictly positive singular values.
/// Zero matrix maps to zero.
inline Matrix orthogonalize_exact(const Matrix& g) {
  SvdResult r = svd(g);
  if (r.rank == 0) return Matrix(g.rows(), g.cols());
  return r.u * r.v.transposed();
}

namespace detail {

/// Per-step quintic coefficients (a, b, c) for X <- aX + bX(X^T X) + cX(X^T X)^2.
/// Each triple is the minimax-optimal quintic for the singular-value interval
/// produced by the previous step, starting from [0.003, 1] (Frobenius-scaled
/// input with condition number up to ~100). Five steps drive every singular
/// value into [0.995, 1.005].
inline constexpr double kNsSchedule[5][3] = {
    {8.3836738141, -24.7659074430, 18.3570832760},
    {4.0434204402, -3.0114050153, 0.5695121556},
    {3.5055706970, -2.6266540143, 0.5257194484},
    {2.4901159247, -1.8342751207, 0.4368347260},
    {1.9177762493, -1.2967501993, 0.3797048826},
};

/// Convergent polish step (fixed point exactly 1, cubic local convergence),
/// used for iterations past the tuned schedule.
inline constexpr double kNsPolish[3] = {15.0 / 8.0, -5.0 / 4.0, 3.0 / 8.0};

}  // namespace detail

/// Quintic Newton-Schulz approximation of orthogonalize_exact; input is
/// pre-scaled by 1/||G||_F. Steps <= 5 use the tail of the tuned schedule;
/// extra steps past 5 apply a convergent polish iteration.
inline Matrix orthogonalize_ns(const Matrix& g, int steps = 5) {
  const double fro = g.frobenius();
  if (fro == 0.0) throw DegenerateGradient("orthogonalize_ns: zero matrix");
  if (steps < 1) throw DegenerateInput("orthogonalize_ns: steps must be >= 1");

  const bool wide = g.rows() < g.cols();
  Matrix x = wide ? g.transposed() : g;
  x = (1.0 / fro) * x;
  for (int s = 0; s < steps; ++s) {
    const int sched = steps <= 5 ? 5 - steps + s : s;
    const double* k = sched < 5 ? detail::kNsSchedule[sched] : detail::kNsPolish;
    Matrix gram = x.transposed() * x;
    Matrix xg = x * gram;
    Matrix xgg = xg * gram;
    x = k[0] * x + k[1] * xg + k[2] * xgg;
  }
  return wide ? x.transposed() : x;
}

}  // namespace warmuplab
