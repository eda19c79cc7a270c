#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace hmr {

/// Square tridiagonal matrix stored as three diagonals.
///
/// `lower[i]` is entry (i+1, i), `upper[i]` is entry (i, i+1).
struct Tridiagonal {
  Eigen::VectorXd lower;
  Eigen::VectorXd diag;
  Eigen::VectorXd upper;

  Tridiagonal() = default;
  explicit Tridiagonal(Eigen::Index n)
      : lower(Eigen::VectorXd::Zero(n > 0 ? n - 1 : 0)),
        diag(Eigen::VectorXd::Zero(n)),
        upper(Eigen::VectorXd::Zero(n > 0 ? n - 1 : 0)) {}

  Eigen::Index size() const { return diag.size(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    const Eigen::Index n = size();
    Eigen::VectorXd y = diag.cwiseProduct(x);
    if (n > 1) {
      y.head(n - 1) += upper.cwiseProduct(x.tail(n - 1));
      y.tail(n - 1) += lower.cwiseProduct(x.head(n - 1));
    }
    return y;
  }

  /// Column-wise product with a dense matrix.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) y.col(c) = apply(Eigen::VectorXd(x.col(c)));
    return y;
  }

  Eigen::MatrixXd dense() const {
    const Eigen::Index n = size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) = diag[i];
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      a(i, i + 1) = upper[i];
      a(i + 1, i) = lower[i];
    }
    return a;
  }

  double max_abs() const {
    double m = diag.cwiseAbs().maxCoeff();
    if (size() > 1) m = std::max({m, lower.cwiseAbs().maxCoeff(), upper.cwiseAbs().maxCoeff()});
    return m;
  }

  /// Linear combination alpha*this + beta*other.
  Tridiagonal combine(double alpha, const Tridiagonal& other, double beta) const {
    Tridiagonal r(size());
    r.lower = alpha * lower + beta * other.lower;
    r.diag = alpha * diag + beta * other.diag;
    r.upper = alpha * upper + beta * other.upper;
    return r;
  }
};

class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gaussian elimination with partial pivoting for tridiagonal systems
/// (the LAPACK gtsv scheme). Throws SingularSystem on a zero pivot
/// relative to `rel_tol * max|a_ij|`.
inline Eigen::VectorXd solve_tridiagonal(const Tridiagonal& a, Eigen::VectorXd b,
                                         double rel_tol = 1e-14) {
  const Eigen::Index n = a.size();
  if (b.size() != n) throw std::invalid_argument("solve_tridiagonal: size mismatch");
  if (n == 0) return b;
  const double tiny = rel_tol * a.max_abs();
  std::vector<double> dl(a.lower.data(), a.lower.data() + a.lower.size());
  std::vector<double> d(a.diag.data(), a.diag.data() + n);
  std::vector<double> du(a.upper.data(), a.upper.data() + a.upper.size());
  std::vector<double> du2(n > 2 ? n - 2 : 0, 0.0);

  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (std::abs(d[i]) <= tiny) throw SingularSystem("tridiagonal system is singular");
      const double f = dl[i] / d[i];
      d[i + 1] -= f * du[i];
      b[i + 1] -= f * b[i];
      dl[i] = f;
    } else {
      // swap rows i and i+1
      const double f = d[i] / dl[i];
      d[i] = dl[i];
      const double tmp = d[i + 1];
      d[i + 1] = du[i] - f * tmp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du2[i];
      }
      du[i] = tmp;
      const double bt = b[i];
      b[i] = b[i + 1];
      b[i + 1] = bt - f * b[i + 1];
      dl[i] = f;
    }
  }
  if (std::abs(d[n - 1]) <= tiny) throw SingularSystem("tridiagonal system is singular");

  b[n - 1] /= d[n - 1];
  if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  for (Eigen::Index i = n - 3; i >= 0; --i)
    b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
  return b;
}

}  // namespace hmr
