#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace baladin::kkt {

/// Eigenvalue sign counts (n⁺, n⁻, n⁰).
struct Inertia {
  int pos = 0;
  int neg = 0;
  int zero = 0;

  int dim() const { return pos + neg + zero; }
  Inertia operator+(const Inertia& o) const { return {pos + o.pos, neg + o.neg, zero + o.zero}; }
  Inertia operator-(const Inertia& o) const { return {pos - o.pos, neg - o.neg, zero - o.zero}; }
  bool operator==(const Inertia&) const = default;
};

class SingularFactorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Dense symmetric indefinite factorization P K Pᵀ = L D Lᵀ with Bunch–Kaufman
 * partial pivoting (1×1 and 2×2 pivots). Only the lower triangle of K is read.
 */
class LdlFactor {
 public:
  LdlFactor() = default;

  /// Factors K, classifying pivot eigenvalues with |λ| ≤ zero_tol as zero.
  /// A negative zero_tol selects a per-pivot threshold 1e−13·max|K_i·| over the
  /// pivot's original rows, which is invariant under diagonal scaling of K.
  explicit LdlFactor(const Eigen::MatrixXd& K, double zero_tol = -1.0) { factor(K, zero_tol); }

  void factor(const Eigen::MatrixXd& K, double zero_tol = -1.0) {
    const int n = static_cast<int>(K.rows());
    if (K.cols() != n) throw std::invalid_argument("LdlFactor: matrix is not square");
    K_ = K.triangularView<Eigen::Lower>();
    K_.triangularView<Eigen::StrictlyUpper>() = K_.transpose().triangularView<Eigen::StrictlyUpper>();
    norm_inf_ = n > 0 ? K_.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
    zero_tol_ = zero_tol;
    row_scale_ = n > 0 ? Eigen::VectorXd(K_.cwiseAbs().rowwise().maxCoeff()) : Eigen::VectorXd();

    M_ = K_;
    perm_.resize(n);
    for (int i = 0; i < n; ++i) perm_[i] = i;
    pivot_size_.assign(n, 1);
    d_diag_ = Eigen::VectorXd::Zero(n);
    d_off_ = Eigen::VectorXd::Zero(n);
    inertia_ = {};

    const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
    int k = 0;
    while (k < n) {
      const double absakk = std::abs(M_(k, k));
      int imax = k;
      double colmax = 0.0;
      for (int i = k + 1; i < n; ++i)
        if (std::abs(M_(i, k)) > colmax) {
          colmax = std::abs(M_(i, k));
          imax = i;
        }

      int kstep = 1;
      int kp = k;
      if (std::max(absakk, colmax) == 0.0) {
        kp = k;
      } else if (absakk >= alpha * colmax) {
        kp = k;
      } else {
        double rowmax = 0.0;
        for (int j = k; j < imax; ++j) rowmax = std::max(rowmax, std::abs(M_(imax, j)));
        for (int i = imax + 1; i < n; ++i) rowmax = std::max(rowmax, std::abs(M_(i, imax)));
        if (absakk * rowmax >= alpha * colmax * colmax) {
          kp = k;
        } else if (std::abs(M_(imax, imax)) >= alpha * rowmax) {
          kp = imax;
        } else {
          kp = imax;
          kstep = 2;
        }
      }

      const int kk = k + kstep - 1;
      if (kp != kk) symmetric_swap(kk, kp);

      const int m = n - k - kstep;
      if (kstep == 1) {
        const double d = M_(k, k);
        d_diag_[k] = d;
        pivot_size_[k] = 1;
        classify(d, threshold(k, k));
        if (m > 0) {
          if (d != 0.0) {
            Eigen::VectorXd c = M_.col(k).tail(m);
            M_.bottomRightCorner(m, m).selfadjointView<Eigen::Lower>().rankUpdate(c, -1.0 / d);
            M_.col(k).tail(m) = c / d;
          } else {
            M_.col(k).tail(m).setZero();
          }
        }
      } else {
        const double a = M_(k, k), b = M_(k + 1, k), c = M_(k + 1, k + 1);
        d_diag_[k] = a;
        d_diag_[k + 1] = c;
        d_off_[k] = b;
        pivot_size_[k] = 2;
        pivot_size_[k + 1] = 0;
        const double det = a * c - b * b;
        const double tr = a + c;
        const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
        classify(0.5 * tr + disc, threshold(k, k + 1));
        classify(0.5 * tr - disc, threshold(k, k + 1));
        M_(k + 1, k) = 0.0;
        if (m > 0) {
          Eigen::Matrix2d Dinv;
          Dinv << c / det, -b / det, -b / det, a / det;
          Eigen::MatrixXd C = M_.block(k + 2, k, m, 2);
          Eigen::MatrixXd E = C * Dinv;
          M_.bottomRightCorner(m, m).triangularView<Eigen::Lower>() -= E * C.transpose();
          M_.block(k + 2, k, m, 2) = E;
        }
      }
      k += kstep;
    }
  }

  int dim() const { return static_cast<int>(perm_.size()); }
  const Inertia& inertia() const { return inertia_; }
  double zero_tol() const { return zero_tol_; }
  bool singular() const { return inertia_.zero > 0; }

  /// Solves K x = rhs with one step of iterative refinement.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    if (singular()) throw SingularFactorError("LdlFactor::solve on a singular factor");
    Eigen::MatrixXd x = raw_solve(rhs);
    Eigen::MatrixXd r = rhs - K_ * x;
    x += raw_solve(r);
    return x;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::MatrixXd x = solve(Eigen::MatrixXd(rhs));
    return x.col(0);
  }

 private:
  double threshold(int a, int b) const {
    if (zero_tol_ >= 0.0) return zero_tol_;
    return kRelTol * std::max(row_scale_[perm_[a]], row_scale_[perm_[b]]);
  }

  void classify(double ev, double tol) {
    if (std::abs(ev) <= tol) ++inertia_.zero;
    else if (ev > 0.0) ++inertia_.pos;
    else ++inertia_.neg;
  }

  /// Exchanges rows/columns a < b of the lower-stored working matrix,
  /// including the rows of the L columns computed so far.
  void symmetric_swap(int a, int b) {
    if (a > b) std::swap(a, b);
    const int n = static_cast<int>(M_.rows());
    for (int j = 0; j < a; ++j) std::swap(M_(a, j), M_(b, j));
    for (int i = a + 1; i < b; ++i) std::swap(M_(i, a), M_(b, i));
    for (int i = b + 1; i < n; ++i) std::swap(M_(i, a), M_(i, b));
    std::swap(M_(a, a), M_(b, b));
    std::swap(perm_[a], perm_[b]);
  }

  Eigen::MatrixXd raw_solve(const Eigen::MatrixXd& rhs) const {
    const int n = dim();
    Eigen::MatrixXd y(n, rhs.cols());
    for (int i = 0; i < n; ++i) y.row(i) = rhs.row(perm_[i]);
    M_.triangularView<Eigen::UnitLower>().solveInPlace(y);
    for (int i = 0; i < n;) {
      if (pivot_size_[i] == 1) {
        y.row(i) /= d_diag_[i];
        ++i;
      } else {
        const double a = d_diag_[i], b = d_off_[i], c = d_diag_[i + 1];
        const double det = a * c - b * b;
        for (int col = 0; col < y.cols(); ++col) {
          const double y0 = y(i, col), y1 = y(i + 1, col);
          y(i, col) = (c * y0 - b * y1) / det;
          y(i + 1, col) = (a * y1 - b * y0) / det;
        }
        i += 2;
      }
    }
    M_.triangularView<Eigen::UnitLower>().transpose().solveInPlace(y);
    Eigen::MatrixXd x(n, rhs.cols());
    for (int i = 0; i < n; ++i) x.row(perm_[i]) = y.row(i);
    return x;
  }

  Eigen::MatrixXd K_;
  Eigen::MatrixXd M_;
  std::vector<int> perm_;
  std::vector<int> pivot_size_;
  Eigen::VectorXd d_diag_;
  Eigen::VectorXd d_off_;
  Inertia inertia_;
  static constexpr double kRelTol = 1e-13;
  Eigen::VectorXd row_scale_;
  double norm_inf_ = 0.0;
  double zero_tol_ = -1.0;
};

/// Inertia of a symmetric matrix from its LDLᵀ factorization.
inline Inertia inertia_of(const Eigen::MatrixXd& K, double zero_tol = -1.0) {
  return LdlFactor(K, zero_tol).inertia();
}

}  // namespace baladin::kkt
