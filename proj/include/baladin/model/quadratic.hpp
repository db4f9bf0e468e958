#pragma once

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace baladin::model {

/// c·x_i·x_j with i ≤ j.
struct QuadTerm {
  int i = 0;
  int j = 0;
  double c = 0.0;
};

/**
 * Sparse quadratic q(x) = constant + Σ a_k x_k + Σ c·x_i·x_j.
 */
struct QuadraticFunction {
  double constant = 0.0;
  std::vector<std::pair<int, double>> linear;
  std::vector<QuadTerm> quad;

  void add_linear(int i, double a) {
    if (a != 0.0) linear.emplace_back(i, a);
  }
  void add_quad(int i, int j, double c) {
    if (c == 0.0) return;
    if (i > j) std::swap(i, j);
    quad.push_back({i, j, c});
  }

  /// Merges duplicate entries and drops exact zeros; keeps a canonical order.
  void normalize() {
    std::map<int, double> lin;
    for (auto [i, a] : linear) lin[i] += a;
    linear.clear();
    for (auto [i, a] : lin)
      if (a != 0.0) linear.emplace_back(i, a);
    std::map<std::pair<int, int>, double> q;
    for (const auto& t : quad) q[{t.i, t.j}] += t.c;
    quad.clear();
    for (auto [ij, c] : q)
      if (c != 0.0) quad.push_back({ij.first, ij.second, c});
  }

  template <typename Vec>
  double value(const Vec& x) const {
    double v = constant;
    for (auto [i, a] : linear) v += a * x[i];
    for (const auto& t : quad) v += t.c * x[t.i] * x[t.j];
    return v;
  }

  /// g += scale·∇q(x).
  template <typename Vec, typename Out>
  void add_gradient(const Vec& x, double scale, Out& g) const {
    for (auto [i, a] : linear) g[i] += scale * a;
    for (const auto& t : quad) {
      if (t.i == t.j) {
        g[t.i] += scale * 2.0 * t.c * x[t.i];
      } else {
        g[t.i] += scale * t.c * x[t.j];
        g[t.j] += scale * t.c * x[t.i];
      }
    }
  }

  /// H += scale·∇²q (constant).
  void add_hessian(double scale, Eigen::MatrixXd& H) const {
    for (const auto& t : quad) {
      if (t.i == t.j) {
        H(t.i, t.i) += scale * 2.0 * t.c;
      } else {
        H(t.i, t.j) += scale * t.c;
        H(t.j, t.i) += scale * t.c;
      }
    }
  }

  std::vector<int> support() const {
    std::vector<int> s;
    for (auto [i, a] : linear) s.push_back(i);
    for (const auto& t : quad) {
      s.push_back(t.i);
      s.push_back(t.j);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
  }
};

/**
 * Constraint row c(x) = base(x) + Σ_k q_k(x)². Quadratic rows leave `squares`
 * empty; apparent-power limits use two squared quadratics (P and Q).
 */
struct ConstraintRow {
  QuadraticFunction base;
  std::vector<QuadraticFunction> squares;
  std::vector<int> support;  // sorted variable indices touched by the row

  bool is_quadratic() const { return squares.empty(); }

  void finalize() {
    base.normalize();
    for (auto& q : squares) q.normalize();
    support = base.support();
    for (const auto& q : squares) {
      auto s = q.support();
      support.insert(support.end(), s.begin(), s.end());
    }
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
  }

  template <typename Vec>
  double value(const Vec& x) const {
    double v = base.value(x);
    for (const auto& q : squares) {
      double qv = q.value(x);
      v += qv * qv;
    }
    return v;
  }

  template <typename Vec, typename Out>
  void add_gradient(const Vec& x, double scale, Out& g) const {
    base.add_gradient(x, scale, g);
    for (const auto& q : squares) q.add_gradient(x, scale * 2.0 * q.value(x), g);
  }

  /// H += scale·∇²c(x).
  template <typename Vec>
  void add_hessian(const Vec& x, double scale, Eigen::MatrixXd& H) const {
    base.add_hessian(scale, H);
    if (squares.empty()) return;
    const int n = static_cast<int>(support.size());
    for (const auto& q : squares) {
      // 2(∇q∇qᵀ + q∇²q), formed on the row support only
      Eigen::VectorXd gq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(H.rows()));
      q.add_gradient(x, 1.0, gq);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) H(support[a], support[b]) += scale * 2.0 * gq[support[a]] * gq[support[b]];
      q.add_hessian(scale * 2.0 * q.value(x), H);
    }
  }
};

}  // namespace baladin::model
