#pragma once

// Dense two-phase tableau simplex for standard-form LPs
//
//   minimize c^T x  subject to  A x = b,  x >= 0
//
// with Bland's anti-cycling rule. Besides the primal solution it returns the
// optimal duals y (A^T y <= c, b^T y = c^T x*) and, on infeasibility, a
// Farkas ray y with A^T y <= 0 and b^T y > 0.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "bellforge/errors.hpp"

namespace bellforge::lp {

enum class Status { optimal, infeasible, unbounded };

struct Solution {
  Status status = Status::infeasible;
  Eigen::VectorXd x;        // primal point (optimal only)
  Eigen::VectorXd duals;    // optimal duals (optimal only)
  Eigen::VectorXd farkas;   // infeasibility ray (infeasible only)
  double objective = 0.0;   // c^T x at optimum
  double infeasibility = 0.0;  // phase-1 optimum: sum of artificial values
  std::size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  // Rows 0..m-1 are constraints, row m holds reduced costs. Columns 0..n-1
  // are structural, n..n+m-1 artificial, n+m is the right-hand side.
  Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol)
      : m_(a.rows()), n_(a.cols()), tol_(tol), t_(m_ + 1, n_ + m_ + 1), basis_(static_cast<std::size_t>(m_)) {
    sign_.resize(m_);
    t_.setZero();
    for (Eigen::Index i = 0; i < m_; ++i) {
      sign_(i) = b(i) < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign_(i) * a.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs()) = sign_(i) * b(i);
      basis_[static_cast<std::size_t>(i)] = n_ + i;
    }
  }

  Eigen::Index rows() const { return m_; }
  Eigen::Index structural() const { return n_; }
  Eigen::Index rhs() const { return n_ + m_; }
  bool is_artificial(Eigen::Index j) const { return j >= n_ && j < n_ + m_; }

  // Load reduced costs for column costs `cost` (size n + m).
  void set_objective(const Eigen::VectorXd& cost) {
    t_.row(m_).setZero();
    t_.row(m_).head(n_ + m_) = cost.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  double objective_value() const { return -t_(m_, rhs()); }

  // Bland: lowest-index improving column among allowed ones.
  Eigen::Index entering(bool allow_artificial) const {
    const Eigen::Index limit = allow_artificial ? n_ + m_ : n_;
    for (Eigen::Index j = 0; j < limit; ++j)
      if (t_(m_, j) < -tol_) return j;
    return -1;
  }

  // Minimum ratio; ties broken by the lowest basic variable index.
  Eigen::Index leaving(Eigen::Index col) const {
    Eigen::Index best = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double a = t_(i, col);
      if (a <= tol_) continue;
      const double ratio = std::max(t_(i, rhs()), 0.0) / a;
      if (best < 0 || ratio < best_ratio - tol_ ||
          (std::abs(ratio - best_ratio) <= tol_ && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(best)])) {
        best = i;
        best_ratio = ratio;
      }
    }
    return best;
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
    ++pivots_;
  }

  // Run simplex iterations until optimal or unbounded.
  Status iterate(bool allow_artificial) {
    const std::size_t cap = 50000 + 50 * static_cast<std::size_t>(n_ + m_);
    for (std::size_t it = 0; it < cap; ++it) {
      const auto col = entering(allow_artificial);
      if (col < 0) return Status::optimal;
      const auto row = leaving(col);
      if (row < 0) return Status::unbounded;
      pivot(row, col);
    }
    throw NumericalError("simplex iteration limit reached");
  }

  // Move basic artificials at zero level out of the basis where possible.
  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) continue;
      for (Eigen::Index j = 0; j < n_; ++j)
        if (std::abs(t_(i, j)) > tol_) {
          pivot(i, j);
          break;
        }
    }
  }

  Eigen::VectorXd primal() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const auto j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) x(j) = std::max(t_(i, rhs()), 0.0);
    }
    return x;
  }

  // y_i = sign_i * (c_art_i - reduced_cost_art_i), undoing the row flips.
  Eigen::VectorXd duals(const Eigen::VectorXd& cost) const {
    Eigen::VectorXd y(m_);
    for (Eigen::Index i = 0; i < m_; ++i) y(i) = sign_(i) * (cost(n_ + i) - t_(m_, n_ + i));
    return y;
  }

  std::size_t pivots() const { return pivots_; }

 private:
  Eigen::Index m_, n_;
  double tol_;
  Eigen::MatrixXd t_;
  Eigen::VectorXd sign_;
  std::vector<Eigen::Index> basis_;
  std::size_t pivots_ = 0;
};

}  // namespace detail

// Phase 1 only: decide feasibility of {A x = b, x >= 0}.
inline Solution feasibility(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol = tol::kLp) {
  detail::Tableau tab(a, b, tol);
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(a.cols() + a.rows());
  phase1.tail(a.rows()).setOnes();
  tab.set_objective(phase1);
  (void)tab.iterate(true);  // phase 1 is bounded below by 0
  Solution s;
  s.infeasibility = tab.objective_value();
  s.pivots = tab.pivots();
  if (s.infeasibility > tol) {
    s.status = Status::infeasible;
    s.farkas = tab.duals(phase1);
    return s;
  }
  s.status = Status::optimal;
  s.x = tab.primal();
  return s;
}

inline Solution minimize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                         double tol = tol::kLp) {
  if (b.size() != a.rows() || c.size() != a.cols()) throw ValidationError("LP dimension mismatch");
  detail::Tableau tab(a, b, tol);
  const auto n = a.cols(), m = a.rows();
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  tab.set_objective(phase1);
  (void)tab.iterate(true);
  Solution s;
  s.infeasibility = tab.objective_value();
  if (s.infeasibility > tol) {
    s.status = Status::infeasible;
    s.farkas = tab.duals(phase1);
    s.pivots = tab.pivots();
    return s;
  }
  tab.drive_out_artificials();
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  tab.set_objective(phase2);
  s.status = tab.iterate(false);
  s.pivots = tab.pivots();
  if (s.status == Status::unbounded) return s;
  s.x = tab.primal();
  s.objective = c.dot(s.x);
  s.duals = tab.duals(phase2);
  return s;
}

}  // namespace bellforge::lp
