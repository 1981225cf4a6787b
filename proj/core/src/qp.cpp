#include "bernfit/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bernfit/errors.hpp"

namespace bernfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Factorisation of the (scaled) Hessian G = 2 (gram + ridge I) = L L^T.
struct Hessian {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd lower;

  explicit Hessian(const Eigen::MatrixXd& g) : llt(g) {
    if (llt.info() != Eigen::Success) throw NumericalError("QP Hessian is not positive definite");
    lower = llt.matrixL();
  }
  // L^{-1} v
  Eigen::VectorXd half_solve(const Eigen::VectorXd& v) const {
    return llt.matrixL().solve(v);
  }
  Eigen::MatrixXd half_solve(const Eigen::MatrixXd& v) const { return llt.matrixL().solve(v); }
  // L^{-T} v
  Eigen::VectorXd half_solve_t(const Eigen::VectorXd& v) const {
    return llt.matrixU().solve(v);
  }
};

struct ActiveRow {
  Eigen::Index row;
  double sign;  // +1, or -1 for an equality row entered from the other side
  bool equality;
};

class DualActiveSet {
 public:
  DualActiveSet(const Eigen::MatrixXd& g, const Eigen::VectorXd& a, const ConstraintSystem& cons,
                double tol)
      : hess_(g), a_(a), cons_(cons), tol_(tol) {
    x_ = -hess_.half_solve_t(hess_.half_solve(a_));
    const auto p = static_cast<std::size_t>(g.rows());
    max_iter_ = 50 * static_cast<int>(p + static_cast<std::size_t>(cons.rows()));
  }

  void run() {
    // Equalities first, in row order; they are never dropped.
    for (Eigen::Index r = 0; r < cons_.rows(); ++r) {
      if (cons_.equality[static_cast<std::size_t>(r)]) add(r, true);
    }
    while (true) {
      Eigen::Index worst = -1;
      double worst_slack = 0.0;
      for (Eigen::Index r = 0; r < cons_.rows(); ++r) {
        if (cons_.equality[static_cast<std::size_t>(r)] || is_active(r)) continue;
        const double s = cons_.A.row(r).dot(x_) - cons_.b[r];
        if (s < -threshold(r) && s < worst_slack) {
          worst_slack = s;
          worst = r;
        }
      }
      if (worst < 0) break;
      add(worst, false);
    }
  }

  const Eigen::VectorXd& x() const { return x_; }
  const std::vector<ActiveRow>& active() const { return active_; }
  const std::vector<double>& u() const { return u_; }
  int iterations() const { return iterations_; }
  const Hessian& hessian() const { return hess_; }

 private:
  double threshold(Eigen::Index r) const {
    return 1e-12 * (1.0 + cons_.A.row(r).cwiseAbs().sum() * x_.cwiseAbs().maxCoeff() +
                    std::abs(cons_.b[r]));
  }

  bool is_active(Eigen::Index r) const {
    return std::any_of(active_.begin(), active_.end(),
                       [r](const ActiveRow& a) { return a.row == r; });
  }

  Eigen::MatrixXd normals() const {
    Eigen::MatrixXd n(x_.size(), static_cast<Eigen::Index>(active_.size()));
    for (std::size_t j = 0; j < active_.size(); ++j) {
      n.col(static_cast<Eigen::Index>(j)) = active_[j].sign * cons_.A.row(active_[j].row).transpose();
    }
    return n;
  }

  void tick() {
    if (++iterations_ > max_iter_) {
      throw NumericalError("active-set solver did not converge within " +
                           std::to_string(max_iter_) + " changes");
    }
  }

  void add(Eigen::Index p, bool equality) {
    double sign = 1.0;
    double slack = cons_.A.row(p).dot(x_) - cons_.b[p];
    if (equality && slack > 0.0) {
      sign = -1.0;
      slack = -slack;
    }
    if (!equality && slack >= 0.0) return;
    const Eigen::VectorXd n = sign * cons_.A.row(p).transpose();
    const double bp = sign * cons_.b[p];
    double u_new = 0.0;

    while (true) {
      tick();
      slack = n.dot(x_) - bp;
      if (!equality && slack >= 0.0) return;
      // Primal direction z and dual direction r (G-I step directions),
      // via the L-scaled normals: z = L^{-T}(nt - Nt r), r = argmin ||Nt r - nt||.
      const Eigen::VectorXd nt = hess_.half_solve(n);
      Eigen::VectorXd r;
      Eigen::VectorXd resid = nt;
      if (!active_.empty()) {
        const Eigen::MatrixXd ntilde = hess_.half_solve(normals());
        r = ntilde.colPivHouseholderQr().solve(nt);
        resid = nt - ntilde * r;
      }
      const Eigen::VectorXd z = hess_.half_solve_t(resid);
      const double zn = resid.squaredNorm();

      double t1 = kInf;
      std::size_t drop = active_.size();
      for (std::size_t j = 0; j < active_.size(); ++j) {
        if (active_[j].equality) continue;
        const double rj = r[static_cast<Eigen::Index>(j)];
        if (rj > 1e-14) {
          const double ratio = u_[j] / rj;
          if (ratio < t1 || (ratio == t1 && active_[j].row < active_[drop].row)) {
            t1 = ratio;
            drop = j;
          }
        }
      }

      const bool degenerate = zn <= 1e-13 * nt.squaredNorm();
      if (degenerate) {
        // An equality dependent on the active rows and already met is redundant.
        if (equality && std::abs(slack) <= threshold(p)) return;
        if (t1 == kInf) {
          throw NumericalError("constraint system is infeasible (row " + std::to_string(p) +
                               " is inconsistent with the active rows)");
        }
        step_dual(t1, r, u_new);
        remove(drop);
        continue;
      }
      const double t2 = -slack / zn;
      const double t = std::min(t1, t2);
      x_ += t * z;
      step_dual(t, r, u_new);
      if (t2 <= t1) {
        active_.push_back({p, sign, equality});
        u_.push_back(u_new);
        return;
      }
      remove(drop);
    }
  }

  void step_dual(double t, const Eigen::VectorXd& r, double& u_new) {
    for (std::size_t j = 0; j < active_.size(); ++j) u_[j] -= t * r[static_cast<Eigen::Index>(j)];
    u_new += t;
  }

  void remove(std::size_t j) {
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(j));
    u_.erase(u_.begin() + static_cast<std::ptrdiff_t>(j));
  }

  Hessian hess_;
  Eigen::VectorXd a_;
  const ConstraintSystem& cons_;
  double tol_;
  Eigen::VectorXd x_;
  std::vector<ActiveRow> active_;
  std::vector<double> u_;
  int iterations_ = 0;
  int max_iter_ = 0;
};

double auto_ridge(const Eigen::MatrixXd& gram, bool& bumped) {
  bumped = false;
  const double trace = gram.trace();
  if (gram.rows() == 0) return 0.0;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < 1e-10 * trace || trace <= 0.0) {
    bumped = true;
    return trace > 0.0 ? 1e-8 * trace : 1e-8;
  }
  return 0.0;
}

QpSolution solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& zty, double yty,
                      const ConstraintSystem& cons, double ridge, double tol,
                      const QpProblem* raw) {
  const Eigen::Index p = gram.rows();
  if (gram.cols() != p || zty.size() != p) throw ConfigError("QP Gram dimensions inconsistent");
  if (cons.coef_len != p) {
    throw ConfigError("constraint system has " + std::to_string(cons.coef_len) +
                      " columns but the design has " + std::to_string(p));
  }
  if (ridge < 0.0) throw ConfigError("ridge must be non-negative");

  QpSolution sol;
  const double extra = auto_ridge(gram, sol.ridge_bumped);
  sol.ridge = ridge + extra;
  Eigen::MatrixXd h = gram;
  h.diagonal().array() += sol.ridge;
  const Eigen::MatrixXd g = 2.0 * h;
  const Eigen::VectorXd a = -2.0 * zty;

  DualActiveSet solver(g, a, cons, tol);
  solver.run();
  Eigen::VectorXd x = solver.x();
  const auto& active = solver.active();
  Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(solver.u().data(),
                                                        static_cast<Eigen::Index>(solver.u().size()));

  // Polish: solve the equality-constrained problem on the final active set.
  if (!active.empty()) {
    const Hessian& hs = solver.hessian();
    Eigen::MatrixXd n(p, static_cast<Eigen::Index>(active.size()));
    Eigen::VectorXd bact(static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) {
      n.col(static_cast<Eigen::Index>(j)) = cons.A.row(active[j].row).transpose();
      bact[static_cast<Eigen::Index>(j)] = cons.b[active[j].row];
    }
    const Eigen::MatrixXd nt = hs.half_solve(n);
    const Eigen::VectorXd at = hs.half_solve(a);
    const Eigen::MatrixXd m = nt.transpose() * nt;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd lam = ldlt.solve(bact + nt.transpose() * at);
      const Eigen::VectorXd xp = hs.half_solve_t(hs.half_solve(Eigen::VectorXd(n * lam - a)));
      if (xp.allFinite() && lam.allFinite()) {
        bool ok = true;
        for (std::size_t j = 0; j < active.size(); ++j) {
          if (!active[j].equality && lam[static_cast<Eigen::Index>(j)] < -tol) ok = false;
        }
        const Eigen::VectorXd slack = cons.A * xp - cons.b;
        for (Eigen::Index r = 0; r < slack.size() && ok; ++r) {
          if (!cons.equality[static_cast<std::size_t>(r)] && slack[r] < -tol * (1.0 + std::abs(cons.b[r]))) ok = false;
        }
        if (ok) {
          x = xp;
          u = lam;
        }
      }
    }
  }

  sol.beta = x;
  sol.iterations = solver.iterations();
  sol.multipliers = Eigen::VectorXd::Zero(cons.rows());
  for (std::size_t j = 0; j < active.size(); ++j) {
    sol.active_set.push_back(active[j].row);
    double lam = u[static_cast<Eigen::Index>(j)];
    if (!active[j].equality) lam = std::max(lam, 0.0);
    sol.multipliers[active[j].row] = lam;
  }
  if (raw != nullptr) {
    sol.objective = (raw->Z * x - raw->y).squaredNorm() + sol.ridge * x.squaredNorm();
  } else {
    sol.objective = x.dot(h * x) - 2.0 * zty.dot(x) + yty;
  }
  const Eigen::VectorXd grad = 2.0 * (h * x - zty);
  const Eigen::VectorXd stat =
      cons.empty() ? grad : Eigen::VectorXd(grad - cons.A.transpose() * sol.multipliers);
  sol.kkt_residual = stat.cwiseAbs().maxCoeff();
  return sol;
}

}  // namespace

QpSolution solve_clsq(const QpProblem& problem, double tol) {
  if (problem.Z.rows() != problem.y.size()) {
    throw ConfigError("design has " + std::to_string(problem.Z.rows()) + " rows but response has " +
                      std::to_string(problem.y.size()));
  }
  const Eigen::MatrixXd gram = problem.Z.transpose() * problem.Z;
  const Eigen::VectorXd zty = problem.Z.transpose() * problem.y;
  return solve_gram(gram, zty, problem.y.squaredNorm(), problem.constraints, problem.ridge, tol,
                    &problem);
}

QpSolution solve_clsq(const QpGramProblem& problem, double tol) {
  return solve_gram(problem.gram, problem.zty, problem.yty, problem.constraints, problem.ridge, tol,
                    nullptr);
}

OmegaProjector::OmegaProjector(const Eigen::MatrixXd& omega, ConstraintSystem constraints,
                               std::vector<std::string>* warnings)
    : constraints_(std::move(constraints)) {
  if (omega.rows() != omega.cols() || omega.rows() != constraints_.coef_len) {
    throw ConfigError("omega must be square with the constraint system's coefficient length");
  }
  Eigen::MatrixXd sym = 0.5 * (omega + omega.transpose());
  const double trace = sym.trace();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-10 * std::abs(trace)) {
    throw NumericalError("omega is not positive semidefinite (min eigenvalue " +
                         std::to_string(min_eig) + ")");
  }
  const double floor = 1e-12 * trace;
  if (min_eig < floor) {
    Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(floor);
    sym = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    if (warnings) warnings->push_back("omega eigenvalues clipped to 1e-12 * trace");
  }
  omega_ = std::move(sym);
}

Eigen::VectorXd OmegaProjector::operator()(const Eigen::VectorXd& z) const {
  if (z.size() != constraints_.coef_len) throw ConfigError("projection point has wrong length");
  if (check_constraints(z, constraints_, 0.0).feasible) return z;
  QpGramProblem qp;
  qp.gram = omega_;
  qp.zty = omega_ * z;
  qp.yty = z.dot(qp.zty);
  qp.constraints = constraints_;
  return solve_clsq(qp).beta;
}

Eigen::VectorXd project_omega(const Eigen::VectorXd& z, const Eigen::MatrixXd& omega,
                              const ConstraintSystem& constraints,
                              std::vector<std::string>* warnings) {
  return OmegaProjector(omega, constraints, warnings)(z);
}

}  // namespace bernfit
