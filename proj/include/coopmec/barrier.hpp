#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace coopmec::convex {

struct LinearConstraint {
  Eigen::VectorXd a;
  double c = 0;  // a^T x <= c
};

// Smooth convex objective over an intersection of half-spaces and box
// bounds.  `objective` returns the value and fills the gradient; `hessian`
// is optional and is replaced by central differences of the gradient when
// absent.  Empty bound vectors mean unbounded coordinates.
struct SmoothProgram {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> objective;
  std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)> hessian;
  std::vector<LinearConstraint> constraints;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd interior;  // strictly feasible start
};

struct SolveOutcome {
  Eigen::VectorXd x_star;
  double value = 0;            // objective at x_star, barrier excluded
  double grad_norm = 0;        // Newton decrement at the final center
  double barrier_mu_final = 0;
  int newton_iters = 0;
  bool converged = false;
};

namespace detail {

inline std::vector<LinearConstraint> collect_rows(const SmoothProgram& prog) {
  std::vector<LinearConstraint> rows = prog.constraints;
  auto push_bound = [&rows, &prog](int j, double bound, double sign) {
    if (!std::isfinite(bound)) return;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(prog.dim);
    a[j] = sign;
    rows.push_back({a, sign * bound});
  };
  for (int j = 0; j < prog.dim; ++j) {
    if (prog.lower.size() == prog.dim) push_bound(j, prog.lower[j], -1.0);
    if (prog.upper.size() == prog.dim) push_bound(j, prog.upper[j], +1.0);
  }
  return rows;
}

inline Eigen::VectorXd slacks(const std::vector<LinearConstraint>& rows, const Eigen::VectorXd& x) {
  Eigen::VectorXd s(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) s[i] = rows[i].c - rows[i].a.dot(x);
  return s;
}

// Central differences on the gradient; h shrinks when a probe leaves the
// objective's domain (non-finite gradient).
inline void fd_hessian(const SmoothProgram& prog, const Eigen::VectorXd& x, Eigen::MatrixXd& hess) {
  const int n = prog.dim;
  hess.resize(n, n);
  Eigen::VectorXd gp(n), gm(n), probe(n);
  for (int j = 0; j < n; ++j) {
    double h = 6.1e-6 * std::max(1.0, std::abs(x[j]));
    for (int attempt = 0; attempt < 4; ++attempt) {
      probe = x;
      probe[j] = x[j] + h;
      prog.objective(probe, gp);
      probe[j] = x[j] - h;
      prog.objective(probe, gm);
      if (gp.allFinite() && gm.allFinite()) break;
      h *= 0.1;
    }
    hess.col(j) = (gp - gm) / (2 * h);
  }
  hess = ((hess + hess.transpose()) / 2).eval();
}

}  // namespace detail

// Log-barrier interior-point minimization.  Each stage centers
// f + mu * sum_i -log(slack_i) with damped Newton and backtracking, then mu
// shrinks tenfold until the duality-gap bound m * mu falls below tol.
inline SolveOutcome minimize(const SmoothProgram& prog, double tol = 1e-8) {
  if (prog.dim <= 0 || !prog.objective) throw std::invalid_argument("minimize: empty program");
  if (prog.interior.size() != prog.dim)
    throw std::invalid_argument("minimize: interior start has wrong dimension");

  const auto rows = detail::collect_rows(prog);
  const auto m = static_cast<double>(rows.size());
  Eigen::VectorXd x = prog.interior;
  Eigen::VectorXd s = detail::slacks(rows, x);
  if ((s.size() > 0 && s.minCoeff() <= 0))
    throw std::invalid_argument("minimize: start is not strictly interior");

  Eigen::VectorXd grad(prog.dim);
  double fval = prog.objective(x, grad);
  if (!std::isfinite(fval) || !grad.allFinite())
    throw std::invalid_argument("minimize: objective not finite at the start");

  auto phi = [&](const Eigen::VectorXd& y, double mu, Eigen::VectorXd* g) {
    Eigen::VectorXd sy = detail::slacks(rows, y);
    if (sy.size() > 0 && sy.minCoeff() <= 0) return std::numeric_limits<double>::infinity();
    Eigen::VectorXd gf(prog.dim);
    double v = prog.objective(y, gf);
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) v -= mu * std::log(sy[i]);
    if (g) {
      *g = gf;
      for (std::size_t i = 0; i < rows.size(); ++i) *g += (mu / sy[i]) * rows[i].a;
    }
    return v;
  };

  SolveOutcome out;
  out.x_star = x;
  out.value = fval;

  double mu = rows.empty() ? 0.0 : std::max(std::abs(fval), 1.0) / m;
  const int max_total_iters = 600;
  const int max_stage_iters = 120;
  Eigen::MatrixXd hess(prog.dim, prog.dim);
  bool done = false;
  while (!done) {
    done = rows.empty() || m * mu <= tol;  // current stage is the last one
    // lambda^2/2 bounds the centering gap, so that is the quantity tested
    const double stage_gap = done ? tol : std::max(tol, 0.1 * mu);
    double decrement = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_stage_iters; ++it) {
      Eigen::VectorXd g(prog.dim);
      double val = phi(x, mu, &g);
      if (prog.hessian)
        prog.hessian(x, hess);
      else
        detail::fd_hessian(prog, x, hess);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double si = rows[i].c - rows[i].a.dot(x);
        hess.noalias() += (mu / (si * si)) * rows[i].a * rows[i].a.transpose();
      }

      Eigen::VectorXd step;
      double tau = 0;
      for (int reg = 0; reg < 8; ++reg) {
        Eigen::MatrixXd hreg = hess;
        if (tau > 0) hreg.diagonal().array() += tau;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hreg);
        step = ldlt.solve(-g);
        if (ldlt.info() == Eigen::Success && step.allFinite() && g.dot(step) < 0) break;
        tau = (tau == 0) ? 1e-10 * (1 + hess.diagonal().cwiseAbs().maxCoeff()) : tau * 100;
        step.setZero();
      }
      if (step.isZero()) break;

      decrement = std::sqrt(std::max(0.0, -g.dot(step)));
      if (0.5 * decrement * decrement <= stage_gap) break;

      double t_max = 1.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double ad = rows[i].a.dot(step);
        if (ad > 0) t_max = std::min(t_max, 0.99 * (rows[i].c - rows[i].a.dot(x)) / ad);
      }
      double t = t_max;
      const double armijo = 1e-4 * g.dot(step);
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        if (phi(x + t * step, mu, nullptr) <= val + t * armijo) {
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
      x += t * step;
      ++out.newton_iters;
      if (out.newton_iters >= max_total_iters) break;
    }
    if (done) {
      out.converged = 0.5 * decrement * decrement <= tol;
      out.grad_norm = decrement;
      break;
    }
    if (out.newton_iters >= max_total_iters) {
      out.converged = false;
      break;
    }
    mu /= 10;
  }

  out.x_star = x;
  Eigen::VectorXd gf(prog.dim);
  out.value = prog.objective(x, gf);
  out.barrier_mu_final = mu;
  return out;
}

// Restrict a program to the affine subspace x = M y + c0.  Constraints and
// bounds transform into rows over y; rows that lose all variables must hold
// identically and are dropped.  The caller supplies the reduced-space start.
inline SmoothProgram substitute(const SmoothProgram& full, const Eigen::MatrixXd& map,
                                const Eigen::VectorXd& offset,
                                const Eigen::VectorXd& interior_reduced) {
  if (map.rows() != full.dim || offset.size() != full.dim)
    throw std::invalid_argument("substitute: map/offset shape mismatch");
  SmoothProgram red;
  red.dim = static_cast<int>(map.cols());
  red.interior = interior_reduced;
  red.objective = [obj = full.objective, map, offset](const Eigen::VectorXd& y,
                                                      Eigen::VectorXd& grad) {
    Eigen::VectorXd gx(map.rows());
    double v = obj(map * y + offset, gx);
    grad = map.transpose() * gx;
    return v;
  };
  if (full.hessian) {
    red.hessian = [hess = full.hessian, map, offset](const Eigen::VectorXd& y,
                                                     Eigen::MatrixXd& out) {
      Eigen::MatrixXd hx(map.rows(), map.rows());
      hess(map * y + offset, hx);
      out = map.transpose() * hx * map;
    };
  }
  for (const auto& row : detail::collect_rows(full)) {
    Eigen::VectorXd a_red = map.transpose() * row.a;
    double c_red = row.c - row.a.dot(offset);
    if (a_red.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, row.a.lpNorm<Eigen::Infinity>())) {
      if (c_red < -1e-12)
        throw std::invalid_argument("substitute: eliminated constraint is violated");
      continue;
    }
    red.constraints.push_back({a_red, c_red});
  }
  return red;
}

}  // namespace coopmec::convex
