#include "cbi/mechanism.hpp"

#include <Eigen/LU>
#include <cmath>

#include "cbi/ode.hpp"

namespace cbi {

Mechanism::Mechanism(AdmissibleParams params) : params_(std::move(params)) {
  const ValidationReport rep = validate(params_);
  if (!rep.ok)
    throw std::invalid_argument("invalid parameters: " + rep.violations[0]);
}

Vector Mechanism::phi(const Vector& lambda) const {
  const Index d = params_.d;
  Vector out(d);
  for (Index i = 0; i < d; ++i) {
    double v = params_.c(i) * lambda(i) * lambda(i) -
               params_.B.col(i).dot(lambda);
    for (const auto& a : params_.mu[i].atoms())
      v += a.weight * (std::exp(-lambda.dot(a.point)) - 1.0 +
                       lambda(i) * std::min(1.0, a.point(i)));
    out(i) = v;
  }
  return out;
}

double Mechanism::psi(const Vector& lambda) const {
  return params_.beta.dot(lambda) +
         exp_integral(params_.nu, JumpSet::full_space(), lambda);
}

Matrix Mechanism::phi_jacobian(const Vector& lambda) const {
  const Index d = params_.d;
  Matrix J = -params_.B.transpose();
  for (Index i = 0; i < d; ++i) {
    J(i, i) += 2.0 * params_.c(i) * lambda(i);
    for (const auto& a : params_.mu[i].atoms()) {
      const double e = a.weight * std::exp(-lambda.dot(a.point));
      for (Index j = 0; j < d; ++j) J(i, j) -= a.point(j) * e;
      J(i, i) += a.weight * std::min(1.0, a.point(i));
    }
  }
  return J;
}

bool Mechanism::in_D_phi(const Vector& lambda) const {
  const Vector v = phi(lambda);
  return (v.array() > 0.0).all();
}

bool Mechanism::psi_identically_zero() const {
  return params_.beta.isZero(0.0) && params_.nu.is_zero();
}

Vector phi_modified(const Mechanism& mech, const JumpSet& A,
                    const Vector& lambda) {
  Vector out = mech.phi(lambda);
  for (Index l = 0; l < mech.dim(); ++l)
    out(l) += exp_integral(mech.params().mu[l], A, lambda);
  return out;
}

double psi_modified(const Mechanism& mech, const JumpSet& A,
                    const Vector& lambda) {
  return mech.params().beta.dot(lambda) +
         exp_integral(mech.params().nu, JumpSet::complement(A), lambda);
}

namespace {

Vector clamp_orthant(Vector x) {
  for (Index i = 0; i < x.size(); ++i) x(i) = std::max(x(i), 0.0);
  return x;
}

// Damped Newton from a given start. Step halving until the residual
// decreases, minimum step factor 2^-20.
InverseResult newton_from(const Mechanism& mech, const Vector& lambda,
                          Vector x, const InverseOptions& opts) {
  InverseResult res;
  double rn = (mech.phi(x) - lambda).lpNorm<Eigen::Infinity>();
  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it;
    if (rn <= opts.tol) {
      res.converged = mech.in_D_phi(x);
      if (!res.converged) res.note = "root found outside D_phi";
      res.x = x;
      res.residual = rn;
      return res;
    }
    const Vector r = mech.phi(x) - lambda;
    const Vector dx = mech.phi_jacobian(x).partialPivLu().solve(r);
    if (!dx.allFinite()) break;
    double alpha = 1.0;
    bool moved = false;
    while (alpha >= 0x1p-20) {
      const Vector xn = clamp_orthant(x - alpha * dx);
      const double rn_new = (mech.phi(xn) - lambda).lpNorm<Eigen::Infinity>();
      if (rn_new < rn) {
        x = xn;
        rn = rn_new;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;  // stalled
  }
  res.converged = false;
  res.x = x;
  res.residual = rn;
  res.note = "newton stalled";
  return res;
}

}  // namespace

InverseResult inverse_phi(const Mechanism& mech, const Vector& lambda,
                          const InverseOptions& opts) {
  const Index d = mech.dim();
  if (!(lambda.array() > 0.0).all())
    throw std::invalid_argument("inverse_phi needs strictly positive lambda");

  Vector x0(d);
  const Matrix J = mech.phi_jacobian(lambda);
  for (Index i = 0; i < d; ++i)
    x0(i) = lambda(i) / std::max(1e-8, J(i, i));
  InverseResult res = newton_from(mech, lambda, clamp_orthant(x0), opts);
  if (res.converged) return res;

  // Certified fallback: the integrated-mechanism flow converges to the
  // inverse whenever its limit is finite.
  OdeControl ctrl;
  const LimitResult lim = limit_vtilde(mech, lambda, ctrl);
  if (lim.status == LimitStatus::Finite) {
    InverseResult res2 = newton_from(mech, lambda, lim.value, opts);
    if (res2.converged) {
      res2.note = "converged from flow-limit initializer";
      return res2;
    }
    if (res2.residual < res.residual) res = res2;
  }
  if (res.note.empty()) res.note = "no convergence";
  return res;
}

}  // namespace cbi
