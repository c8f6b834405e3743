#include "cbi/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace cbi {

namespace {

double clamp_probability(double p) {
  if (p > 1.0 && p < 1.0 + 1e-9) return 1.0;
  if (p > 1.0)
    throw std::runtime_error("probability exceeded 1 beyond tolerance: " +
                             std::to_string(p));
  return std::max(p, 0.0);
}

void require_ok(const OdeSolution& sol) {
  if (!sol.ok())
    throw OdeError("ode integration failed: " + sol.failure_reason() +
                   " (last valid t = " + std::to_string(sol.last_time()) +
                   ")");
}

// Adaptive Simpson on [a,b].
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 40);
}

}  // namespace

Matrix matrix_exp(const Matrix& M, double t) {
  const Matrix tM = t * M;
  if (!tM.allFinite())
    throw std::overflow_error("matrix_exp: non-finite input");
  Matrix E = tM.exp();
  if (!E.allFinite())
    throw std::overflow_error("matrix_exp: overflow for ||tM|| = " +
                              std::to_string(tM.norm()));
  return E;
}

Vector mean(const AdmissibleParams& p, const Vector& x, double t) {
  const DerivedDrift dd = derive_drift(p);
  const Index d = p.d;
  // exp(t [[B~, beta~],[0,0]]) carries int_0^t e^{uB~} beta~ du in the
  // top-right column.
  Matrix aug = Matrix::Zero(d + 1, d + 1);
  aug.topLeftCorner(d, d) = dd.B_tilde;
  aug.topRightCorner(d, 1) = dd.beta_tilde;
  const Matrix E = matrix_exp(aug, t);
  Vector out = E.topLeftCorner(d, d) * x + E.topRightCorner(d, 1);
  for (Index i = 0; i < d; ++i) out(i) = std::max(out(i), 0.0);
  return out;
}

double expected_jump_count(const AdmissibleParams& p, const Vector& x,
                           const JumpSet& A, double t) {
  if (t <= 0.0) return 0.0;
  Vector mu_A(p.d);
  for (Index l = 0; l < p.d; ++l) mu_A(l) = mass(p.mu[l], A);
  double total = t * mass(p.nu, A);
  if (!mu_A.isZero(0.0)) {
    const double integral = adaptive_simpson(
        [&](double u) { return mu_A.dot(mean(p, x, u)); }, 0.0, t, 1e-10);
    total += integral;
  }
  return total;
}

double laplace_X(const AdmissibleParams& p, const Vector& x,
                 const Vector& lambda, double t, const OdeControl& ctrl) {
  if (t <= 0.0) return std::exp(-x.dot(lambda));
  const Mechanism mech(p);
  OdeSolution sol = solve_v(mech, lambda, t, ctrl);
  require_ok(sol);
  const double q = integrate_along(
      sol, [&mech](const Vector& v) { return mech.psi(v); }, t);
  return clamp_probability(std::exp(-x.dot(sol.at(t)) - q));
}

double laplace_intX(const AdmissibleParams& p, const Vector& x,
                    const Vector& lambda_tilde, double t,
                    const OdeControl& ctrl) {
  if (t <= 0.0) return 1.0;
  const Mechanism mech(p);
  OdeSolution sol = solve_vtilde(mech, lambda_tilde, t, ctrl);
  require_ok(sol);
  const double q = integrate_along(
      sol, [&mech](const Vector& v) { return mech.psi(v); }, t);
  return clamp_probability(std::exp(-x.dot(sol.at(t)) - q));
}

FirstJumpLaw::FirstJumpLaw(const AdmissibleParams& p, const JumpSet& A,
                           double horizon, const OdeControl& ctrl)
    : modified_(modify_for_set(p, A)), mech_A_(modified_.base) {
  solution_ = solve_vtilde_A(mech_A_, modified_.mu_of_A, horizon, ctrl);
  require_ok(solution_);
  psi_prefix_ = cumulative_integral(
      solution_, [this](const Vector& v) { return mech_A_.psi(v); });
}

double FirstJumpLaw::survival(double t, const Vector& x) const {
  if (t <= 0.0) return 1.0;
  if (t > solution_.last_time() * (1.0 + 1e-12))
    throw std::out_of_range("t exceeds the prepared horizon");
  t = std::min(t, solution_.last_time());
  // full steps from the prefix, the partial tail by direct quadrature
  const auto& grid = solution_.grid();
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double q =
      psi_prefix_[k] +
      integrate_along(
          solution_, [this](const Vector& v) { return mech_A_.psi(v); },
          grid[k], t);
  return clamp_probability(
      std::exp(-modified_.nu_of_A * t - x.dot(solution_.at(t)) - q));
}

double survival_tau(const AdmissibleParams& p, const Vector& x,
                    const JumpSet& A, double t, const OdeControl& ctrl) {
  if (t <= 0.0) return 1.0;
  return FirstJumpLaw(p, A, t, ctrl).survival(t, x);
}

TauInfinityResult prob_tau_infinite(const AdmissibleParams& p, const Vector& x,
                                    const JumpSet& A, const OdeControl& ctrl) {
  TauInfinityResult out;
  const ModifiedParams mod = modify_for_set(p, A);
  const double total_mass = mod.nu_of_A + mod.mu_of_A.sum();
  if (total_mass == 0.0) {
    out.status = TauInfinityStatus::One;
    out.detail = "A carries no mass under nu or any mu_l";
    return out;
  }
  if (mod.nu_of_A > 0.0) {
    out.status = TauInfinityStatus::Zero;
    out.detail = "nu(A) > 0: immigration hits A eventually";
    return out;
  }

  const Mechanism mech(p);
  const Mechanism mech_A(mod.base);
  const bool psi_zero = mech.psi_identically_zero();

  if (!psi_zero) {
    const Matrix B_tilde_A = derive_drift(mod.base).B_tilde;
    if (is_irreducible(B_tilde_A)) {
      out.status = TauInfinityStatus::Zero;
      out.detail = "nu(A) = 0, mu(A) != 0, modified drift irreducible, "
                   "immigration mechanism nonzero";
      return out;
    }
    out.status = TauInfinityStatus::Undetermined;
    out.detail = "modified drift is reducible; no covered case applies";
    return out;
  }

  if (!(mod.mu_of_A.array() > 0.0).all()) {
    out.status = TauInfinityStatus::Undetermined;
    out.detail = "psi == 0 but some mu_l(A) = 0; flow limit may vanish";
    return out;
  }
  const LimitResult lim = limit_vtilde_A(mech_A, mod.mu_of_A, ctrl);
  if (lim.status != LimitStatus::Finite ||
      !(lim.value.array() > 0.0).all()) {
    out.status = TauInfinityStatus::Undetermined;
    out.detail = lim.status == LimitStatus::DivergesInCoords
                     ? "flow limit diverges; tau_A is finite a.s. on the "
                       "divergent event"
                     : "flow limit not certified finite and positive";
    return out;
  }
  // Polish the limit through the Newton inverse of the modified mechanism.
  Vector root = lim.value;
  const InverseResult inv = inverse_phi(mech_A, mod.mu_of_A);
  if (inv.converged) root = inv.x;
  out.status = TauInfinityStatus::Value;
  out.value = std::exp(-x.dot(root));
  out.detail = "pure-branching case with finite flow limit";
  return out;
}

double sup_jump_norm_cdf(const AdmissibleParams& p, const Vector& x, double r,
                         double t, const OdeControl& ctrl) {
  return survival_tau(p, x, JumpSet::ball_complement(r), t, ctrl);
}

double sup_jump_zero_prob(const AdmissibleParams& p, const Vector& x, double t,
                          const OdeControl& ctrl) {
  return survival_tau(p, x, JumpSet::full_space(), t, ctrl);
}

double global_sup_constant(const AdmissibleParams& p) {
  return support_sup(p.total_levy_measure());
}

HypothesisReport check_prop53_hypotheses(const AdmissibleParams& p) {
  HypothesisReport rep;
  const DerivedDrift dd = derive_drift(p);
  rep.drift_irreducible = is_irreducible(dd.B_tilde);
  rep.psi_nonzero = !p.beta.isZero(0.0) || !p.nu.is_zero();

  rep.interior_mass_condition = true;
  for (Index i = 0; i < p.d && rep.interior_mass_condition; ++i) {
    for (Index j = 0; j < p.d; ++j) {
      if (i == j || !(dd.B_tilde(i, j) > 0.0) || p.B(i, j) > 0.0) continue;
      const double sup_j = support_sup(p.mu[j]);
      if (!(sup_j > 0.0) || !std::isfinite(sup_j)) continue;
      bool interior = false;
      for (const auto& a : p.mu[j].atoms())
        if (a.point(i) != 0.0 && a.point.norm() < sup_j) interior = true;
      if (!interior) {
        rep.interior_mass_condition = false;
        rep.detail = "mu_" + std::to_string(j + 1) +
                     " puts no mass with coordinate " + std::to_string(i + 1) +
                     " nonzero strictly inside its support ball";
        break;
      }
    }
  }
  rep.all_hold =
      rep.drift_irreducible && rep.psi_nonzero && rep.interior_mass_condition;
  if (rep.all_hold) rep.detail = "all hypotheses hold";
  return rep;
}

RectSupResult rect_sup_is_null(const AdmissibleParams& p, const JumpSet& A,
                               const Vector& x, double t) {
  RectSupResult out;
  if (t <= 0.0) throw std::invalid_argument("t must be positive");
  const bool is_rect = A.kind() == JumpSet::Kind::Rectangle;
  const bool is_box = A.kind() == JumpSet::Kind::Box;
  if (!is_rect && !is_box) {
    out.verdict = RectVerdict::RejectedNotAnchored;
    out.detail = "set is not a rectangle";
    return out;
  }
  if (is_box && !A.box_lower().isZero(0.0)) {
    out.verdict = RectVerdict::RejectedNotAnchored;
    out.detail =
        "rectangle is not anchored at the origin; the zero/positive "
        "dichotomy fails for such sets";
    return out;
  }
  const double total = mass(p.total_levy_measure(), A);
  if (total == 0.0) {
    out.verdict = RectVerdict::Null;
    out.detail = "total Levy mass on the rectangle is zero";
    return out;
  }
  const bool x_strict = (x.array() > 0.0).all();
  const bool beta_strict = (p.beta.array() > 0.0).all();
  if (x_strict || beta_strict) {
    out.verdict = RectVerdict::Positive;
    out.detail = "positive mass and strictly positive " +
                 std::string(x_strict ? "initial state" : "immigration drift");
    return out;
  }
  out.verdict = RectVerdict::OutsideTheorem;
  out.detail = "x and beta both touch zero; the dichotomy does not apply";
  return out;
}

double lower_bound_pi(const AdmissibleParams& p, const Vector& x,
                      const JumpSet& A, double r, double t,
                      const OdeControl& ctrl) {
  const JumpSet shell = JumpSet::norm_at_least(r);
  const double surv_without =
      survival_tau(p, x, JumpSet::set_difference(shell, A), t, ctrl);
  const double surv_all = survival_tau(p, x, shell, t, ctrl);
  return std::max(0.0, surv_without - surv_all);
}

}  // namespace cbi
