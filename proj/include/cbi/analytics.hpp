#pragma once

#include <optional>
#include <string>

#include "cbi/mechanism.hpp"
#include "cbi/ode.hpp"
#include "cbi/params.hpp"

namespace cbi {

struct OdeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// exp(t M) by scaling-and-squaring with Pade approximation.
Matrix matrix_exp(const Matrix& M, double t);

// E_x X_t = e^{t B_tilde} x + int_0^t e^{u B_tilde} beta_tilde du.
// The integral term comes from one augmented-matrix exponential.
Vector mean(const AdmissibleParams& p, const Vector& x, double t);

// E J_t(A) = sum_l mu_l(A) int_0^t E(X_{u,l}) du + t nu(A), the time
// integral by adaptive Simpson quadrature of mean().
double expected_jump_count(const AdmissibleParams& p, const Vector& x,
                           const JumpSet& A, double t);

// E_x e^{-<lambda, X_t>}
double laplace_X(const AdmissibleParams& p, const Vector& x,
                 const Vector& lambda, double t, const OdeControl& ctrl = {});

// E_x exp{-<lambda_tilde, int_0^t X_u du>}
double laplace_intX(const AdmissibleParams& p, const Vector& x,
                    const Vector& lambda_tilde, double t,
                    const OdeControl& ctrl = {});

// Law of the first jump time with size vector in A, P_x(tau_A > t), built
// once per (params, A) and queried on a time grid. Holds the modified flow
// and the cumulative integral of its immigration mechanism on the grid.
class FirstJumpLaw {
 public:
  FirstJumpLaw(const AdmissibleParams& p, const JumpSet& A, double horizon,
               const OdeControl& ctrl = {});

  double survival(double t, const Vector& x) const;
  double horizon() const { return solution_.last_time(); }

  const ModifiedParams& modified() const { return modified_; }
  const OdeSolution& solution() const { return solution_; }
  const std::vector<double>& psi_integral() const { return psi_prefix_; }

 private:
  ModifiedParams modified_;
  Mechanism mech_A_;
  OdeSolution solution_;
  std::vector<double> psi_prefix_;  // at the solution grid points
};

// P_x(tau_A > t)
double survival_tau(const AdmissibleParams& p, const Vector& x,
                    const JumpSet& A, double t, const OdeControl& ctrl = {});

enum class TauInfinityStatus { One, Zero, Value, Undetermined };

struct TauInfinityResult {
  TauInfinityStatus status = TauInfinityStatus::Undetermined;
  double value = 0.0;  // P_x(tau_A = infinity) when status == Value
  std::string detail;
};

// Case analysis for P_x(tau_A = infinity). One when A carries no mass; Zero
// when nu charges A, or when nu(A) = 0 but the modified process is
// irreducible with a nonzero immigration mechanism; an explicit value in the
// pure-branching case with a finite flow limit; Undetermined otherwise, with
// the failed hypothesis named.
TauInfinityResult prob_tau_infinite(const AdmissibleParams& p, const Vector& x,
                                    const JumpSet& A,
                                    const OdeControl& ctrl = {});

// P_x(sup of jump norms over (0,t] <= r); same code path as survival_tau
// with the complement of the closed r-ball.
double sup_jump_norm_cdf(const AdmissibleParams& p, const Vector& x, double r,
                         double t, const OdeControl& ctrl = {});

// P_x(no jump at all on (0,t])
double sup_jump_zero_prob(const AdmissibleParams& p, const Vector& x, double t,
                          const OdeControl& ctrl = {});

// Almost-sure value of the global jump-norm supremum under the hypotheses
// checked by check_prop53_hypotheses().
double global_sup_constant(const AdmissibleParams& p);

struct HypothesisReport {
  bool all_hold = false;
  bool drift_irreducible = false;
  bool psi_nonzero = false;
  bool interior_mass_condition = false;
  std::string detail;
};

HypothesisReport check_prop53_hypotheses(const AdmissibleParams& p);

enum class RectVerdict { Null, Positive, OutsideTheorem, RejectedNotAnchored };

struct RectSupResult {
  RectVerdict verdict = RectVerdict::RejectedNotAnchored;
  std::string detail;
};

// Zero/positive dichotomy for the coordinate-wise jump supremum landing in
// an anchored rectangle. Rectangles not anchored at the origin are rejected:
// the dichotomy fails for them. The x = 0, beta = 0 corner is outside the
// dichotomy as well.
RectSupResult rect_sup_is_null(const AdmissibleParams& p, const JumpSet& A,
                               const Vector& x, double t);

// max(0, P_x(tau_{K_r^c \ A} > t) - P_x(tau_{K_r^c} > t)), a lower bound for
// the probability that the jump supremum lands in K_r^c intersect A, where
// K_r^c = {z : ||z|| >= r}.
double lower_bound_pi(const AdmissibleParams& p, const Vector& x,
                      const JumpSet& A, double r, double t,
                      const OdeControl& ctrl = {});

}  // namespace cbi
