#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "cbi/mechanism.hpp"
#include "cbi/types.hpp"

namespace cbi {

enum class RhsKind {
  V,         // y' = -phi(y),          y(0) = lambda
  VTILDE,    // y' = lambda - phi(y),  y(0) = 0
  VTILDE_A,  // y' = mu(A) - phi^(A)(y), y(0) = 0
};

struct OdeControl {
  double atol = 1e-10;
  double rtol = 1e-8;
  double initial_step = 0.0;  // 0: min(1e-3, T/100)
  // limit detection
  double limit_tol = 1e-9;
  double residual_tol = 1e-7;
  double divergence_threshold = 1e8;
  double max_horizon = 65536.0;
};

enum class OdeStatus {
  Ok,
  StepUnderflow,          // stiff blow-up; last valid time recorded
  NegativityViolation,    // excursion below -atol
  MonotonicityViolation,  // VTILDE kinds only
  NonFinite,
};

// Adaptive Dormand-Prince 5(4) trajectory with the method's quartic
// interpolant stored per accepted step.
class OdeSolution {
 public:
  struct Step {
    double t0, h;
    Vector c0, c1, c2, c3, c4;  // dense-output coefficients
    double err;                 // local error estimate of the step
  };

  RhsKind kind() const { return kind_; }
  OdeStatus status() const { return status_; }
  bool ok() const { return status_ == OdeStatus::Ok; }
  double last_time() const { return grid_.empty() ? 0.0 : grid_.back(); }
  const std::string& failure_reason() const { return failure_reason_; }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<Vector>& values() const { return values_; }
  const std::vector<Step>& steps() const { return steps_; }
  long clamp_count() const { return clamp_count_; }

  // Dense interpolation at t in [0, last_time()], floored at 0.
  Vector at(double t) const;

  std::string to_csv() const;  // t, y_1..y_d, local_err

 private:
  friend class OdeStepper;
  RhsKind kind_ = RhsKind::V;
  OdeStatus status_ = OdeStatus::Ok;
  std::string failure_reason_;
  std::vector<double> grid_;
  std::vector<Vector> values_;
  std::vector<Step> steps_;
  long clamp_count_ = 0;
};

using OdeRhs = std::function<Vector(const Vector&)>;

// Incremental integrator; advance_to() may be called repeatedly with
// growing horizons, extending the same solution.
class OdeStepper {
 public:
  OdeStepper(OdeRhs rhs, Vector y0, RhsKind kind, OdeControl ctrl);

  // Integrates up to T; returns false when the solution left the Ok state.
  bool advance_to(double T);

  const OdeSolution& solution() const { return sol_; }
  OdeSolution take_solution() { return std::move(sol_); }
  const Vector& state() const { return y_; }

 private:
  bool try_step(double h, Vector& y1, Vector& k_last, OdeSolution::Step& step,
                double& err);

  OdeRhs rhs_;
  OdeControl ctrl_;
  OdeSolution sol_;
  Vector y_;
  Vector k1_;  // FSAL stage
  double t_ = 0.0;
  double h_ = 0.0;
  bool have_k1_ = false;
};

OdeSolution solve_v(const Mechanism& mech, const Vector& lambda, double T,
                    const OdeControl& ctrl = {});
OdeSolution solve_vtilde(const Mechanism& mech, const Vector& lambda_tilde,
                         double T, const OdeControl& ctrl = {});
// mech_A must be the mechanism of the modified tuple; mu_A its removed-jump
// mass vector.
OdeSolution solve_vtilde_A(const Mechanism& mech_A, const Vector& mu_A,
                           double T, const OdeControl& ctrl = {});

enum class LimitStatus { Finite, DivergesInCoords, Undetermined };

struct LimitResult {
  LimitStatus status = LimitStatus::Undetermined;
  Vector value;                  // Finite only
  std::set<Index> diverging;     // DivergesInCoords only (0-based)
  double horizon_used = 0.0;
};

// Long-time limit of the VTILDE flow, detected over doubling horizons.
// Finite requires both a stalled increment and a small fixed-point residual
// ||phi(y) - lambda||.
LimitResult limit_vtilde(const Mechanism& mech, const Vector& lambda_tilde,
                         const OdeControl& ctrl = {});
LimitResult limit_vtilde_A(const Mechanism& mech_A, const Vector& mu_A,
                           const OdeControl& ctrl = {});

// integral_0^t g(y(s)) ds along the dense output, composite 5-point
// Gauss-Lobatto per accepted step.
double integrate_along(const OdeSolution& sol,
                       const std::function<double(const Vector&)>& g,
                       double t);
// integral over [t0, t1] of the same kind.
double integrate_along(const OdeSolution& sol,
                       const std::function<double(const Vector&)>& g,
                       double t0, double t1);

// Prefix integrals of g(y(s)) at every grid point of the solution.
std::vector<double> cumulative_integral(
    const OdeSolution& sol, const std::function<double(const Vector&)>& g);

}  // namespace cbi
