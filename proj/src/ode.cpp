#include "cbi/ode.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace cbi {

namespace dp5 {
// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;
constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0;
}  // namespace dp5

OdeStepper::OdeStepper(OdeRhs rhs, Vector y0, RhsKind kind, OdeControl ctrl)
    : rhs_(std::move(rhs)), ctrl_(ctrl), y_(std::move(y0)) {
  sol_.kind_ = kind;
  sol_.grid_.push_back(0.0);
  sol_.values_.push_back(y_);
}

bool OdeStepper::try_step(double h, Vector& y1, Vector& k_last,
                          OdeSolution::Step& step, double& err) {
  using namespace dp5;
  const Vector& k1 = k1_;
  const Vector k2 = rhs_(y_ + h * (a21 * k1));
  const Vector k3 = rhs_(y_ + h * (a31 * k1 + a32 * k2));
  const Vector k4 = rhs_(y_ + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vector k5 = rhs_(y_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vector k6 =
      rhs_(y_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  y1 = y_ + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const Vector k7 = rhs_(y1);
  k_last = k7;
  if (!y1.allFinite()) return false;

  const Vector ev =
      h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  double sum = 0.0;
  for (Index i = 0; i < y_.size(); ++i) {
    const double sc =
        ctrl_.atol + ctrl_.rtol * std::max(std::abs(y_(i)), std::abs(y1(i)));
    const double q = ev(i) / sc;
    sum += q * q;
  }
  err = std::sqrt(sum / static_cast<double>(y_.size()));

  step.t0 = t_;
  step.h = h;
  step.c0 = y_;
  step.c1 = y1 - y_;
  step.c2 = h * k1 - step.c1;
  step.c3 = step.c1 - h * k7 - step.c2;
  step.c4 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
  step.err = ev.lpNorm<Eigen::Infinity>();
  return true;
}

bool OdeStepper::advance_to(double T) {
  if (!sol_.ok()) return false;
  if (T <= t_) return true;
  if (!have_k1_) {
    k1_ = rhs_(y_);
    have_k1_ = true;
  }
  if (h_ <= 0.0)
    h_ = ctrl_.initial_step > 0.0 ? ctrl_.initial_step
                                  : std::min(1e-3, T / 100.0);

  bool just_rejected = false;
  while (t_ < T) {
    const bool lands_on_T = h_ >= T - t_;
    double h = lands_on_T ? T - t_ : h_;
    if (h < 1e-14 * std::max(1.0, t_)) {
      sol_.status_ = OdeStatus::StepUnderflow;
      sol_.failure_reason_ =
          "step size underflow at t = " + std::to_string(t_);
      return false;
    }

    Vector y1, k7;
    OdeSolution::Step step;
    double err = 0.0;
    if (!try_step(h, y1, k7, step, err)) {
      if (!y_.allFinite() || h < 1e-14 * std::max(1.0, t_)) {
        sol_.status_ = OdeStatus::NonFinite;
        sol_.failure_reason_ =
            "non-finite state at t = " + std::to_string(t_);
        return false;
      }
      h_ = 0.5 * h;
      just_rejected = true;
      continue;
    }

    if (err <= 1.0) {
      // accept; clamp tiny negative excursions, abort on real ones
      bool reclamped = false;
      for (Index i = 0; i < y1.size(); ++i) {
        if (y1(i) < 0.0) {
          if (y1(i) < -ctrl_.atol) {
            sol_.status_ = OdeStatus::NegativityViolation;
            sol_.failure_reason_ = "state left the orthant at t = " +
                                   std::to_string(t_ + h) + " (coord " +
                                   std::to_string(i) + ")";
            return false;
          }
          y1(i) = 0.0;
          ++sol_.clamp_count_;
          reclamped = true;
        }
      }
      if (reclamped) {
        k7 = rhs_(y1);
        step.c1 = y1 - step.c0;
        step.c2 = h * k1_ - step.c1;
        step.c3 = step.c1 - h * k7 - step.c2;
      }
      if (sol_.kind_ != RhsKind::V) {
        for (Index i = 0; i < y1.size(); ++i) {
          // slack at the local-error scale of the step
          const double slack =
              10.0 * (ctrl_.atol + ctrl_.rtol * std::abs(y_(i)));
          if (y1(i) < y_(i) - slack) {
            sol_.status_ = OdeStatus::MonotonicityViolation;
            sol_.failure_reason_ =
                "monotone solution decreased at t = " + std::to_string(t_ + h);
            return false;
          }
        }
      }
      t_ = lands_on_T ? T : t_ + h;
      y_ = y1;
      k1_ = k7;
      sol_.grid_.push_back(t_);
      sol_.values_.push_back(y_);
      sol_.steps_.push_back(std::move(step));

      double fac = dp5::safety * std::pow(std::max(err, 1e-16), -0.2);
      fac = std::min(just_rejected ? 1.0 : dp5::fac_max,
                     std::max(dp5::fac_min, fac));
      h_ = h * fac;
      just_rejected = false;
    } else {
      const double fac =
          std::max(dp5::fac_min, dp5::safety * std::pow(err, -0.2));
      h_ = h * fac;
      just_rejected = true;
    }
  }
  return true;
}

Vector OdeSolution::at(double t) const {
  if (grid_.empty()) throw std::logic_error("empty solution");
  if (t <= 0.0) return values_.front();
  if (t >= grid_.back()) return values_.back();
  // binary search for the step containing t
  std::size_t lo = 0, hi = steps_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (steps_[mid].t0 + steps_[mid].h < t)
      lo = mid + 1;
    else
      hi = mid;
  }
  const Step& s = steps_[lo];
  if (t == s.t0) return values_[lo];
  if (t == grid_[lo + 1]) return values_[lo + 1];
  const double th = (t - s.t0) / s.h;
  const double th1 = 1.0 - th;
  Vector y =
      s.c0 + th * (s.c1 + th1 * (s.c2 + th * (s.c3 + th1 * s.c4)));
  for (Index i = 0; i < y.size(); ++i) y(i) = std::max(y(i), 0.0);
  return y;
}

std::string OdeSolution::to_csv() const {
  std::ostringstream os;
  os << "t";
  const Index d = values_.empty() ? 0 : values_.front().size();
  for (Index i = 0; i < d; ++i) os << ",v_" << (i + 1);
  os << ",local_err\n";
  char buf[64];
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", grid_[k]);
    os << buf;
    for (Index i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", values_[k](i));
      os << ',' << buf;
    }
    const double err = k == 0 ? 0.0 : steps_[k - 1].err;
    std::snprintf(buf, sizeof(buf), "%.17g", err);
    os << ',' << buf << '\n';
  }
  return os.str();
}

OdeSolution solve_v(const Mechanism& mech, const Vector& lambda, double T,
                    const OdeControl& ctrl) {
  OdeStepper st([&mech](const Vector& y) { return Vector(-mech.phi(y)); },
                lambda, RhsKind::V, ctrl);
  st.advance_to(T);
  return st.take_solution();
}

OdeSolution solve_vtilde(const Mechanism& mech, const Vector& lambda_tilde,
                         double T, const OdeControl& ctrl) {
  OdeStepper st(
      [&mech, lambda_tilde](const Vector& y) {
        return Vector(lambda_tilde - mech.phi(y));
      },
      Vector::Zero(mech.dim()), RhsKind::VTILDE, ctrl);
  st.advance_to(T);
  return st.take_solution();
}

OdeSolution solve_vtilde_A(const Mechanism& mech_A, const Vector& mu_A,
                           double T, const OdeControl& ctrl) {
  OdeStepper st(
      [&mech_A, mu_A](const Vector& y) {
        return Vector(mu_A - mech_A.phi(y));
      },
      Vector::Zero(mech_A.dim()), RhsKind::VTILDE_A, ctrl);
  st.advance_to(T);
  return st.take_solution();
}

namespace {

LimitResult detect_limit(const Mechanism& mech, const Vector& target,
                         RhsKind kind, const OdeControl& ctrl) {
  OdeStepper st(
      [&mech, target](const Vector& y) {
        return Vector(target - mech.phi(y));
      },
      Vector::Zero(mech.dim()), kind, ctrl);

  LimitResult out;
  Vector prev = Vector::Zero(mech.dim());
  double horizon = 1.0;
  while (horizon <= ctrl.max_horizon) {
    const bool alive = st.advance_to(horizon);
    const Vector& cur = st.state();
    out.horizon_used = st.solution().last_time();
    std::set<Index> diverging;
    for (Index i = 0; i < cur.size(); ++i)
      if (cur(i) > ctrl.divergence_threshold && cur(i) > prev(i))
        diverging.insert(i);
    if (!diverging.empty()) {
      out.status = LimitStatus::DivergesInCoords;
      out.diverging = std::move(diverging);
      return out;
    }
    if (!alive) return out;  // Undetermined: integration failed early

    const double increment = (cur - prev).lpNorm<Eigen::Infinity>();
    const double residual =
        (mech.phi(cur) - target).lpNorm<Eigen::Infinity>();
    if (increment <= ctrl.limit_tol && residual <= ctrl.residual_tol) {
      out.status = LimitStatus::Finite;
      out.value = cur;
      return out;
    }
    prev = cur;
    horizon *= 2.0;
  }
  return out;
}

}  // namespace

LimitResult limit_vtilde(const Mechanism& mech, const Vector& lambda_tilde,
                         const OdeControl& ctrl) {
  return detect_limit(mech, lambda_tilde, RhsKind::VTILDE, ctrl);
}

LimitResult limit_vtilde_A(const Mechanism& mech_A, const Vector& mu_A,
                           const OdeControl& ctrl) {
  return detect_limit(mech_A, mu_A, RhsKind::VTILDE_A, ctrl);
}

namespace {

// 5-point Gauss-Lobatto nodes and weights on [0,1]
const double kGlNode[5] = {0.0, 0.5 - std::sqrt(21.0) / 14.0, 0.5,
                           0.5 + std::sqrt(21.0) / 14.0, 1.0};
const double kGlWgt[5] = {1.0 / 20, 49.0 / 180, 16.0 / 45, 49.0 / 180,
                          1.0 / 20};

Vector eval_step(const OdeSolution::Step& s, double tt) {
  const double th = (tt - s.t0) / s.h;
  const double th1 = 1.0 - th;
  Vector y = s.c0 + th * (s.c1 + th1 * (s.c2 + th * (s.c3 + th1 * s.c4)));
  for (Index i = 0; i < y.size(); ++i) y(i) = std::max(y(i), 0.0);
  return y;
}

double step_integral(const OdeSolution::Step& s,
                     const std::function<double(const Vector&)>& g,
                     double lo, double hi) {
  const double h = hi - lo;
  if (h <= 0.0) return 0.0;
  double acc = 0.0;
  for (int q = 0; q < 5; ++q)
    acc += kGlWgt[q] * g(eval_step(s, lo + kGlNode[q] * h));
  return h * acc;
}

}  // namespace

double integrate_along(const OdeSolution& sol,
                       const std::function<double(const Vector&)>& g,
                       double t) {
  return integrate_along(sol, g, 0.0, t);
}

double integrate_along(const OdeSolution& sol,
                       const std::function<double(const Vector&)>& g,
                       double t0, double t1) {
  if (t1 <= t0) return 0.0;
  if (t1 > sol.last_time() * (1.0 + 1e-12) + 1e-300)
    throw std::out_of_range("quadrature horizon exceeds the solution");
  t1 = std::min(t1, sol.last_time());

  double total = 0.0;
  for (const auto& s : sol.steps()) {
    if (s.t0 >= t1) break;
    const double hi = std::min(s.t0 + s.h, t1);
    const double lo = std::max(s.t0, t0);
    total += step_integral(s, g, lo, hi);
  }
  return total;
}

std::vector<double> cumulative_integral(
    const OdeSolution& sol, const std::function<double(const Vector&)>& g) {
  std::vector<double> prefix;
  prefix.reserve(sol.grid().size());
  prefix.push_back(0.0);
  for (const auto& s : sol.steps())
    prefix.push_back(prefix.back() + step_integral(s, g, s.t0, s.t0 + s.h));
  return prefix;
}

}  // namespace cbi
