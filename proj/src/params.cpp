#include "cbi/params.hpp"

#include <cmath>
#include <limits>

namespace cbi {

AtomicLevyMeasure AdmissibleParams::total_levy_measure() const {
  AtomicLevyMeasure total = nu.is_zero() ? AtomicLevyMeasure(d) : nu;
  for (const auto& m : mu) total = total + m;
  return total;
}

ValidationReport validate(const AdmissibleParams& p) {
  ValidationReport rep;
  if (p.d < 1) {
    rep.fail("(i) type count d must be a positive integer");
    return rep;
  }
  if (p.c.size() != p.d)
    rep.fail("(ii) diffusion vector c has wrong dimension");
  for (Index i = 0; i < p.c.size(); ++i)
    if (p.c(i) < 0.0 || !std::isfinite(p.c(i)))
      rep.fail("(ii) c[" + std::to_string(i) + "] must be >= 0 and finite");
  if (p.beta.size() != p.d)
    rep.fail("(iii) immigration drift beta has wrong dimension");
  for (Index i = 0; i < p.beta.size(); ++i)
    if (p.beta(i) < 0.0 || !std::isfinite(p.beta(i)))
      rep.fail("(iii) beta[" + std::to_string(i) + "] must be >= 0 and finite");
  if (p.B.rows() != p.d || p.B.cols() != p.d) {
    rep.fail("(iv) branching drift B must be d x d");
  } else {
    for (Index i = 0; i < p.d; ++i)
      for (Index j = 0; j < p.d; ++j) {
        if (!std::isfinite(p.B(i, j)))
          rep.fail("(iv) B[" + std::to_string(i) + "][" + std::to_string(j) +
                   "] is not finite");
        else if (i != j && p.B(i, j) < 0.0)
          rep.fail("(iv) B[" + std::to_string(i) + "][" + std::to_string(j) +
                   "] < 0 breaks essential non-negativity");
      }
  }

  auto check_measure = [&](const AtomicLevyMeasure& m, const std::string& name,
                           const std::string& clause) {
    if (!m.is_zero() && m.dim() != p.d) {
      rep.fail(clause + " " + name + " has wrong dimension");
      return;
    }
    std::size_t k = 0;
    for (const auto& a : m.atoms()) {
      if (!(a.weight > 0.0) || !std::isfinite(a.weight))
        rep.fail(clause + " " + name + " atom " + std::to_string(k) +
                 " has non-positive weight");
      bool positive = false;
      for (Index i = 0; i < a.point.size(); ++i) {
        if (a.point(i) < 0.0 || !std::isfinite(a.point(i)))
          rep.fail(clause + " " + name + " atom " + std::to_string(k) +
                   " leaves the orthant");
        if (a.point(i) > 0.0) positive = true;
      }
      if (!positive)
        rep.fail(clause + " " + name + " atom " + std::to_string(k) +
                 " sits at the origin");
      ++k;
    }
  };
  check_measure(p.nu, "nu", "(v)");
  if (p.mu.size() != static_cast<std::size_t>(p.d)) {
    rep.fail("(vi) mu must hold exactly d measures");
  } else {
    for (Index l = 0; l < p.d; ++l)
      check_measure(p.mu[l], "mu_" + std::to_string(l + 1), "(vi)");
  }
  return rep;
}

DerivedDrift derive_drift(const AdmissibleParams& p) {
  DerivedDrift out;
  out.B_tilde = p.B;
  for (Index j = 0; j < p.d; ++j)
    for (Index i = 0; i < p.d; ++i)
      out.B_tilde(i, j) += shifted_positive_moment(p.mu[j], i, j);
  out.beta_tilde =
      p.beta + first_moment_vector(p.nu, JumpSet::full_space());
  return out;
}

ModifiedParams modify_for_set(const AdmissibleParams& p, const JumpSet& A) {
  const JumpSet outside = JumpSet::complement(A);
  ModifiedParams out;
  out.base.d = p.d;
  out.base.c = p.c;
  out.base.beta = p.beta;
  out.base.nu = restrict(p.nu, outside);
  out.base.mu.reserve(p.mu.size());
  out.D_A = Matrix::Zero(p.d, p.d);
  out.T_A = Matrix::Zero(p.d, p.d);
  out.mu_of_A = Vector::Zero(p.d);
  for (Index l = 0; l < p.d; ++l) {
    out.base.mu.push_back(restrict(p.mu[l], outside));
    out.T_A.col(l) = first_moment_vector(p.mu[l], A);
    out.mu_of_A(l) = mass(p.mu[l], A);
  }
  out.nu_of_A = mass(p.nu, A);
  out.base.B = p.B;
  for (Index i = 0; i < p.d; ++i) {
    double shift = 0.0;
    for (const auto& a : p.mu[i].atoms())
      if (A.contains(a.point))
        shift += a.weight * (std::max(a.point(i) - 1.0, 0.0) - a.point(i));
    out.D_A(i, i) = shift;
    out.base.B(i, i) += shift;
  }
  return out;
}

AdmissibleParams embed_2d(const AdmissibleParams& p) {
  AdmissibleParams q;
  q.d = 2 * p.d;
  q.c = Vector::Zero(q.d);
  q.c.head(p.d) = p.c;
  q.beta = Vector::Zero(q.d);
  q.beta.head(p.d) = p.beta;
  q.B = Matrix::Zero(q.d, q.d);
  q.B.topLeftCorner(p.d, p.d) = p.B;
  q.B.bottomLeftCorner(p.d, p.d) = Matrix::Identity(p.d, p.d);

  auto embed = [&](const AtomicLevyMeasure& m) {
    std::vector<AtomicLevyMeasure::Atom> atoms;
    atoms.reserve(m.atoms().size());
    for (const auto& a : m.atoms()) {
      Vector z = Vector::Zero(q.d);
      z.head(p.d) = a.point;
      atoms.push_back({z, a.weight});
    }
    return AtomicLevyMeasure(q.d, std::move(atoms));
  };
  q.nu = embed(p.nu);
  q.mu.reserve(q.d);
  for (Index l = 0; l < p.d; ++l) q.mu.push_back(embed(p.mu[l]));
  for (Index l = p.d; l < q.d; ++l) q.mu.emplace_back(q.d);
  return q;
}

bool is_irreducible(const Matrix& M) {
  const Index d = M.rows();
  if (d <= 1) return true;

  auto reachable_all = [&](bool transpose) {
    std::vector<char> seen(d, 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    Index count = 1;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < d; ++v) {
        if (v == u || seen[v]) continue;
        const double w = transpose ? M(v, u) : M(u, v);
        if (w > 0.0) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == d;
  };
  return reachable_all(false) && reachable_all(true);
}

IrreducibilityRadius irreducibility_radius(const AdmissibleParams& p) {
  IrreducibilityRadius out;
  if (p.d == 1) {
    out.reason = "single-type: every modification stays irreducible";
    return out;
  }
  bool mu_zero = true;
  for (const auto& m : p.mu)
    if (!m.is_zero()) mu_zero = false;
  if (mu_zero) {
    out.reason = "mu = 0";
    return out;
  }
  const DerivedDrift dd = derive_drift(p);
  if (!is_irreducible(dd.B_tilde)) {
    out.reason = "effective drift B_tilde is reducible";
    return out;
  }

  double max_sup = 0.0;
  for (const auto& m : p.mu) max_sup = std::max(max_sup, support_sup(m));

  double r0 = 0.0;
  for (Index i = 0; i < p.d; ++i) {
    for (Index j = 0; j < p.d; ++j) {
      if (i == j || !(dd.B_tilde(i, j) > 0.0)) continue;
      double rij;
      if (p.B(i, j) > 0.0) {
        rij = 0.5 * std::min(1.0, max_sup);
      } else {
        // Mass must come from atoms of mu_j with z_i != 0; the smallest
        // radius keeping such mass inside the closed ball is the smallest
        // such atom norm. When all of them sit on the sphere of radius
        // (mu_j)_sup this degenerates to (mu_j)_sup itself.
        const double sup_j = support_sup(p.mu[j]);
        bool inside_open_ball = false;
        double min_norm = std::numeric_limits<double>::infinity();
        for (const auto& a : p.mu[j].atoms()) {
          if (a.point(i) == 0.0) continue;
          const double n = a.point.norm();
          min_norm = std::min(min_norm, n);
          if (n < sup_j) inside_open_ball = true;
        }
        rij = inside_open_ball ? min_norm : sup_j;
      }
      r0 = std::max(r0, rij);
    }
  }
  out.applicable = true;
  out.r0 = r0;
  return out;
}

}  // namespace cbi
