#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbi/measure.hpp"
#include "cbi/types.hpp"

namespace cbi {

// The branching/immigration parameter tuple (d, c, beta, B, nu, mu).
// B must be essentially non-negative (off-diagonal entries >= 0); all
// measures are finite atomic, which keeps every jump-moment integral finite.
struct AdmissibleParams {
  Index d = 0;
  Vector c;
  Vector beta;
  Matrix B;
  AtomicLevyMeasure nu;
  std::vector<AtomicLevyMeasure> mu;

  // nu + mu_1 + ... + mu_d
  AtomicLevyMeasure total_levy_measure() const;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;

  void fail(std::string what) {
    ok = false;
    violations.push_back(std::move(what));
  }
};

// Checks clauses (i)-(vi): dimensions, sign constraints, essential
// non-negativity of B, and atom validity of every measure. Reports all
// violations instead of stopping at the first.
ValidationReport validate(const AdmissibleParams& p);

// Effective drift after absorbing jump first moments:
//   B_tilde[i][j] = B[i][j] + int (z_i - delta_ij)^+ mu_j(dz)
//   beta_tilde    = beta + int r nu(dr)
struct DerivedDrift {
  Matrix B_tilde;
  Vector beta_tilde;
};

DerivedDrift derive_drift(const AdmissibleParams& p);

// Parameters of the process with all jumps in A removed:
//   B^(A) = B + D_A (diagonal shift), measures restricted to U_d \ A.
// T_A is the matrix whose column l is int_A z mu_l(dz); the effective
// drifts satisfy B_tilde^(A) = B_tilde - T_A.
struct ModifiedParams {
  AdmissibleParams base;
  Matrix D_A;      // diagonal, D_A[i][i] = int_A ((z_i-1)^+ - z_i) mu_i(dz)
  Matrix T_A;      // column l = int_A z mu_l(dz)
  Vector mu_of_A;  // (mu_1(A), ..., mu_d(A))
  double nu_of_A = 0.0;
};

ModifiedParams modify_for_set(const AdmissibleParams& p, const JumpSet& A);

// The (2d)-type parameter set whose first block evolves like p and whose
// second block accumulates the running integral of the first:
//   c* = (c, 0), beta* = (beta, 0), B* = [[B, 0], [I, 0]],
//   measures embedded with zero second block.
AdmissibleParams embed_2d(const AdmissibleParams& p);

// True iff the directed graph with an edge i -> j whenever M(i,j) > 0,
// i != j, is strongly connected. Every 1x1 matrix is irreducible.
bool is_irreducible(const Matrix& M);

struct IrreducibilityRadius {
  bool applicable = false;
  double r0 = 0.0;
  std::string reason;  // set when not applicable
};

// A finite radius r0 such that the effective drift of the modification by
// {z : ||z|| > r} stays irreducible for every r >= r0. Constructive, not
// minimal. Not applicable when d = 1, mu = 0, or B_tilde is reducible.
IrreducibilityRadius irreducibility_radius(const AdmissibleParams& p);

}  // namespace cbi
