#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbi/types.hpp"

namespace cbi {

// A finite weighted sum of point masses on R_+^d \ {0}. All integrals
// against it are exact atom sums.
class AtomicLevyMeasure {
 public:
  struct Atom {
    Vector point;
    double weight;
  };

  AtomicLevyMeasure() = default;
  explicit AtomicLevyMeasure(Index dim) : dim_(dim) {}
  AtomicLevyMeasure(Index dim, std::vector<Atom> atoms);

  static AtomicLevyMeasure point_mass(const Vector& z, double weight = 1.0);

  Index dim() const { return dim_; }
  bool is_zero() const { return atoms_.empty(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double total_mass() const;

  // Pointwise sum of measures (atom lists concatenated, this first).
  AtomicLevyMeasure operator+(const AtomicLevyMeasure& other) const;

  bool operator==(const AtomicLevyMeasure& other) const;

 private:
  Index dim_ = 0;
  std::vector<Atom> atoms_;
};

// A measurable subset of the jump space U_d = R_+^d \ {0} with an exact
// membership test. The origin is never a member of any JumpSet.
class JumpSet {
 public:
  // (prod_i [0, w_i]) \ {0}, w strictly positive.
  static JumpSet rectangle(const Vector& w);
  // [lo, hi] \ {0}; lo = 0 makes this the rectangle above.
  static JumpSet box(const Vector& lo, const Vector& hi);
  // {z : ||z|| > r}, the complement of the closed ball.
  static JumpSet ball_complement(double r);
  // {z : ||z|| >= r}, the complement of the open ball.
  static JumpSet norm_at_least(double r);
  static JumpSet full_space();
  // Finite set of points, matched by exact coordinate equality.
  static JumpSet points(std::vector<Vector> pts);
  static JumpSet predicate(std::function<bool(const Vector&)> test,
                           std::string label = "predicate");

  static JumpSet set_union(JumpSet a, JumpSet b);
  static JumpSet set_intersection(JumpSet a, JumpSet b);
  static JumpSet set_difference(JumpSet a, JumpSet b);
  // U_d \ A
  static JumpSet complement(JumpSet a);

  bool contains(const Vector& z) const;

  enum class Kind {
    Rectangle,
    Box,
    BallComplement,
    NormAtLeast,
    FullSpace,
    Points,
    Predicate,
    Union,
    Intersection,
    Difference,
  };
  Kind kind() const { return kind_; }

  // Rectangle payload; throws for other kinds.
  const Vector& rectangle_upper() const;
  const Vector& box_lower() const;
  const Vector& box_upper() const;
  double radius() const;
  const std::vector<Vector>& point_list() const;
  const JumpSet& left() const;
  const JumpSet& right() const;

 private:
  JumpSet() = default;
  bool contains_impl(const Vector& z) const;

  Kind kind_ = Kind::FullSpace;
  Vector lo_, hi_;
  double r_ = 0.0;
  std::vector<Vector> points_;
  std::function<bool(const Vector&)> pred_;
  std::string label_;
  std::shared_ptr<const JumpSet> a_, b_;
};

// (mu_1(A), ..., mu_d(A))
using MeasureVector = Vector;

// m(A) = sum of weights of atoms in A.
double mass(const AtomicLevyMeasure& m, const JumpSet& A);

// int_A (1 - e^{-<lambda, z>}) m(dz)
double exp_integral(const AtomicLevyMeasure& m, const JumpSet& A,
                    const Vector& lambda);

// int_A z m(dz)
Vector first_moment_vector(const AtomicLevyMeasure& m, const JumpSet& A);

// int (z_i - delta_{ij})^+ m(dz) over the full space; 0-based indices.
double shifted_positive_moment(const AtomicLevyMeasure& m, Index i, Index j);

// Keeps exactly the atoms lying in A.
AtomicLevyMeasure restrict(const AtomicLevyMeasure& m, const JumpSet& A);

// Supremum of the support: 0 for the zero measure, otherwise the largest
// atom norm.
double support_sup(const AtomicLevyMeasure& m);

}  // namespace cbi
