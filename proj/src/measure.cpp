#include "cbi/measure.hpp"

#include <cmath>
#include <utility>

namespace cbi {

// Data-level problems (non-positive weights, atoms at the origin) are
// accepted here and reported by validate(), so a caller can see every
// violation of a parameter file at once. Dimension mismatches are
// programming errors and throw.
AtomicLevyMeasure::AtomicLevyMeasure(Index dim, std::vector<Atom> atoms)
    : dim_(dim), atoms_(std::move(atoms)) {
  for (const Atom& a : atoms_)
    if (a.point.size() != dim_)
      throw std::invalid_argument("atom dimension mismatch");
}

AtomicLevyMeasure AtomicLevyMeasure::point_mass(const Vector& z,
                                                double weight) {
  return AtomicLevyMeasure(z.size(), {{z, weight}});
}

double AtomicLevyMeasure::total_mass() const {
  double s = 0.0;
  for (const Atom& a : atoms_) s += a.weight;
  return s;
}

AtomicLevyMeasure AtomicLevyMeasure::operator+(
    const AtomicLevyMeasure& other) const {
  if (!atoms_.empty() && !other.atoms_.empty() && dim_ != other.dim_)
    throw std::invalid_argument("measure dimension mismatch");
  AtomicLevyMeasure out(atoms_.empty() ? other.dim_ : dim_);
  out.atoms_ = atoms_;
  out.atoms_.insert(out.atoms_.end(), other.atoms_.begin(),
                    other.atoms_.end());
  return out;
}

bool AtomicLevyMeasure::operator==(const AtomicLevyMeasure& other) const {
  if (atoms_.size() != other.atoms_.size()) return false;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    if (atoms_[k].weight != other.atoms_[k].weight) return false;
    if (atoms_[k].point != other.atoms_[k].point) return false;
  }
  return true;
}

JumpSet JumpSet::rectangle(const Vector& w) {
  for (Index i = 0; i < w.size(); ++i)
    if (!(w(i) > 0.0))
      throw std::invalid_argument("rectangle needs strictly positive sides");
  JumpSet s;
  s.kind_ = Kind::Rectangle;
  s.lo_ = Vector::Zero(w.size());
  s.hi_ = w;
  return s;
}

JumpSet JumpSet::box(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("box bounds dimension mismatch");
  for (Index i = 0; i < lo.size(); ++i)
    if (lo(i) < 0.0 || hi(i) < lo(i))
      throw std::invalid_argument("box bounds must satisfy 0 <= lo <= hi");
  JumpSet s;
  s.kind_ = Kind::Box;
  s.lo_ = lo;
  s.hi_ = hi;
  return s;
}

JumpSet JumpSet::ball_complement(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
  JumpSet s;
  s.kind_ = Kind::BallComplement;
  s.r_ = r;
  return s;
}

JumpSet JumpSet::norm_at_least(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
  JumpSet s;
  s.kind_ = Kind::NormAtLeast;
  s.r_ = r;
  return s;
}

JumpSet JumpSet::full_space() {
  JumpSet s;
  s.kind_ = Kind::FullSpace;
  return s;
}

JumpSet JumpSet::points(std::vector<Vector> pts) {
  JumpSet s;
  s.kind_ = Kind::Points;
  s.points_ = std::move(pts);
  return s;
}

JumpSet JumpSet::predicate(std::function<bool(const Vector&)> test,
                           std::string label) {
  JumpSet s;
  s.kind_ = Kind::Predicate;
  s.pred_ = std::move(test);
  s.label_ = std::move(label);
  return s;
}

JumpSet JumpSet::set_union(JumpSet a, JumpSet b) {
  JumpSet s;
  s.kind_ = Kind::Union;
  s.a_ = std::make_shared<const JumpSet>(std::move(a));
  s.b_ = std::make_shared<const JumpSet>(std::move(b));
  return s;
}

JumpSet JumpSet::set_intersection(JumpSet a, JumpSet b) {
  JumpSet s;
  s.kind_ = Kind::Intersection;
  s.a_ = std::make_shared<const JumpSet>(std::move(a));
  s.b_ = std::make_shared<const JumpSet>(std::move(b));
  return s;
}

JumpSet JumpSet::set_difference(JumpSet a, JumpSet b) {
  JumpSet s;
  s.kind_ = Kind::Difference;
  s.a_ = std::make_shared<const JumpSet>(std::move(a));
  s.b_ = std::make_shared<const JumpSet>(std::move(b));
  return s;
}

JumpSet JumpSet::complement(JumpSet a) {
  return set_difference(full_space(), std::move(a));
}

bool JumpSet::contains(const Vector& z) const {
  if (z.isZero(0.0)) return false;  // the origin is never in U_d
  return contains_impl(z);
}

bool JumpSet::contains_impl(const Vector& z) const {
  switch (kind_) {
    case Kind::Rectangle:
    case Kind::Box:
      for (Index i = 0; i < z.size(); ++i)
        if (z(i) < lo_(i) || z(i) > hi_(i)) return false;
      return true;
    case Kind::BallComplement:
      return z.norm() > r_;
    case Kind::NormAtLeast:
      return z.norm() >= r_;
    case Kind::FullSpace:
      return true;
    case Kind::Points:
      for (const Vector& p : points_)
        if (p.size() == z.size() && p == z) return true;
      return false;
    case Kind::Predicate:
      return pred_(z);
    case Kind::Union:
      return a_->contains_impl(z) || b_->contains_impl(z);
    case Kind::Intersection:
      return a_->contains_impl(z) && b_->contains_impl(z);
    case Kind::Difference:
      return a_->contains_impl(z) && !b_->contains_impl(z);
  }
  return false;
}

const Vector& JumpSet::rectangle_upper() const {
  if (kind_ != Kind::Rectangle)
    throw std::logic_error("not a rectangle jump set");
  return hi_;
}

const Vector& JumpSet::box_lower() const {
  if (kind_ != Kind::Rectangle && kind_ != Kind::Box)
    throw std::logic_error("not a box jump set");
  return lo_;
}

const Vector& JumpSet::box_upper() const {
  if (kind_ != Kind::Rectangle && kind_ != Kind::Box)
    throw std::logic_error("not a box jump set");
  return hi_;
}

double JumpSet::radius() const {
  if (kind_ != Kind::BallComplement && kind_ != Kind::NormAtLeast)
    throw std::logic_error("jump set has no radius");
  return r_;
}

const std::vector<Vector>& JumpSet::point_list() const {
  if (kind_ != Kind::Points) throw std::logic_error("not a point jump set");
  return points_;
}

const JumpSet& JumpSet::left() const {
  if (!a_) throw std::logic_error("jump set has no children");
  return *a_;
}

const JumpSet& JumpSet::right() const {
  if (!b_) throw std::logic_error("jump set has no children");
  return *b_;
}

double mass(const AtomicLevyMeasure& m, const JumpSet& A) {
  double s = 0.0;
  for (const auto& a : m.atoms())
    if (A.contains(a.point)) s += a.weight;
  return s;
}

double exp_integral(const AtomicLevyMeasure& m, const JumpSet& A,
                    const Vector& lambda) {
  double s = 0.0;
  for (const auto& a : m.atoms())
    if (A.contains(a.point))
      s += a.weight * (-std::expm1(-lambda.dot(a.point)));
  return s;
}

Vector first_moment_vector(const AtomicLevyMeasure& m, const JumpSet& A) {
  Vector s = Vector::Zero(m.dim());
  for (const auto& a : m.atoms())
    if (A.contains(a.point)) s += a.weight * a.point;
  return s;
}

double shifted_positive_moment(const AtomicLevyMeasure& m, Index i, Index j) {
  const double shift = (i == j) ? 1.0 : 0.0;
  double s = 0.0;
  for (const auto& a : m.atoms())
    s += a.weight * std::max(a.point(i) - shift, 0.0);
  return s;
}

AtomicLevyMeasure restrict(const AtomicLevyMeasure& m, const JumpSet& A) {
  std::vector<AtomicLevyMeasure::Atom> kept;
  for (const auto& a : m.atoms())
    if (A.contains(a.point)) kept.push_back(a);
  return AtomicLevyMeasure(m.dim(), std::move(kept));
}

double support_sup(const AtomicLevyMeasure& m) {
  double s = 0.0;
  for (const auto& a : m.atoms()) s = std::max(s, a.point.norm());
  return s;
}

}  // namespace cbi
