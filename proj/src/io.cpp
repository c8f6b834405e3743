#include "cbi/io.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

namespace cbi {

namespace {

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a JSON array");
  Vector v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& e : j) v(i++) = e.get<double>();
  return v;
}

json vector_to_json(const Vector& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

}  // namespace

json measure_to_json(const AtomicLevyMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms())
    atoms.push_back({{"point", vector_to_json(a.point)},
                     {"weight", a.weight}});
  return json{{"atoms", std::move(atoms)}};
}

AtomicLevyMeasure measure_from_json(const json& j, Index dim) {
  std::vector<AtomicLevyMeasure::Atom> atoms;
  if (j.contains("atoms")) {
    for (const auto& a : j.at("atoms"))
      atoms.push_back(
          {vector_from_json(a.at("point")), a.at("weight").get<double>()});
  }
  return AtomicLevyMeasure(dim, std::move(atoms));
}

json jump_set_to_json(const JumpSet& s) {
  using Kind = JumpSet::Kind;
  switch (s.kind()) {
    case Kind::Rectangle:
      return json{{"rect", vector_to_json(s.rectangle_upper())}};
    case Kind::Box:
      return json{{"box", {{"lo", vector_to_json(s.box_lower())},
                           {"hi", vector_to_json(s.box_upper())}}}};
    case Kind::BallComplement:
      return json{{"ball_complement", s.radius()}};
    case Kind::NormAtLeast:
      return json{{"norm_at_least", s.radius()}};
    case Kind::FullSpace:
      return json{{"full", true}};
    case Kind::Points: {
      json pts = json::array();
      for (const auto& p : s.point_list()) pts.push_back(vector_to_json(p));
      return json{{"points", std::move(pts)}};
    }
    case Kind::Union:
      return json{{"union", {jump_set_to_json(s.left()),
                             jump_set_to_json(s.right())}}};
    case Kind::Intersection:
      return json{{"intersection", {jump_set_to_json(s.left()),
                                    jump_set_to_json(s.right())}}};
    case Kind::Difference:
      return json{{"difference", {jump_set_to_json(s.left()),
                                  jump_set_to_json(s.right())}}};
    case Kind::Predicate:
      throw std::invalid_argument("predicate jump sets are not serializable");
  }
  throw std::logic_error("unhandled jump set kind");
}

JumpSet jump_set_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1)
    throw std::invalid_argument("jump set must be a single-key object");
  const auto it = j.begin();
  const std::string& key = it.key();
  const json& val = it.value();
  if (key == "rect") return JumpSet::rectangle(vector_from_json(val));
  if (key == "box")
    return JumpSet::box(vector_from_json(val.at("lo")),
                        vector_from_json(val.at("hi")));
  if (key == "ball_complement")
    return JumpSet::ball_complement(val.get<double>());
  if (key == "norm_at_least") return JumpSet::norm_at_least(val.get<double>());
  if (key == "full") return JumpSet::full_space();
  if (key == "points") {
    std::vector<Vector> pts;
    for (const auto& p : val) pts.push_back(vector_from_json(p));
    return JumpSet::points(std::move(pts));
  }
  auto fold = [&](auto combine) {
    if (val.size() < 2)
      throw std::invalid_argument(key + " needs at least two operands");
    JumpSet acc = jump_set_from_json(val.at(0));
    for (std::size_t k = 1; k < val.size(); ++k)
      acc = combine(std::move(acc), jump_set_from_json(val.at(k)));
    return acc;
  };
  if (key == "union") return fold(&JumpSet::set_union);
  if (key == "intersection") return fold(&JumpSet::set_intersection);
  if (key == "difference") {
    if (val.size() != 2)
      throw std::invalid_argument("difference needs exactly two operands");
    return JumpSet::set_difference(jump_set_from_json(val.at(0)),
                                   jump_set_from_json(val.at(1)));
  }
  throw std::invalid_argument("unknown jump set tag: " + key);
}

json params_to_json(const AdmissibleParams& p) {
  json B = json::array();
  for (Index i = 0; i < p.d; ++i) {
    json row = json::array();
    for (Index j = 0; j < p.d; ++j) row.push_back(p.B(i, j));
    B.push_back(std::move(row));
  }
  json mu = json::array();
  for (const auto& m : p.mu) mu.push_back(measure_to_json(m));
  return json{{"d", p.d},
              {"c", vector_to_json(p.c)},
              {"beta", vector_to_json(p.beta)},
              {"B", std::move(B)},
              {"nu", measure_to_json(p.nu)},
              {"mu", std::move(mu)}};
}

AdmissibleParams params_from_json(const json& j) {
  AdmissibleParams p;
  p.d = j.at("d").get<Index>();
  if (p.d < 1) throw std::invalid_argument("d must be a positive integer");
  p.c = vector_from_json(j.at("c"));
  p.beta = vector_from_json(j.at("beta"));
  const json& B = j.at("B");
  p.B = Matrix::Zero(p.d, p.d);
  if (static_cast<Index>(B.size()) != p.d)
    throw std::invalid_argument("B must have d rows");
  for (Index i = 0; i < p.d; ++i) {
    if (static_cast<Index>(B.at(i).size()) != p.d)
      throw std::invalid_argument("B must have d columns");
    for (Index k = 0; k < p.d; ++k) p.B(i, k) = B.at(i).at(k).get<double>();
  }
  p.nu = measure_from_json(j.at("nu"), p.d);
  const json& mu = j.at("mu");
  if (static_cast<Index>(mu.size()) != p.d)
    throw std::invalid_argument("mu must hold exactly d measures");
  for (const auto& m : mu) p.mu.push_back(measure_from_json(m, p.d));
  return p;
}

AdmissibleParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return params_from_json(j);
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace cbi
