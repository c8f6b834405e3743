#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "cbi/io.hpp"

using namespace cbi;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

AdmissibleParams sample_params() {
  AdmissibleParams p;
  p.d = 2;
  p.c = vec2(0.5, 0.0);
  p.beta = vec2(0.3, 0.7);
  p.B = Matrix(2, 2);
  p.B << -1.1, 0.2, 0.3, -0.9;
  p.nu = AtomicLevyMeasure(2, {{vec2(0.75, 0.25), 1.0}});
  p.mu.push_back(AtomicLevyMeasure(2, {{vec2(0.25, 0.75), 0.5},
                                       {vec2(2.0, 0.1), 0.25}}));
  p.mu.push_back(AtomicLevyMeasure(2));
  return p;
}

}  // namespace

TEST_CASE("params round-trip through JSON") {
  const AdmissibleParams p = sample_params();
  const json j = params_to_json(p);
  const AdmissibleParams q = params_from_json(j);
  CHECK(q.d == p.d);
  CHECK(q.c == p.c);
  CHECK(q.beta == p.beta);
  CHECK(q.B == p.B);
  CHECK(q.nu == p.nu);
  CHECK(q.mu[0] == p.mu[0]);
  CHECK(q.mu[1].is_zero());
  // serialize-parse-serialize is a fixed point
  CHECK(params_to_json(q) == j);
}

TEST_CASE("jump sets round-trip through JSON") {
  const std::vector<JumpSet> sets = {
      JumpSet::rectangle(vec2(1.0, 0.5)),
      JumpSet::box(vec2(0.5, 0.5), vec2(1.0, 1.0)),
      JumpSet::ball_complement(0.75),
      JumpSet::norm_at_least(0.75),
      JumpSet::full_space(),
      JumpSet::points({vec2(0.75, 0.25), vec2(0.25, 0.75)}),
      JumpSet::set_union(JumpSet::rectangle(vec2(1, 1)),
                         JumpSet::ball_complement(2.0)),
      JumpSet::set_difference(JumpSet::norm_at_least(0.5),
                              JumpSet::rectangle(vec2(1, 1))),
  };
  const std::vector<Vector> probes = {vec2(0.75, 0.25), vec2(0.25, 0.75),
                                      vec2(1.0, 1.0),   vec2(0.75, 0.0),
                                      vec2(3.0, 0.1),   vec2(0.1, 0.1)};
  for (const auto& s : sets) {
    const json j = jump_set_to_json(s);
    const JumpSet back = jump_set_from_json(j);
    CHECK(back.kind() == s.kind());
    CHECK(jump_set_to_json(back) == j);
    for (const auto& z : probes) CHECK(back.contains(z) == s.contains(z));
  }
}

TEST_CASE("predicates have no serialized form") {
  const auto pred = JumpSet::predicate([](const Vector&) { return true; });
  CHECK_THROWS_AS((void)jump_set_to_json(pred), std::invalid_argument);
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS(params_from_json(json::parse(R"({"d": 2})")));
  CHECK_THROWS(params_from_json(json::parse(
      R"({"d":1,"c":[0],"beta":[0],"B":[[0],[0]],"nu":{"atoms":[]},"mu":[{"atoms":[]}]})")));
  CHECK_THROWS(jump_set_from_json(json::parse(R"({"blob": 1})")));
  CHECK_THROWS(jump_set_from_json(json::parse(R"({"difference": [{"full":true}]})")));
}

TEST_CASE("full-precision formatting survives a round trip") {
  for (double v : {1.0 / 3.0, 0.1, 123456.789012345678, 1e-17}) {
    const std::string s = format_full(v);
    CHECK(std::stod(s) == v);
  }
}
