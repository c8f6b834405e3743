#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cbi/analytics.hpp"
#include "cbi/rng.hpp"
#include "cbi/simulate.hpp"
#include "oracles.hpp"

using namespace cbi;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

AdmissibleParams zero_params(Index d) {
  AdmissibleParams p;
  p.d = d;
  p.c = Vector::Zero(d);
  p.beta = Vector::Zero(d);
  p.B = Matrix::Zero(d, d);
  p.nu = AtomicLevyMeasure(d);
  for (Index i = 0; i < d; ++i) p.mu.emplace_back(d);
  return p;
}

AdmissibleParams twotype_params() {
  AdmissibleParams p = zero_params(2);
  p.c = vec2(0.5, 0.25);
  p.beta = vec2(0.25, 0.125);
  p.B << -1.0, 0.25, 0.25, -1.0;
  p.nu = AtomicLevyMeasure(2, {{vec2(0.5, 0.25), 0.25},
                               {vec2(1.5, 0.5), 0.125}});
  p.mu[0] = AtomicLevyMeasure(2, {{vec2(0.75, 0.5), 0.25},
                                  {vec2(0.25, 0.25), 0.25}});
  p.mu[1] = AtomicLevyMeasure(2, {{vec2(0.5, 1.0), 0.25}});
  return p;
}

}  // namespace

TEST_CASE("philox streams") {
  PhiloxRng a(42, 7);
  PhiloxRng b(42, 7);
  for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());

  PhiloxRng c(42, 8);
  int same = 0;
  for (int k = 0; k < 100; ++k)
    if (a.next_u64() == c.next_u64()) ++same;
  CHECK(same == 0);

  PhiloxRng d(43, 7);
  double m = 0.0;
  for (int k = 0; k < 10000; ++k) m += d.uniform();
  CHECK(std::abs(m / 10000.0 - 0.5) < 0.02);

  PhiloxRng e(1, 2);
  double s2 = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double z = e.normal();
    s2 += z * z;
  }
  CHECK(std::abs(s2 / 10000.0 - 1.0) < 0.05);
}

TEST_CASE("deterministic drift path reproduces the linear flow") {
  AdmissibleParams p = zero_params(2);
  p.beta = vec2(0.5, 0.25);
  p.B << -1.0, 0.5, 0.25, -0.75;
  SimConfig cfg;
  cfg.params = p;
  cfg.x0 = vec2(1.0, 2.0);
  cfg.horizon = 1.0;
  cfg.step = 1e-4;
  cfg.n_paths = 1;
  const auto rec = simulate_path(cfg, 0);
  CHECK(rec.events.empty());
  const auto blocks = oracles::expm_integrals(p.B, 1.0);
  const Vector expect = blocks.expm * cfg.x0 + blocks.single * p.beta;
  CHECK((rec.terminal - expect).lpNorm<Eigen::Infinity>() < 1e-3);
}

TEST_CASE("compound Poisson case") {
  AdmissibleParams p = zero_params(2);
  const Vector r0 = vec2(0.5, 1.0);
  p.nu = AtomicLevyMeasure::point_mass(r0, 2.0);
  SimConfig cfg;
  cfg.params = p;
  cfg.x0 = vec2(0.25, 0.0);
  cfg.horizon = 1.0;
  cfg.n_paths = 20000;
  cfg.seed = 5;

  // terminal state is exactly x0 + r0 * (event count)
  for (long i = 0; i < 50; ++i) {
    const auto rec = simulate_path(cfg, i);
    const Vector expect =
        cfg.x0 + static_cast<double>(rec.events.size()) * r0;
    CHECK((rec.terminal - expect).lpNorm<Eigen::Infinity>() == 0.0);
    for (const auto& ev : rec.events) CHECK(ev.from_immigration());
  }

  const auto est =
      estimate_jump_count(cfg, JumpSet::full_space(), cfg.horizon);
  CHECK(std::abs(est.value - 2.0) <= 3.0 * est.std_error);
}

TEST_CASE("no branching before the first immigration event from x = 0") {
  AdmissibleParams p = zero_params(2);
  p.nu = AtomicLevyMeasure::point_mass(vec2(3.0, 0.0));
  p.mu[0] = AtomicLevyMeasure::point_mass(vec2(1.0, 0.0));
  SimConfig cfg;
  cfg.params = p;
  cfg.x0 = Vector::Zero(2);
  cfg.horizon = 2.0;
  cfg.n_paths = 2000;
  cfg.seed = 11;
  for (long i = 0; i < cfg.n_paths; ++i) {
    const auto rec = simulate_path(cfg, i);
    double first_imm = -1.0;
    for (const auto& ev : rec.events) {
      if (ev.from_immigration()) {
        first_imm = ev.time;
        break;
      }
    }
    for (const auto& ev : rec.events)
      if (!ev.from_immigration()) {
        REQUIRE(first_imm >= 0.0);
        CHECK(ev.time > first_imm);
      }
  }
}

TEST_CASE("batch results do not depend on the worker count") {
  SimConfig cfg;
  cfg.params = twotype_params();
  cfg.x0 = vec2(0.5, 0.5);
  cfg.horizon = 1.0;
  cfg.step = 0.005;
  cfg.n_paths = 500;
  cfg.seed = 123;
  const std::vector<EstimatorSpec> est = {
      survival_estimator(JumpSet::ball_complement(0.5), 1.0),
      jump_count_estimator(JumpSet::full_space(), 1.0),
      sup_norm_cdf_estimator(1.0, 1.0),
  };
  const auto r1 = run_batch(cfg, est, 1);
  const auto r2 = run_batch(cfg, est, 2);
  const auto r4 = run_batch(cfg, est, 4);
  CHECK(r1.to_csv() == r2.to_csv());
  CHECK(r1.to_csv() == r4.to_csv());
}

TEST_CASE("survival estimate matches the exponential law for immigration") {
  AdmissibleParams p = zero_params(2);
  p.beta = vec2(0.5, 0.25);
  p.nu = AtomicLevyMeasure(2, {{vec2(1.0, 0.0), 0.5},
                               {vec2(0.0, 2.0), 0.5}});
  SimConfig cfg;
  cfg.params = p;
  cfg.x0 = vec2(1.0, 1.0);
  cfg.horizon = 1.0;
  cfg.n_paths = 20000;
  cfg.seed = 99;
  const auto A = JumpSet::ball_complement(1.5);  // only the (0,2) atom
  const double nuA = mass(p.nu, A);
  REQUIRE(nuA == 0.5);
  const auto est = estimate_survival_tau(cfg, A, 1.0);
  CHECK(std::abs(est.value - std::exp(-0.5)) <= 3.0 * est.std_error);
}

TEST_CASE("jump count cross-validates the analytic expectation") {
  SimConfig cfg;
  cfg.params = twotype_params();
  cfg.x0 = vec2(0.5, 0.5);
  cfg.horizon = 1.0;
  cfg.n_paths = 20000;
  cfg.seed = 7;
  const auto A = JumpSet::ball_complement(0.5);
  const auto est = estimate_jump_count(cfg, A, 1.0);
  const double expect = expected_jump_count(cfg.params, cfg.x0, A, 1.0);
  CHECK(std::abs(est.value - expect) <= 3.0 * est.std_error);
}

TEST_CASE("per-path coupling of sup norm and first passage") {
  SimConfig cfg;
  cfg.params = twotype_params();
  cfg.x0 = vec2(0.5, 0.5);
  cfg.horizon = 1.0;
  cfg.step = 0.005;
  cfg.n_paths = 200;
  cfg.seed = 3;
  for (double r : {0.5, 1.0}) {
    const auto shell = JumpSet::ball_complement(r);
    for (long i = 0; i < cfg.n_paths; ++i) {
      const auto rec = simulate_path(cfg, i);
      CHECK((path_max_event_norm(rec, 1.0) <= r) ==
            !path_has_event_in(rec, shell, 1.0));
    }
  }
}

TEST_CASE("halving the step hardly moves the estimates") {
  SimConfig coarse;
  coarse.params = twotype_params();
  coarse.x0 = vec2(0.5, 0.5);
  coarse.horizon = 1.0;
  coarse.step = 2e-3;
  coarse.n_paths = 10000;
  coarse.seed = 2024;
  SimConfig fine = coarse;
  fine.step = 1e-3;
  const auto A = JumpSet::ball_complement(0.5);
  const auto a = estimate_survival_tau(coarse, A, 1.0);
  const auto b = estimate_survival_tau(fine, A, 1.0);
  CHECK(std::abs(a.value - b.value) <= 3.0 * (a.std_error + b.std_error));
}

TEST_CASE("snapshot states support transform estimators") {
  AdmissibleParams p = zero_params(1);
  p.c(0) = 1.0;
  p.beta(0) = 0.5;
  p.B(0, 0) = -1.0;
  p.nu = AtomicLevyMeasure::point_mass(Vector::Constant(1, 1.0), 0.25);
  p.mu[0] = AtomicLevyMeasure::point_mass(Vector::Constant(1, 0.5), 0.5);
  SimConfig cfg;
  cfg.params = p;
  cfg.x0 = Vector::Constant(1, 1.0);
  cfg.horizon = 1.0;
  cfg.n_paths = 20000;
  cfg.seed = 31;
  cfg.snapshot_times = {1.0};
  const Vector lam = Vector::Constant(1, 0.8);
  EstimatorSpec spec{"laplace", false, [lam](const PathRecord& rec) {
                       return std::exp(-lam.dot(rec.state_at_snapshot(0)));
                     }};
  const auto rep = run_batch(cfg, {spec});
  const double expect = laplace_X(p, cfg.x0, lam, 1.0);
  CHECK(std::abs(rep.estimates[0].value - expect) <=
        3.0 * rep.estimates[0].std_error);
}

TEST_CASE("rect sup estimator uses the coordinate-wise supremum") {
  AdmissibleParams p = zero_params(2);
  p.nu = AtomicLevyMeasure(2, {{vec2(1.0, 0.0), 1.0},
                               {vec2(0.0, 1.0), 1.0}});
  SimConfig cfg;
  cfg.params = p;
  cfg.x0 = Vector::Zero(2);
  cfg.horizon = 2.0;
  cfg.n_paths = 20000;
  cfg.seed = 17;
  // sup lands in (1,1) + rectangle only when both atom kinds fired
  const auto corner = JumpSet::box(vec2(1.0, 1.0), vec2(1.0, 1.0));
  const auto est = estimate_sup_in_set(cfg, corner, 2.0);
  const double expect = (1.0 - std::exp(-2.0)) * (1.0 - std::exp(-2.0));
  CHECK(std::abs(est.value - expect) <= 3.0 * est.std_error);

  // no-jump paths have sup = 0, which lies in no jump set
  AdmissibleParams quiet = zero_params(2);
  SimConfig qc = cfg;
  qc.params = quiet;
  qc.n_paths = 50;
  const auto zero_est =
      estimate_rect_sup_prob(qc, JumpSet::rectangle(vec2(5.0, 5.0)), 2.0);
  CHECK(zero_est.value == 0.0);
  const auto cdf = estimate_sup_norm_cdf(qc, 0.25, 2.0);
  CHECK(cdf.value == 1.0);
}

TEST_CASE("analytic lower bound stays below the empirical sup-in-set mass") {
  AdmissibleParams p = zero_params(2);
  p.beta = vec2(0.5, 0.5);
  p.B << -1.0, 0.125, 0.125, -1.0;
  p.nu = AtomicLevyMeasure::point_mass(vec2(0.75, 0.25));
  p.mu[0] = AtomicLevyMeasure::point_mass(vec2(0.25, 0.75));
  const Vector x = vec2(1.0, 1.0);
  const double r = 0.5, t = 1.0;
  // rectangle holding the immigration atom
  const auto C = JumpSet::rectangle(vec2(1.0, 0.5));
  const double bound = lower_bound_pi(p, x, C, r, t);
  REQUIRE(bound > 0.0);

  SimConfig cfg;
  cfg.params = p;
  cfg.x0 = x;
  cfg.horizon = t;
  cfg.n_paths = 20000;
  cfg.seed = 21;
  const auto target =
      JumpSet::set_intersection(JumpSet::norm_at_least(r), C);
  const auto est = estimate_sup_in_set(cfg, target, t);
  CHECK(bound <= est.value + 3.0 * est.std_error);
}

TEST_CASE("recorded states never leave the orthant") {
  AdmissibleParams p = twotype_params();
  p.c = vec2(2.0, 2.0);  // strong diffusion pushes against the boundary
  SimConfig cfg;
  cfg.params = p;
  cfg.x0 = vec2(0.1, 0.1);
  cfg.horizon = 1.0;
  cfg.step = 0.01;
  cfg.n_paths = 50;
  cfg.seed = 8;
  cfg.record_states = true;
  long floored = 0;
  for (long i = 0; i < cfg.n_paths; ++i) {
    const auto rec = simulate_path(cfg, i);
    for (const auto& [t, state] : rec.states)
      CHECK((state.array() >= 0.0).all());
    floored += rec.floor_corrections;
  }
  CHECK(floored > 0);  // the floor actually engaged under this diffusion
}

TEST_CASE("event dump is deterministic") {
  SimConfig cfg;
  cfg.params = twotype_params();
  cfg.x0 = vec2(0.5, 0.5);
  cfg.horizon = 2.0;
  cfg.n_paths = 10;
  cfg.seed = 4;
  std::ostringstream a, b;
  dump_events_csv(cfg, 10, a);
  dump_events_csv(cfg, 10, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("immigration") != std::string::npos);
}
