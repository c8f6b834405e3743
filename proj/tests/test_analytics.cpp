#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cbi/analytics.hpp"
#include "oracles.hpp"

using namespace cbi;

namespace {

Vector vec1(double a) { return Vector::Constant(1, a); }

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

AdmissibleParams two_channel_params() {
  AdmissibleParams p = zero_params(2);
  p.beta = vec2(0.5, 0.5);
  p.B << -1.0, 0.125, 0.125, -1.0;
  p.nu = AtomicLevyMeasure::point_mass(vec2(0.75, 0.25));
  p.mu[0] = AtomicLevyMeasure::point_mass(vec2(0.25, 0.75));
  return p;
}

}  // namespace

TEST_CASE("matrix_exp") {
  Matrix M(2, 2);
  M << 0.5, -0.25, 1.0, 2.0;
  CHECK(matrix_exp(M, 0.0) == Matrix::Identity(2, 2));

  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = -2.0;
  const Matrix E = matrix_exp(D, 1.0);
  CHECK(E(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(E(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(E(0, 1) == 0.0);

  Matrix N = Matrix::Zero(2, 2);
  N(0, 1) = 1.0;
  for (double t : {0.5, 3.0}) {
    const Matrix En = matrix_exp(N, t);
    CHECK(En(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(En(0, 1) == doctest::Approx(t).epsilon(1e-15));
    CHECK(En(1, 0) == 0.0);
    CHECK(En(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  }

  std::mt19937 gen(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix R(3, 3);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) R(i, j) = u(gen);
    const double t = 1.0 + 4.0 * std::abs(u(gen));
    const Matrix got = matrix_exp(R, t);
    const Matrix ref = oracles::taylor_expm(Matrix(t * R));
    CHECK((got - ref).norm() <= 1e-12 * ref.norm());
  }
}

TEST_CASE("mean") {
  SUBCASE("degenerate cases") {
    AdmissibleParams p = zero_params(2);
    const Vector x = vec2(0.5, 2.0);
    CHECK(mean(p, x, 0.0) == x);
    CHECK(mean(p, x, 7.0) == x);
  }

  SUBCASE("pure immigration drift") {
    AdmissibleParams p = zero_params(1);
    p.beta(0) = 2.0;
    CHECK(mean(p, vec1(1.0), 3.0)(0) == doctest::Approx(7.0).epsilon(1e-13));
  }

  SUBCASE("matches the block-matrix reference") {
    const AdmissibleParams p = twotype_params();
    const auto dd = derive_drift(p);
    const Vector x = vec2(1.0, 0.5);
    for (double t : {0.25, 1.0, 4.0}) {
      const auto blocks = oracles::expm_integrals(dd.B_tilde, t);
      const Vector expect = blocks.expm * x + blocks.single * dd.beta_tilde;
      CHECK((mean(p, x, t) - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
}

TEST_CASE("expected_jump_count") {
  const AdmissibleParams p = twotype_params();
  const Vector x = vec2(1.0, 0.5);

  SUBCASE("zero-mass set") {
    CHECK(expected_jump_count(p, x, JumpSet::points({vec2(7, 7)}), 3.0) ==
          0.0);
  }

  SUBCASE("pure immigration is a Poisson count") {
    AdmissibleParams q = zero_params(2);
    q.nu = AtomicLevyMeasure(2, {{vec2(1.0, 0.0), 1.5},
                                 {vec2(0.0, 1.0), 0.5}});
    CHECK(expected_jump_count(q, vec2(0, 0), JumpSet::full_space(), 3.0) ==
          doctest::Approx(6.0).epsilon(1e-12));
  }

  SUBCASE("matches the iterated-integral reference") {
    const auto dd = derive_drift(p);
    const auto A = JumpSet::ball_complement(0.5);
    Vector mu_A(2);
    for (Index l = 0; l < 2; ++l) mu_A(l) = mass(p.mu[l], A);
    for (double t : {0.5, 2.0}) {
      const auto blocks = oracles::expm_integrals(dd.B_tilde, t);
      const Vector int_mean =
          blocks.single * x + blocks.iterated * dd.beta_tilde;
      const double expect = mu_A.dot(int_mean) + t * mass(p.nu, A);
      CHECK(expected_jump_count(p, x, A, t) ==
            doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("laplace_X") {
  const AdmissibleParams p = twotype_params();
  const Vector x = vec2(1.0, 2.0);

  SUBCASE("conservative at lambda = 0") {
    for (double t : {0.0, 0.5, 2.0})
      CHECK(laplace_X(p, x, Vector::Zero(2), t) == 1.0);
  }

  SUBCASE("initial condition at t = 0") {
    const Vector lam = vec2(0.5, 1.5);
    CHECK(laplace_X(p, x, lam, 0.0) == std::exp(-x.dot(lam)));
  }

  SUBCASE("pure-immigration reduction") {
    AdmissibleParams q = zero_params(2);
    q.beta = vec2(0.5, 0.25);
    q.nu = AtomicLevyMeasure(2, {{vec2(1.0, 2.0), 0.75}});
    const Mechanism mech(q);
    const Vector lam = vec2(0.8, 0.4);
    for (double t : {0.5, 2.0}) {
      const double expect = std::exp(-x.dot(lam) - t * mech.psi(lam));
      CHECK(laplace_X(q, x, lam, t) ==
            doctest::Approx(expect).epsilon(1e-10));
    }
  }

  SUBCASE("flow property of the exponent") {
    const Mechanism mech(p);
    const Vector lam = vec2(0.7, 0.35);
    const double s = 0.8, t = 1.3;
    OdeControl ctrl;
    ctrl.atol = 1e-12;
    ctrl.rtol = 1e-10;
    const auto sol = solve_v(mech, lam, s + t, ctrl);
    REQUIRE(sol.ok());
    const auto sol2 = solve_v(mech, sol.at(s), t, ctrl);
    REQUIRE(sol2.ok());
    CHECK((sol.at(s + t) - sol2.at(t)).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("laplace_intX") {
  const AdmissibleParams p = twotype_params();
  const Vector x = vec2(0.5, 1.0);

  SUBCASE("trivial values") {
    CHECK(laplace_intX(p, x, Vector::Zero(2), 2.0) == 1.0);
    CHECK(laplace_intX(p, x, vec2(1.0, 1.0), 0.0) == 1.0);
  }

  SUBCASE("embedding identity on a grid") {
    const AdmissibleParams emb = embed_2d(p);
    for (double xs : {0.0, 0.5, 1.5}) {
      for (double ls : {0.25, 1.0, 3.0}) {
        for (double t : {0.25, 1.0, 2.0}) {
          const Vector xv = vec2(xs, 0.5 * xs + 0.25);
          const Vector lt = vec2(ls, 0.5 * ls);
          Vector x4 = Vector::Zero(4);
          x4.head(2) = xv;
          Vector l4 = Vector::Zero(4);
          l4.tail(2) = lt;
          const double lhs = laplace_intX(p, xv, lt, t);
          const double rhs = laplace_X(emb, x4, l4, t);
          CHECK(std::abs(lhs - rhs) <= 1e-8);
        }
      }
    }
  }
}

TEST_CASE("survival_tau") {
  const AdmissibleParams p = twotype_params();
  const Vector x = vec2(1.0, 0.5);

  SUBCASE("zero-mass set never fires") {
    const auto A = JumpSet::points({vec2(9, 9)});
    for (double t : {0.5, 5.0}) CHECK(survival_tau(p, x, A, t) == 1.0);
  }

  SUBCASE("pure immigration is exponential") {
    AdmissibleParams q = zero_params(2);
    q.beta = vec2(0.5, 0.25);
    q.c = vec2(0.25, 0.25);
    q.B << -0.5, 0.1, 0.2, -0.5;
    q.nu = AtomicLevyMeasure(2, {{vec2(1.0, 0.0), 0.5},
                                 {vec2(0.0, 2.0), 0.25},
                                 {vec2(0.5, 0.5), 0.25}});
    const auto A = JumpSet::ball_complement(0.75);
    const double nuA = mass(q.nu, A);
    REQUIRE(nuA > 0.0);
    for (double t : {0.5, 1.0, 2.0})
      CHECK(std::abs(survival_tau(q, x, A, t) - std::exp(-nuA * t)) <= 1e-12);
  }

  SUBCASE("no-immigration case drops the time integral") {
    AdmissibleParams q = twotype_params();
    q.beta = Vector::Zero(2);
    q.nu = AtomicLevyMeasure(2);
    const auto A = JumpSet::ball_complement(0.5);
    const auto mod = modify_for_set(q, A);
    const Mechanism mech_A(mod.base);
    const auto sol = solve_vtilde_A(mech_A, mod.mu_of_A, 2.0);
    REQUIRE(sol.ok());
    for (double t : {0.5, 2.0}) {
      const double expect = std::exp(-x.dot(sol.at(t)));
      CHECK(survival_tau(q, x, A, t) ==
            doctest::Approx(expect).epsilon(1e-10));
    }
  }

  SUBCASE("monotone in t and in the initial state") {
    const auto A = JumpSet::ball_complement(0.5);
    FirstJumpLaw law(p, A, 3.0);
    double prev = 1.0;
    for (double t = 0.0; t <= 3.0; t += 0.1) {
      const double s = law.survival(t, x);
      CHECK(s <= prev + 1e-12);
      prev = s;
    }
    CHECK(law.survival(0.0, x) == 1.0);
    for (double bump : {0.25, 1.0})
      CHECK(law.survival(2.0, Vector(x.array() + bump)) <=
            law.survival(2.0, x) + 1e-12);
  }

  SUBCASE("monotone comparison for nested sets") {
    const auto A = JumpSet::ball_complement(1.2);
    const auto B = JumpSet::ball_complement(0.4);  // A subset of B
    for (double t : {0.5, 1.5})
      CHECK(survival_tau(p, x, A, t) >= survival_tau(p, x, B, t) - 1e-12);
  }
}

TEST_CASE("prob_tau_infinite") {
  SUBCASE("zero mass gives One") {
    const auto res = prob_tau_infinite(twotype_params(), vec2(1, 1),
                                       JumpSet::points({vec2(9, 9)}));
    CHECK(res.status == TauInfinityStatus::One);
  }

  SUBCASE("immigration atom in A gives Zero") {
    const auto res =
        prob_tau_infinite(two_channel_params(), Vector::Zero(2),
                          JumpSet::points({vec2(0.75, 0.25)}));
    CHECK(res.status == TauInfinityStatus::Zero);
  }

  SUBCASE("irreducible branching case with nonzero psi gives Zero") {
    const auto res = prob_tau_infinite(twotype_params(), vec2(1, 1),
                                       JumpSet::points({vec2(0.75, 0.5)}));
    CHECK(res.status == TauInfinityStatus::Zero);
  }

  SUBCASE("pure-branching golden-ratio value") {
    AdmissibleParams p = zero_params(1);
    p.c(0) = 1.0;
    p.mu[0] = AtomicLevyMeasure::point_mass(vec1(1.0));
    const auto A = JumpSet::points({vec1(1.0)});
    const double root = 0.5 * (std::sqrt(5.0) - 1.0);
    for (double x0 : {0.5, 1.0, 3.0}) {
      const auto res = prob_tau_infinite(p, vec1(x0), A);
      REQUIRE(res.status == TauInfinityStatus::Value);
      CHECK(res.value == doctest::Approx(std::exp(-x0 * root)).epsilon(1e-9));
    }
  }

  SUBCASE("undetermined when a branching channel misses A") {
    AdmissibleParams p = zero_params(2);
    p.c = vec2(1.0, 1.0);
    p.B << -1.0, 0.5, 0.5, -1.0;
    p.mu[0] = AtomicLevyMeasure::point_mass(vec2(1.0, 0.0));
    p.mu[1] = AtomicLevyMeasure::point_mass(vec2(0.0, 1.0));
    const auto res = prob_tau_infinite(p, vec2(1, 1),
                                       JumpSet::points({vec2(1.0, 0.0)}));
    CHECK(res.status == TauInfinityStatus::Undetermined);
    CHECK_FALSE(res.detail.empty());
  }
}

TEST_CASE("sup-jump laws") {
  const AdmissibleParams p = twotype_params();
  const Vector x = vec2(1.0, 0.5);

  SUBCASE("cdf shares the survival code path") {
    for (double r : {0.5, 1.0, 2.0})
      CHECK(sup_jump_norm_cdf(p, x, r, 1.5) ==
            survival_tau(p, x, JumpSet::ball_complement(r), 1.5));
  }

  SUBCASE("all jumps inside the ball") {
    // largest atom norm of twotype_params is sqrt(1.5^2+0.5^2) < 1.6
    CHECK(sup_jump_norm_cdf(p, x, 1.6, 2.0) == 1.0);
  }

  SUBCASE("r sweep is a cdf") {
    double prev = 0.0;
    for (double r = 0.2; r <= 2.0; r += 0.2) {
      const double v = sup_jump_norm_cdf(p, x, r, 1.0);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }

  SUBCASE("zero-probability of no jumps") {
    AdmissibleParams quiet = zero_params(2);
    quiet.c = vec2(1.0, 1.0);
    quiet.beta = vec2(0.5, 0.5);
    quiet.B << -1.0, 0.25, 0.25, -1.0;
    CHECK(sup_jump_zero_prob(quiet, x, 3.0) == 1.0);

    AdmissibleParams imm = quiet;
    imm.nu = AtomicLevyMeasure(2, {{vec2(1.0, 1.0), 0.75}});
    for (double t : {0.5, 2.0})
      CHECK(std::abs(sup_jump_zero_prob(imm, x, t) - std::exp(-0.75 * t)) <=
            1e-12);
  }

  SUBCASE("zero prob equals the cdf below the smallest atom norm") {
    // smallest atom norm of twotype_params: ||(0.25,0.25)|| ~ 0.354
    const double below = 0.25;
    for (double t : {0.5, 1.5})
      CHECK(sup_jump_norm_cdf(p, x, below, t) ==
            doctest::Approx(sup_jump_zero_prob(p, x, t)).epsilon(1e-12));
  }
}

TEST_CASE("global_sup_constant and its hypotheses") {
  CHECK(global_sup_constant(zero_params(2)) == 0.0);

  const AdmissibleParams tc = two_channel_params();
  CHECK(global_sup_constant(tc) ==
        doctest::Approx(std::sqrt(10.0) / 4.0).epsilon(1e-15));
  const auto rep = check_prop53_hypotheses(tc);
  CHECK(rep.psi_nonzero);

  // interior-mass condition violated: the coupling atom of mu_2 sits exactly
  // on its support sphere
  AdmissibleParams bad = zero_params(2);
  bad.beta = vec2(0.5, 0.5);
  bad.B << -1.0, 0.0, 0.5, -1.0;
  bad.mu[1] = AtomicLevyMeasure::point_mass(vec2(1.0, 0.0));
  const auto dd = derive_drift(bad);
  REQUIRE(dd.B_tilde(0, 1) > 0.0);
  REQUIRE(is_irreducible(dd.B_tilde));
  const auto rep2 = check_prop53_hypotheses(bad);
  CHECK(rep2.drift_irreducible);
  CHECK(rep2.psi_nonzero);
  CHECK_FALSE(rep2.interior_mass_condition);
  CHECK_FALSE(rep2.all_hold);
}

TEST_CASE("rect_sup_is_null") {
  const AdmissibleParams tc = two_channel_params();
  const double t = 1.0;

  SUBCASE("non-anchored rectangles are rejected") {
    const auto res = rect_sup_is_null(
        tc, JumpSet::box(vec2(0.5, 0.5), vec2(1.0, 1.0)), Vector::Zero(2), t);
    CHECK(res.verdict == RectVerdict::RejectedNotAnchored);
    CHECK_FALSE(res.detail.empty());
  }

  SUBCASE("anchored rectangle with mass and positive beta") {
    const auto res = rect_sup_is_null(tc, JumpSet::rectangle(vec2(0.5, 1.0)),
                                      Vector::Zero(2), t);
    CHECK(res.verdict == RectVerdict::Positive);
  }

  SUBCASE("zero-mass anchored rectangle") {
    const auto res = rect_sup_is_null(tc, JumpSet::rectangle(vec2(0.125, 0.125)),
                                      vec2(1.0, 1.0), t);
    CHECK(res.verdict == RectVerdict::Null);
  }

  SUBCASE("x = 0 and beta = 0 falls outside the dichotomy") {
    AdmissibleParams r57 = zero_params(2);
    r57.nu = AtomicLevyMeasure::point_mass(vec2(3.0, 0.0));
    r57.mu[0] = AtomicLevyMeasure::point_mass(vec2(1.0, 0.0));
    const auto res = rect_sup_is_null(r57, JumpSet::rectangle(vec2(1.0, 1.0)),
                                      Vector::Zero(2), t);
    CHECK(res.verdict == RectVerdict::OutsideTheorem);
  }
}

TEST_CASE("lower_bound_pi") {
  const AdmissibleParams tc = two_channel_params();

  SUBCASE("zero-mass set gives a vanishing bound") {
    AdmissibleParams p = twotype_params();
    const auto A = JumpSet::points({vec2(9, 9)});
    CHECK(lower_bound_pi(p, vec2(1, 1), A, 0.5, 1.0) == 0.0);
  }

  SUBCASE("rectangle holding the immigration atom gives a positive bound") {
    // [0,1]x[0,0.5] contains (0.75, 0.25); r = 0.5 keeps it in the shell
    const auto C = JumpSet::rectangle(vec2(1.0, 0.5));
    const double bound = lower_bound_pi(tc, vec2(1.0, 1.0), C, 0.5, 1.0);
    CHECK(bound > 1e-4);
  }
}
