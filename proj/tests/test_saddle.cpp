#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dsa/errors.hpp"
#include "dsa/saddle.hpp"

using namespace dsa;

namespace {

StageTemplate scalar_stage(Cone cone, ObjectiveKind kind = ObjectiveKind::kLinear, double mu = 0.0) {
  StageTemplate st;
  st.index = 1;
  st.n = 1;
  st.m = cone.dim;
  st.prox = make_prox_setup(FeasibleSet::box({0.0}, {1.0}), Dgf::kEuclidean);
  st.cone = cone;
  st.objective.kind = kind;
  st.objective.mu = mu;
  st.objective.center = st.prox.prox_center;
  return st;
}

Outcome scalar_outcome(double a, double b, double c) {
  Outcome o;
  o.A = DenseMatrix{{a}};
  o.B = DenseMatrix(1, 0);
  o.b = {b};
  o.c = {c};
  return o;
}

StageObjective objective_of(const StageTemplate& st, const Outcome& o) {
  StageObjective obj = st.objective;
  obj.c = o.c;
  return obj;
}

}  // namespace

TEST(Spdt, ZeroDataLeavesStateUnchanged) {
  StageTemplate st = scalar_stage(Cone::orthant(1));
  const Outcome o = scalar_outcome(0.0, 0.0, 0.0);
  const StageBinding bind = make_binding(st, o, objective_of(st, o), {});
  SaddleState s = initial_state(st, {0.7});
  s.x = {0.3};
  const SaddleState n = spdt_step(s, bind, {0.0}, 0.0, 1.0, 1.0);
  EXPECT_EQ(n.x, s.x);
  EXPECT_EQ(n.y, s.y);
}

TEST(Spdt, ScalarClosedForm) {
  StageTemplate st = scalar_stage(Cone::orthant(1));
  const Outcome o = scalar_outcome(1.0, 1.0, 0.0);
  const StageBinding bind = make_binding(st, o, objective_of(st, o), {});
  SaddleState s = initial_state(st, {1.0});
  s.x = {0.5};
  const SaddleState n = spdt_step(s, bind, {0.0}, 1.0, 2.0, 1.0);
  EXPECT_NEAR(n.x[0], 1.0, 1e-15);
  EXPECT_NEAR(n.y[0], 1.0, 1e-15);
  EXPECT_EQ(n.y_prev, s.y);
  EXPECT_EQ(n.k, 1u);
}

TEST(Spdt, RejectsBadParameters) {
  StageTemplate st = scalar_stage(Cone::orthant(1));
  const Outcome o = scalar_outcome(1.0, 1.0, 0.0);
  const StageBinding bind = make_binding(st, o, objective_of(st, o), {});
  const SaddleState s = initial_state(st);
  for (auto [tau, eta] : {std::pair{0.0, 1.0}, std::pair{1.0, 0.0}, std::pair{-1.0, 1.0}}) {
    try {
      (void)spdt_step(s, bind, {0.0}, 1.0, tau, eta);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParameter);
    }
  }
  try {
    (void)spdt_step(s, bind, {0.0, 0.0}, 1.0, 1.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Schedule, GeneralAggressiveAtZeroM) {
  const Schedule s(ScheduleVariant::kGenAggressive, 4, {1.0, 1.0, 0.5, 0.0, 0.0, 0.0});
  for (std::size_t k = 1; k <= 4; ++k) {
    EXPECT_NEAR(s.tau(k), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.eta(k), std::sqrt(2.0), 1e-15);
    EXPECT_DOUBLE_EQ(s.theta(k), 1.0);
    EXPECT_DOUBLE_EQ(s.w(k), 1.0);
  }
}

TEST(Schedule, StrongAggressiveStepThree) {
  ScheduleConstants c;
  c.norm_A = 2.0;
  c.alpha = 1.0;
  c.mu = 1.0;
  const Schedule s(ScheduleVariant::kStrongAggressive, 10, c);
  EXPECT_DOUBLE_EQ(s.w(3), 3.0);
  EXPECT_NEAR(s.tau(3), 1.0, 1e-15);
  EXPECT_NEAR(s.eta(3), 16.0 / 3.0, 1e-14);
  EXPECT_NEAR(s.theta(3), 2.0 / 3.0, 1e-15);
}

TEST(Schedule, GeneralBoundedDual) {
  ScheduleConstants c;
  c.norm_A = 1.0;
  c.alpha = 1.0;
  c.Omega_sq = 1.0;
  c.M = 1.0;
  const Schedule s(ScheduleVariant::kGenBoundedDual, 9, c);
  EXPECT_NEAR(s.tau(1), 3.0 * std::sqrt(3.0), 1e-13);
  EXPECT_NEAR(s.eta(1), 3.0 * std::sqrt(2.0), 1e-13);
}

TEST(Schedule, ConfigurationErrors) {
  ScheduleConstants c;
  c.norm_A = 1.0;
  EXPECT_THROW(Schedule(ScheduleVariant::kStrongAggressive, 5, c), Error);
  c.M = 1.0;
  c.Omega_sq = 0.0;
  try {
    Schedule(ScheduleVariant::kGenAggressive, 5, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
  }
}

TEST(Schedule, VariantNamesRoundTrip) {
  for (auto v : {ScheduleVariant::kGenAggressive, ScheduleVariant::kGenBoundedDual, ScheduleVariant::kStrongAggressive,
                 ScheduleVariant::kStrongBoundedDual})
    EXPECT_EQ(schedule_variant_from_string(to_string(v)), v);
}

TEST(ScheduleProperty, ConditionsHoldForAllVariants) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (auto v : {ScheduleVariant::kGenAggressive, ScheduleVariant::kGenBoundedDual, ScheduleVariant::kStrongAggressive,
                 ScheduleVariant::kStrongBoundedDual}) {
    for (std::size_t N : {1u, 2u, 7u, 100u, 1000u, 10000u}) {
      ScheduleConstants c{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
      const ScheduleConditionReport r = check_schedule_conditions(Schedule(v, N, c));
      EXPECT_TRUE(r.satisfied(1e-9)) << to_string(v) << " N=" << N << " a=" << r.a << " b=" << r.b << " c=" << r.c
                                     << " d=" << r.d << " e=" << r.e;
    }
  }
}

TEST(Ipdsa, SingleStepZeroDataReturnsProxCenter) {
  StageTemplate st = scalar_stage(Cone::orthant(1));
  const Outcome o = scalar_outcome(0.0, 0.0, 0.0);
  const StageBinding bind = make_binding(st, o, objective_of(st, o), {});
  SeededStream stream(1);
  const IpdsaResult r = ipdsa_run(bind, Schedule(ScheduleVariant::kGenAggressive, 1, {0.0, 1.0, 0.5, 0.0, 0.0, 0.0}),
                                  initial_state(st), stream);
  EXPECT_EQ(r.x_bar, st.prox.prox_center);
  EXPECT_EQ(r.x_bar, r.state.x);
  EXPECT_EQ(r.y_bar, r.state.y);
}

TEST(Ipdsa, BilinearConvergesToSaddle) {
  StageTemplate st = scalar_stage(Cone::zero(1));
  const Outcome o = scalar_outcome(1.0, 0.5, 1.0);
  const StageBinding bind = make_binding(st, o, objective_of(st, o), {});
  SeededStream stream(1);
  const IpdsaResult r = ipdsa_run(bind, Schedule(ScheduleVariant::kGenAggressive, 1000, {1.0, 1.0, 0.5, 0.0, 0.0, 0.0}),
                                  initial_state(st), stream);
  EXPECT_LE(std::abs(r.x_bar[0] - 0.5), 0.01);
  EXPECT_LE(std::abs(r.y_bar[0] - 1.0), 0.05);
}

TEST(Ipdsa, ReplayIsBitwiseIdentical) {
  StageTemplate st = scalar_stage(Cone::orthant(1));
  const Outcome o = scalar_outcome(1.0, 0.4, 0.3);
  SubgradientOracle oracle = [](const DenseVector&, std::size_t, SeededStream& s) {
    return SubgradientSample{{s.next_uniform() - 0.5}, 0.0};
  };
  const StageBinding bind = make_binding(st, o, objective_of(st, o), {}, oracle);
  const Schedule sched(ScheduleVariant::kGenAggressive, 200, {1.0, 1.0, 0.5, 0.5, 0.0, 0.0});
  SeededStream a(42), b(42);
  const IpdsaResult ra = ipdsa_run(bind, sched, initial_state(st), a);
  const IpdsaResult rb = ipdsa_run(bind, sched, initial_state(st), b);
  EXPECT_EQ(ra.x_bar, rb.x_bar);
  EXPECT_EQ(ra.y_bar, rb.y_bar);
}

TEST(Ipdsa, StreamingAverageMatchesTrace) {
  StageTemplate st = scalar_stage(Cone::orthant(1), ObjectiveKind::kQuadPlusLinear, 1.0);
  const Outcome o = scalar_outcome(1.0, 0.6, -0.2);
  const StageBinding bind = make_binding(st, o, objective_of(st, o), {});
  for (auto v : {ScheduleVariant::kGenAggressive, ScheduleVariant::kStrongAggressive}) {
    ScheduleConstants c{1.0, 1.0, 0.5, 0.0, 1.0, 0.0};
    const Schedule sched(v, 300, c);
    std::vector<SaddleState> trace;
    IpdsaOptions opts;
    opts.trace = &trace;
    SeededStream stream(3);
    const IpdsaResult r = ipdsa_run(bind, sched, initial_state(st), stream, opts);
    ASSERT_EQ(trace.size(), 300u);
    double wx = 0.0, wy = 0.0, wsum = 0.0;
    for (std::size_t k = 1; k <= trace.size(); ++k) {
      wx += sched.w(k) * trace[k - 1].x[0];
      wy += sched.w(k) * trace[k - 1].y[0];
      wsum += sched.w(k);
    }
    EXPECT_NEAR(r.x_bar[0], wx / wsum, 1e-12);
    EXPECT_NEAR(r.y_bar[0], wy / wsum, 1e-12);
    EXPECT_NEAR(wsum, sched.weight_total(), 1e-9);
  }
}

TEST(Ipdsa, IteratesStayFeasible) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  struct Case {
    FeasibleSet set;
    Dgf dgf;
    Cone cone;
  };
  const std::vector<Case> cases = {
      {FeasibleSet::box({-1.0, 0.0}, {1.0, 2.0}), Dgf::kEuclidean, Cone::orthant(2)},
      {FeasibleSet::ball({0.0, 0.0}, 1.0), Dgf::kEuclidean, Cone::second_order(2)},
      {FeasibleSet::simplex(2, 1.0), Dgf::kEntropy, Cone::second_order(3)},
      {FeasibleSet::simplex(2, 2.0), Dgf::kEuclidean, Cone::orthant(1)},
  };
  for (const Case& cs : cases) {
    StageTemplate st;
    st.n = 2;
    st.m = cs.cone.dim;
    st.prox = make_prox_setup(cs.set, cs.dgf);
    st.cone = cs.cone;
    st.objective.center = st.prox.prox_center;
    Outcome o;
    o.A = DenseMatrix(st.m, 2);
    for (std::size_t i = 0; i < st.m; ++i)
      for (std::size_t j = 0; j < 2; ++j) o.A(i, j) = n(rng);
    o.B = DenseMatrix(st.m, 0);
    o.b = DenseVector(st.m);
    for (double& v : o.b) v = n(rng);
    o.c = {n(rng), n(rng)};
    SubgradientOracle oracle = [](const DenseVector&, std::size_t, SeededStream& s) {
      return SubgradientSample{{s.next_uniform() - 0.5, s.next_uniform() - 0.5}, 0.0};
    };
    const StageBinding bind = make_binding(st, o, objective_of(st, o), {}, oracle);
    const Schedule sched(ScheduleVariant::kGenAggressive, 500, {spectral_norm(o.A), st.prox.modulus_alpha,
                                                               st.prox.diameter_sq_omega, 0.7, 0.0, 0.0});
    std::vector<SaddleState> trace;
    IpdsaOptions opts;
    opts.trace = &trace;
    SeededStream stream(4);
    (void)ipdsa_run(bind, sched, initial_state(st), stream, opts);
    for (const SaddleState& s : trace) {
      EXPECT_TRUE(set_contains(cs.set, s.x, 1e-10));
      EXPECT_TRUE(in_dual_cone(cs.cone, s.y, 1e-10));
    }
  }
}

TEST(ExtractSubgradient, Examples) {
  EXPECT_EQ(extract_subgradient(DenseMatrix(2, 2, 0.0), {1.0, 2.0}), (DenseVector{0.0, 0.0}));
  EXPECT_EQ(extract_subgradient(DenseMatrix::identity(2), {1.0, 2.0}), (DenseVector{1.0, 2.0}));
  EXPECT_EQ(extract_subgradient(DenseMatrix{{1, 2}, {3, 4}}, {1.0, 1.0}), (DenseVector{4.0, 6.0}));
  const DenseVector f{0.5, -0.5};
  EXPECT_EQ(extract_subgradient(DenseMatrix::identity(2), {1.0, 2.0}, &f), (DenseVector{1.5, 1.5}));
  EXPECT_THROW((void)extract_subgradient(DenseMatrix::identity(2), {1.0}), Error);
}

TEST(PerturbationDelta, Examples) {
  const Schedule g(ScheduleVariant::kGenAggressive, 4, {std::sqrt(2.0), 1.0, 0.5, 0.0, 0.0, 0.0});
  EXPECT_EQ(perturbation_delta(g, {0.3, 0.1}, {0.3, 0.1}), (DenseVector{0.0, 0.0}));
  ASSERT_NEAR(g.eta(1), 2.0, 1e-14);
  const DenseVector d = perturbation_delta(g, {0.0, 0.0}, {1.0, 0.0});
  EXPECT_NEAR(d[0], -0.5, 1e-14);
  EXPECT_DOUBLE_EQ(d[1], 0.0);

  ScheduleConstants c;
  c.norm_A = 1.5;
  c.alpha = 0.5;
  c.mu = 2.0;
  const Schedule s(ScheduleVariant::kStrongAggressive, 2, c);
  const double w1eta1 = 4.0 * 1.5 * 1.5 / (0.5 * 2.0);
  EXPECT_NEAR(s.w(1) * s.eta(1), w1eta1, 1e-13);
  EXPECT_NEAR(perturbation_delta(s, {0.0}, {1.0})[0], -w1eta1 / 3.0, 1e-13);
}
