#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "dsa/driver.hpp"
#include "dsa/errors.hpp"
#include "dsa/oracle.hpp"
#include "support/reference.hpp"

using namespace dsa;

namespace {

std::string box_stage(int n, int m, const std::string& objective = R"({"kind": "linear"})") {
  std::string lo = "[", hi = "[";
  for (int i = 0; i < n; ++i) {
    lo += std::string(i ? "," : "") + "0";
    hi += std::string(i ? "," : "") + "1";
  }
  return "{\"n\": " + std::to_string(n) + ", \"m\": " + std::to_string(m) + ", \"set\": {\"kind\": \"box\", \"lower\": " +
         lo + "], \"upper\": " + hi + "]}, \"cone\": {\"kind\": \"nonneg\", \"dim\": " + std::to_string(m) +
         "}, \"objective\": " + objective + "}";
}

MultistageProblem diag_single_stage() {
  return parse_problem("{\"version\": 1, \"T\": 1, \"stages\": [" + box_stage(2, 2) +
                       "], \"first_stage\": {\"A\": [[2, 0], [0, 3]], \"b\": [0, 0], \"c\": [1, 0]}}");
}

MultistageProblem two_stage(const std::string& support) {
  return parse_problem("{\"version\": 1, \"T\": 2, \"stages\": [" + box_stage(1, 1) + "," + box_stage(1, 1) +
                       "], \"first_stage\": {\"A\": [[1]], \"b\": [0.1], \"c\": [1]}, \"scenarios\": "
                       "{\"dependence\": \"independent\", \"stages\": [{\"support\": " +
                       support + "}]}}");
}

ConstantsLedger synthetic_ledger(double mu) {
  ConstantsLedger L;
  for (int t = 1; t <= 3; ++t) {
    StageConstants s;
    s.t = t;
    s.norm_A_max = 1.0;
    s.Omega_sq = 1.0;
    s.alpha = 1.0;
    s.mu = mu;
    s.sigma_min = 1.0;
    s.dual_bound = 1.0;
    s.dual_radius = 1.0;
    s.M = t > 1 ? 0.5 : 0.0;
    L.stages.push_back(s);
  }
  return L;
}

std::string without_wall_time(const SolveReport& r) {
  SolveReport c = r;
  c.wall_time = 0.0;
  return report_to_json(c);
}

}  // namespace

TEST(Ledger, DualBoundFromSmallestSingularValue) {
  const ConstantsLedger L = build_ledger(diag_single_stage());
  EXPECT_NEAR(L.stage(1).sigma_min, 2.0, 1e-12);
  EXPECT_NEAR(L.stage(1).lipschitz_h, 1.0, 1e-15);
  EXPECT_NEAR(L.stage(1).dual_bound, 0.5, 1e-12);
  EXPECT_NEAR(L.stage(1).norm_A_max, 3.0, 1e-12);
}

TEST(Ledger, ZeroCouplingGivesZeroM) {
  const MultistageProblem P = two_stage(R"([{"A": [[1]], "B": [[0]], "b": [0.2], "c": [1], "prob": 1}])");
  EXPECT_DOUBLE_EQ(build_ledger(P).stage(2).M, 0.0);
}

TEST(Ledger, NormIsMaxOverSupport) {
  const MultistageProblem P = two_stage(
      R"([{"A": [[1]], "B": [[0.3]], "b": [0.2], "c": [1], "prob": 0.5},
          {"A": [[2]], "B": [[-0.1]], "b": [0.2], "c": [1], "prob": 0.5}])");
  const ConstantsLedger L = build_ledger(P);
  EXPECT_NEAR(L.stage(2).norm_A_max, 2.0, 1e-12);
  EXPECT_NEAR(L.stage(2).sigma_min, 1.0, 1e-12);
  EXPECT_NEAR(L.stage(2).bound_B, 0.3, 1e-12);
  EXPECT_NEAR(L.stage(2).M, 0.3 * L.stage(2).dual_bound, 1e-12);
  EXPECT_NEAR(L.stage(1).M_h, L.stage(1).lipschitz_h + L.stage(2).M, 1e-12);
}

TEST(Ledger, ZeroConstraintMatrixIsLedgerError) {
  const MultistageProblem P = two_stage(R"([{"A": [[0]], "B": [[0.3]], "b": [0], "c": [1], "prob": 1}])");
  try {
    (void)build_ledger(P);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLedger);
    EXPECT_NE(std::string(e.what()).find("stage 2"), std::string::npos);
  }
}

TEST(Ledger, OverridesAreAppliedAndTagged) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny3.json"));
  const ConstantsLedger L = build_ledger(P, {{"dual_radius_3", 2.5}, {"M_2", 0.125}});
  EXPECT_DOUBLE_EQ(L.stage(3).dual_radius, 2.5);
  EXPECT_DOUBLE_EQ(L.stage(2).M, 0.125);
  EXPECT_EQ(L.overridden.size(), 2u);
  EXPECT_THROW((void)build_ledger(P, {{"bogus_2", 1.0}}), Error);
  EXPECT_THROW((void)build_ledger(P, {{"M_9", 1.0}}), Error);
  EXPECT_THROW((void)build_ledger(P, {{"M_2", -1.0}}), Error);
}

TEST(Planner, LastStageGeneral) {
  const SamplePlan plan = plan_samples(synthetic_ledger(0.0), 0.3, Regime::kGeneralConvex, 3);
  EXPECT_EQ(plan.budgets[2], 43u);
  EXPECT_NEAR(plan.raw[2], 30.0 * std::sqrt(2.0), 1e-10);
}

TEST(Planner, LastStageStrong) {
  const SamplePlan plan = plan_samples(synthetic_ledger(1.0), 0.04, Regime::kStronglyConvex, 3);
  EXPECT_EQ(plan.budgets[2], 25u);
  EXPECT_NEAR(plan.raw[2], 10.0 * std::sqrt(6.0), 1e-10);
}

TEST(Planner, HalvingEpsilonDoublesLastStage) {
  const ConstantsLedger L = synthetic_ledger(0.0);
  const SamplePlan a = plan_samples(L, 0.3, Regime::kGeneralConvex, 3);
  const SamplePlan b = plan_samples(L, 0.15, Regime::kGeneralConvex, 3);
  EXPECT_NEAR(b.raw[2] / a.raw[2], 2.0, 1e-12);
  EXPECT_LE(b.budgets[2], 2 * a.budgets[2]);
  EXPECT_GE(b.budgets[2] + 1, 2 * a.budgets[2]);
}

TEST(Planner, MonotoneInEpsilon) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny3.json"));
  const ConstantsLedger L = build_ledger(P);
  const SamplePlan a = plan_samples(L, 0.25, Regime::kGeneralConvex, 3);
  const SamplePlan b = plan_samples(L, 0.125, Regime::kGeneralConvex, 3);
  for (int t = 0; t < 3; ++t) EXPECT_GE(b.budgets[t], a.budgets[t]);
}

TEST(Planner, MissingConstantNamesIt) {
  ConstantsLedger L = synthetic_ledger(0.0);
  try {
    (void)plan_samples(L, 0.1, Regime::kStronglyConvex, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPlanning);
    EXPECT_NE(std::string(e.what()).find("mu_1"), std::string::npos) << e.what();
  }
  L.stages[1].alpha = 0.0;
  try {
    (void)plan_samples(L, 0.1, Regime::kGeneralConvex, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("alpha_2"), std::string::npos) << e.what();
  }
}

TEST(Planner, BudgetsClampToOne) {
  ConstantsLedger L = synthetic_ledger(0.0);
  const SamplePlan p = plan_samples(L, 1e9, Regime::kGeneralConvex, 3);
  for (auto n : p.budgets) EXPECT_GE(n, 1u);
}

TEST(Planner, VariantAssignment) {
  EXPECT_EQ(stage_variant(Regime::kGeneralConvex, 1, 4), ScheduleVariant::kGenAggressive);
  EXPECT_EQ(stage_variant(Regime::kGeneralConvex, 2, 4), ScheduleVariant::kGenBoundedDual);
  EXPECT_EQ(stage_variant(Regime::kGeneralConvex, 3, 4), ScheduleVariant::kGenBoundedDual);
  EXPECT_EQ(stage_variant(Regime::kGeneralConvex, 4, 4), ScheduleVariant::kGenAggressive);
  EXPECT_EQ(stage_variant(Regime::kStronglyConvex, 2, 3), ScheduleVariant::kStrongBoundedDual);
  EXPECT_EQ(stage_variant(Regime::kStronglyConvex, 3, 3), ScheduleVariant::kStrongAggressive);
}

TEST(Solve, ThreeStageScenarioAccounting) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny3.json"));
  const ConstantsLedger L = build_ledger(P);
  const SamplePlan plan = plan_samples(L, 0.25, Regime::kGeneralConvex, 3);
  const SolveReport r = dsa_solve(P, plan, 7, L);
  ASSERT_EQ(r.scenario_counts.size(), 2u);
  EXPECT_EQ(r.scenario_counts[0], plan.budgets[0]);
  EXPECT_EQ(r.scenario_counts[1], plan.budgets[0] * plan.budgets[1]);
  EXPECT_LE(r.peak_live_states, 3);
}

TEST(Solve, FourStageAccountingAndLiveStates) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny4.json"));
  const ConstantsLedger L = build_ledger(P);
  const SamplePlan plan = plan_samples(L, 1.0, Regime::kGeneralConvex, 4);
  const SolveReport r = dsa_solve(P, plan, 3, L);
  const auto& n = plan.budgets;
  EXPECT_EQ(r.scenario_counts, (std::vector<std::uint64_t>{n[0], n[0] * n[1], n[0] * n[1] * n[2]}));
  EXPECT_GE(r.peak_live_states, 1);
  EXPECT_LE(r.peak_live_states, 4);
}

TEST(Solve, DeterministicModuloWallTime) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny3.json"));
  const ConstantsLedger L = build_ledger(P);
  const SamplePlan plan = plan_samples(L, 0.25, Regime::kGeneralConvex, 3);
  EXPECT_EQ(without_wall_time(dsa_solve(P, plan, 11, L)), without_wall_time(dsa_solve(P, plan, 11, L)));
  EXPECT_NE(without_wall_time(dsa_solve(P, plan, 11, L)), without_wall_time(dsa_solve(P, plan, 12, L)));
}

TEST(Solve, SingleStageDeltaWithinBound) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny1.json"));
  const ConstantsLedger L = build_ledger(P);
  const SamplePlan plan = plan_samples(L, 0.3, Regime::kGeneralConvex, 1);
  const SolveReport r = dsa_solve(P, plan, 5, L);
  EXPECT_TRUE(r.scenario_counts.empty());
  EXPECT_EQ(r.peak_live_states, 1);

  const Outcome first = P.first_stage_outcome();
  const SaddleSolution ref = reference_saddle_solve(first_stage_query(P, first));
  BoundConstants c;
  c.norm_A = L.stage(1).norm_A_max;
  c.alpha = L.stage(1).alpha;
  c.Omega_sq = L.stage(1).Omega_sq;
  c.M = 0.0;
  c.dual_dist = norm2(ref.y);
  c.y0_norm = 0.0;
  const TheoreticalBound b = theoretical_bound(ScheduleVariant::kGenAggressive, c, plan.budgets[0], 0.0);
  EXPECT_LE(norm2(r.delta), b.delta_norm_bound);
  // Feasibility certificate: A x - b - delta in the orthant.
  EXPECT_GE(matvec(first.A, r.x_bar_1)[0] - first.b[0] - r.delta[0], -1e-12);
}

TEST(Solve, PlanMismatchIsPlanningError) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny3.json"));
  const ConstantsLedger L = build_ledger(P);
  SamplePlan plan = plan_samples(L, 0.25, Regime::kGeneralConvex, 3);
  plan.budgets.pop_back();
  try {
    (void)dsa_solve(P, plan, 1, L);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPlanning);
  }
}

TEST(Report, JsonRoundTrip) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny3.json"));
  const ConstantsLedger L = build_ledger(P, {{"y0_norm_2", 0.0}});
  const SamplePlan plan = plan_samples(L, 0.25, Regime::kGeneralConvex, 3);
  const SolveReport r = dsa_solve(P, plan, 1, L);
  const std::string text = report_to_json(r);
  EXPECT_NE(text.find("\"report_version\": 1"), std::string::npos);
  const SolveReport back = report_from_json(text);
  EXPECT_EQ(report_to_json(back), text);
  EXPECT_EQ(back.ledger, r.ledger);
  EXPECT_EQ(back.plan, r.plan);
}

TEST(StochasticSubgradient, ShapeAndStageRange) {
  const MultistageProblem P = load_problem_file(testref::data_path("tiny3.json"));
  const ConstantsLedger L = build_ledger(P);
  const SamplePlan plan = plan_samples(L, 0.01, Regime::kGeneralConvex, 3);
  SeededStream s(1);
  const DenseVector g = stochastic_subgradient(P, plan, L, 3, {0.5}, std::nullopt, s);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_TRUE(std::isfinite(g[0]));
  EXPECT_THROW((void)stochastic_subgradient(P, plan, L, 1, {0.5}, std::nullopt, s), Error);
}
