#include <benchmark/benchmark.h>

#include <string>

#include "dsa/driver.hpp"
#include "dsa/oracle.hpp"

using namespace dsa;

namespace {

MultistageProblem bundled(const std::string& name) { return load_problem_file(std::string(DSA_DATA_DIR) + "/" + name); }

// X = [0, 1], A = 1, b = 0.5, K = {0}, h(x) = x.
void BM_IpdsaBilinear(benchmark::State& state) {
  StageTemplate st;
  st.n = 1;
  st.m = 1;
  st.prox = make_prox_setup(FeasibleSet::box({0.0}, {1.0}), Dgf::kEuclidean);
  st.cone = Cone::zero(1);
  Outcome o;
  o.A = DenseMatrix{{1.0}};
  o.B = DenseMatrix(1, 0);
  o.b = {0.5};
  o.c = {1.0};
  StageObjective obj;
  obj.c = o.c;
  obj.center = st.prox.prox_center;
  st.objective = obj;
  const StageBinding bind = make_binding(st, o, obj, {});
  const auto N = static_cast<std::size_t>(state.range(0));
  const Schedule s(ScheduleVariant::kGenAggressive, N, ScheduleConstants{1.0, 1.0, 0.5, 0.0, 0.0, 0.0});
  for (auto _ : state) {
    SeededStream stream(1);
    benchmark::DoNotOptimize(ipdsa_run(bind, s, initial_state(st), stream));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * N));
}
BENCHMARK(BM_IpdsaBilinear)->Arg(100)->Arg(1000)->Arg(10000);

void BM_PlanThreeStage(benchmark::State& state) {
  const MultistageProblem P = bundled("tiny3.json");
  const ConstantsLedger L = build_ledger(P);
  for (auto _ : state) benchmark::DoNotOptimize(plan_samples(L, 0.01, Regime::kGeneralConvex, P.T));
}
BENCHMARK(BM_PlanThreeStage);

void BM_SolveThreeStage(benchmark::State& state) {
  const MultistageProblem P = bundled("tiny3.json");
  const ConstantsLedger L = build_ledger(P);
  const SamplePlan plan = plan_samples(L, 0.25, Regime::kGeneralConvex, P.T);
  for (auto _ : state) benchmark::DoNotOptimize(dsa_solve(P, plan, 7, L));
}
BENCHMARK(BM_SolveThreeStage)->Unit(benchmark::kMillisecond);

void BM_ReferenceThreeStage(benchmark::State& state) {
  const MultistageProblem P = bundled("tiny3.json");
  const Outcome root = P.first_stage_outcome();
  const StageQuery q = first_stage_query(P, root);
  for (auto _ : state) benchmark::DoNotOptimize(reference_saddle_solve(q));
}
BENCHMARK(BM_ReferenceThreeStage)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
