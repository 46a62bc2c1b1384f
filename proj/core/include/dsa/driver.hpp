#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsa/model.hpp"
#include "dsa/saddle.hpp"

namespace dsa {

struct StageConstants {
  int t = 1;
  double norm_A_max = 0.0;
  double bound_B = 0.0;
  double Omega_sq = 0.0;
  double alpha = 1.0;
  double mu = 0.0;
  double sigma_min = 0.0;
  double lipschitz_h = 0.0;  // h^t alone, max over the support
  double M_h = 0.0;          // lipschitz_h plus the downstream value-function bound
  double dual_bound = 0.0;   // M_h / sigma_min
  double dual_radius = 0.0;  // dual_bound + ||y0||
  double M = 0.0;            // bound on ||B^T ybar|| (+ coupling slope) delivered to stage t-1
  double y0_norm = 0.0;

  bool operator==(const StageConstants&) const = default;
};

struct ConstantsLedger {
  std::vector<StageConstants> stages;  // stages[t - 1]
  std::vector<std::string> overridden;

  const StageConstants& stage(int t) const { return stages.at(static_cast<std::size_t>(t - 1)); }
  bool operator==(const ConstantsLedger&) const = default;
};

// Keys look like "M_2" or "dual_radius_3".
using LedgerOverrides = std::map<std::string, double>;

ConstantsLedger build_ledger(const MultistageProblem& problem, const LedgerOverrides& overrides = {});

enum class Regime { kGeneralConvex, kStronglyConvex };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& name);

struct SamplePlan {
  double epsilon = 0.0;
  Regime regime = Regime::kGeneralConvex;
  int T = 1;
  std::vector<std::uint64_t> budgets;  // N_1..N_T
  std::vector<double> raw;             // formula values before ceiling
  std::vector<std::string> formulas;   // which formula produced each budget

  bool operator==(const SamplePlan&) const = default;
};

SamplePlan plan_samples(const ConstantsLedger& ledger, double epsilon, Regime regime, int T);

// Variant assignment: first and last stage aggressive, middle stages bounded-dual.
ScheduleVariant stage_variant(Regime regime, int t, int T);
ScheduleConstants stage_schedule_constants(const ConstantsLedger& ledger, int t, int T);

struct SolveReport {
  DenseVector x_bar_1;
  DenseVector y_bar_1;
  DenseVector y_N_1;
  DenseVector delta;
  std::vector<std::uint64_t> budgets_used;
  std::vector<std::uint64_t> scenario_counts;  // stages 2..T
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  int peak_live_states = 0;
  double epsilon = 0.0;
  Regime regime = Regime::kGeneralConvex;
  ConstantsLedger ledger;
  SamplePlan plan;
};

struct SolveOptions {
  std::vector<SaddleState>* first_stage_trace = nullptr;
};

SolveReport dsa_solve(const MultistageProblem& problem, const SamplePlan& plan, std::uint64_t root_seed,
                      const ConstantsLedger& ledger, const SolveOptions& options = {});
SolveReport dsa_solve(const MultistageProblem& problem, const SamplePlan& plan, std::uint64_t root_seed);

// One draw of the stochastic subgradient of E[V^t(u, xi^t)] (t >= 2): samples xi^t, runs the stage-t
// recursion from u and returns B^T ybar.
DenseVector stochastic_subgradient(const MultistageProblem& problem, const SamplePlan& plan, const ConstantsLedger& ledger,
                                   int t, const DenseVector& u, std::optional<std::size_t> parent, SeededStream& stream);

std::string ledger_to_json(const ConstantsLedger& ledger);
std::string plan_to_json(const SamplePlan& plan, const ConstantsLedger& ledger);
std::string report_to_json(const SolveReport& report);
SolveReport report_from_json(const std::string& text);

}  // namespace dsa
