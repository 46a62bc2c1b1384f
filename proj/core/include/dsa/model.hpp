#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsa/geometry.hpp"
#include "dsa/numerics.hpp"

namespace dsa {

enum class TermKind { kNone, kPiecewiseLinearMax };

// F(x, p) = max_i <slopes_i, x> + offsets_i + p_i.
struct GeneralConvexTerm {
  TermKind kind = TermKind::kNone;
  DenseMatrix slopes;
  DenseVector offsets;
  DenseVector p;
  double lipschitz_bound = 0.0;

  bool present() const { return kind != TermKind::kNone; }
  bool operator==(const GeneralConvexTerm&) const = default;
};

GeneralConvexTerm make_piecewise_linear_max(DenseMatrix slopes, DenseVector offsets, DenseVector p = {});

enum class ObjectiveKind { kLinear, kQuadPlusLinear };

// h(x, c) = (mu/2)||x - center||^2 + <c, x>, plus an optional coupling term.
struct StageObjective {
  ObjectiveKind kind = ObjectiveKind::kLinear;
  double mu = 0.0;
  DenseVector c;
  DenseVector center;
  GeneralConvexTerm coupling;

  bool operator==(const StageObjective&) const = default;
};

struct ValueAndSubgradient {
  double value = 0.0;
  DenseVector subgradient;
};

// Evaluates h(x, c) + F(x, p). `domain`, when given, is checked first.
ValueAndSubgradient objective_value_and_subgradient(const StageObjective& obj, const DenseVector& x,
                                                    const FeasibleSet* domain = nullptr);
// One subgradient of the coupling term alone (zero vector if absent).
DenseVector coupling_subgradient(const GeneralConvexTerm& term, const DenseVector& x);
double coupling_value(const GeneralConvexTerm& term, const DenseVector& x);
// Lipschitz constant of h(., c) + F over the set.
double objective_lipschitz(const StageObjective& obj, const FeasibleSet& set);

struct StageTemplate {
  int index = 1;
  std::size_t n = 0;
  std::size_t m = 0;
  ProxSetup prox;
  Cone cone;
  StageObjective objective;  // c is empty for stages >= 2; outcomes supply it

  bool operator==(const StageTemplate&) const = default;
};

struct Outcome {
  DenseMatrix A;
  DenseMatrix B;
  DenseVector b;
  DenseVector c;
  DenseVector p;  // empty when the outcome does not override the coupling parameter
  double prob = 1.0;

  bool operator==(const Outcome&) const = default;
};

enum class Dependence { kStagewiseIndependent, kConditionalOnParentIndex };

struct ScenarioDistribution {
  Dependence dependence = Dependence::kStagewiseIndependent;
  // tables[t - 2][parent] is the support of stage t. Independent stages hold one list.
  std::vector<std::vector<std::vector<Outcome>>> tables;

  const std::vector<Outcome>& support(int stage, std::optional<std::size_t> parent_index) const;
  bool operator==(const ScenarioDistribution&) const = default;
};

struct FirstStageData {
  DenseMatrix A;
  DenseVector b;
  DenseVector c;
  bool operator==(const FirstStageData&) const = default;
};

struct MultistageProblem {
  int T = 1;
  std::vector<StageTemplate> stages;  // stages[t - 1]
  FirstStageData first_stage;
  ScenarioDistribution distribution;
  std::vector<double> bound_B;  // bound_B[t - 1]; entry 0 is unused
  bool bounds_given = false;

  const StageTemplate& stage(int t) const { return stages.at(static_cast<std::size_t>(t - 1)); }
  // The deterministic first-stage tuple (A1, 0, b1, c1).
  Outcome first_stage_outcome() const;
  // Objective with the outcome's c and coupling parameter filled in.
  StageObjective objective_for(int t, const Outcome& outcome) const;
  // Largest support size at stage t over all parents.
  std::size_t max_support_size(int t) const;
  bool operator==(const MultistageProblem&) const = default;
};

MultistageProblem parse_problem(const std::string& text);
std::string serialize_problem(const MultistageProblem& problem);
MultistageProblem load_problem_file(const std::string& path);

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

class SeededStream {
 public:
  explicit SeededStream(std::uint64_t root_seed);

  SeededStream child(int stage, std::uint64_t outer_index) const;
  std::uint64_t next_u64();
  double next_uniform();  // in [0, 1)

  std::uint64_t root_seed() const { return root_seed_; }
  std::uint64_t state_seed() const { return seed_; }
  const std::vector<std::pair<int, std::uint64_t>>& path() const { return path_; }

 private:
  std::uint64_t root_seed_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::vector<std::pair<int, std::uint64_t>> path_;
};

struct SampledOutcome {
  std::size_t index;
  const Outcome* outcome;
};

SampledOutcome sample_outcome(const ScenarioDistribution& dist, int stage, std::optional<std::size_t> parent_index,
                              SeededStream& stream);

}  // namespace dsa
