#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsa/conic_program.hpp"
#include "dsa/model.hpp"
#include "dsa/saddle.hpp"

namespace dsa {

// One realized stage-t subproblem: min h + F + v^{t+1} over X s.t. A x - b - B u in K.
// Without a problem the downstream value function is zero.
struct StageQuery {
  const MultistageProblem* problem = nullptr;
  int t = 1;
  const StageTemplate* stage = nullptr;
  const Outcome* outcome = nullptr;
  std::size_t outcome_index = 0;
  StageObjective objective;
  DenseVector u;

  DenseVector rhs() const;  // b + B u
  bool has_downstream() const { return problem != nullptr && t < problem->T; }
};

// Queries keep pointers to the problem and the outcome; both must outlive the query.
StageQuery stage_query(const MultistageProblem& problem, int t, const Outcome& outcome, std::size_t outcome_index,
                       DenseVector u);
StageQuery stage_query(const MultistageProblem&, int, Outcome&&, std::size_t, DenseVector) = delete;
StageQuery first_stage_query(const MultistageProblem& problem, const Outcome& first_stage_outcome);
StageQuery first_stage_query(const MultistageProblem&, Outcome&&) = delete;
StageQuery standalone_query(const StageBinding& binding);

struct ReferenceOptions {
  std::size_t max_iter = 4'000'000;
  double tol = 1e-11;
};

struct SaddleSolution {
  DenseVector x;
  DenseVector y;       // minimal-norm optimal multiplier
  DenseVector y_raw;   // multiplier returned by the conic solver
  DenseVector y_range; // y_raw with its null(A^T) component removed; may leave K*
  double value = 0.0;  // V(u, xi)
  double residual = 0.0;
};

// Builds the scenario subtree below the query as one conic program.
// With root_rows = false the stage-t constraints are dropped; root_extra_lin is added to x^t's linear term.
struct SubtreeProgram {
  ConicProgram program;
  std::size_t root_block = 0;
  std::size_t root_row = 0;
  std::size_t root_epigraph_block = SIZE_MAX;  // coupling term epigraph variable, if any
};
SubtreeProgram build_subtree_program(const StageQuery& query, bool root_rows, const DenseVector& root_extra_lin = {});

// Distance of A^1 x - b^1 to K^1 minimized over X^1; zero when the first stage is feasible.
double first_stage_infeasibility(const MultistageProblem& problem);

SaddleSolution reference_saddle_solve(const StageQuery& query, const ReferenceOptions& options = {});

// Orthogonal projection of y onto range(A), i.e. the null(A^T) component removed.
DenseVector range_projected_dual(const DenseMatrix& A, const DenseVector& y);

// Minimal-norm element of {y in K* : A^T y = A^T y_raw, y complementary to slack}, with slack = A x - b - B u.
DenseVector minimal_norm_dual(const DenseMatrix& A, const Cone& cone, const DenseVector& y_raw,
                              const DenseVector& slack);

// min over x in X of h + F + v^{t+1} - <A^T ybar, x>.
double lagrangian_value(const StageQuery& query, const DenseVector& y_bar, const ReferenceOptions& options = {});
// h(x) + F(x) + v^{t+1}(x).
double stage_objective_value(const StageQuery& query, const DenseVector& x, const ReferenceOptions& options = {});

struct ValueResult {
  double value = 0.0;
  std::vector<SaddleSolution> per_outcome;
  std::vector<double> probabilities;
};

// v^t(u) = sum over the stage-t support of prob * V^t(u, xi).
ValueResult exact_value_function(const MultistageProblem& problem, int t, const DenseVector& u,
                                 std::optional<std::size_t> parent = std::nullopt,
                                 const ReferenceOptions& options = {});

class ExactValueFn {
 public:
  ExactValueFn(const MultistageProblem& problem, int t, std::optional<std::size_t> parent = std::nullopt,
               ReferenceOptions options = {});

  double operator()(const DenseVector& u);
  const ValueResult& evaluate(const DenseVector& u);
  int stage() const { return t_; }
  std::size_t cache_size() const { return cache_.size(); }
  static constexpr double kQuantum = 1e-9;

 private:
  const MultistageProblem* problem_;
  int t_;
  std::optional<std::size_t> parent_;
  ReferenceOptions options_;
  std::map<std::vector<std::int64_t>, ValueResult> cache_;
};

struct GapReport {
  double gap_star = 0.0;
  double gap_delta = 0.0;
  double delta_norm = 0.0;
  double feasibility_residual = 0.0;
  DenseVector y_star_used;
};

double eval_gap_star(const StageQuery& query, const DenseVector& x_bar, const DenseVector& y_bar,
                     const DenseVector& y_star, const ReferenceOptions& options = {});

// Dual supremum is taken over K* intersected with the ball of radius 2 * dual_radius.
// Also fills gap_star using a reference saddle solve.
GapReport eval_gap_delta(const StageQuery& query, const DenseVector& x_bar, const DenseVector& y_bar,
                         const DenseVector& delta, double dual_radius, const ReferenceOptions& options = {});

struct EpsSubgradientCheck {
  bool pass = true;
  double worst_violation = 0.0;  // max of v(u) + <g, u' - u> - eps - v(u'); <= 1e-8 passes
  std::size_t worst_index = 0;
};

EpsSubgradientCheck check_eps_subgradient(const std::function<double(const DenseVector&)>& v, const DenseVector& u,
                                          const DenseVector& g, double eps, const std::vector<DenseVector>& grid);
EpsSubgradientCheck check_eps_subgradient(ExactValueFn& v, const DenseVector& u, const DenseVector& g, double eps,
                                          const std::vector<DenseVector>& grid);

// NaN marks a constant as not supplied.
struct BoundConstants {
  double norm_A = NAN;
  double alpha = NAN;
  double Omega_sq = NAN;
  double M = NAN;
  double mu = NAN;
  double dual_dist = NAN;  // ||y_* - y_0||
  double y0_norm = NAN;
};

struct TheoreticalBound {
  double gap_star_bound = 0.0;
  double gap_delta_bound = 0.0;
  double delta_norm_bound = 0.0;
  double dual_sq_bound = 0.0;
};

TheoreticalBound theoretical_bound(ScheduleVariant variant, const BoundConstants& constants, std::size_t N,
                                   double eps_bar);

}  // namespace dsa
