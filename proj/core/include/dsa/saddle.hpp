#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dsa/model.hpp"

namespace dsa {

struct SaddleState {
  DenseVector x;       // current primal
  DenseVector y;       // current dual
  DenseVector y_prev;  // previous dual
  std::size_t k = 0;
  DenseVector avg_x;
  DenseVector avg_y;
  double weight_sum = 0.0;
};

// Starts at the prox center with y = y_prev = y0 (zero unless given).
SaddleState initial_state(const StageTemplate& stage, const DenseVector& y0 = {});

enum class ScheduleVariant { kGenAggressive, kGenBoundedDual, kStrongAggressive, kStrongBoundedDual };

std::string to_string(ScheduleVariant v);
ScheduleVariant schedule_variant_from_string(const std::string& name);
bool is_strong(ScheduleVariant v);

struct ScheduleConstants {
  double norm_A = 0.0;
  double alpha = 1.0;
  double Omega_sq = 0.0;
  double M = 0.0;
  double mu = 0.0;
  double dual_radius_guess = 0.0;
};

class Schedule {
 public:
  Schedule(ScheduleVariant variant, std::size_t N, ScheduleConstants constants);

  ScheduleVariant variant() const { return variant_; }
  std::size_t N() const { return N_; }
  const ScheduleConstants& constants() const { return constants_; }

  // k is 1-based; w(0) = 0.
  double theta(std::size_t k) const;
  double tau(std::size_t k) const;
  double eta(std::size_t k) const;
  double w(std::size_t k) const;
  double weight_total() const;

 private:
  ScheduleVariant variant_;
  std::size_t N_;
  ScheduleConstants constants_;
  double norm_A_eff_;
  double tau_const_ = 0.0;
  double eta_const_ = 0.0;
};

Schedule make_schedule(ScheduleVariant variant, std::size_t N, const ScheduleConstants& constants);

// Worst relative violation of each step-size condition over k = 1..N (<= 0 means satisfied).
struct ScheduleConditionReport {
  double a = 0.0;  // w_k theta_k = w_{k-1}, k >= 2
  double b = 0.0;  // w_k tau_k >= w_{k+1} tau_{k+1}, or w_k (mu + tau_k) >= w_{k+1} tau_{k+1}
  double c = 0.0;  // w_k eta_k >= w_{k+1} eta_{k+1}
  double d = 0.0;  // w_k tau_k eta_{k-1} alpha >= 2 w_{k-1} ||A||^2
  double e = 0.0;  // tau_N eta_N alpha >= 2 ||A||^2, with tau_N + mu for strong variants
  bool satisfied(double slack) const { return a <= slack && b <= slack && c <= slack && d <= slack && e <= slack; }
};

ScheduleConditionReport check_schedule_conditions(const Schedule& schedule);

struct SubgradientSample {
  DenseVector G;
  double bias = 0.0;
};

// Called once per step with x_{k-1} and the 1-based step index.
using SubgradientOracle = std::function<SubgradientSample(const DenseVector& x_prev, std::size_t k, SeededStream& stream)>;

// One stage saddle problem: max_{y in K*} min_{x in X} h(x) + v(x) + <y, b + B u - A x>.
struct StageBinding {
  DenseVector u;
  const Outcome* outcome = nullptr;
  const StageTemplate* stage = nullptr;
  StageObjective objective;
  SubgradientOracle subgradient_oracle;  // empty means v = 0
  double M_next = 0.0;
  DenseVector rhs;  // b + B u

  const DenseMatrix& A() const { return outcome->A; }
};

StageBinding make_binding(const StageTemplate& stage, const Outcome& outcome, const StageObjective& objective,
                          DenseVector u, SubgradientOracle oracle = {}, double M_next = 0.0);

SaddleState spdt_step(const SaddleState& state, const StageBinding& binding, const DenseVector& G, double theta,
                      double tau, double eta);

struct LiveStateCounter {
  int live = 0;
  int peak = 0;
};

struct IpdsaOptions {
  std::vector<SaddleState>* trace = nullptr;  // every iterate when set
  LiveStateCounter* live_states = nullptr;
};

struct IpdsaResult {
  SaddleState state;
  DenseVector x_bar;
  DenseVector y_bar;
  double max_bias = 0.0;
};

IpdsaResult ipdsa_run(const StageBinding& binding, const Schedule& schedule, const SaddleState& init,
                      SeededStream& stream, const IpdsaOptions& options = {});

DenseVector extract_subgradient(const DenseMatrix& B, const DenseVector& y_bar, const DenseVector* F_prime = nullptr);

DenseVector perturbation_delta(const Schedule& schedule, const DenseVector& y0, const DenseVector& yN);

}  // namespace dsa
