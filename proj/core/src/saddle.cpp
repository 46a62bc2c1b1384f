#include "dsa/saddle.hpp"

#include <algorithm>
#include <cmath>

#include "dsa/errors.hpp"

namespace dsa {

SaddleState initial_state(const StageTemplate& stage, const DenseVector& y0) {
  SaddleState s;
  s.x = stage.prox.prox_center;
  s.y = y0.empty() ? DenseVector(stage.m, 0.0) : y0;
  if (s.y.size() != stage.m) fail(ErrorKind::kDimension, "initial_state: dual dimension mismatch");
  s.y_prev = s.y;
  s.avg_x = s.x;
  s.avg_y = s.y;
  return s;
}

std::string to_string(ScheduleVariant v) {
  switch (v) {
    case ScheduleVariant::kGenAggressive: return "GenAggressive";
    case ScheduleVariant::kGenBoundedDual: return "GenBoundedDual";
    case ScheduleVariant::kStrongAggressive: return "StrongAggressive";
    case ScheduleVariant::kStrongBoundedDual: return "StrongBoundedDual";
  }
  return "?";
}

ScheduleVariant schedule_variant_from_string(const std::string& name) {
  for (auto v : {ScheduleVariant::kGenAggressive, ScheduleVariant::kGenBoundedDual, ScheduleVariant::kStrongAggressive,
                 ScheduleVariant::kStrongBoundedDual}) {
    if (to_string(v) == name) return v;
  }
  fail(ErrorKind::kUsage, "unknown schedule variant '" + name + "'");
}

bool is_strong(ScheduleVariant v) {
  return v == ScheduleVariant::kStrongAggressive || v == ScheduleVariant::kStrongBoundedDual;
}

Schedule::Schedule(ScheduleVariant variant, std::size_t N, ScheduleConstants constants)
    : variant_(variant), N_(N), constants_(constants) {
  if (N_ < 1) fail(ErrorKind::kConfiguration, "schedule: N must be >= 1");
  const ScheduleConstants& c = constants_;
  if (!(c.alpha > 0.0)) fail(ErrorKind::kConfiguration, "schedule: alpha must be positive");
  if (c.norm_A < 0.0 || c.M < 0.0 || c.Omega_sq < 0.0) fail(ErrorKind::kConfiguration, "schedule: negative constant");
  // A stage without constraint rows has ||A|| = 0; unit norm keeps the steps positive.
  norm_A_eff_ = c.norm_A > 0.0 ? c.norm_A : 1.0;
  const double n = static_cast<double>(N_);
  const double sa = std::sqrt(c.alpha);
  if (is_strong(variant_)) {
    if (!(c.mu > 0.0)) fail(ErrorKind::kConfiguration, "schedule: strong variants require mu > 0");
    return;
  }
  double m_term = 0.0;
  if (c.M > 0.0) {
    if (!(c.Omega_sq > 0.0)) fail(ErrorKind::kConfiguration, "schedule: Omega = 0 with M > 0");
    m_term = c.M * std::sqrt(3.0 * n) / (std::sqrt(c.Omega_sq) * sa);
  }
  if (variant_ == ScheduleVariant::kGenAggressive) {
    tau_const_ = std::max(m_term, std::sqrt(2.0) * norm_A_eff_ / sa);
    eta_const_ = std::sqrt(2.0) * norm_A_eff_ / sa;
  } else {
    tau_const_ = std::max(m_term, std::sqrt(2.0) * norm_A_eff_ / std::sqrt(c.alpha * n));
    eta_const_ = std::sqrt(2.0 * n) * norm_A_eff_ / sa;
  }
}

double Schedule::w(std::size_t k) const {
  if (k == 0) return 0.0;
  return is_strong(variant_) ? static_cast<double>(k) : 1.0;
}

double Schedule::theta(std::size_t k) const {
  if (!is_strong(variant_)) return 1.0;
  const double kk = static_cast<double>(k);
  return (kk - 1.0) / kk;
}

double Schedule::tau(std::size_t k) const {
  if (!is_strong(variant_)) return tau_const_;
  return 0.5 * (static_cast<double>(k) - 1.0) * constants_.mu;
}

double Schedule::eta(std::size_t k) const {
  if (!is_strong(variant_)) return eta_const_;
  const double base = 4.0 * norm_A_eff_ * norm_A_eff_ / (static_cast<double>(k) * constants_.alpha * constants_.mu);
  return variant_ == ScheduleVariant::kStrongBoundedDual ? base * static_cast<double>(N_) : base;
}

double Schedule::weight_total() const {
  const double n = static_cast<double>(N_);
  return is_strong(variant_) ? 0.5 * n * (n + 1.0) : n;
}

Schedule make_schedule(ScheduleVariant variant, std::size_t N, const ScheduleConstants& constants) {
  return Schedule(variant, N, constants);
}

namespace {

// Relative shortfall of lhs >= rhs; positive means violated.
double shortfall(double lhs, double rhs) {
  const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return (rhs - lhs) / scale;
}

}  // namespace

ScheduleConditionReport check_schedule_conditions(const Schedule& s) {
  ScheduleConditionReport r{-1.0, -1.0, -1.0, -1.0, -1.0};
  const double a2 = s.constants().norm_A * s.constants().norm_A;
  const double alpha = s.constants().alpha;
  const bool strong = is_strong(s.variant());
  const double mu = strong ? s.constants().mu : 0.0;
  const std::size_t N = s.N();
  for (std::size_t k = 1; k <= N; ++k) {
    // At k = 1 the extrapolation multiplies y_0 - y_{-1} = 0, so w_0 carries no constraint.
    if (k >= 2) {
      const double lhs = s.w(k) * s.theta(k);
      const double rhs = s.w(k - 1);
      r.a = std::max(r.a, std::max(shortfall(lhs, rhs), shortfall(rhs, lhs)));
    }
    if (k < N) {
      r.b = std::max(r.b, shortfall(s.w(k) * (mu + s.tau(k)), s.w(k + 1) * s.tau(k + 1)));
      r.c = std::max(r.c, shortfall(s.w(k) * s.eta(k), s.w(k + 1) * s.eta(k + 1)));
    }
    if (k >= 2) r.d = std::max(r.d, shortfall(s.w(k) * s.tau(k) * s.eta(k - 1) * alpha, 2.0 * s.w(k - 1) * a2));
  }
  r.e = shortfall((s.tau(N) + mu) * s.eta(N) * alpha, 2.0 * a2);
  return r;
}

StageBinding make_binding(const StageTemplate& stage, const Outcome& outcome, const StageObjective& objective,
                          DenseVector u, SubgradientOracle oracle, double M_next) {
  if (outcome.A.rows() != stage.m || outcome.A.cols() != stage.n) {
    fail(ErrorKind::kDimension, "binding: A has the wrong shape for stage " + std::to_string(stage.index));
  }
  if (outcome.B.cols() != u.size() || outcome.B.rows() != stage.m) {
    fail(ErrorKind::kDimension, "binding: B and u disagree at stage " + std::to_string(stage.index));
  }
  StageBinding b;
  b.rhs = add(outcome.b, matvec(outcome.B, u));
  b.u = std::move(u);
  b.outcome = &outcome;
  b.stage = &stage;
  b.objective = objective;
  b.subgradient_oracle = std::move(oracle);
  b.M_next = M_next;
  return b;
}

SaddleState spdt_step(const SaddleState& state, const StageBinding& binding, const DenseVector& G, double theta,
                      double tau, double eta) {
  const StageTemplate& st = *binding.stage;
  const double mu = binding.objective.kind == ObjectiveKind::kQuadPlusLinear ? binding.objective.mu : 0.0;
  if (!(eta > 0.0) || !std::isfinite(eta)) fail(ErrorKind::kParameter, "spdt: eta must be positive");
  if (!(tau >= 0.0) || !std::isfinite(tau) || (tau == 0.0 && mu <= 0.0)) {
    fail(ErrorKind::kParameter, "spdt: tau must be positive");
  }
  if (!(theta >= 0.0)) fail(ErrorKind::kParameter, "spdt: theta must be nonnegative");
  if (state.x.size() != st.n || G.size() != st.n || state.y.size() != st.m || state.y_prev.size() != st.m) {
    fail(ErrorKind::kDimension, "spdt: state or subgradient dimension mismatch at stage " + std::to_string(st.index));
  }
  const DenseMatrix& A = binding.A();

  DenseVector d_tilde(st.m);
  for (std::size_t i = 0; i < st.m; ++i) d_tilde[i] = theta * (state.y[i] - state.y_prev[i]) + state.y[i];

  DenseVector lin = matvec_transpose(A, d_tilde);
  for (std::size_t j = 0; j < st.n; ++j) lin[j] = binding.objective.c[j] + G[j] - lin[j];

  SaddleState next;
  next.x = mu > 0.0 ? prox_map_solve_quadratic(st.prox, state.x, lin, tau, mu, binding.objective.center)
                    : prox_map_solve(st.prox, state.x, lin, tau);

  const DenseVector ax = matvec(A, next.x);
  DenseVector z(st.m);
  for (std::size_t i = 0; i < st.m; ++i) z[i] = state.y[i] + (binding.rhs[i] - ax[i]) / eta;
  next.y = project_dual_cone(st.cone, z);
  next.y_prev = state.y;
  next.k = state.k + 1;
  next.avg_x = state.avg_x;
  next.avg_y = state.avg_y;
  next.weight_sum = state.weight_sum;
  return next;
}

namespace {

struct LiveGuard {
  LiveStateCounter* c;
  explicit LiveGuard(LiveStateCounter* counter) : c(counter) {
    if (c) c->peak = std::max(c->peak, ++c->live);
  }
  ~LiveGuard() {
    if (c) --c->live;
  }
  LiveGuard(const LiveGuard&) = delete;
  LiveGuard& operator=(const LiveGuard&) = delete;
};

}  // namespace

IpdsaResult ipdsa_run(const StageBinding& binding, const Schedule& schedule, const SaddleState& init,
                      SeededStream& stream, const IpdsaOptions& options) {
  LiveGuard guard(options.live_states);
  const std::size_t n = binding.stage->n;
  IpdsaResult out;
  out.state = init;
  out.state.k = 0;
  out.state.weight_sum = 0.0;
  SaddleState& s = out.state;
  const DenseVector zero_g(n, 0.0);

  for (std::size_t k = 1; k <= schedule.N(); ++k) {
    SubgradientSample sample;
    if (binding.subgradient_oracle) {
      try {
        sample = binding.subgradient_oracle(s.x, k, stream);
      } catch (const Error& e) {
        fail(e.kind(), std::string(e.what()) + " [stage " + std::to_string(binding.stage->index) + ", iteration " +
                           std::to_string(k) + "]");
      }
      if (sample.G.size() != n) fail(ErrorKind::kDimension, "subgradient oracle returned the wrong dimension");
      out.max_bias = std::max(out.max_bias, sample.bias);
    }
    const DenseVector& G = binding.subgradient_oracle ? sample.G : zero_g;
    SaddleState next = spdt_step(s, binding, G, schedule.theta(k), schedule.tau(k), schedule.eta(k));

    const double w = schedule.w(k);
    const double total = s.weight_sum + w;
    const double r = w / total;
    for (std::size_t j = 0; j < next.x.size(); ++j) next.avg_x[j] += r * (next.x[j] - next.avg_x[j]);
    for (std::size_t i = 0; i < next.y.size(); ++i) next.avg_y[i] += r * (next.y[i] - next.avg_y[i]);
    next.weight_sum = total;
    s = std::move(next);
    if (options.trace) options.trace->push_back(s);
  }
  out.x_bar = s.avg_x;
  out.y_bar = s.avg_y;
  return out;
}

DenseVector extract_subgradient(const DenseMatrix& B, const DenseVector& y_bar, const DenseVector* F_prime) {
  DenseVector g = matvec_transpose(B, y_bar);
  if (F_prime) axpy(1.0, *F_prime, g);
  return g;
}

DenseVector perturbation_delta(const Schedule& schedule, const DenseVector& y0, const DenseVector& yN) {
  require_same_dim(y0, yN, "perturbation_delta");
  const double f = schedule.w(1) * schedule.eta(1) / schedule.weight_total();
  DenseVector d(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) d[i] = f * (y0[i] - yN[i]);
  return d;
}

}  // namespace dsa
