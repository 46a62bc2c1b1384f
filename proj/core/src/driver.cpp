#include "dsa/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "dsa/errors.hpp"
#include "json_write.hpp"

namespace dsa {

using nlohmann::json;

namespace {

constexpr const char* kLedgerFields[] = {"norm_A_max", "bound_B",    "Omega_sq",    "alpha", "mu",
                                         "sigma_min",  "lipschitz_h", "M_h",        "dual_bound",
                                         "dual_radius", "M",          "y0_norm"};

double& field_ref(StageConstants& s, const std::string& name) {
  if (name == "norm_A_max") return s.norm_A_max;
  if (name == "bound_B") return s.bound_B;
  if (name == "Omega_sq") return s.Omega_sq;
  if (name == "alpha") return s.alpha;
  if (name == "mu") return s.mu;
  if (name == "sigma_min") return s.sigma_min;
  if (name == "lipschitz_h") return s.lipschitz_h;
  if (name == "M_h") return s.M_h;
  if (name == "dual_bound") return s.dual_bound;
  if (name == "dual_radius") return s.dual_radius;
  if (name == "M") return s.M;
  if (name == "y0_norm") return s.y0_norm;
  fail(ErrorKind::kUsage, "unknown ledger field '" + name + "'");
}

double field_value(const StageConstants& s, const std::string& name) {
  return field_ref(const_cast<StageConstants&>(s), name);
}

// Splits "dual_radius_3" into ("dual_radius", 3).
std::pair<std::string, int> split_key(const std::string& key) {
  const auto pos = key.rfind('_');
  if (pos == std::string::npos || pos + 1 >= key.size()) {
    fail(ErrorKind::kUsage, "override key '" + key + "' must look like NAME_STAGE");
  }
  int t = 0;
  try {
    std::size_t used = 0;
    t = std::stoi(key.substr(pos + 1), &used);
    if (used != key.size() - pos - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    fail(ErrorKind::kUsage, "override key '" + key + "' has a malformed stage index");
  }
  return {key.substr(0, pos), t};
}

std::vector<const Outcome*> stage_outcomes(const MultistageProblem& P, int t, const Outcome& first) {
  std::vector<const Outcome*> out;
  if (t == 1) {
    out.push_back(&first);
    return out;
  }
  for (const auto& list : P.distribution.tables.at(static_cast<std::size_t>(t - 2)))
    for (const auto& o : list) out.push_back(&o);
  return out;
}

}  // namespace

ConstantsLedger build_ledger(const MultistageProblem& P, const LedgerOverrides& overrides) {
  // Resolve overrides first so unknown keys fail before any work.
  std::map<int, std::map<std::string, double>> per_stage;
  for (const auto& [key, value] : overrides) {
    auto [name, t] = split_key(key);
    StageConstants probe;
    field_ref(probe, name);  // validates the name
    if (t < 1 || t > P.T) fail(ErrorKind::kUsage, "override '" + key + "' names a stage outside 1.." + std::to_string(P.T));
    if (!std::isfinite(value)) fail(ErrorKind::kUsage, "override '" + key + "' is not finite");
    per_stage[t][name] = value;
  }

  ConstantsLedger L;
  L.stages.resize(static_cast<std::size_t>(P.T));
  const Outcome first = P.first_stage_outcome();
  double M_next = 0.0;
  for (int t = P.T; t >= 1; --t) {
    StageConstants& s = L.stages[static_cast<std::size_t>(t - 1)];
    s.t = t;
    const StageTemplate& st = P.stage(t);
    const auto& ov = per_stage[t];
    auto apply = [&](const char* name) {
      if (auto it = ov.find(name); it != ov.end()) {
        if (!(it->second >= 0.0)) {
          fail(ErrorKind::kLedger, std::string("ledger: override ") + name + "_" + std::to_string(t) + " must be >= 0");
        }
        field_ref(s, name) = it->second;
        L.overridden.push_back(std::string(name) + "_" + std::to_string(t));
      }
    };
    const auto outcomes = stage_outcomes(P, t, first);

    s.norm_A_max = 0.0;
    if (st.m > 0)
      for (const Outcome* o : outcomes) s.norm_A_max = std::max(s.norm_A_max, spectral_norm(o->A));
    apply("norm_A_max");
    s.bound_B = t >= 2 ? P.bound_B[static_cast<std::size_t>(t - 1)] : 0.0;
    apply("bound_B");
    s.Omega_sq = st.prox.diameter_sq_omega;
    apply("Omega_sq");
    s.alpha = st.prox.modulus_alpha;
    apply("alpha");
    s.mu = st.objective.kind == ObjectiveKind::kQuadPlusLinear ? st.objective.mu : 0.0;
    apply("mu");

    s.sigma_min = 0.0;
    if (st.m > 0) {
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        try {
          lowest = std::min(lowest, sigma_min_nonzero(outcomes[i]->A));
        } catch (const Error&) {
          fail(ErrorKind::kLedger, "ledger: A has no nonzero singular value at stage " + std::to_string(t) +
                                       ", outcome " + std::to_string(i));
        }
      }
      s.sigma_min = lowest;
    }
    apply("sigma_min");

    s.lipschitz_h = 0.0;
    for (const Outcome* o : outcomes) {
      StageObjective obj = P.objective_for(t, *o);
      obj.coupling = GeneralConvexTerm{};
      s.lipschitz_h = std::max(s.lipschitz_h, objective_lipschitz(obj, st.prox.set));
    }
    apply("lipschitz_h");
    s.M_h = s.lipschitz_h + (t < P.T ? M_next : 0.0);
    apply("M_h");
    s.dual_bound = st.m > 0 ? s.M_h / s.sigma_min : 0.0;
    apply("dual_bound");
    s.y0_norm = 0.0;
    apply("y0_norm");
    s.dual_radius = s.dual_bound + s.y0_norm;
    apply("dual_radius");
    if (t >= 2) {
      const GeneralConvexTerm& up = P.stage(t - 1).objective.coupling;
      s.M = s.bound_B * s.dual_bound + (up.present() ? up.lipschitz_bound : 0.0);
    } else {
      s.M = 0.0;
    }
    apply("M");
    for (const char* name : kLedgerFields) {
      if (!std::isfinite(field_value(s, name))) {
        fail(ErrorKind::kLedger, std::string("ledger: ") + name + " is not finite at stage " + std::to_string(t));
      }
    }
    M_next = s.M;
  }
  return L;
}

std::string to_string(Regime r) { return r == Regime::kGeneralConvex ? "general" : "strong"; }

Regime regime_from_string(const std::string& name) {
  if (name == "general") return Regime::kGeneralConvex;
  if (name == "strong") return Regime::kStronglyConvex;
  fail(ErrorKind::kUsage, "unknown regime '" + name + "' (expected general or strong)");
}

namespace {

struct PlanInputs {
  double A, Om, Om2, al, r, y0, mu, M_next;
};

PlanInputs inputs_for(const ConstantsLedger& L, int t, int T) {
  const StageConstants& s = L.stage(t);
  PlanInputs in{};
  // Same unit-norm convention as the schedules for stages without constraint rows.
  in.A = s.norm_A_max > 0.0 ? s.norm_A_max : 1.0;
  in.Om2 = s.Omega_sq;
  in.Om = std::sqrt(s.Omega_sq);
  in.al = s.alpha;
  in.r = s.dual_radius;
  in.y0 = s.y0_norm;
  in.mu = s.mu;
  in.M_next = t < T ? L.stage(t + 1).M : 0.0;
  return in;
}

std::uint64_t ceil_budget(double raw, int t) {
  if (!std::isfinite(raw) || raw > 1e15) {
    fail(ErrorKind::kPlanning, "planner: budget for stage " + std::to_string(t) + " is not representable");
  }
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(raw)));
}

double three_stage_general(const PlanInputs& in, int t, double eps) {
  const double sa = std::sqrt(in.al);
  if (t == 3) return 3.0 * std::sqrt(2.0) * in.A * (2.0 * in.Om2 + in.r * in.r) / (sa * eps);
  if (t == 2) {
    return std::pow(12.0 * std::sqrt(2.0) * in.A * in.Om / (sa * eps), 2.0 / 3.0) +
           std::pow(6.0 * (in.A * in.r * in.r + 4.0 * std::sqrt(3.0) * in.M_next * in.Om) / (sa * eps), 2.0);
  }
  const double b1 = 6.0 * std::sqrt(2.0) * in.A * (2.0 * in.Om2 + in.y0 * in.y0) / (sa * eps) +
                    std::pow(24.0 * std::sqrt(3.0) * in.M_next * in.Om / (sa * eps), 2.0);
  const double b2 = 6.0 * in.A * (std::sqrt(2.0 * in.al) * in.r + 2.0 * in.Om + 3.0 * sa) / (in.al * eps) +
                    std::pow(6.0 * std::sqrt(3.0) * in.M_next * (std::sqrt(2.0) * in.A + sa) / (in.al * eps), 2.0);
  return std::max(b1, b2);
}

double three_stage_strong(const PlanInputs& in, int t, double eps) {
  const double amu = in.al * in.mu;
  if (t == 3) return 2.0 * std::sqrt(6.0) * in.A * in.r / std::sqrt(amu * eps);
  if (t == 2) return (24.0 * in.A * in.A * in.r * in.r + 72.0 * in.M_next * in.M_next) / (amu * eps);
  const double b1 = 4.0 * std::sqrt(3.0) * in.A * in.y0 / std::sqrt(amu * eps) +
                    4.0 * std::pow(6.0 * in.M_next, 2.0) / (amu * eps);
  const double b2 = 4.0 * std::sqrt(3.0) * in.A * (std::sqrt(in.r) + std::sqrt(2.0)) / std::sqrt(amu * eps) +
                    std::pow(24.0 * std::sqrt(6.0) * in.A * in.M_next / (amu * eps), 2.0 / 3.0);
  return std::max(b1, b2);
}

double multi_stage_general(const PlanInputs& in, int t, int T, double eps) {
  const double sa = std::sqrt(in.al);
  const double TT = static_cast<double>(T);
  if (t == 1) {
    const double b1 = 2.0 * std::sqrt(2.0) * TT * in.A * (2.0 * in.Om2 + in.y0 * in.y0) / (sa * eps) +
                      std::pow(8.0 * std::sqrt(3.0) * TT * in.M_next * in.Om / (sa * eps), 2.0);
    const double b2 =
        (6.0 * TT * in.A * (std::sqrt(2.0 * in.al) * in.r + 2.0 * in.Om) + 27.0 * (TT - 1.0) * sa * in.A) /
            (in.al * TT * eps) +
        std::pow(6.0 * std::sqrt(3.0) * in.M_next * (std::sqrt(2.0) * in.A + sa) / (in.al * eps), 2.0);
    return std::max(b1, b2);
  }
  if (t == T) return TT * std::sqrt(2.0) * in.A * (2.0 * in.Om2 + in.r * in.r) / (sa * eps);
  return std::pow(4.0 * std::sqrt(2.0) * TT * in.A * in.Om / (sa * eps), 2.0 / 3.0) +
         std::pow(2.0 * TT * (in.A * in.r * in.r + 4.0 * std::sqrt(3.0) * in.M_next * in.Om) / (sa * eps), 2.0);
}

double multi_stage_strong(const PlanInputs& in, int t, int T, double eps) {
  const double amu = in.al * in.mu;
  const double TT = static_cast<double>(T);
  if (t == 1) {
    const double b1 = 4.0 * std::sqrt(TT) * in.A * in.y0 / std::sqrt(amu * eps) +
                      24.0 * TT * in.M_next * in.M_next / (amu * eps);
    const double b2 = 4.0 * std::sqrt(3.0) * in.A * std::sqrt(in.r) / std::sqrt(amu * eps) +
                      std::pow(24.0 * std::sqrt(6.0) * in.A * in.M_next / (amu * eps), 2.0 / 3.0) +
                      12.0 * in.A * std::sqrt(TT - 1.0) / std::sqrt(amu * TT * eps);
    return std::max(b1, b2);
  }
  if (t == T) return std::sqrt(8.0 * TT) * in.A * in.r / std::sqrt(amu * eps);
  return (8.0 * TT * in.A * in.A * in.r * in.r + 24.0 * TT * in.M_next * in.M_next) / (amu * eps);
}

std::string formula_tag(Regime regime, int t, int T) {
  std::string family = T == 3 ? "three_stage" : "multi_stage";
  if (regime == Regime::kStronglyConvex) family += "_strong";
  std::string role = t == 1 ? "first" : (t == T ? "last" : "middle");
  return family + "." + role + " (N_" + std::to_string(t) + ")";
}

}  // namespace

SamplePlan plan_samples(const ConstantsLedger& L, double epsilon, Regime regime, int T) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorKind::kPlanning, "planner: epsilon must be positive");
  if (T < 1 || static_cast<std::size_t>(T) != L.stages.size()) {
    fail(ErrorKind::kPlanning, "planner: ledger has " + std::to_string(L.stages.size()) + " stages, T = " +
                                   std::to_string(T));
  }
  for (int t = 1; t <= T; ++t) {
    const StageConstants& s = L.stage(t);
    if (!(s.alpha > 0.0)) fail(ErrorKind::kPlanning, "planner: missing constant alpha_" + std::to_string(t));
    if (regime == Regime::kStronglyConvex && !(s.mu > 0.0)) {
      fail(ErrorKind::kPlanning, "planner: missing constant mu_" + std::to_string(t) + " (strong regime needs mu > 0)");
    }
  }
  SamplePlan plan;
  plan.epsilon = epsilon;
  plan.regime = regime;
  plan.T = T;
  for (int t = 1; t <= T; ++t) {
    const PlanInputs in = inputs_for(L, t, T);
    double raw = 0.0;
    if (T == 3) {
      raw = regime == Regime::kGeneralConvex ? three_stage_general(in, t, epsilon) : three_stage_strong(in, t, epsilon);
    } else {
      raw = regime == Regime::kGeneralConvex ? multi_stage_general(in, t, T, epsilon)
                                             : multi_stage_strong(in, t, T, epsilon);
    }
    plan.raw.push_back(raw);
    plan.budgets.push_back(ceil_budget(raw, t));
    plan.formulas.push_back(formula_tag(regime, t, T));
  }
  return plan;
}

ScheduleVariant stage_variant(Regime regime, int t, int T) {
  const bool middle = t > 1 && t < T;
  if (regime == Regime::kGeneralConvex) {
    return middle ? ScheduleVariant::kGenBoundedDual : ScheduleVariant::kGenAggressive;
  }
  return middle ? ScheduleVariant::kStrongBoundedDual : ScheduleVariant::kStrongAggressive;
}

ScheduleConstants stage_schedule_constants(const ConstantsLedger& L, int t, int T) {
  const StageConstants& s = L.stage(t);
  ScheduleConstants c;
  c.norm_A = s.norm_A_max;
  c.alpha = s.alpha;
  c.Omega_sq = s.Omega_sq;
  c.M = t < T ? L.stage(t + 1).M : 0.0;
  c.mu = s.mu;
  c.dual_radius_guess = s.dual_radius;
  return c;
}

// ---------------------------------------------------------------------------
// Recursive solve

namespace {

class Recursion {
 public:
  Recursion(const MultistageProblem& P, const SamplePlan& plan, const ConstantsLedger& L)
      : P_(P), counts_(static_cast<std::size_t>(std::max(P.T - 1, 0)), 0) {
    for (int t = 1; t <= P.T; ++t) {
      schedules_.push_back(make_schedule(stage_variant(plan.regime, t, P.T),
                                         static_cast<std::size_t>(plan.budgets[static_cast<std::size_t>(t - 1)]),
                                         stage_schedule_constants(L, t, P.T)));
    }
  }

  IpdsaResult run(int t, const DenseVector& u, const Outcome& outcome, std::size_t outcome_index, SeededStream& stream,
                  std::vector<SaddleState>* trace) {
    const StageTemplate& st = P_.stage(t);
    const StageObjective objective = P_.objective_for(t, outcome);
    SubgradientOracle oracle;
    if (t < P_.T) {
      oracle = [this, t, outcome_index, objective](const DenseVector& x_prev, std::size_t k, SeededStream& s) {
        SeededStream child = s.child(t + 1, k);
        const std::optional<std::size_t> parent =
            P_.distribution.dependence == Dependence::kConditionalOnParentIndex
                ? std::optional<std::size_t>(t == 1 ? 0 : outcome_index)
                : std::nullopt;
        const SampledOutcome drawn = sample_outcome(P_.distribution, t + 1, parent, child);
        ++counts_[static_cast<std::size_t>(t - 1)];
        const IpdsaResult inner = run(t + 1, x_prev, *drawn.outcome, drawn.index, child, nullptr);
        SubgradientSample sample;
        if (objective.coupling.present()) {
          const DenseVector fp = coupling_subgradient(objective.coupling, x_prev);
          sample.G = extract_subgradient(drawn.outcome->B, inner.y_bar, &fp);
        } else {
          sample.G = extract_subgradient(drawn.outcome->B, inner.y_bar);
        }
        return sample;
      };
    }
    const Schedule& schedule = schedules_[static_cast<std::size_t>(t - 1)];
    const double M_next = schedule.constants().M;
    const StageBinding binding = make_binding(st, outcome, objective, u, std::move(oracle), M_next);
    IpdsaOptions opts;
    opts.trace = trace;
    opts.live_states = &live_;
    try {
      return ipdsa_run(binding, schedule, initial_state(st), stream, opts);
    } catch (const Error& e) {
      std::string where;
      for (const auto& [stage, index] : stream.path()) {
        where += "/(" + std::to_string(stage) + "," + std::to_string(index) + ")";
      }
      fail(e.kind(), std::string(e.what()) + " at path " + (where.empty() ? "/" : where));
    }
  }

  const std::vector<Schedule>& schedules() const { return schedules_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  int peak_live() const { return live_.peak; }

 private:
  const MultistageProblem& P_;
  std::vector<Schedule> schedules_;
  std::vector<std::uint64_t> counts_;
  LiveStateCounter live_;
};

}  // namespace

SolveReport dsa_solve(const MultistageProblem& P, const SamplePlan& plan, std::uint64_t root_seed,
                      const ConstantsLedger& L, const SolveOptions& options) {
  if (plan.T != P.T || plan.budgets.size() != static_cast<std::size_t>(P.T)) {
    fail(ErrorKind::kPlanning, "solve: plan does not match the problem's stage count");
  }
  if (plan.regime == Regime::kStronglyConvex) {
    for (const auto& st : P.stages) {
      if (st.objective.kind != ObjectiveKind::kQuadPlusLinear) {
        fail(ErrorKind::kPlanning, "solve: strong regime needs a quadratic objective at stage " +
                                       std::to_string(st.index));
      }
    }
  }
  const auto start = std::chrono::steady_clock::now();
  Recursion rec(P, plan, L);
  SeededStream stream(root_seed);
  const Outcome first = P.first_stage_outcome();
  const IpdsaResult res = rec.run(1, DenseVector{}, first, 0, stream, options.first_stage_trace);

  SolveReport r;
  r.x_bar_1 = res.x_bar;
  r.y_bar_1 = res.y_bar;
  r.y_N_1 = res.state.y;
  r.delta = perturbation_delta(rec.schedules().front(), DenseVector(P.stage(1).m, 0.0), res.state.y);
  r.budgets_used = plan.budgets;
  r.scenario_counts = rec.counts();
  r.seed = root_seed;
  r.peak_live_states = rec.peak_live();
  r.epsilon = plan.epsilon;
  r.regime = plan.regime;
  r.ledger = L;
  r.plan = plan;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

DenseVector stochastic_subgradient(const MultistageProblem& P, const SamplePlan& plan, const ConstantsLedger& L, int t,
                                   const DenseVector& u, std::optional<std::size_t> parent, SeededStream& stream) {
  if (t < 2 || t > P.T) fail(ErrorKind::kUsage, "stochastic_subgradient: stage must be in [2, T]");
  if (plan.T != P.T || plan.budgets.size() != static_cast<std::size_t>(P.T)) {
    fail(ErrorKind::kPlanning, "stochastic_subgradient: plan does not match the problem's stage count");
  }
  Recursion rec(P, plan, L);
  const SampledOutcome drawn = sample_outcome(P.distribution, t, parent, stream);
  const IpdsaResult inner = rec.run(t, u, *drawn.outcome, drawn.index, stream, nullptr);
  return extract_subgradient(drawn.outcome->B, inner.y_bar);
}

SolveReport dsa_solve(const MultistageProblem& P, const SamplePlan& plan, std::uint64_t root_seed) {
  return dsa_solve(P, plan, root_seed, build_ledger(P));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json vec_json(const DenseVector& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

json ledger_json(const ConstantsLedger& L) {
  json stages = json::array();
  for (const auto& s : L.stages) {
    json j;
    j["t"] = s.t;
    for (const char* name : kLedgerFields) j[name] = field_value(s, name);
    stages.push_back(j);
  }
  return {{"stages", stages}, {"overridden", L.overridden}};
}

json plan_json(const SamplePlan& p) {
  return {{"epsilon", p.epsilon}, {"regime", to_string(p.regime)}, {"T", p.T},
          {"budgets", p.budgets}, {"raw", vec_json(p.raw)},        {"formulas", p.formulas}};
}

DenseVector vec_from(const json& j) {
  DenseVector v;
  for (const auto& e : j) v.push_back(e.get<double>());
  return v;
}

}  // namespace

std::string ledger_to_json(const ConstantsLedger& L) { return detail::dump_json(ledger_json(L)); }

std::string plan_to_json(const SamplePlan& plan, const ConstantsLedger& L) {
  json j = plan_json(plan);
  j["ledger"] = ledger_json(L);
  return detail::dump_json(j);
}

std::string report_to_json(const SolveReport& r) {
  json j;
  j["report_version"] = 1;
  j["seed"] = r.seed;
  j["epsilon"] = r.epsilon;
  j["regime"] = to_string(r.regime);
  j["T"] = r.plan.T;
  j["budgets"] = r.budgets_used;
  j["scenario_counts"] = r.scenario_counts;
  j["x_bar_1"] = vec_json(r.x_bar_1);
  j["y_bar_1"] = vec_json(r.y_bar_1);
  j["y_N_1"] = vec_json(r.y_N_1);
  j["delta"] = vec_json(r.delta);
  j["delta_norm"] = norm2(r.delta);
  j["peak_live_states"] = r.peak_live_states;
  j["wall_time"] = r.wall_time;
  j["ledger"] = ledger_json(r.ledger);
  j["plan"] = plan_json(r.plan);
  return detail::dump_json(j);
}

SolveReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, std::string("report: malformed JSON: ") + e.what());
  }
  try {
    if (j.at("report_version").get<int>() != 1) fail(ErrorKind::kParse, "report: unsupported report_version");
    SolveReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.epsilon = j.at("epsilon").get<double>();
    r.regime = regime_from_string(j.at("regime").get<std::string>());
    r.budgets_used = j.at("budgets").get<std::vector<std::uint64_t>>();
    r.scenario_counts = j.at("scenario_counts").get<std::vector<std::uint64_t>>();
    r.x_bar_1 = vec_from(j.at("x_bar_1"));
    r.y_bar_1 = vec_from(j.at("y_bar_1"));
    r.y_N_1 = vec_from(j.at("y_N_1"));
    r.delta = vec_from(j.at("delta"));
    r.peak_live_states = j.at("peak_live_states").get<int>();
    r.wall_time = j.at("wall_time").get<double>();
    for (const auto& sj : j.at("ledger").at("stages")) {
      StageConstants s;
      s.t = sj.at("t").get<int>();
      for (const char* name : kLedgerFields) field_ref(s, name) = sj.at(name).get<double>();
      r.ledger.stages.push_back(s);
    }
    r.ledger.overridden = j.at("ledger").at("overridden").get<std::vector<std::string>>();
    const json& pj = j.at("plan");
    r.plan.epsilon = pj.at("epsilon").get<double>();
    r.plan.regime = regime_from_string(pj.at("regime").get<std::string>());
    r.plan.T = pj.at("T").get<int>();
    r.plan.budgets = pj.at("budgets").get<std::vector<std::uint64_t>>();
    r.plan.raw = vec_from(pj.at("raw"));
    r.plan.formulas = pj.at("formulas").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("report: ") + e.what());
  }
}

}  // namespace dsa
