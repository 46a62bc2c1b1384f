// dsa: plan sample budgets, solve, verify against the exact oracle, and run rate benchmarks.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dsa/driver.hpp"
#include "dsa/errors.hpp"
#include "dsa/oracle.hpp"
#include "json.hpp"
#include "json_write.hpp"

using namespace dsa;
using nlohmann::json;

namespace {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInput = 2,
  kExitPlanning = 3,
  kExitInfeasible = 4,
  kExitVerifyFailed = 5,
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kValidation:
    case ErrorKind::kUsage:
    case ErrorKind::kDimension:
    case ErrorKind::kDomain:
    case ErrorKind::kParameter:
    case ErrorKind::kConfiguration:
      return kExitInput;
    case ErrorKind::kLedger:
    case ErrorKind::kPlanning:
      return kExitPlanning;
    case ErrorKind::kInfeasible:
      return kExitInfeasible;
    case ErrorKind::kNonConvergence:
    case ErrorKind::kNumeric:
      return kExitInternal;
  }
  return kExitInternal;
}

struct RunConfig {
  std::string problem_path;
  double epsilon = 0.25;
  bool epsilon_given = false;
  std::string regime = "general";
  std::uint64_t seed = 0;
  int replications = 1;
  bool replications_given = false;
  std::string output_path;
  std::vector<std::string> overrides;
  bool trace = false;
  // verify
  std::string report_path;
  // bench
  std::string instance = "bilinear";
  std::vector<std::string> grid = {"10", "32", "100", "316", "1000"};
};

constexpr double kFeasibilityTol = 1e-8;
constexpr double kExactGridPoints = 200.0;
constexpr int kDefaultVerifyDraws = 100;

void validate(const RunConfig& c) {
  if (!(c.epsilon > 0.0) || !std::isfinite(c.epsilon)) fail(ErrorKind::kUsage, "epsilon must be positive");
  if (c.replications < 1) fail(ErrorKind::kUsage, "replications must be at least 1");
}

LedgerOverrides parse_overrides(const std::vector<std::string>& items) {
  LedgerOverrides out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::kUsage, "override '" + item + "' is not KEY=VALUE");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size() || !std::isfinite(v)) {
      fail(ErrorKind::kUsage, "override '" + item + "' has a non-numeric value");
    }
    out[key] = v;
  }
  return out;
}

std::string read_text(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUsage, std::string("cannot read ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.output_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    detail::write_file_atomic(c.output_path, text);
  }
}

struct Planned {
  MultistageProblem problem;
  ConstantsLedger ledger;
  SamplePlan plan;
};

Planned plan_from_config(const RunConfig& c) {
  Planned p;
  p.problem = parse_problem(read_text(c.problem_path, "problem"));
  p.ledger = build_ledger(p.problem, parse_overrides(c.overrides));
  p.plan = plan_samples(p.ledger, c.epsilon, regime_from_string(c.regime), p.problem.T);
  return p;
}

int cmd_plan(const RunConfig& c) {
  const Planned p = plan_from_config(c);
  emit(c, plan_to_json(p.plan, p.ledger));
  return kExitOk;
}

std::uint64_t replication_seed(std::uint64_t seed, int r, int replications) {
  return replications == 1 ? seed : derive_seed(seed, 0, static_cast<std::uint64_t>(r));
}

int cmd_solve(const RunConfig& c) {
  const Planned p = plan_from_config(c);
  if (first_stage_infeasibility(p.problem) > 1e-7) {
    fail(ErrorKind::kInfeasible, "stage 1: no x in X satisfies the first-stage constraints");
  }
  std::vector<std::string> reports;
  for (int r = 0; r < c.replications; ++r) {
    std::vector<SaddleState> trace;
    SolveOptions opts;
    if (c.trace) opts.first_stage_trace = &trace;
    const SolveReport rep = dsa_solve(p.problem, p.plan, replication_seed(c.seed, r, c.replications), p.ledger, opts);
    reports.push_back(report_to_json(rep));
    for (const SaddleState& s : trace) {
      std::cerr << "trace," << rep.seed << ',' << s.k;
      for (double v : s.x) std::cerr << ',' << v;
      for (double v : s.y) std::cerr << ',' << v;
      std::cerr << '\n';
    }
  }
  if (reports.size() == 1) {
    emit(c, reports.front());
    return kExitOk;
  }
  json all;
  all["report_version"] = 1;
  all["replications"] = json::array();
  for (const auto& r : reports) all["replications"].push_back(json::parse(r));
  emit(c, detail::dump_json(all));
  return kExitOk;
}

std::vector<SolveReport> load_reports(const std::string& path) {
  const std::string text = read_text(path, "report");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("report: ") + e.what());
  }
  std::vector<SolveReport> out;
  if (j.is_object() && j.contains("replications")) {
    for (const auto& r : j.at("replications")) out.push_back(report_from_json(r.dump()));
  } else {
    out.push_back(report_from_json(text));
  }
  if (out.empty()) fail(ErrorKind::kParse, "report: no replications");
  return out;
}

// Grid over X^1 used as test points for the value-function inequality.
std::vector<DenseVector> verification_grid(const FeasibleSet& set, std::uint64_t seed) {
  const std::size_t d = set.dimension();
  std::vector<DenseVector> pts;
  if (set.kind == SetKind::kBox) {
    const int per = std::max(2, static_cast<int>(std::floor(std::pow(kExactGridPoints, 1.0 / static_cast<double>(d)))));
    std::vector<int> idx(d, 0);
    while (true) {
      DenseVector x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = set.lower[j] + (set.upper[j] - set.lower[j]) * idx[j] / (per - 1);
      pts.push_back(x);
      std::size_t j = 0;
      while (j < d && ++idx[j] == per) idx[j++] = 0;
      if (j == d) break;
    }
    return pts;
  }
  std::mt19937_64 rng(seed);
  const double spread = set.radius;
  std::uniform_real_distribution<double> u(-1.5 * spread, 1.5 * spread);
  for (int i = 0; i < static_cast<int>(kExactGridPoints); ++i) {
    DenseVector z(d);
    for (std::size_t j = 0; j < d; ++j) z[j] = (set.kind == SetKind::kBall ? set.center[j] : 0.0) + u(rng);
    pts.push_back(project_onto_set(set, z));
  }
  return pts;
}

int cmd_verify(const RunConfig& c) {
  if (c.report_path.empty()) fail(ErrorKind::kUsage, "verify needs --report");
  const std::vector<SolveReport> reports = load_reports(c.report_path);
  const MultistageProblem P = parse_problem(read_text(c.problem_path, "problem"));
  const double eps = c.epsilon_given ? c.epsilon : reports.front().epsilon;
  const Outcome first = P.first_stage_outcome();
  const StageQuery q = first_stage_query(P, first);
  const SaddleSolution star = reference_saddle_solve(q);

  double gap_star = 0.0, gap_delta = 0.0, delta_norm = 0.0, objective_gap = 0.0, feas = 0.0;
  json per = json::array();
  for (const SolveReport& r : reports) {
    if (r.x_bar_1.size() != P.stage(1).n || r.delta.size() != P.stage(1).m || r.y_bar_1.size() != P.stage(1).m) {
      fail(ErrorKind::kDimension, "report does not match the problem dimensions");
    }
    const GapReport g = eval_gap_delta(q, r.x_bar_1, r.y_bar_1, r.delta, r.ledger.stage(1).dual_radius);
    const double og = stage_objective_value(q, r.x_bar_1) - star.value;
    const DenseVector slack = sub(sub(matvec(first.A, r.x_bar_1), first.b), r.delta);
    const double res = P.stage(1).m == 0 ? 0.0 : distance_to_cone(P.stage(1).cone, slack);
    per.push_back({{"seed", r.seed},
                   {"gap_star", g.gap_star},
                   {"gap_delta", g.gap_delta},
                   {"delta_norm", g.delta_norm},
                   {"objective_gap", og},
                   {"feasibility_residual", res}});
    gap_star += g.gap_star;
    gap_delta += g.gap_delta;
    delta_norm += g.delta_norm;
    objective_gap += og;
    feas = std::max(feas, res);
  }
  const double n = static_cast<double>(reports.size());
  gap_star /= n;
  gap_delta /= n;
  delta_norm /= n;
  objective_gap /= n;

  // Replication mean of the stage-2 stochastic subgradient at x_bar^1 against the exact v^2,
  // with eps/3 plus a 3-sigma margin for the sample mean.
  json sub_check = {{"checked", false}};
  bool sub_pass = true;
  if (P.T >= 2) {
    const SolveReport& r0 = reports.front();
    const int draws = c.replications_given ? c.replications : kDefaultVerifyDraws;
    const std::optional<std::size_t> parent =
        P.distribution.dependence == Dependence::kConditionalOnParentIndex ? std::optional<std::size_t>(0) : std::nullopt;
    const DenseVector& u = r0.x_bar_1;
    std::vector<DenseVector> gs;
    DenseVector mean(u.size(), 0.0);
    for (int k = 0; k < draws; ++k) {
      SeededStream s(derive_seed(r0.seed, 1, static_cast<std::uint64_t>(k)));
      gs.push_back(stochastic_subgradient(P, r0.plan, r0.ledger, 2, u, parent, s));
      mean = add(mean, gs.back());
    }
    mean = scale(1.0 / draws, mean);
    ExactValueFn v(P, 2, parent);
    std::vector<DenseVector> grid;
    for (const DenseVector& up : verification_grid(P.stage(1).prox.set, r0.seed)) {
      try {
        (void)v(up);
        grid.push_back(up);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasible) throw;
      }
    }
    double margin = 0.0;
    if (draws > 1) {
      for (const auto& up : grid) {
        const DenseVector d = sub(up, u);
        const double m = dot(mean, d);
        double var = 0.0;
        for (const auto& g : gs) var += (dot(g, d) - m) * (dot(g, d) - m);
        var /= draws - 1;
        margin = std::max(margin, 3.0 * std::sqrt(var / draws));
      }
    }
    const EpsSubgradientCheck chk = check_eps_subgradient(v, u, mean, eps / 3.0 + margin, grid);
    sub_pass = chk.pass;
    sub_check = {{"checked", true},        {"pass", chk.pass},          {"worst_violation", chk.worst_violation},
                 {"eps", eps / 3.0 + margin}, {"draws", draws},           {"grid_points", grid.size()}};
  }

  const bool ok_gap = gap_star <= eps, ok_obj = objective_gap <= eps, ok_delta = delta_norm <= eps,
             ok_feas = feas <= kFeasibilityTol;
  const bool pass = ok_gap && ok_obj && ok_delta && ok_feas && sub_pass;
  json out;
  out["report_version"] = 1;
  out["epsilon"] = eps;
  out["optimal_value"] = star.value;
  out["replications"] = reports.size();
  out["gap_star"] = gap_star;
  out["gap_delta"] = gap_delta;
  out["delta_norm"] = delta_norm;
  out["objective_gap"] = objective_gap;
  out["feasibility_residual"] = feas;
  out["eps_subgradient"] = sub_check;
  out["checks"] = {{"gap_star", ok_gap},
                   {"objective_gap", ok_obj},
                   {"delta_norm", ok_delta},
                   {"feasibility", ok_feas},
                   {"eps_subgradient", sub_pass}};
  out["per_replication"] = per;
  out["pass"] = pass;
  emit(c, detail::dump_json(out));
  if (!pass) {
    std::cerr << "verification failed: gap_star " << gap_star << ", objective gap " << objective_gap << ", |delta| "
              << delta_norm << ", feasibility " << feas << " (epsilon " << eps << ")\n";
    return kExitVerifyFailed;
  }
  return kExitOk;
}

// Bundled rate instances: X = [0, 1], A = 1, b = 0.5, K = {0}, h(x) = x (+ (mu/2)(x - 0.5)^2).
int cmd_bench(const RunConfig& c) {
  std::vector<std::size_t> grid;
  for (const std::string& tok : c.grid) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || v <= 0) fail(ErrorKind::kUsage, "bench grid entry '" + tok + "' is not a positive integer");
    grid.push_back(static_cast<std::size_t>(v));
  }
  if (grid.empty()) fail(ErrorKind::kUsage, "bench needs a nonempty N grid");
  double mu = 0.0;
  ScheduleVariant variant = ScheduleVariant::kGenAggressive;
  if (c.instance == "strong-bilinear") {
    mu = 1.0;
    variant = ScheduleVariant::kStrongAggressive;
  } else if (c.instance != "bilinear") {
    fail(ErrorKind::kUsage, "unknown bench instance '" + c.instance + "' (bilinear, strong-bilinear)");
  }
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
  obj.kind = mu > 0.0 ? ObjectiveKind::kQuadPlusLinear : ObjectiveKind::kLinear;
  obj.mu = mu;
  obj.c = o.c;
  obj.center = st.prox.prox_center;
  st.objective = obj;
  const StageBinding bind = make_binding(st, o, obj, {});
  const StageQuery q = standalone_query(bind);
  const SaddleSolution star = reference_saddle_solve(q);
  const double norm_A = spectral_norm(o.A);

  std::ostringstream csv;
  csv << "variant,N,measured_gap,theoretical_bound,ratio\n";
  char line[256];
  for (std::size_t N : grid) {
    const Schedule s(variant, N, ScheduleConstants{norm_A, st.prox.modulus_alpha, st.prox.diameter_sq_omega, 0.0, mu, 0.0});
    SeededStream stream(c.seed);
    const IpdsaResult r = ipdsa_run(bind, s, initial_state(st), stream);
    const double gap = eval_gap_star(q, r.x_bar, r.y_bar, star.y);
    BoundConstants bc;
    bc.norm_A = norm_A;
    bc.alpha = st.prox.modulus_alpha;
    bc.Omega_sq = st.prox.diameter_sq_omega;
    bc.M = 0.0;
    bc.mu = mu;
    bc.dual_dist = norm2(star.y);
    bc.y0_norm = 0.0;
    const double bound = theoretical_bound(variant, bc, N, 0.0).gap_star_bound;
    std::snprintf(line, sizeof line, "%s,%zu,%.17g,%.17g,%.17g\n", to_string(variant).c_str(), N, gap, bound,
                  bound > 0.0 ? gap / bound : 0.0);
    csv << line;
  }
  emit(c, csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic stochastic approximation for multi-stage conic problems"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&cfg](CLI::App* sub, bool needs_problem) {
    auto* p = sub->add_option("-p,--problem", cfg.problem_path, "Problem JSON file");
    if (needs_problem) p->required();
    sub->add_option("-o,--output", cfg.output_path, "Output file (default: standard output)");
    sub->add_option("--override", cfg.overrides, "Ledger constant override KEY=VALUE (repeatable)");
  };
  auto add_eps = [&cfg](CLI::App* sub) {
    sub->add_option_function<double>(
        "-e,--epsilon",
        [&cfg](double v) {
          cfg.epsilon = v;
          cfg.epsilon_given = true;
        },
        "Target accuracy");
    sub->add_option("--regime", cfg.regime, "general or strong")->check(CLI::IsMember({"general", "strong"}));
  };
  auto add_reps = [&cfg](CLI::App* sub, const char* help) {
    sub->add_option_function<int>(
        "--replications",
        [&cfg](int v) {
          cfg.replications = v;
          cfg.replications_given = true;
        },
        help);
  };

  CLI::App* plan = app.add_subcommand("plan", "Compute per-stage sample budgets");
  add_common(plan, true);
  add_eps(plan);

  CLI::App* solve = app.add_subcommand("solve", "Run the method and write a report");
  add_common(solve, true);
  add_eps(solve);
  solve->add_option("--seed", cfg.seed, "Root seed");
  add_reps(solve, "Independent replications, seeded from --seed");
  solve->add_flag("--trace", cfg.trace, "Print first-stage iterates to standard error");

  CLI::App* verify = app.add_subcommand("verify", "Check a report against the exact oracle");
  add_common(verify, true);
  add_eps(verify);
  verify->add_option("-r,--report", cfg.report_path, "Report written by solve")->required();
  add_reps(verify, "Stochastic subgradient draws for the value-function check");

  CLI::App* bench = app.add_subcommand("bench", "Measured gap against the theoretical bound on a bundled instance");
  bench->add_option("-o,--output", cfg.output_path, "CSV output file (default: standard output)");
  bench->add_option("--instance", cfg.instance, "bilinear or strong-bilinear");
  bench->add_option("--grid", cfg.grid, "Iteration counts N")->delimiter(',')->expected(0, -1);
  bench->add_option("--seed", cfg.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    validate(cfg);
    if (*plan) return cmd_plan(cfg);
    if (*solve) return cmd_solve(cfg);
    if (*verify) return cmd_verify(cfg);
    if (*bench) return cmd_bench(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
