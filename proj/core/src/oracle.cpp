#include "dsa/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsa/errors.hpp"

namespace dsa {

DenseVector StageQuery::rhs() const {
  if (outcome->B.cols() == 0) return outcome->b;
  return add(outcome->b, matvec(outcome->B, u));
}

StageQuery stage_query(const MultistageProblem& problem, int t, const Outcome& outcome, std::size_t outcome_index,
                       DenseVector u) {
  StageQuery q;
  q.problem = &problem;
  q.t = t;
  q.stage = &problem.stage(t);
  q.outcome = &outcome;
  q.outcome_index = outcome_index;
  q.objective = problem.objective_for(t, outcome);
  q.u = std::move(u);
  if (q.u.size() != outcome.B.cols()) fail(ErrorKind::kDimension, "stage query: u does not match B");
  return q;
}

StageQuery first_stage_query(const MultistageProblem& problem, const Outcome& first_stage_outcome) {
  return stage_query(problem, 1, first_stage_outcome, 0, DenseVector{});
}

StageQuery standalone_query(const StageBinding& binding) {
  StageQuery q;
  q.t = binding.stage->index;
  q.stage = binding.stage;
  q.outcome = binding.outcome;
  q.objective = binding.objective;
  q.u = binding.u;
  return q;
}

namespace {

std::optional<std::size_t> child_parent(const MultistageProblem& P, int t, std::size_t outcome_index) {
  if (P.distribution.dependence != Dependence::kConditionalOnParentIndex) return std::nullopt;
  return t == 1 ? 0 : outcome_index;
}

struct Builder {
  const MultistageProblem* P;
  ConicProgram prog;

  // Adds a node for stage t and returns its x block. parent_block < 0 means u is a constant.
  std::size_t add_node(int t, const StageTemplate& st, const Outcome& o, std::size_t idx, const StageObjective& obj,
                       double weight, long parent_block, const DenseVector& u, bool rows, const DenseVector& extra_lin,
                       std::size_t* row_out, std::size_t* epi_out) {
    DenseVector lin(st.n);
    for (std::size_t j = 0; j < st.n; ++j) lin[j] = weight * (obj.c[j] + (extra_lin.empty() ? 0.0 : extra_lin[j]));
    const bool quad = obj.kind == ObjectiveKind::kQuadPlusLinear && obj.mu > 0.0;
    const std::size_t blk =
        prog.add_block(st.prox.set, lin, quad ? weight * obj.mu : 0.0, quad ? obj.center : DenseVector{});
    const std::size_t xoff = prog.block_offset(blk);

    if (rows && st.m > 0) {
      DenseVector q = o.b;
      if (parent_block < 0 && o.B.cols() > 0) q = add(q, matvec(o.B, u));
      q = scale(weight, q);
      const std::size_t r0 = prog.add_cone(st.cone, q);
      if (row_out) *row_out = r0;
      for (std::size_t i = 0; i < st.m; ++i) {
        for (std::size_t j = 0; j < st.n; ++j) prog.add_entry(r0 + i, xoff + j, weight * o.A(i, j));
        if (parent_block >= 0) {
          const std::size_t poff = prog.block_offset(static_cast<std::size_t>(parent_block));
          for (std::size_t j = 0; j < o.B.cols(); ++j) prog.add_entry(r0 + i, poff + j, -weight * o.B(i, j));
        }
      }
    }

    if (obj.coupling.present()) {
      const GeneralConvexTerm& F = obj.coupling;
      const std::size_t nr = F.slopes.rows();
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < nr; ++i) {
        DenseVector row(st.n);
        for (std::size_t j = 0; j < st.n; ++j) row[j] = F.slopes(i, j);
        const double shift = F.offsets[i] + (F.p.empty() ? 0.0 : F.p[i]);
        const DenseVector xmin = linear_minimizer(st.prox.set, row);
        DenseVector neg = row;
        neg = scale(-1.0, neg);
        const DenseVector xmax = linear_minimizer(st.prox.set, neg);
        lo = std::min(lo, dot(row, xmin) + shift);
        hi = std::max(hi, dot(row, xmax) + shift);
      }
      const std::size_t eb = prog.add_block(FeasibleSet::box({lo - 1.0}, {hi + 1.0}), {weight});
      if (epi_out) *epi_out = eb;
      const std::size_t soff = prog.block_offset(eb);
      DenseVector q(nr);
      for (std::size_t i = 0; i < nr; ++i) q[i] = weight * (F.offsets[i] + (F.p.empty() ? 0.0 : F.p[i]));
      const std::size_t r0 = prog.add_cone(Cone::orthant(nr), q);
      for (std::size_t i = 0; i < nr; ++i) {
        prog.add_entry(r0 + i, soff, weight);
        for (std::size_t j = 0; j < st.n; ++j) prog.add_entry(r0 + i, xoff + j, -weight * F.slopes(i, j));
      }
    }

    if (P && t < P->T) {
      const auto& support = P->distribution.support(t + 1, child_parent(*P, t, idx));
      for (std::size_t k = 0; k < support.size(); ++k) {
        const Outcome& child = support[k];
        add_node(t + 1, P->stage(t + 1), child, k, P->objective_for(t + 1, child), weight * child.prob,
                 static_cast<long>(blk), u, true, {}, nullptr, nullptr);
      }
    }
    return blk;
  }
};

DenseVector block_slice(const ConicProgram& p, const DenseVector& x, std::size_t blk) {
  const auto off = static_cast<std::ptrdiff_t>(p.block_offset(blk));
  return DenseVector(x.begin() + off, x.begin() + off + static_cast<std::ptrdiff_t>(p.block_dim(blk)));
}

// min over x in X of 0.5 dist(A x - rhs, K)^2 by accelerated projected gradient.
double node_infeasibility(const StageTemplate& st, const DenseMatrix& A, const DenseVector& rhs) {
  if (st.m == 0) return 0.0;
  const double L = std::max(spectral_norm(A), 1e-12);
  const double step = 1.0 / (L * L);
  auto resid = [&](const DenseVector& x) {
    const DenseVector w = sub(matvec(A, x), rhs);
    return sub(w, project_cone(st.cone, w));
  };
  DenseVector x = st.prox.prox_center, xp = x, v = x;
  double best = norm2(resid(x));
  for (int k = 1; k <= 50000 && best > 1e-10; ++k) {
    const DenseVector r = resid(v);
    const DenseVector g = matvec_transpose(A, r);
    DenseVector z(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) z[j] = v[j] - step * g[j];
    xp = x;
    x = project_onto_set(st.prox.set, z);
    const double beta = (k - 1.0) / (k + 2.0);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = x[j] + beta * (x[j] - xp[j]);
    best = std::min(best, norm2(resid(x)));
  }
  return best;
}

}  // namespace

double first_stage_infeasibility(const MultistageProblem& problem) {
  const Outcome o = problem.first_stage_outcome();
  return node_infeasibility(problem.stage(1), o.A, o.b);
}

SubtreeProgram build_subtree_program(const StageQuery& query, bool root_rows, const DenseVector& root_extra_lin) {
  if (!root_extra_lin.empty() && root_extra_lin.size() != query.stage->n) {
    fail(ErrorKind::kDimension, "subtree program: extra linear term has the wrong length");
  }
  Builder b{query.problem, {}};
  SubtreeProgram out;
  const MultistageProblem* P = query.has_downstream() ? query.problem : nullptr;
  b.P = P;
  out.root_block = b.add_node(query.t, *query.stage, *query.outcome, query.outcome_index, query.objective, 1.0, -1,
                              query.u, root_rows, root_extra_lin, &out.root_row, &out.root_epigraph_block);
  out.program = std::move(b.prog);
  return out;
}

DenseVector range_projected_dual(const DenseMatrix& A, const DenseVector& y) {
  const std::size_t m = A.rows();
  if (m == 0) return {};
  if (y.size() != m) fail(ErrorKind::kDimension, "range_projected_dual: y has wrong dimension");
  const Svd svd = jacobi_svd(A);
  const double cutoff = 1e-12 * (svd.s.empty() ? 0.0 : svd.s.front());
  DenseVector out(m, 0.0);
  for (std::size_t r = 0; r < svd.s.size(); ++r) {
    if (svd.s[r] <= cutoff) continue;
    double c = 0.0;
    for (std::size_t i = 0; i < m; ++i) c += svd.u(i, r) * y[i];
    for (std::size_t i = 0; i < m; ++i) out[i] += c * svd.u(i, r);
  }
  return out;
}

DenseVector minimal_norm_dual(const DenseMatrix& A, const Cone& cone, const DenseVector& y_raw,
                              const DenseVector& slack) {
  const std::size_t m = A.rows();
  if (m == 0) return {};
  require_same_dim(y_raw, slack, "minimal_norm_dual");
  constexpr double kActive = 1e-7;

  const Svd svd = jacobi_svd(A);
  const double cutoff = 1e-12 * (svd.s.empty() ? 0.0 : svd.s.front());
  const DenseVector target = matvec_transpose(A, y_raw);
  // Projection onto {y : A^T y = target}.
  auto affine = [&](const DenseVector& y) {
    const DenseVector w = sub(matvec_transpose(A, y), target);
    DenseVector out = y;
    for (std::size_t r = 0; r < svd.s.size(); ++r) {
      if (svd.s[r] <= cutoff) continue;
      double c = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) c += svd.v(j, r) * w[j];
      c /= svd.s[r];
      for (std::size_t i = 0; i < m; ++i) out[i] -= c * svd.u(i, r);
    }
    return out;
  };
  // Projection onto K* intersected with the complementarity set of the slack.
  auto conic = [&](const DenseVector& y) -> DenseVector {
    switch (cone.kind) {
      case ConeKind::kZero:
        return y;
      case ConeKind::kNonnegOrthant: {
        DenseVector out(m);
        for (std::size_t i = 0; i < m; ++i) out[i] = slack[i] > kActive ? 0.0 : std::max(0.0, y[i]);
        return out;
      }
      case ConeKind::kSecondOrder: {
        const double sn = norm2(slack);
        if (sn <= kActive) return project_dual_cone(cone, y);
        double xn = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) xn += slack[i] * slack[i];
        xn = std::sqrt(xn);
        if (slack[m - 1] - xn > kActive) return DenseVector(m, 0.0);
        DenseVector ray(m);
        for (std::size_t i = 0; i + 1 < m; ++i) ray[i] = -slack[i];
        ray[m - 1] = slack[m - 1];
        const double lam = std::max(0.0, dot(y, ray)) / dot(ray, ray);
        ray = scale(lam, ray);
        return ray;
      }
    }
    return y;
  };

  // Dykstra's alternating projections starting from the origin.
  DenseVector x(m, 0.0), p(m, 0.0), q(m, 0.0);
  for (int it = 0; it < 200000; ++it) {
    const DenseVector y1 = affine(add(x, p));
    p = sub(add(x, p), y1);
    const DenseVector x_new = conic(add(y1, q));
    q = sub(add(y1, q), x_new);
    const double change = norm2(sub(x_new, x));
    x = x_new;
    if (change <= 1e-15 * (1.0 + norm2(x)) && norm2(sub(x, y1)) <= 1e-12 * (1.0 + norm2(x))) break;
  }
  return x;
}

SaddleSolution reference_saddle_solve(const StageQuery& query, const ReferenceOptions& options) {
  const SubtreeProgram sp = build_subtree_program(query, true);
  ConicSolution cs;
  try {
    cs = solve_conic_program(sp.program, ConicSolveOptions{options.max_iter, options.tol});
  } catch (const Error& e) {
    const DenseVector rhs = query.rhs();
    if (node_infeasibility(*query.stage, query.outcome->A, rhs) > 1e-7) {
      fail(ErrorKind::kInfeasible, "stage " + std::to_string(query.t) + ", outcome " +
                                       std::to_string(query.outcome_index) + ": no x in X satisfies the constraints");
    }
    throw;
  }
  SaddleSolution s;
  s.x = block_slice(sp.program, cs.x, sp.root_block);
  const std::size_t m = query.stage->m;
  s.y_raw.assign(cs.y.begin() + static_cast<std::ptrdiff_t>(sp.root_row),
                 cs.y.begin() + static_cast<std::ptrdiff_t>(sp.root_row + m));
  if (m == 0) s.y_raw.clear();
  const DenseVector slack = m > 0 ? sub(matvec(query.outcome->A, s.x), query.rhs()) : DenseVector{};
  s.y = minimal_norm_dual(query.outcome->A, query.stage->cone, s.y_raw, slack);
  s.y_range = range_projected_dual(query.outcome->A, s.y_raw);
  s.value = cs.primal_objective;
  s.residual = std::max({cs.primal_residual, cs.dual_residual, std::abs(cs.primal_objective - cs.dual_objective)});
  return s;
}

double lagrangian_value(const StageQuery& query, const DenseVector& y_bar, const ReferenceOptions& options) {
  DenseVector extra(query.stage->n, 0.0);
  if (query.stage->m > 0) {
    extra = matvec_transpose(query.outcome->A, y_bar);
    extra = scale(-1.0, extra);
  }
  const SubtreeProgram sp = build_subtree_program(query, false, extra);
  return solve_conic_program(sp.program, ConicSolveOptions{options.max_iter, options.tol}).primal_objective;
}

double stage_objective_value(const StageQuery& query, const DenseVector& x, const ReferenceOptions& options) {
  double v = objective_value_and_subgradient(query.objective, x).value;
  if (query.has_downstream()) {
    v += exact_value_function(*query.problem, query.t + 1, x, child_parent(*query.problem, query.t, query.outcome_index),
                              options)
             .value;
  }
  return v;
}

ValueResult exact_value_function(const MultistageProblem& problem, int t, const DenseVector& u,
                                 std::optional<std::size_t> parent, const ReferenceOptions& options) {
  if (t < 2 || t > problem.T) fail(ErrorKind::kUsage, "exact_value_function: stage must be in [2, T]");
  const auto& support = problem.distribution.support(t, parent);
  ValueResult r;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const StageQuery q = stage_query(problem, t, support[i], i, u);
    r.per_outcome.push_back(reference_saddle_solve(q, options));
    r.probabilities.push_back(support[i].prob);
    r.value += support[i].prob * r.per_outcome.back().value;
  }
  return r;
}

ExactValueFn::ExactValueFn(const MultistageProblem& problem, int t, std::optional<std::size_t> parent,
                           ReferenceOptions options)
    : problem_(&problem), t_(t), parent_(parent), options_(options) {
  if (t < 2 || t > problem.T) fail(ErrorKind::kUsage, "ExactValueFn: stage must be in [2, T]");
}

const ValueResult& ExactValueFn::evaluate(const DenseVector& u) {
  std::vector<std::int64_t> key(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) key[i] = std::llround(u[i] / kQuantum);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(std::move(key), exact_value_function(*problem_, t_, u, parent_, options_)).first->second;
}

double ExactValueFn::operator()(const DenseVector& u) { return evaluate(u).value; }

double eval_gap_star(const StageQuery& query, const DenseVector& x_bar, const DenseVector& y_bar,
                     const DenseVector& y_star, const ReferenceOptions& options) {
  const DenseVector rhs = query.rhs();
  double v = stage_objective_value(query, x_bar, options) - lagrangian_value(query, y_bar, options);
  if (query.stage->m > 0) {
    v += dot(y_star, sub(rhs, matvec(query.outcome->A, x_bar))) - dot(y_bar, rhs);
  }
  return v;
}

GapReport eval_gap_delta(const StageQuery& query, const DenseVector& x_bar, const DenseVector& y_bar,
                         const DenseVector& delta, double dual_radius, const ReferenceOptions& options) {
  GapReport g;
  const std::size_t m = query.stage->m;
  if (delta.size() != m || y_bar.size() != m) fail(ErrorKind::kDimension, "eval_gap_delta: dual dimension mismatch");
  const SaddleSolution ref = reference_saddle_solve(query, options);
  g.y_star_used = ref.y;
  const DenseVector rhs = query.rhs();
  const double phi = stage_objective_value(query, x_bar, options);
  const double lag = lagrangian_value(query, y_bar, options);
  g.gap_star = phi - lag;
  g.gap_delta = phi - lag;
  g.delta_norm = norm2(delta);
  if (m > 0) {
    const DenseVector ax = matvec(query.outcome->A, x_bar);
    const DenseVector r = sub(rhs, ax);
    g.gap_star += dot(ref.y, r) - dot(y_bar, rhs);
    const DenseVector shifted = add(r, delta);
    g.gap_delta += 2.0 * dual_radius * norm2(project_dual_cone(query.stage->cone, shifted)) - dot(y_bar, rhs);
    DenseVector w = sub(ax, rhs);
    axpy(-1.0, delta, w);
    g.feasibility_residual = distance_to_cone(query.stage->cone, w);
  }
  return g;
}

EpsSubgradientCheck check_eps_subgradient(const std::function<double(const DenseVector&)>& v, const DenseVector& u,
                                          const DenseVector& g, double eps, const std::vector<DenseVector>& grid) {
  require_same_dim(u, g, "check_eps_subgradient");
  EpsSubgradientCheck out;
  out.worst_violation = -std::numeric_limits<double>::infinity();
  const double vu = v(u);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require_same_dim(u, grid[i], "check_eps_subgradient");
    const double viol = vu + dot(g, sub(grid[i], u)) - eps - v(grid[i]);
    if (viol > out.worst_violation) {
      out.worst_violation = viol;
      out.worst_index = i;
    }
  }
  if (grid.empty()) out.worst_violation = 0.0;
  out.pass = out.worst_violation <= 1e-8;
  return out;
}

EpsSubgradientCheck check_eps_subgradient(ExactValueFn& v, const DenseVector& u, const DenseVector& g, double eps,
                                          const std::vector<DenseVector>& grid) {
  return check_eps_subgradient([&v](const DenseVector& x) { return v(x); }, u, g, eps, grid);
}

namespace {

double need(double value, const char* name, ScheduleVariant variant) {
  if (std::isnan(value)) {
    fail(ErrorKind::kParameter, std::string("theoretical_bound: constant ") + name + " is required for " +
                                    to_string(variant));
  }
  return value;
}

}  // namespace

TheoreticalBound theoretical_bound(ScheduleVariant variant, const BoundConstants& c, std::size_t N_count,
                                   double eps_bar) {
  if (N_count < 1) fail(ErrorKind::kParameter, "theoretical_bound: N must be >= 1");
  if (!(eps_bar >= 0.0)) fail(ErrorKind::kParameter, "theoretical_bound: eps_bar must be nonnegative");
  double A = need(c.norm_A, "norm_A", variant);
  if (A == 0.0) A = 1.0;  // same convention as the schedules
  const double al = need(c.alpha, "alpha", variant);
  const double M = need(c.M, "M", variant);
  const double r = need(c.dual_dist, "dual_dist", variant);
  const double y0 = need(c.y0_norm, "y0_norm", variant);
  const double N = static_cast<double>(N_count);
  const double e = eps_bar;
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0), s6 = std::sqrt(6.0);
  TheoreticalBound b;
  switch (variant) {
    case ScheduleVariant::kGenAggressive: {
      const double O2 = need(c.Omega_sq, "Omega_sq", variant), O = std::sqrt(O2);
      const double tail = 4.0 * s3 * M * O / std::sqrt(al * N) + e;
      b.gap_star_bound = s2 * A * (2.0 * O2 + r * r) / (std::sqrt(al) * N) + tail;
      b.gap_delta_bound = s2 * A * (2.0 * O2 + y0 * y0) / (std::sqrt(al) * N) + tail;
      b.delta_norm_bound = (2.0 * std::sqrt(2.0 * al) * A * r + 4.0 * O * A) / (al * N) +
                           2.0 * M * (s6 * A + std::sqrt(3.0 * al)) / (al * std::sqrt(N)) +
                           std::sqrt(3.0 * A * e / (N * std::sqrt(al)));
      b.dual_sq_bound = r * r + 4.0 * O2 + 2.0 * std::sqrt(6.0 * N) * M * O / A + 3.0 * al * (N + 1.0) * M * M / (A * A) +
                        (N + 1.0) * e / 2.0;
      break;
    }
    case ScheduleVariant::kGenBoundedDual: {
      const double O2 = need(c.Omega_sq, "Omega_sq", variant), O = std::sqrt(O2);
      const double head = 2.0 * s2 * A * O2 / (N * std::sqrt(al * N));
      b.gap_star_bound = head + (A * r * r + 4.0 * s3 * M * O) / std::sqrt(al * N) + e;
      b.gap_delta_bound = head + (A * y0 * y0 + 4.0 * s3 * M * O) / std::sqrt(al * N) + e;
      b.delta_norm_bound = (2.0 * s2 * A * r + 4.0 * std::sqrt(M * A * O)) / std::sqrt(al * N) + 2.0 * s6 * A * M / al +
                           4.0 * O2 * A * A / (N * al) + std::sqrt(3.0 * A * e / std::sqrt(al * N));
      b.dual_sq_bound = r * r + 2.0 * O2 / N + s6 * (1.0 + al) * M * O / A + std::sqrt(al * N) * e / (s2 * A);
      break;
    }
    case ScheduleVariant::kStrongAggressive: {
      const double mu = need(c.mu, "mu", variant);
      b.gap_star_bound = 8.0 * A * A * r * r / (al * mu * (N + 1.0) * N) + 24.0 * M * M / (al * mu * (N + 1.0)) + e;
      b.gap_delta_bound = 8.0 * A * A * y0 * y0 / (al * mu * (N + 1.0) * N) + 24.0 * M * M / (al * mu * (N + 1.0)) + e;
      b.delta_norm_bound = 16.0 * A * A * r / (N * (N + 1.0) * al * mu) + 8.0 * s6 * A * M / (al * mu * std::pow(N, 1.5)) +
                           4.0 * A * std::sqrt(e) / ((N + 1.0) * std::sqrt(al * mu));
      b.dual_sq_bound = r * r + 12.0 * M * M * al * N / (A * A) + N * (N + 1.0) * al * mu * e / (2.0 * A * A);
      break;
    }
    case ScheduleVariant::kStrongBoundedDual: {
      const double mu = need(c.mu, "mu", variant);
      b.gap_star_bound = (8.0 * A * A * r * r + 24.0 * M * M) / (al * mu * (N + 1.0)) + e;
      b.gap_delta_bound = (8.0 * A * A * y0 * y0 + 24.0 * M * M) / (al * mu * (N + 1.0)) + e;
      b.delta_norm_bound = 16.0 * A * A * r / ((N + 1.0) * al * mu + 16.0 * s3 * A * M) +
                           4.0 * A * std::sqrt(e) / std::sqrt((N + 1.0) * al * mu);
      b.dual_sq_bound = r * r + 24.0 * M * M * al / (A * A) + (N + 1.0) * al * mu * e / (2.0 * A * A);
      break;
    }
  }
  return b;
}

}  // namespace dsa
