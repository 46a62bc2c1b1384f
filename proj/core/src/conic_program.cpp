#include "dsa/conic_program.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <string>

#include "dsa/errors.hpp"

namespace dsa {

std::size_t ConicProgram::add_block(const FeasibleSet& set, DenseVector lin, double quad, DenseVector center) {
  const std::size_t d = set.dimension();
  if (lin.size() != d) fail(ErrorKind::kDimension, "conic program: linear term has the wrong length");
  if (center.empty()) center.assign(d, 0.0);
  if (center.size() != d) fail(ErrorKind::kDimension, "conic program: center has the wrong length");
  if (quad < 0.0) fail(ErrorKind::kParameter, "conic program: negative quadratic weight");
  blocks_.push_back(Block{set, std::move(lin), quad, std::move(center), num_vars_});
  num_vars_ += d;
  return blocks_.size() - 1;
}

std::size_t ConicProgram::add_cone(const Cone& cone, const DenseVector& q) {
  if (q.size() != cone.dim) fail(ErrorKind::kDimension, "conic program: rhs does not match the cone");
  const std::size_t first = q_.size();
  cones_.push_back(ConeBlock{cone, first});
  q_.insert(q_.end(), q.begin(), q.end());
  return first;
}

void ConicProgram::add_entry(std::size_t row, std::size_t col, double value) {
  if (row >= q_.size() || col >= num_vars_) fail(ErrorKind::kDimension, "conic program: entry out of range");
  if (value != 0.0) entries_.push_back(Entry{row, col, value});
}

DenseVector ConicProgram::multiply(const DenseVector& x) const {
  DenseVector out(q_.size(), 0.0);
  for (const Entry& e : entries_) out[e.row] += e.value * x[e.col];
  return out;
}

DenseVector ConicProgram::multiply_transpose(const DenseVector& y) const {
  DenseVector out(num_vars_, 0.0);
  for (const Entry& e : entries_) out[e.col] += e.value * y[e.row];
  return out;
}

namespace {

DenseVector slice(const DenseVector& v, std::size_t off, std::size_t len) {
  return DenseVector(v.begin() + static_cast<std::ptrdiff_t>(off), v.begin() + static_cast<std::ptrdiff_t>(off + len));
}

void put(DenseVector& dst, std::size_t off, const DenseVector& src) {
  std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(off));
}

double distance(const DenseVector& a, const DenseVector& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

}  // namespace

double ConicProgram::objective(const DenseVector& x) const {
  double v = 0.0;
  for (const Block& b : blocks_) {
    for (std::size_t j = 0; j < b.set.dimension(); ++j) {
      const double xj = x[b.offset + j];
      v += b.lin[j] * xj;
      if (b.quad > 0.0) v += 0.5 * b.quad * (xj - b.center[j]) * (xj - b.center[j]);
    }
  }
  return v;
}

DenseVector ConicProgram::objective_gradient(const DenseVector& x) const {
  DenseVector g(num_vars_, 0.0);
  for (const Block& b : blocks_) {
    for (std::size_t j = 0; j < b.set.dimension(); ++j) {
      g[b.offset + j] = b.lin[j] + b.quad * (x[b.offset + j] - b.center[j]);
    }
  }
  return g;
}

DenseVector ConicProgram::lagrangian_minimizer(const DenseVector& y) const {
  const DenseVector mty = y.empty() ? DenseVector(num_vars_, 0.0) : multiply_transpose(y);
  DenseVector x(num_vars_);
  for (const Block& b : blocks_) {
    const std::size_t d = b.set.dimension();
    DenseVector g(d);
    for (std::size_t j = 0; j < d; ++j) g[j] = b.lin[j] - mty[b.offset + j];
    if (b.quad > 0.0) {
      DenseVector target(d);
      for (std::size_t j = 0; j < d; ++j) target[j] = b.center[j] - g[j] / b.quad;
      put(x, b.offset, project_onto_set(b.set, target));
    } else {
      put(x, b.offset, linear_minimizer(b.set, g));
    }
  }
  return x;
}

double ConicProgram::dual_objective(const DenseVector& y) const {
  const DenseVector x = lagrangian_minimizer(y);
  return objective(x) - dot(y, multiply(x)) + dot(y, q_);
}

double ConicProgram::primal_residual(const DenseVector& x) const {
  const DenseVector mx = multiply(x);
  double sq = 0.0;
  for (const ConeBlock& c : cones_) {
    DenseVector w(c.cone.dim);
    for (std::size_t i = 0; i < c.cone.dim; ++i) w[i] = mx[c.offset + i] - q_[c.offset + i];
    const double d = distance_to_cone(c.cone, w);
    sq += d * d;
  }
  return std::sqrt(sq);
}

double ConicProgram::dual_residual(const DenseVector& x, const DenseVector& y) const {
  const DenseVector g = sub(objective_gradient(x), multiply_transpose(y));
  return distance(x, project_primal(sub(x, g)));
}

DenseVector ConicProgram::project_primal(const DenseVector& z) const {
  DenseVector out(num_vars_);
  for (const Block& b : blocks_) put(out, b.offset, project_onto_set(b.set, slice(z, b.offset, b.set.dimension())));
  return out;
}

DenseVector ConicProgram::project_dual(const DenseVector& y) const {
  DenseVector out(q_.size());
  for (const ConeBlock& c : cones_) put(out, c.offset, project_dual_cone(c.cone, slice(y, c.offset, c.cone.dim)));
  return out;
}

DenseVector ConicProgram::prox_step(const DenseVector& z, const DenseVector& g, double step) const {
  DenseVector out(num_vars_);
  for (const Block& b : blocks_) {
    const std::size_t d = b.set.dimension();
    DenseVector t(d);
    const double denom = 1.0 + step * b.quad;
    for (std::size_t j = 0; j < d; ++j) {
      t[j] = (z[b.offset + j] - step * (b.lin[j] + g[b.offset + j]) + step * b.quad * b.center[j]) / denom;
    }
    put(out, b.offset, project_onto_set(b.set, t));
  }
  return out;
}

double ConicProgram::operator_norm_estimate() const {
  if (entries_.empty()) return 0.0;
  DenseVector v(num_vars_);
  for (std::size_t j = 0; j < num_vars_; ++j) v[j] = 1.0 + 0.1 * static_cast<double>(j % 7);
  double est = 0.0;
  for (int it = 0; it < 2000; ++it) {
    const double nv = std::sqrt(dot(v, v));
    if (nv == 0.0) break;
    v = scale(1.0 / nv, v);
    DenseVector w = multiply_transpose(multiply(v));
    const double next = std::sqrt(std::sqrt(dot(w, w)));
    const bool done = it > 50 && std::abs(next - est) <= 1e-13 * next;
    est = next;
    v = std::move(w);
    if (done) break;
  }
  double fro = 0.0;
  for (const Entry& e : entries_) fro += e.value * e.value;
  return std::min(std::sqrt(fro), est * 1.02);
}

DenseVector ConicProgram::initial_point() const {
  DenseVector x(num_vars_);
  for (const Block& b : blocks_) {
    const std::size_t d = b.set.dimension();
    put(x, b.offset, project_onto_set(b.set, b.quad > 0.0 ? b.center : DenseVector(d, 0.0)));
  }
  return x;
}

namespace {

struct Kkt {
  double primal_res = 0.0, dual_res = 0.0, gap = 0.0, pobj = 0.0, dobj = 0.0;
  double value() const { return std::sqrt(primal_res * primal_res + dual_res * dual_res + gap * gap); }
};

Kkt kkt(const ConicProgram& p, const DenseVector& x, const DenseVector& y) {
  Kkt k;
  k.primal_res = p.primal_residual(x);
  k.dual_res = p.dual_residual(x, y);
  k.pobj = p.objective(x);
  k.dobj = p.dual_objective(y);
  k.gap = std::abs(k.pobj - k.dobj);
  return k;
}

bool converged(const Kkt& k, double tol) {
  const double s = 1.0 + std::abs(k.pobj) + std::abs(k.dobj);
  return k.primal_res <= tol * s && k.dual_res <= tol * s && k.gap <= tol * s;
}

}  // namespace

ConicSolution solve_conic_program(const ConicProgram& p, const ConicSolveOptions& opt) {
  ConicSolution sol;
  const std::size_t nr = p.num_rows();
  const double norm = p.operator_norm_estimate();
  if (norm == 0.0) {
    sol.y.assign(nr, 0.0);
    sol.x = p.lagrangian_minimizer(sol.y);
    sol.primal_objective = p.objective(sol.x);
    sol.dual_objective = p.dual_objective(sol.y);
    sol.primal_residual = p.primal_residual(sol.x);
    sol.converged = true;
    if (sol.primal_residual > 1e-12) fail(ErrorKind::kInfeasible, "conic program: constant constraints are violated");
    return sol;
  }

  const double eta = 0.95 / norm;
  DenseVector x = p.initial_point();
  DenseVector y(nr, 0.0);
  const DenseVector& q = p.rhs();

  double omega = 1.0;
  {
    const DenseVector g0 = p.objective_gradient(x);
    const double gn = std::sqrt(dot(g0, g0));
    const double qn = std::sqrt(dot(q, q));
    if (gn > 1e-10 && qn > 1e-10) omega = std::clamp(gn / qn, 1e-4, 1e4);
  }

  DenseVector x_epoch = x, y_epoch = y;
  double kkt_epoch = kkt(p, x, y).value();
  double kkt_prev_candidate = kkt_epoch;
  DenseVector xa = x, ya = y;
  std::size_t epoch_len = 0, total = 0;
  std::deque<double> trace;
  constexpr std::size_t kCheckEvery = 64;

  DenseVector neg(p.num_vars()), ext(p.num_vars()), z(nr);
  while (total < opt.max_iter) {
    const double tau = eta / omega;
    const double sigma = eta * omega;
    for (std::size_t inner = 0; inner < kCheckEvery; ++inner) {
      const DenseVector mty = p.multiply_transpose(y);
      for (std::size_t j = 0; j < mty.size(); ++j) neg[j] = -mty[j];
      DenseVector x_new = p.prox_step(x, neg, tau);
      for (std::size_t j = 0; j < x.size(); ++j) ext[j] = 2.0 * x_new[j] - x[j];
      const DenseVector mext = p.multiply(ext);
      for (std::size_t i = 0; i < nr; ++i) z[i] = y[i] - sigma * (mext[i] - q[i]);
      x = std::move(x_new);
      y = p.project_dual(z);
      ++epoch_len;
      ++total;
      const double r = 1.0 / static_cast<double>(epoch_len);
      for (std::size_t j = 0; j < x.size(); ++j) xa[j] += r * (x[j] - xa[j]);
      for (std::size_t i = 0; i < nr; ++i) ya[i] += r * (y[i] - ya[i]);
    }

    const Kkt k_cur = kkt(p, x, y);
    const Kkt k_avg = kkt(p, xa, ya);
    const bool use_avg = k_avg.value() < k_cur.value();
    const Kkt& kc = use_avg ? k_avg : k_cur;
    trace.push_back(kc.value());
    if (trace.size() > 8) trace.pop_front();

    if (converged(kc, opt.tol)) {
      sol.x = use_avg ? xa : x;
      sol.y = use_avg ? ya : y;
      sol.primal_objective = kc.pobj;
      sol.dual_objective = kc.dobj;
      sol.primal_residual = kc.primal_res;
      sol.dual_residual = kc.dual_res;
      sol.iterations = total;
      sol.converged = true;
      return sol;
    }

    const double kv = kc.value();
    const bool restart = kv <= 0.2 * kkt_epoch || (kv <= 0.8 * kkt_epoch && kv > kkt_prev_candidate) ||
                         static_cast<double>(epoch_len) >= 0.36 * static_cast<double>(total);
    kkt_prev_candidate = kv;
    if (restart) {
      if (use_avg) {
        x = xa;
        y = ya;
      }
      const double dx = distance(x, x_epoch);
      const double dy = distance(y, y_epoch);
      if (dx > 1e-10 && dy > 1e-10) omega = std::exp(0.5 * std::log(dy / dx) + 0.5 * std::log(omega));
      omega = std::clamp(omega, 1e-6, 1e6);
      x_epoch = x;
      y_epoch = y;
      xa = x;
      ya = y;
      kkt_epoch = kv;
      kkt_prev_candidate = kv;
      epoch_len = 0;
    }
  }

  std::string msg = "conic program: no convergence in " + std::to_string(total) + " iterations; KKT trace";
  for (double v : trace) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " %.3e", v);
    msg += buf;
  }
  fail(ErrorKind::kNonConvergence, msg);
}

}  // namespace dsa
