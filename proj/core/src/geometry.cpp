#include "dsa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dsa/errors.hpp"

namespace dsa {

FeasibleSet FeasibleSet::box(DenseVector lower, DenseVector upper) {
  if (lower.size() != upper.size()) fail(ErrorKind::kDimension, "box bounds differ in length");
  if (lower.empty()) fail(ErrorKind::kDimension, "box must have dimension >= 1");
  if (!all_finite(lower) || !all_finite(upper)) fail(ErrorKind::kValidation, "box bounds must be finite");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (lower[i] > upper[i]) fail(ErrorKind::kValidation, "box lower bound exceeds upper bound");
  FeasibleSet s;
  s.kind = SetKind::kBox;
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  return s;
}

FeasibleSet FeasibleSet::simplex(std::size_t dim, double radius) {
  if (dim == 0) fail(ErrorKind::kDimension, "simplex must have dimension >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::kValidation, "simplex radius must be positive");
  FeasibleSet s;
  s.kind = SetKind::kSimplex;
  s.dim = dim;
  s.radius = radius;
  return s;
}

FeasibleSet FeasibleSet::ball(DenseVector center, double radius) {
  if (center.empty()) fail(ErrorKind::kDimension, "ball must have dimension >= 1");
  if (!all_finite(center)) fail(ErrorKind::kValidation, "ball center must be finite");
  if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::kValidation, "ball radius must be positive");
  FeasibleSet s;
  s.kind = SetKind::kBall;
  s.center = std::move(center);
  s.radius = radius;
  return s;
}

std::size_t FeasibleSet::dimension() const {
  switch (kind) {
    case SetKind::kBox: return lower.size();
    case SetKind::kSimplex: return dim;
    case SetKind::kBall: return center.size();
  }
  return 0;
}

std::string to_string(SetKind kind) {
  switch (kind) {
    case SetKind::kBox: return "box";
    case SetKind::kSimplex: return "simplex";
    case SetKind::kBall: return "ball";
  }
  return "?";
}

std::string to_string(Dgf dgf) { return dgf == Dgf::kEuclidean ? "euclidean" : "entropy"; }

std::string to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::kZero: return "zero";
    case ConeKind::kNonnegOrthant: return "nonneg";
    case ConeKind::kSecondOrder: return "soc";
  }
  return "?";
}

double set_diameter_omega_sq(const FeasibleSet& set, Dgf dgf) {
  if (dgf == Dgf::kEuclidean) {
    switch (set.kind) {
      case SetKind::kBox: {
        double acc = 0.0;
        for (std::size_t i = 0; i < set.lower.size(); ++i) {
          const double w = set.upper[i] - set.lower[i];
          acc += w * w;
        }
        return 0.5 * acc;
      }
      case SetKind::kSimplex:
        // Two distinct vertices are sqrt(2) * radius apart.
        return set.dim == 1 ? 0.0 : set.radius * set.radius;
      case SetKind::kBall: return 2.0 * set.radius * set.radius;
    }
  }
  if (set.kind != SetKind::kSimplex) {
    fail(ErrorKind::kConfiguration, "entropy dgf is only supported on the simplex");
  }
  // KL divergence from the uniform center to a vertex, scaled by the radius.
  return set.radius * std::log(static_cast<double>(set.dim));
}

ProxSetup make_prox_setup(const FeasibleSet& set, Dgf dgf) {
  ProxSetup s;
  s.set = set;
  s.dgf = dgf;
  s.diameter_sq_omega = set_diameter_omega_sq(set, dgf);
  const std::size_t n = set.dimension();
  switch (set.kind) {
    case SetKind::kBox:
      s.prox_center.resize(n);
      for (std::size_t i = 0; i < n; ++i) s.prox_center[i] = 0.5 * (set.lower[i] + set.upper[i]);
      break;
    case SetKind::kSimplex: s.prox_center.assign(n, set.radius / static_cast<double>(n)); break;
    case SetKind::kBall: s.prox_center = set.center; break;
  }
  // Pinsker on a simplex of radius r gives modulus 1/r in the 1-norm.
  s.modulus_alpha = dgf == Dgf::kEuclidean ? 1.0 : 1.0 / set.radius;
  return s;
}

bool set_contains(const FeasibleSet& set, const DenseVector& x, double tol) {
  if (x.size() != set.dimension() || !all_finite(x)) return false;
  switch (set.kind) {
    case SetKind::kBox:
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < set.lower[i] - tol || x[i] > set.upper[i] + tol) return false;
      return true;
    case SetKind::kSimplex: {
      double sum = 0.0;
      for (double v : x) {
        if (v < -tol) return false;
        sum += v;
      }
      return std::abs(sum - set.radius) <= tol * std::max(1.0, set.radius) * static_cast<double>(x.size());
    }
    case SetKind::kBall:
      return norm2(sub(x, set.center)) <= set.radius + tol * std::max(1.0, set.radius);
  }
  return false;
}

namespace {

DenseVector project_simplex(const DenseVector& z, double radius) {
  DenseVector u = z;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - radius) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  DenseVector x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = std::max(z[i] - theta, 0.0);
  return x;
}

void require_member(const ProxSetup& setup, const DenseVector& p) {
  if (p.size() != setup.set.dimension()) fail(ErrorKind::kDimension, "prox: point dimension mismatch");
  if (!set_contains(setup.set, p, 1e-8)) fail(ErrorKind::kDomain, "prox: point lies outside the feasible set");
}

}  // namespace

DenseVector project_onto_set(const FeasibleSet& set, const DenseVector& z) {
  if (z.size() != set.dimension()) fail(ErrorKind::kDimension, "projection: dimension mismatch");
  switch (set.kind) {
    case SetKind::kBox: {
      DenseVector x(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) x[i] = std::clamp(z[i], set.lower[i], set.upper[i]);
      return x;
    }
    case SetKind::kSimplex: return project_simplex(z, set.radius);
    case SetKind::kBall: {
      DenseVector d = sub(z, set.center);
      const double r = norm2(d);
      if (r <= set.radius) return z;
      DenseVector x = set.center;
      axpy(set.radius / r, d, x);
      return x;
    }
  }
  return z;
}

double max_distance_from(const FeasibleSet& set, const DenseVector& c) {
  if (c.size() != set.dimension()) fail(ErrorKind::kDimension, "max_distance_from: dimension mismatch");
  switch (set.kind) {
    case SetKind::kBox: {
      double acc = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        const double w = std::max(std::abs(c[i] - set.lower[i]), std::abs(set.upper[i] - c[i]));
        acc += w * w;
      }
      return std::sqrt(acc);
    }
    case SetKind::kSimplex: {
      // A convex function peaks at a vertex.
      double best = 0.0;
      for (std::size_t v = 0; v < c.size(); ++v) {
        DenseVector e(c.size(), 0.0);
        e[v] = set.radius;
        best = std::max(best, norm2(sub(e, c)));
      }
      return best;
    }
    case SetKind::kBall: return norm2(sub(c, set.center)) + set.radius;
  }
  return 0.0;
}

DenseVector linear_minimizer(const FeasibleSet& set, const DenseVector& g) {
  if (g.size() != set.dimension()) fail(ErrorKind::kDimension, "linear_minimizer: dimension mismatch");
  switch (set.kind) {
    case SetKind::kBox: {
      DenseVector x(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] > 0.0) x[i] = set.lower[i];
        else if (g[i] < 0.0) x[i] = set.upper[i];
        else x[i] = 0.5 * (set.lower[i] + set.upper[i]);
      }
      return x;
    }
    case SetKind::kSimplex: {
      const auto it = std::min_element(g.begin(), g.end());
      DenseVector x(g.size(), 0.0);
      x[static_cast<std::size_t>(it - g.begin())] = set.radius;
      return x;
    }
    case SetKind::kBall: {
      const double r = norm2(g);
      if (r == 0.0) return set.center;
      DenseVector x = set.center;
      axpy(-set.radius / r, g, x);
      return x;
    }
  }
  return {};
}

double prox_distance(const ProxSetup& setup, const DenseVector& p, const DenseVector& x) {
  require_same_dim(p, x, "prox_distance");
  if (setup.dgf == Dgf::kEuclidean) {
    const double d = norm2(sub(x, p));
    return 0.5 * d * d;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) {
      if (!(p[i] > 0.0)) return std::numeric_limits<double>::infinity();
      acc += x[i] * std::log(x[i] / p[i]);
    }
    acc += p[i] - x[i];
  }
  return acc;
}

DenseVector prox_map_solve(const ProxSetup& setup, const DenseVector& p, const DenseVector& g, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorKind::kParameter, "prox: tau must be positive");
  require_same_dim(p, g, "prox_map_solve");
  require_member(setup, p);
  if (setup.dgf == Dgf::kEuclidean) {
    DenseVector z = p;
    axpy(-1.0 / tau, g, z);
    return project_onto_set(setup.set, z);
  }
  for (double v : p)
    if (!(v > 0.0)) fail(ErrorKind::kDomain, "entropy prox: zero coordinate in the prox point");
  // Multiplicative weights in log space.
  DenseVector logits(p.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    logits[i] = std::log(p[i]) - g[i] / tau;
    top = std::max(top, logits[i]);
  }
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    total += l;
  }
  DenseVector x(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    x[i] = std::max(setup.set.radius * logits[i] / total, std::numeric_limits<double>::min());
  }
  return x;
}

DenseVector prox_map_solve_quadratic(const ProxSetup& setup, const DenseVector& p, const DenseVector& g,
                                     double tau, double mu, const DenseVector& center) {
  if (mu == 0.0) return prox_map_solve(setup, p, g, tau);
  if (setup.dgf != Dgf::kEuclidean) fail(ErrorKind::kConfiguration, "quadratic prox requires the euclidean dgf");
  if (!(mu > 0.0) || !(tau >= 0.0)) fail(ErrorKind::kParameter, "quadratic prox: need mu > 0 and tau >= 0");
  require_same_dim(p, g, "prox_map_solve_quadratic");
  require_member(setup, p);
  const DenseVector& c = center.empty() ? setup.prox_center : center;
  require_same_dim(p, c, "prox_map_solve_quadratic");
  const double total = tau + mu;
  DenseVector z(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) z[i] = (tau * p[i] + mu * c[i] - g[i]) / total;
  return project_onto_set(setup.set, z);
}

namespace {

void require_cone_dim(const Cone& cone, const DenseVector& y) {
  if (y.size() != cone.dim) {
    fail(ErrorKind::kDimension, "cone projection: expected dim " + std::to_string(cone.dim) + ", got " +
                                    std::to_string(y.size()));
  }
}

DenseVector project_soc(const DenseVector& y) {
  if (y.empty()) return y;
  const std::size_t last = y.size() - 1;
  const double t = y[last];
  double xbar = 0.0;
  for (std::size_t i = 0; i < last; ++i) xbar += y[i] * y[i];
  xbar = std::sqrt(xbar);
  if (xbar <= t) return y;
  if (xbar <= -t) return DenseVector(y.size(), 0.0);
  const double a = 0.5 * (xbar + t);
  DenseVector out(y.size());
  for (std::size_t i = 0; i < last; ++i) out[i] = a * y[i] / xbar;
  out[last] = a;
  return out;
}

}  // namespace

DenseVector project_dual_cone(const Cone& cone, const DenseVector& y) {
  require_cone_dim(cone, y);
  switch (cone.kind) {
    case ConeKind::kZero: return y;
    case ConeKind::kNonnegOrthant: {
      DenseVector out(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::max(y[i], 0.0);
      return out;
    }
    case ConeKind::kSecondOrder: return project_soc(y);
  }
  return y;
}

DenseVector project_cone(const Cone& cone, const DenseVector& y) {
  require_cone_dim(cone, y);
  if (cone.kind == ConeKind::kZero) return DenseVector(y.size(), 0.0);
  return project_dual_cone(cone, y);  // orthant and SOC are self-dual
}

double distance_to_cone(const Cone& cone, const DenseVector& v) { return norm2(sub(v, project_cone(cone, v))); }

bool in_dual_cone(const Cone& cone, const DenseVector& y, double tol) {
  if (y.size() != cone.dim) return false;
  return norm2(sub(y, project_dual_cone(cone, y))) <= tol * std::max(1.0, norm2(y));
}

}  // namespace dsa
