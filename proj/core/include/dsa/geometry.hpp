#pragma once

#include <cstddef>
#include <string>

#include "dsa/numerics.hpp"

namespace dsa {

enum class SetKind { kBox, kSimplex, kBall };

// Box(lower, upper), Simplex {x >= 0, sum x = radius}, or Ball(center, radius).
struct FeasibleSet {
  SetKind kind = SetKind::kBox;
  DenseVector lower;
  DenseVector upper;
  std::size_t dim = 0;  // Simplex only; Box and Ball use their vectors
  double radius = 0.0;
  DenseVector center;

  static FeasibleSet box(DenseVector lower, DenseVector upper);
  static FeasibleSet simplex(std::size_t dim, double radius);
  static FeasibleSet ball(DenseVector center, double radius);

  std::size_t dimension() const;
  bool operator==(const FeasibleSet&) const = default;
};

enum class Dgf { kEuclidean, kEntropy };

struct ProxSetup {
  FeasibleSet set;
  Dgf dgf = Dgf::kEuclidean;
  double modulus_alpha = 1.0;
  double diameter_sq_omega = 0.0;
  DenseVector prox_center;

  bool operator==(const ProxSetup&) const = default;
};

// Validates the (set, dgf) pair and fills alpha, Omega^2 and the prox center.
ProxSetup make_prox_setup(const FeasibleSet& set, Dgf dgf);

enum class ConeKind { kZero, kNonnegOrthant, kSecondOrder };

// SecondOrder uses the last coordinate as the height t: ||x[0..d-2]|| <= t.
struct Cone {
  ConeKind kind = ConeKind::kZero;
  std::size_t dim = 0;

  static Cone zero(std::size_t dim) { return {ConeKind::kZero, dim}; }
  static Cone orthant(std::size_t dim) { return {ConeKind::kNonnegOrthant, dim}; }
  static Cone second_order(std::size_t dim) { return {ConeKind::kSecondOrder, dim}; }
  bool operator==(const Cone&) const = default;
};

double set_diameter_omega_sq(const FeasibleSet& set, Dgf dgf);

bool set_contains(const FeasibleSet& set, const DenseVector& x, double tol = 1e-9);
DenseVector project_onto_set(const FeasibleSet& set, const DenseVector& z);
// max over x in X of ||x - c||.
double max_distance_from(const FeasibleSet& set, const DenseVector& c);
// argmin over x in X of <g, x>.
DenseVector linear_minimizer(const FeasibleSet& set, const DenseVector& g);

// Bregman distance P_X(p, x) of the setup's dgf.
double prox_distance(const ProxSetup& setup, const DenseVector& p, const DenseVector& x);

// argmin over X of <g, x> + tau * P_X(p, x).
DenseVector prox_map_solve(const ProxSetup& setup, const DenseVector& p, const DenseVector& g, double tau);

// argmin over X of <g, x> + (mu/2)||x - center||^2 + tau * P_X(p, x); Euclidean only.
// tau may be zero when mu > 0. An empty center means the prox center.
DenseVector prox_map_solve_quadratic(const ProxSetup& setup, const DenseVector& p, const DenseVector& g,
                                     double tau, double mu, const DenseVector& center = {});

DenseVector project_dual_cone(const Cone& cone, const DenseVector& y);
DenseVector project_cone(const Cone& cone, const DenseVector& y);
double distance_to_cone(const Cone& cone, const DenseVector& v);
bool in_dual_cone(const Cone& cone, const DenseVector& y, double tol = 1e-10);

std::string to_string(SetKind kind);
std::string to_string(Dgf dgf);
std::string to_string(ConeKind kind);

}  // namespace dsa
