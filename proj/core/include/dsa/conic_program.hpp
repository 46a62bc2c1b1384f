#pragma once

#include <cstddef>
#include <vector>

#include "dsa/geometry.hpp"
#include "dsa/numerics.hpp"

namespace dsa {

// min sum_b (quad_b / 2)||x_b - center_b||^2 + <lin_b, x_b>
// s.t. M x - q in K_1 x ... x K_r,  x_b in X_b.
class ConicProgram {
 public:
  std::size_t add_block(const FeasibleSet& set, DenseVector lin, double quad = 0.0, DenseVector center = {});
  // Returns the first row index of the new cone block.
  std::size_t add_cone(const Cone& cone, const DenseVector& q);
  void add_entry(std::size_t row, std::size_t col, double value);

  std::size_t num_vars() const { return num_vars_; }
  std::size_t num_rows() const { return q_.size(); }
  std::size_t num_blocks() const { return blocks_.size(); }
  std::size_t block_offset(std::size_t b) const { return blocks_[b].offset; }
  std::size_t block_dim(std::size_t b) const { return blocks_[b].set.dimension(); }

  DenseVector multiply(const DenseVector& x) const;            // M x
  DenseVector multiply_transpose(const DenseVector& y) const;  // M^T y
  double objective(const DenseVector& x) const;
  DenseVector objective_gradient(const DenseVector& x) const;
  // Lagrange dual function; a lower bound on the optimum for y in K*.
  double dual_objective(const DenseVector& y) const;
  // argmin over the blocks of f(x) - <M^T y, x>.
  DenseVector lagrangian_minimizer(const DenseVector& y) const;
  const DenseVector& rhs() const { return q_; }
  double primal_residual(const DenseVector& x) const;  // dist(M x - q, K)
  double dual_residual(const DenseVector& x, const DenseVector& y) const;
  DenseVector project_primal(const DenseVector& z) const;
  DenseVector project_dual(const DenseVector& y) const;
  // argmin over the blocks of f(x) + <g, x> + (1/(2 step))||x - z||^2.
  DenseVector prox_step(const DenseVector& z, const DenseVector& g, double step) const;
  double operator_norm_estimate() const;
  DenseVector initial_point() const;

 private:
  struct Block {
    FeasibleSet set;
    DenseVector lin;
    double quad = 0.0;
    DenseVector center;
    std::size_t offset = 0;
  };
  struct ConeBlock {
    Cone cone;
    std::size_t offset = 0;
  };
  struct Entry {
    std::size_t row, col;
    double value;
  };
  std::vector<Block> blocks_;
  std::vector<ConeBlock> cones_;
  std::vector<Entry> entries_;
  DenseVector q_;
  std::size_t num_vars_ = 0;
};

struct ConicSolveOptions {
  std::size_t max_iter = 4'000'000;
  double tol = 1e-11;
};

struct ConicSolution {
  DenseVector x;
  DenseVector y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Restarted primal-dual hybrid gradient with an adaptive primal weight.
ConicSolution solve_conic_program(const ConicProgram& program, const ConicSolveOptions& options = {});

}  // namespace dsa
