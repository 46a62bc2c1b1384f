#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace dsa {

using DenseVector = std::vector<double>;

// Row-major dense matrix. Entries are required to be finite.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  const std::vector<double>& entries() const { return data_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  DenseMatrix transpose() const;
  bool operator==(const DenseMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// y = A x
DenseVector matvec(const DenseMatrix& a, const DenseVector& x);
// y = A^T x
DenseVector matvec_transpose(const DenseMatrix& a, const DenseVector& x);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

double dot(const DenseVector& a, const DenseVector& b);
double norm2(const DenseVector& a);
double norm1(const DenseVector& a);
// y += alpha * x
void axpy(double alpha, const DenseVector& x, DenseVector& y);
[[nodiscard]] DenseVector add(const DenseVector& a, const DenseVector& b);
[[nodiscard]] DenseVector sub(const DenseVector& a, const DenseVector& b);
[[nodiscard]] DenseVector scale(double alpha, const DenseVector& a);
bool all_finite(const DenseVector& a);

void require_same_dim(const DenseVector& a, const DenseVector& b, const char* where);

// Thin SVD A = U diag(s) V^T with singular values sorted descending.
// U is rows x k, V is cols x k, k = min(rows, cols).
struct Svd {
  DenseMatrix u;
  DenseVector s;
  DenseMatrix v;
};

Svd jacobi_svd(const DenseMatrix& a);

double spectral_norm(const DenseMatrix& a);
double sigma_min_nonzero(const DenseMatrix& a);

// Relative cutoff below which a singular value counts as zero.
inline constexpr double kRankTolerance = 1e-12;

}  // namespace dsa
