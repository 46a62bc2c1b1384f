#include "dsa/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dsa/errors.hpp"

namespace dsa {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorKind::kDimension, "matrix entries length " + std::to_string(data_.size()) +
                                    " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  if (!all_finite(data_)) fail(ErrorKind::kDomain, "matrix has non-finite entries");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) fail(ErrorKind::kDimension, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
  if (x.size() != a.cols()) fail(ErrorKind::kDimension, "matvec: dimension mismatch");
  DenseVector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

DenseVector matvec_transpose(const DenseMatrix& a, const DenseVector& x) {
  if (x.size() != a.rows()) fail(ErrorKind::kDimension, "matvec_transpose: dimension mismatch");
  DenseVector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) fail(ErrorKind::kDimension, "matmul: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

void require_same_dim(const DenseVector& a, const DenseVector& b, const char* where) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kDimension, std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

double dot(const DenseVector& a, const DenseVector& b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const DenseVector& a) {
  // Scaled accumulation avoids overflow for large entries.
  double scale_v = 0.0;
  for (double v : a) scale_v = std::max(scale_v, std::abs(v));
  if (scale_v == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : a) {
    const double r = v / scale_v;
    acc += r * r;
  }
  return scale_v * std::sqrt(acc);
}

double norm1(const DenseVector& a) {
  double acc = 0.0;
  for (double v : a) acc += std::abs(v);
  return acc;
}

void axpy(double alpha, const DenseVector& x, DenseVector& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

DenseVector add(const DenseVector& a, const DenseVector& b) {
  require_same_dim(a, b, "add");
  DenseVector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

DenseVector sub(const DenseVector& a, const DenseVector& b) {
  require_same_dim(a, b, "sub");
  DenseVector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

DenseVector scale(double alpha, const DenseVector& a) {
  DenseVector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = alpha * a[i];
  return c;
}

bool all_finite(const DenseVector& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

namespace {

// Hestenes one-sided Jacobi on a tall (rows >= cols) matrix.
Svd jacobi_tall(const DenseMatrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  DenseMatrix w = a;
  DenseMatrix v = DenseMatrix::identity(n);
  constexpr double kEps = 1e-15;
  constexpr int kMaxSweeps = 100;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += w(i, p) * w(i, p);
          beta += w(i, q) * w(i, q);
          gamma += w(i, p) * w(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  DenseVector sv(n);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += w(i, j) * w(i, j);
    sv[j] = std::sqrt(acc);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return sv[l] > sv[r]; });

  Svd out{DenseMatrix(m, n), DenseVector(n), DenseMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.s[k] = sv[j];
    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = sv[j] > 0.0 ? w(i, j) / sv[j] : 0.0;
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
  }
  return out;
}

}  // namespace

Svd jacobi_svd(const DenseMatrix& a) {
  if (a.empty()) fail(ErrorKind::kDimension, "svd of an empty matrix");
  if (!all_finite(a.entries())) fail(ErrorKind::kDomain, "svd: non-finite entries");
  if (a.rows() >= a.cols()) return jacobi_tall(a);
  Svd t = jacobi_tall(a.transpose());
  return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
}

double spectral_norm(const DenseMatrix& a) {
  if (a.empty()) fail(ErrorKind::kDimension, "spectral_norm: empty matrix");
  return jacobi_svd(a).s.front();
}

double sigma_min_nonzero(const DenseMatrix& a) {
  if (a.empty()) fail(ErrorKind::kDimension, "sigma_min_nonzero: empty matrix");
  const Svd svd = jacobi_svd(a);
  const double cutoff = kRankTolerance * svd.s.front();
  double best = 0.0;
  for (double s : svd.s)
    if (s > cutoff && s > 0.0) best = s;
  if (best == 0.0) fail(ErrorKind::kNumeric, "sigma_min_nonzero: matrix has no nonzero singular value");
  return best;
}

}  // namespace dsa
