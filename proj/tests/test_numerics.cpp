#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dsa/errors.hpp"
#include "dsa/numerics.hpp"
#include "support/reference.hpp"

using namespace dsa;

namespace {

DenseMatrix diag(std::initializer_list<double> d) {
  DenseMatrix m(d.size(), d.size());
  std::size_t i = 0;
  for (double v : d) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

void expect_kind(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    FAIL() << "no error raised";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

}  // namespace

TEST(SpectralNorm, Diagonal) { EXPECT_NEAR(spectral_norm(diag({3, 4})), 4.0, 1e-12); }

TEST(SpectralNorm, Identity) { EXPECT_NEAR(spectral_norm(DenseMatrix::identity(2)), 1.0, 1e-12); }

TEST(SpectralNorm, ShearMatrix) {
  EXPECT_NEAR(spectral_norm(DenseMatrix{{1, 1}, {0, 1}}), std::sqrt((3.0 + std::sqrt(5.0)) / 2.0), 1e-10);
  EXPECT_NEAR(spectral_norm(DenseMatrix{{1, 1}, {0, 1}}), 1.6180339887, 1e-9);
}

TEST(SpectralNorm, EmptyMatrixIsDimensionError) {
  expect_kind(ErrorKind::kDimension, [] { (void)spectral_norm(DenseMatrix()); });
}

TEST(SigmaMin, RankOneDiagonal) { EXPECT_NEAR(sigma_min_nonzero(DenseMatrix{{1, 0}, {0, 0}}), 1.0, 1e-12); }

TEST(SigmaMin, Diagonal) { EXPECT_NEAR(sigma_min_nonzero(diag({2, 3})), 2.0, 1e-12); }

TEST(SigmaMin, WideRow) { EXPECT_NEAR(sigma_min_nonzero(DenseMatrix{{1, 1}}), std::sqrt(2.0), 1e-12); }

TEST(SigmaMin, ZeroMatrixFails) {
  EXPECT_THROW((void)sigma_min_nonzero(DenseMatrix(2, 3, 0.0)), Error);
}

TEST(Svd, ReconstructsInput) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
    const DenseMatrix a = testref::random_matrix(rng, r, c);
    const Svd s = jacobi_svd(a);
    const std::size_t k = std::min(r, c);
    ASSERT_EQ(s.s.size(), k);
    for (std::size_t i = 0; i + 1 < k; ++i) EXPECT_GE(s.s[i], s.s[i + 1]);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        double v = 0.0;
        for (std::size_t l = 0; l < k; ++l) v += s.u(i, l) * s.s[l] * s.v(j, l);
        EXPECT_NEAR(v, a(i, j), 1e-10);
      }
  }
}

TEST(SpectralNormProperty, TransposeInvariant) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + rng() % 8, c = 1 + rng() % 8;
    const DenseMatrix a = testref::random_matrix(rng, r, c, 3.0);
    EXPECT_NEAR(spectral_norm(a), spectral_norm(a.transpose()), 1e-10 * (1.0 + spectral_norm(a)));
  }
}

TEST(SpectralNormProperty, Homogeneous) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> cdist(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + rng() % 8, c = 1 + rng() % 8;
    const DenseMatrix a = testref::random_matrix(rng, r, c);
    const double s = cdist(rng);
    DenseMatrix b = a;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) b(i, j) *= s;
    EXPECT_NEAR(spectral_norm(b), std::abs(s) * spectral_norm(a), 1e-10 * (1.0 + std::abs(s) * spectral_norm(a)));
  }
}

TEST(SpectralNormProperty, SigmaMinBelowNorm) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + rng() % 8, c = 1 + rng() % 8;
    const DenseMatrix a = testref::random_matrix(rng, r, c);
    EXPECT_LE(sigma_min_nonzero(a), spectral_norm(a) * (1.0 + 1e-12));
  }
}

TEST(SpectralNormProperty, SigmaMinTimesInverseNormIsOne) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    DenseMatrix a = testref::random_matrix(rng, n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 0.5;  // keep conditioning moderate
    const DenseMatrix inv = testref::gauss_inverse(a);
    EXPECT_NEAR(sigma_min_nonzero(a) * spectral_norm(inv), 1.0, 1e-8);
  }
}

TEST(VectorOps, Basics) {
  const DenseVector a{1, 2}, b{3, -1};
  EXPECT_DOUBLE_EQ(dot(a, b), 1.0);
  EXPECT_DOUBLE_EQ(norm1(b), 4.0);
  EXPECT_DOUBLE_EQ(norm2(DenseVector{3, 4}), 5.0);
  EXPECT_EQ(add(a, b), (DenseVector{4, 1}));
  EXPECT_EQ(sub(a, b), (DenseVector{-2, 3}));
  EXPECT_EQ(scale(2.0, a), (DenseVector{2, 4}));
  DenseVector y = a;
  axpy(2.0, b, y);
  EXPECT_EQ(y, (DenseVector{7, 0}));
  EXPECT_THROW((void)dot(a, DenseVector{1}), Error);
}

TEST(MatrixOps, ProductsAgreeWithHandValues) {
  const DenseMatrix a{{1, 2}, {3, 4}};
  EXPECT_EQ(matvec(a, {1, 1}), (DenseVector{3, 7}));
  EXPECT_EQ(matvec_transpose(a, {1, 1}), (DenseVector{4, 6}));
  const DenseMatrix p = matmul(a, DenseMatrix::identity(2));
  EXPECT_EQ(p, a);
}

TEST(MatrixOps, NonFiniteEntriesRejected) {
  EXPECT_THROW(DenseMatrix(1, 1, std::vector<double>{NAN}), Error);
}
