#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedc4/dense.hpp"
#include "fedc4/rng.hpp"

using namespace fedc4;

namespace {

DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k)
      for (int j = 0; j < b.cols; ++j) c.at(i, j) += a.at(i, k) * b.at(k, j);
  return c;
}

}  // namespace

TEST_CASE("matmul matches a naive triple loop") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 1 + int(rng.below(8)), k = 1 + int(rng.below(8)), n = 1 + int(rng.below(8));
    const DenseMatrix a = gaussian_matrix(m, k, rng);
    const DenseMatrix b = gaussian_matrix(k, n, rng);
    const DenseMatrix c = matmul(a, b);
    const DenseMatrix ref = naive_matmul(a, b);
    for (std::int64_t i = 0; i < c.size(); ++i)
      CHECK(c.values[i] == doctest::Approx(ref.values[i]).epsilon(1e-12));

    const DenseMatrix cta = matmul_ta(transpose(a), b);
    const DenseMatrix ctb = matmul_tb(a, transpose(b));
    for (std::int64_t i = 0; i < c.size(); ++i) {
      CHECK(cta.values[i] == doctest::Approx(ref.values[i]).epsilon(1e-12));
      CHECK(ctb.values[i] == doctest::Approx(ref.values[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("shape mismatches throw") {
  DenseMatrix a(2, 3), b(4, 2);
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(dot(a, b), std::invalid_argument);
}

TEST_CASE("transpose and identity") {
  Rng rng(7);
  const DenseMatrix a = gaussian_matrix(3, 5, rng);
  const DenseMatrix att = transpose(transpose(a));
  CHECK(att == a);
  const DenseMatrix i3 = DenseMatrix::identity(3);
  CHECK(matmul(i3, a) == a);
}

TEST_CASE("spectral_norm_sym finds the dominant eigenvalue") {
  // diag(3, 1, 0.5) has spectral norm 3.
  DenseMatrix d(3, 3);
  d.at(0, 0) = 3.0;
  d.at(1, 1) = 1.0;
  d.at(2, 2) = 0.5;
  CHECK(spectral_norm_sym(d) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("glorot bounds") {
  Rng rng(3);
  const DenseMatrix w = glorot_matrix(30, 20, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  CHECK(max_abs(w) <= bound);
  CHECK(max_abs(w) > bound * 0.5);  // not degenerate
}

TEST_CASE("rng determinism and laplace scale") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng l(5);
  double mean_abs = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) mean_abs += std::fabs(l.laplace(0.1));
  mean_abs /= n;
  CHECK(mean_abs == doctest::Approx(0.1).epsilon(0.05));
}
