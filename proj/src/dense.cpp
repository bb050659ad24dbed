#include "fedc4/dense.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fedc4/rng.hpp"

namespace fedc4 {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

CMap map(const DenseMatrix& m) { return CMap(m.values.data(), m.rows, m.cols); }
MMap map(DenseMatrix& m) { return MMap(m.values.data(), m.rows, m.cols); }

}  // namespace

void ensure_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
  }
}

void ensure_mul_shapes(int inner_a, int inner_b, const char* what) {
  if (inner_a != inner_b) {
    throw std::invalid_argument(std::string(what) + ": inner dimensions differ (" +
                                std::to_string(inner_a) + " vs " + std::to_string(inner_b) + ")");
  }
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  ensure_mul_shapes(a.cols, b.rows, "matmul");
  DenseMatrix c(a.rows, b.cols);
  map(c).noalias() = map(a) * map(b);
  return c;
}

DenseMatrix matmul_ta(const DenseMatrix& a, const DenseMatrix& b) {
  ensure_mul_shapes(a.rows, b.rows, "matmul_ta");
  DenseMatrix c(a.cols, b.cols);
  map(c).noalias() = map(a).transpose() * map(b);
  return c;
}

DenseMatrix matmul_tb(const DenseMatrix& a, const DenseMatrix& b) {
  ensure_mul_shapes(a.cols, b.cols, "matmul_tb");
  DenseMatrix c(a.rows, b.rows);
  map(c).noalias() = map(a) * map(b).transpose();
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix c(a.cols, a.rows);
  map(c) = map(a).transpose();
  return c;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  ensure_same_shape(a, b, "add");
  DenseMatrix c(a.rows, a.cols);
  map(c) = map(a) + map(b);
  return c;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
  ensure_same_shape(a, b, "sub");
  DenseMatrix c(a.rows, a.cols);
  map(c) = map(a) - map(b);
  return c;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  ensure_same_shape(a, b, "hadamard");
  DenseMatrix c(a.rows, a.cols);
  map(c) = map(a).cwiseProduct(map(b));
  return c;
}

DenseMatrix scale(const DenseMatrix& a, double c) {
  DenseMatrix out(a.rows, a.cols);
  map(out) = map(a) * c;
  return out;
}

void add_scaled_inplace(DenseMatrix& a, const DenseMatrix& b, double c) {
  ensure_same_shape(a, b, "add_scaled_inplace");
  map(a) += map(b) * c;
}

double frobenius_sq(const DenseMatrix& a) { return map(a).squaredNorm(); }

double dot(const DenseMatrix& a, const DenseMatrix& b) {
  ensure_same_shape(a, b, "dot");
  return map(a).cwiseProduct(map(b)).sum();
}

double max_abs(const DenseMatrix& a) {
  if (a.size() == 0) return 0.0;
  return map(a).cwiseAbs().maxCoeff();
}

bool all_finite(const DenseMatrix& a) {
  for (double v : a.values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double spectral_norm_sym(const DenseMatrix& a, int iters, std::uint64_t seed) {
  if (a.rows != a.cols) throw std::invalid_argument("spectral_norm_sym: matrix not square");
  if (a.rows == 0) return 0.0;
  Rng rng(derive_seed(seed, 0x5e1fu));
  Eigen::VectorXd v(a.rows);
  for (int i = 0; i < a.rows; ++i) v[i] = rng.normal();
  v.normalize();
  auto m = map(a);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd w = m * v;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
    lambda = n;
  }
  return lambda;
}

DenseMatrix gaussian_matrix(int rows, int cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (double& v : m.values) v = rng.normal();
  return m;
}

DenseMatrix glorot_matrix(int rows, int cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  const double a = std::sqrt(6.0 / (rows + cols));
  for (double& v : m.values) v = rng.uniform(-a, a);
  return m;
}

}  // namespace fedc4
