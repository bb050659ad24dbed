#pragma once

#include <cstdint>
#include <vector>

namespace fedc4 {

class Rng;

// Row-major double matrix. Deliberately plain: all numeric modules pass these
// around by value and the linear algebra kernels live in dense.cpp.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // rows*cols, row-major

  DenseMatrix() = default;
  DenseMatrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

  static DenseMatrix identity(int n);
  static DenseMatrix ones(int r, int c) { return DenseMatrix(r, c, 1.0); }

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return values.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return values.data() + static_cast<std::size_t>(r) * cols; }

  std::int64_t size() const { return static_cast<std::int64_t>(rows) * cols; }
  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
  bool operator==(const DenseMatrix& o) const {
    return rows == o.rows && cols == o.cols && values == o.values;
  }
};

// c = a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// c = a^T * b
DenseMatrix matmul_ta(const DenseMatrix& a, const DenseMatrix& b);
// c = a * b^T
DenseMatrix matmul_tb(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double c);

// a += c * b
void add_scaled_inplace(DenseMatrix& a, const DenseMatrix& b, double c = 1.0);

double frobenius_sq(const DenseMatrix& a);
// Frobenius inner product <a, b>.
double dot(const DenseMatrix& a, const DenseMatrix& b);
double max_abs(const DenseMatrix& a);
bool all_finite(const DenseMatrix& a);

// Largest-magnitude eigenvalue of a symmetric matrix, by power iteration.
double spectral_norm_sym(const DenseMatrix& a, int iters = 200, std::uint64_t seed = 1);

// Entries i.i.d. standard normal.
DenseMatrix gaussian_matrix(int rows, int cols, Rng& rng);
// Glorot-uniform in (-a, a), a = sqrt(6/(fan_in+fan_out)).
DenseMatrix glorot_matrix(int rows, int cols, Rng& rng);

void ensure_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what);
void ensure_mul_shapes(int inner_a, int inner_b, const char* what);

}  // namespace fedc4
