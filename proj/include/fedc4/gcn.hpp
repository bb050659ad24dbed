#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fedc4/dense.hpp"
#include "fedc4/graph.hpp"

namespace fedc4 {

// Normalized adjacency handle: sparse for real graphs, dense for weighted
// synthetic ones. Non-owning; both forms are symmetric.
class AHat {
 public:
  explicit AHat(const NormalizedAdjacency& a) : sparse_(&a.mat) {}
  explicit AHat(const SparseAdjacency& a) : sparse_(&a) {}
  explicit AHat(const DenseMatrix& a) : dense_(&a) {}

  int n() const { return sparse_ ? sparse_->n : dense_->rows; }
  bool is_dense() const { return dense_ != nullptr; }
  const DenseMatrix& dense() const { return *dense_; }
  DenseMatrix multiply(const DenseMatrix& x) const;

 private:
  const SparseAdjacency* sparse_ = nullptr;
  const DenseMatrix* dense_ = nullptr;
};

// 2-layer GCN: H1 = ReLU(A X W1), logits = A H1 W2. H1 doubles as the node
// embedding everywhere downstream.
struct GCNParams {
  DenseMatrix w1;  // d x hidden
  DenseMatrix w2;  // hidden x classes

  std::int64_t float_count() const { return w1.size() + w2.size(); }
};

struct ForwardTrace {
  DenseMatrix p1;      // A X
  DenseMatrix h1;      // ReLU(A X W1)
  DenseMatrix p2;      // A H1
  DenseMatrix logits;  // A H1 W2
};

struct GCNGrads {
  DenseMatrix w1;
  DenseMatrix w2;
  std::optional<DenseMatrix> x;
};

struct SGDConfig {
  double learning_rate = 0.2;
  double weight_decay = 5e-4;
};

GCNParams glorot_gcn(int d, int hidden, int classes, std::uint64_t seed);

ForwardTrace gcn_forward(const AHat& a_hat, const DenseMatrix& x, const GCNParams& params);

double masked_cross_entropy(const DenseMatrix& logits, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& mask);

// Exact gradients of masked_cross_entropy(gcn_forward(...)). Set want_x_grad
// to also get the gradient w.r.t. the input features.
GCNGrads gcn_backward(const AHat& a_hat, const DenseMatrix& x, const GCNParams& params,
                      const std::vector<int>& labels, const std::vector<std::uint8_t>& mask,
                      const ForwardTrace& trace, bool want_x_grad = false);

// p <- p - lr * (g + wd * p)
void sgd_step(GCNParams& params, const GCNGrads& grads, const SGDConfig& cfg);

// argmax prediction (ties -> smallest class index).
std::vector<int> predict(const DenseMatrix& logits);
double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<std::uint8_t>& mask);

// Small feed-forward net with ReLU hidden layers; used as the adjacency
// synthesizer. weights[i]: in_i x out_i, biases[i]: 1 x out_i.
struct MLPParams {
  std::vector<DenseMatrix> weights;
  std::vector<DenseMatrix> biases;

  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);
  std::int64_t float_count() const;
};

MLPParams glorot_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

// Full-batch training loop shared by the federation and condensation paths.
// Starts from `params`, runs `epochs` of SGD on the masked cross-entropy.
void train_gcn(GCNParams& params, const AHat& a_hat, const DenseMatrix& x,
               const std::vector<int>& labels, const std::vector<std::uint8_t>& mask, int epochs,
               const SGDConfig& cfg);

}  // namespace fedc4
