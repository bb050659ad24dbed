#include "fedc4/gcn.hpp"

#include <cmath>
#include <stdexcept>

#include "fedc4/rng.hpp"

namespace fedc4 {

DenseMatrix AHat::multiply(const DenseMatrix& x) const {
  if (sparse_) return sparse_->multiply(x);
  return matmul(*dense_, x);
}

GCNParams glorot_gcn(int d, int hidden, int classes, std::uint64_t seed) {
  Rng r1(derive_seed(seed, 0x6c01u));
  Rng r2(derive_seed(seed, 0x6c02u));
  return GCNParams{glorot_matrix(d, hidden, r1), glorot_matrix(hidden, classes, r2)};
}

ForwardTrace gcn_forward(const AHat& a_hat, const DenseMatrix& x, const GCNParams& params) {
  if (a_hat.n() != x.rows) throw std::invalid_argument("gcn_forward: adjacency/feature mismatch");
  ensure_mul_shapes(x.cols, params.w1.rows, "gcn_forward: X*W1");
  ensure_mul_shapes(params.w1.cols, params.w2.rows, "gcn_forward: H1*W2");
  ForwardTrace t;
  t.p1 = a_hat.multiply(x);
  t.h1 = matmul(t.p1, params.w1);
  for (double& v : t.h1.values) v = v > 0.0 ? v : 0.0;
  t.p2 = a_hat.multiply(t.h1);
  t.logits = matmul(t.p2, params.w2);
  return t;
}

namespace {

// Row softmax with the max-shift trick.
DenseMatrix softmax_rows_of(const DenseMatrix& logits) {
  DenseMatrix p(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    const double* in = logits.row(i);
    double* out = p.row(i);
    double mx = in[0];
    for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, in[c]);
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      z += out[c];
    }
    for (int c = 0; c < logits.cols; ++c) out[c] /= z;
  }
  return p;
}

int mask_count(const std::vector<std::uint8_t>& mask) {
  int m = 0;
  for (auto b : mask) m += b ? 1 : 0;
  return m;
}

}  // namespace

double masked_cross_entropy(const DenseMatrix& logits, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& mask) {
  if (static_cast<int>(labels.size()) != logits.rows ||
      static_cast<int>(mask.size()) != logits.rows)
    throw std::invalid_argument("masked_cross_entropy: label/mask length mismatch");
  const int m = mask_count(mask);
  if (m == 0) throw std::invalid_argument("masked_cross_entropy: empty mask");
  double loss = 0.0;
  for (int i = 0; i < logits.rows; ++i) {
    if (!mask[i]) continue;
    const double* in = logits.row(i);
    double mx = in[0];
    for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, in[c]);
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c) z += std::exp(in[c] - mx);
    loss += std::log(z) - (in[labels[i]] - mx);
  }
  return loss / m;
}

GCNGrads gcn_backward(const AHat& a_hat, const DenseMatrix& x, const GCNParams& params,
                      const std::vector<int>& labels, const std::vector<std::uint8_t>& mask,
                      const ForwardTrace& trace, bool want_x_grad) {
  const int m = mask_count(mask);
  if (m == 0) throw std::invalid_argument("gcn_backward: empty mask");

  DenseMatrix dlogits = softmax_rows_of(trace.logits);
  for (int i = 0; i < dlogits.rows; ++i) {
    double* row = dlogits.row(i);
    if (!mask[i]) {
      for (int c = 0; c < dlogits.cols; ++c) row[c] = 0.0;
      continue;
    }
    row[labels[i]] -= 1.0;
    for (int c = 0; c < dlogits.cols; ++c) row[c] /= m;
  }

  GCNGrads g;
  g.w2 = matmul_ta(trace.p2, dlogits);
  DenseMatrix dp2 = matmul_tb(dlogits, params.w2);
  DenseMatrix dh1 = a_hat.multiply(dp2);  // A symmetric
  // ReLU gate: h1 > 0 iff pre-activation > 0.
  for (std::int64_t i = 0; i < dh1.size(); ++i)
    if (trace.h1.values[i] <= 0.0) dh1.values[i] = 0.0;
  g.w1 = matmul_ta(trace.p1, dh1);
  if (want_x_grad) {
    DenseMatrix dp1 = matmul_tb(dh1, params.w1);
    g.x = a_hat.multiply(dp1);
  }
  return g;
}

void sgd_step(GCNParams& params, const GCNGrads& grads, const SGDConfig& cfg) {
  ensure_same_shape(params.w1, grads.w1, "sgd_step: w1");
  ensure_same_shape(params.w2, grads.w2, "sgd_step: w2");
  const double lr = cfg.learning_rate, wd = cfg.weight_decay;
  for (std::int64_t i = 0; i < params.w1.size(); ++i)
    params.w1.values[i] -= lr * (grads.w1.values[i] + wd * params.w1.values[i]);
  for (std::int64_t i = 0; i < params.w2.size(); ++i)
    params.w2.values[i] -= lr * (grads.w2.values[i] + wd * params.w2.values[i]);
}

std::vector<int> predict(const DenseMatrix& logits) {
  std::vector<int> out(logits.rows);
  for (int i = 0; i < logits.rows; ++i) {
    const double* row = logits.row(i);
    int best = 0;
    for (int c = 1; c < logits.cols; ++c)
      if (row[c] > row[best]) best = c;
    out[i] = best;
  }
  return out;
}

double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<std::uint8_t>& mask) {
  const auto pred = predict(logits);
  std::int64_t correct = 0, total = 0;
  for (int i = 0; i < logits.rows; ++i) {
    if (!mask[i]) continue;
    ++total;
    if (pred[i] == labels[i]) ++correct;
  }
  if (total == 0) throw std::invalid_argument("accuracy: empty mask");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<double> MLPParams::flatten() const {
  std::vector<double> flat;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].values.begin(), weights[l].values.end());
    flat.insert(flat.end(), biases[l].values.begin(), biases[l].values.end());
  }
  return flat;
}

void MLPParams::unflatten(const std::vector<double>& flat) {
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy_n(flat.begin() + pos, weights[l].values.size(), weights[l].values.begin());
    pos += weights[l].values.size();
    std::copy_n(flat.begin() + pos, biases[l].values.size(), biases[l].values.begin());
    pos += biases[l].values.size();
  }
  if (pos != flat.size()) throw std::invalid_argument("MLPParams::unflatten: size mismatch");
}

std::int64_t MLPParams::float_count() const {
  std::int64_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

MLPParams glorot_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("glorot_mlp: need >= 2 layer sizes");
  MLPParams p;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    Rng rng(derive_seed(seed, 0x311fu, l));
    p.weights.push_back(glorot_matrix(layer_sizes[l], layer_sizes[l + 1], rng));
    p.biases.emplace_back(1, layer_sizes[l + 1], 0.0);
  }
  return p;
}

void train_gcn(GCNParams& params, const AHat& a_hat, const DenseMatrix& x,
               const std::vector<int>& labels, const std::vector<std::uint8_t>& mask, int epochs,
               const SGDConfig& cfg) {
  for (int e = 0; e < epochs; ++e) {
    const ForwardTrace t = gcn_forward(a_hat, x, params);
    const GCNGrads g = gcn_backward(a_hat, x, params, labels, mask, t);
    sgd_step(params, g, cfg);
  }
}

}  // namespace fedc4
