#include "fedc4/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace fedc4 {

namespace {

void check_id(int id, std::size_t n, const char* what) {
  if (id < 0 || static_cast<std::size_t>(id) >= n)
    throw std::invalid_argument(std::string(what) + ": bad node id");
}

}  // namespace

Tape::NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(DenseMatrix v) {
  Node n;
  n.op = Op::kLeaf;
  n.tracked = true;
  n.value = std::move(v);
  return push(std::move(n));
}

Tape::NodeId Tape::constant(DenseMatrix v) {
  Node n;
  n.op = Op::kConst;
  n.tracked = false;
  n.value = std::move(v);
  return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  check_id(a, nodes_.size(), "matmul");
  check_id(b, nodes_.size(), "matmul");
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.tracked = tracked(a) || tracked(b);
  n.value = fedc4::matmul(nodes_[a].value, nodes_[b].value);
  return push(std::move(n));
}

Tape::NodeId Tape::transpose(NodeId a) {
  Node n;
  n.op = Op::kTranspose;
  n.a = a;
  n.tracked = tracked(a);
  n.value = fedc4::transpose(nodes_[a].value);
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.tracked = tracked(a) || tracked(b);
  n.value = fedc4::add(nodes_[a].value, nodes_[b].value);
  return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.tracked = tracked(a) || tracked(b);
  n.value = fedc4::sub(nodes_[a].value, nodes_[b].value);
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.c = c;
  n.tracked = tracked(a);
  n.value = fedc4::scale(nodes_[a].value, c);
  return push(std::move(n));
}

Tape::NodeId Tape::smul(NodeId a, NodeId s) {
  if (nodes_[s].value.size() != 1) throw std::invalid_argument("smul: scalar node must be 1x1");
  Node n;
  n.op = Op::kSmul;
  n.a = a;
  n.b = s;
  n.tracked = tracked(a) || tracked(s);
  n.value = fedc4::scale(nodes_[a].value, nodes_[s].value.values[0]);
  return push(std::move(n));
}

Tape::NodeId Tape::hadamard(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kHadamard;
  n.a = a;
  n.b = b;
  n.tracked = tracked(a) || tracked(b);
  n.value = fedc4::hadamard(nodes_[a].value, nodes_[b].value);
  return push(std::move(n));
}

Tape::NodeId Tape::hadamard_const(NodeId a, DenseMatrix m) {
  ensure_same_shape(nodes_[a].value, m, "hadamard_const");
  Node n;
  n.op = Op::kHadamardConst;
  n.a = a;
  n.tracked = tracked(a);
  n.value = fedc4::hadamard(nodes_[a].value, m);
  n.aux = std::move(m);
  return push(std::move(n));
}

Tape::NodeId Tape::add_const(NodeId a, DenseMatrix m) {
  ensure_same_shape(nodes_[a].value, m, "add_const");
  Node n;
  n.op = Op::kAddConst;
  n.a = a;
  n.tracked = tracked(a);
  n.value = fedc4::add(nodes_[a].value, m);
  n.aux = std::move(m);
  return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a;
  n.tracked = tracked(a);
  const DenseMatrix& in = nodes_[a].value;
  n.value = DenseMatrix(in.rows, in.cols);
  n.aux = DenseMatrix(in.rows, in.cols);  // 0/1 gate
  for (std::int64_t i = 0; i < in.size(); ++i) {
    if (in.values[i] > 0.0) {
      n.value.values[i] = in.values[i];
      n.aux.values[i] = 1.0;
    }
  }
  return push(std::move(n));
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.tracked = tracked(a);
  const DenseMatrix& in = nodes_[a].value;
  n.value = DenseMatrix(in.rows, in.cols);
  for (std::int64_t i = 0; i < in.size(); ++i)
    n.value.values[i] = 1.0 / (1.0 + std::exp(-in.values[i]));
  return push(std::move(n));
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
  Node n;
  n.op = Op::kSoftmaxRows;
  n.a = a;
  n.tracked = tracked(a);
  const DenseMatrix& in = nodes_[a].value;
  n.value = DenseMatrix(in.rows, in.cols);
  for (int i = 0; i < in.rows; ++i) {
    const double* src = in.row(i);
    double* dst = n.value.row(i);
    double mx = src[0];
    for (int c = 1; c < in.cols; ++c) mx = std::max(mx, src[c]);
    double z = 0.0;
    for (int c = 0; c < in.cols; ++c) {
      dst[c] = std::exp(src[c] - mx);
      z += dst[c];
    }
    for (int c = 0; c < in.cols; ++c) dst[c] /= z;
  }
  return push(std::move(n));
}

Tape::NodeId Tape::rsqrt(NodeId a) {
  Node n;
  n.op = Op::kRsqrt;
  n.a = a;
  n.tracked = tracked(a);
  const DenseMatrix& in = nodes_[a].value;
  n.value = DenseMatrix(in.rows, in.cols);
  for (std::int64_t i = 0; i < in.size(); ++i) {
    if (in.values[i] <= 0.0) throw std::invalid_argument("rsqrt: non-positive entry");
    n.value.values[i] = 1.0 / std::sqrt(in.values[i]);
  }
  return push(std::move(n));
}

Tape::NodeId Tape::sumdot(NodeId a, NodeId b) {
  ensure_same_shape(nodes_[a].value, nodes_[b].value, "sumdot");
  Node n;
  n.op = Op::kSumdot;
  n.a = a;
  n.b = b;
  n.tracked = tracked(a) || tracked(b);
  n.value = DenseMatrix(1, 1, fedc4::dot(nodes_[a].value, nodes_[b].value));
  return push(std::move(n));
}

Tape::NodeId Tape::masked_ce(NodeId logits, std::vector<int> labels,
                             std::vector<std::uint8_t> mask) {
  const DenseMatrix& in = nodes_[logits].value;
  if (static_cast<int>(labels.size()) != in.rows || static_cast<int>(mask.size()) != in.rows)
    throw std::invalid_argument("masked_ce: label/mask length mismatch");
  int m = 0;
  for (auto b : mask) m += b ? 1 : 0;
  if (m == 0) throw std::invalid_argument("masked_ce: empty mask");
  double loss = 0.0;
  for (int i = 0; i < in.rows; ++i) {
    if (!mask[i]) continue;
    const double* row = in.row(i);
    double mx = row[0];
    for (int c = 1; c < in.cols; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int c = 0; c < in.cols; ++c) z += std::exp(row[c] - mx);
    loss += std::log(z) - (row[labels[i]] - mx);
  }
  Node n;
  n.op = Op::kMaskedCe;
  n.a = logits;
  n.tracked = tracked(logits);
  n.value = DenseMatrix(1, 1, loss / m);
  n.labels = std::move(labels);
  n.mask = std::move(mask);
  return push(std::move(n));
}

Tape::NodeId Tape::pair_broadcast(NodeId u, NodeId v) {
  const DenseMatrix& a = nodes_[u].value;
  const DenseMatrix& b = nodes_[v].value;
  ensure_same_shape(a, b, "pair_broadcast");
  const int n_rows = a.rows, h = a.cols;
  Node n;
  n.op = Op::kPairBroadcast;
  n.a = u;
  n.b = v;
  n.n = n_rows;
  n.tracked = tracked(u) || tracked(v);
  n.value = DenseMatrix(n_rows * n_rows, h);
  for (int i = 0; i < n_rows; ++i) {
    const double* ra = a.row(i);
    for (int j = 0; j < n_rows; ++j) {
      const double* rb = b.row(j);
      double* dst = n.value.row(i * n_rows + j);
      for (int k = 0; k < h; ++k) dst[k] = ra[k] + rb[k];
    }
  }
  return push(std::move(n));
}

Tape::NodeId Tape::pair_reduce_i(NodeId p, int n_rows) {
  const DenseMatrix& in = nodes_[p].value;
  if (in.rows != n_rows * n_rows) throw std::invalid_argument("pair_reduce_i: bad pair tensor");
  Node n;
  n.op = Op::kPairReduceI;
  n.a = p;
  n.n = n_rows;
  n.tracked = tracked(p);
  n.value = DenseMatrix(n_rows, in.cols);
  for (int i = 0; i < n_rows; ++i) {
    double* dst = n.value.row(i);
    for (int j = 0; j < n_rows; ++j) {
      const double* src = in.row(i * n_rows + j);
      for (int k = 0; k < in.cols; ++k) dst[k] += src[k];
    }
  }
  return push(std::move(n));
}

Tape::NodeId Tape::pair_reduce_j(NodeId p, int n_rows) {
  const DenseMatrix& in = nodes_[p].value;
  if (in.rows != n_rows * n_rows) throw std::invalid_argument("pair_reduce_j: bad pair tensor");
  Node n;
  n.op = Op::kPairReduceJ;
  n.a = p;
  n.n = n_rows;
  n.tracked = tracked(p);
  n.value = DenseMatrix(n_rows, in.cols);
  for (int i = 0; i < n_rows; ++i) {
    for (int j = 0; j < n_rows; ++j) {
      const double* src = in.row(i * n_rows + j);
      double* dst = n.value.row(j);
      for (int k = 0; k < in.cols; ++k) dst[k] += src[k];
    }
  }
  return push(std::move(n));
}

Tape::NodeId Tape::pairs_to_sym(NodeId p, int n_rows) {
  const DenseMatrix& in = nodes_[p].value;
  if (in.rows != n_rows * n_rows || in.cols != 1)
    throw std::invalid_argument("pairs_to_sym: expected n^2 x 1");
  Node n;
  n.op = Op::kPairsToSym;
  n.a = p;
  n.n = n_rows;
  n.tracked = tracked(p);
  n.value = DenseMatrix(n_rows, n_rows);
  for (int i = 0; i < n_rows; ++i) {
    for (int j = 0; j < n_rows; ++j) {
      if (i == j) continue;
      n.value.at(i, j) =
          0.5 * (in.values[static_cast<std::size_t>(i) * n_rows + j] +
                 in.values[static_cast<std::size_t>(j) * n_rows + i]);
    }
  }
  return push(std::move(n));
}

Tape::NodeId Tape::sym_to_pairs(NodeId m) {
  const DenseMatrix& in = nodes_[m].value;
  if (in.rows != in.cols) throw std::invalid_argument("sym_to_pairs: matrix not square");
  const int n_rows = in.rows;
  Node n;
  n.op = Op::kSymToPairs;
  n.a = m;
  n.n = n_rows;
  n.tracked = tracked(m);
  n.value = DenseMatrix(n_rows * n_rows, 1);
  for (int i = 0; i < n_rows; ++i) {
    for (int j = 0; j < n_rows; ++j) {
      if (i == j) continue;
      n.value.values[static_cast<std::size_t>(i) * n_rows + j] =
          0.5 * (in.at(i, j) + in.at(j, i));
    }
  }
  return push(std::move(n));
}

std::vector<Tape::NodeId> Tape::gradients(NodeId loss, const std::vector<NodeId>& wrt) {
  check_id(loss, nodes_.size(), "gradients");
  if (nodes_[loss].value.size() != 1)
    throw std::invalid_argument("gradients: loss node must be 1x1");

  std::vector<NodeId> grad(static_cast<std::size_t>(loss) + 1, -1);
  grad[loss] = constant(DenseMatrix(1, 1, 1.0));

  auto accumulate = [&](NodeId target, NodeId g) {
    if (target > loss) throw std::logic_error("gradients: forward node created after loss");
    if (!tracked(target)) return;
    grad[target] = grad[target] < 0 ? g : add(grad[target], g);
  };

  for (NodeId id = loss; id >= 0; --id) {
    if (grad[id] < 0 || !tracked(id)) continue;
    const NodeId g = grad[id];
    // Copy the plain fields; emitting nodes below may reallocate nodes_.
    const Op op = nodes_[id].op;
    const NodeId a = nodes_[id].a;
    const NodeId b = nodes_[id].b;
    const double c = nodes_[id].c;
    const int n = nodes_[id].n;

    switch (op) {
      case Op::kLeaf:
      case Op::kConst:
        break;
      case Op::kMatmul:
        if (tracked(a)) accumulate(a, matmul(g, transpose(b)));
        if (tracked(b)) accumulate(b, matmul(transpose(a), g));
        break;
      case Op::kTranspose:
        accumulate(a, transpose(g));
        break;
      case Op::kAdd:
        if (tracked(a)) accumulate(a, g);
        if (tracked(b)) accumulate(b, g);
        break;
      case Op::kSub:
        if (tracked(a)) accumulate(a, g);
        if (tracked(b)) accumulate(b, scale(g, -1.0));
        break;
      case Op::kScale:
        accumulate(a, scale(g, c));
        break;
      case Op::kSmul:
        if (tracked(a)) accumulate(a, smul(g, b));
        if (tracked(b)) accumulate(b, sumdot(g, a));
        break;
      case Op::kHadamard:
        if (tracked(a)) accumulate(a, hadamard(g, b));
        if (tracked(b)) accumulate(b, hadamard(g, a));
        break;
      case Op::kHadamardConst:
        accumulate(a, hadamard_const(g, nodes_[id].aux));
        break;
      case Op::kAddConst:
        accumulate(a, g);
        break;
      case Op::kRelu:
        accumulate(a, hadamard_const(g, nodes_[id].aux));
        break;
      case Op::kSigmoid: {
        const DenseMatrix& y = nodes_[id].value;
        const NodeId self = id;
        const NodeId ones = constant(DenseMatrix::ones(y.rows, y.cols));
        accumulate(a, hadamard(g, hadamard(self, sub(ones, self))));
        break;
      }
      case Op::kSoftmaxRows: {
        const NodeId self = id;
        const int cls = nodes_[id].value.cols;
        const NodeId gy = hadamard(g, self);
        const NodeId rows = matmul(gy, constant(DenseMatrix::ones(cls, 1)));
        const NodeId spread = matmul(rows, constant(DenseMatrix::ones(1, cls)));
        accumulate(a, hadamard(self, sub(g, spread)));
        break;
      }
      case Op::kRsqrt: {
        const NodeId self = id;
        accumulate(a, scale(hadamard(g, hadamard(hadamard(self, self), self)), -0.5));
        break;
      }
      case Op::kSumdot:
        if (tracked(a)) accumulate(a, smul(b, g));
        if (tracked(b)) accumulate(b, smul(a, g));
        break;
      case Op::kMaskedCe: {
        const DenseMatrix& logits = nodes_[a].value;
        int m = 0;
        for (auto bit : nodes_[id].mask) m += bit ? 1 : 0;
        DenseMatrix onehot(logits.rows, logits.cols);
        DenseMatrix rowmask(logits.rows, logits.cols);
        for (int i = 0; i < logits.rows; ++i) {
          onehot.at(i, nodes_[id].labels[i]) = 1.0;
          if (nodes_[id].mask[i])
            for (int cc = 0; cc < logits.cols; ++cc) rowmask.at(i, cc) = 1.0 / m;
        }
        const NodeId p = softmax_rows(a);
        const NodeId diff = sub(p, constant(std::move(onehot)));
        accumulate(a, smul(hadamard_const(diff, std::move(rowmask)), g));
        break;
      }
      case Op::kPairBroadcast:
        if (tracked(a)) accumulate(a, pair_reduce_i(g, n));
        if (tracked(b)) accumulate(b, pair_reduce_j(g, n));
        break;
      case Op::kPairReduceI: {
        const auto& gv = nodes_[g].value;
        accumulate(a, pair_broadcast(g, constant(DenseMatrix(gv.rows, gv.cols))));
        break;
      }
      case Op::kPairReduceJ: {
        const auto& gv = nodes_[g].value;
        accumulate(a, pair_broadcast(constant(DenseMatrix(gv.rows, gv.cols)), g));
        break;
      }
      case Op::kPairsToSym:
        accumulate(a, sym_to_pairs(g));
        break;
      case Op::kSymToPairs:
        accumulate(a, pairs_to_sym(g, n));
        break;
    }
  }

  std::vector<NodeId> out;
  out.reserve(wrt.size());
  for (NodeId w : wrt) {
    check_id(w, nodes_.size(), "gradients(wrt)");
    out.push_back(w <= loss ? grad[w] : -1);
  }
  return out;
}

}  // namespace fedc4
