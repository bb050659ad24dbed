#pragma once

#include <cstdint>
#include <vector>

#include "fedc4/dense.hpp"

namespace fedc4 {

// Reverse-mode autodiff tape over DenseMatrix values, restricted to the op
// set the condensation objective needs. Backward passes are emitted as new
// tape nodes, so a gradient is itself differentiable: the gradient-matching
// loss is built from first-order GCN gradients and then differentiated again
// w.r.t. the synthetic features and the adjacency synthesizer.
class Tape {
 public:
  using NodeId = int;

  NodeId leaf(DenseMatrix v);      // tracked input
  NodeId constant(DenseMatrix v);  // untracked

  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId smul(NodeId a, NodeId s);  // s is 1x1
  NodeId hadamard(NodeId a, NodeId b);
  NodeId hadamard_const(NodeId a, DenseMatrix m);
  NodeId add_const(NodeId a, DenseMatrix m);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId softmax_rows(NodeId a);
  NodeId rsqrt(NodeId a);           // elementwise x^{-1/2}, x > 0
  NodeId sumdot(NodeId a, NodeId b);  // 1x1 Frobenius inner product
  NodeId sumsq(NodeId a) { return sumdot(a, a); }
  // Mean over masked rows of -log softmax(logits)[label]; 1x1 output.
  NodeId masked_ce(NodeId logits, std::vector<int> labels, std::vector<std::uint8_t> mask);

  // Pair-tensor ops for the adjacency synthesizer. A pair tensor stacks all
  // ordered pairs (i, j) of n rows in row-major order: row i*n+j.
  NodeId pair_broadcast(NodeId u, NodeId v);      // out[(i,j),k] = U[i,k] + V[j,k]
  NodeId pair_reduce_i(NodeId p, int n);          // out[i,k] = sum_j P[(i,j),k]
  NodeId pair_reduce_j(NodeId p, int n);          // out[j,k] = sum_i P[(i,j),k]
  // n^2 x 1 -> n x n with out_ij = (p_ij + p_ji)/2 off-diagonal, 0 on the
  // diagonal; sym_to_pairs is its adjoint.
  NodeId pairs_to_sym(NodeId p, int n);
  NodeId sym_to_pairs(NodeId m);

  const DenseMatrix& value(NodeId id) const { return nodes_[id].value; }
  std::size_t node_count() const { return nodes_.size(); }

  // Emits backward nodes for d(loss)/d(wrt[k]); loss must be 1x1. Untouched
  // wrt entries come back as -1 (gradient identically zero).
  std::vector<NodeId> gradients(NodeId loss, const std::vector<NodeId>& wrt);

 private:
  enum class Op {
    kLeaf,
    kConst,
    kMatmul,
    kTranspose,
    kAdd,
    kSub,
    kScale,
    kSmul,
    kHadamard,
    kHadamardConst,
    kAddConst,
    kRelu,
    kSigmoid,
    kSoftmaxRows,
    kRsqrt,
    kSumdot,
    kMaskedCe,
    kPairBroadcast,
    kPairReduceI,
    kPairReduceJ,
    kPairsToSym,
    kSymToPairs,
  };

  struct Node {
    Op op;
    NodeId a = -1;
    NodeId b = -1;
    double c = 0.0;
    int n = 0;
    bool tracked = false;
    DenseMatrix value;
    DenseMatrix aux;  // op payload: masks, constants
    std::vector<int> labels;
    std::vector<std::uint8_t> mask;
  };

  NodeId push(Node n);
  bool tracked(NodeId id) const { return nodes_[id].tracked; }

  std::vector<Node> nodes_;
};

}  // namespace fedc4
