#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "otclab/tensor.hpp"

namespace otclab {

// Gradient map keyed by parameter name. Ordered so serialization and
// iteration are deterministic.
using Gradients = std::map<std::string, Tensor>;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Eager reverse-mode tape. Each op computes its value immediately and records
// a backprop closure; node creation order is a topological order, so backward
// is a single reverse sweep. A tape is confined to one worker and is rebuilt
// per training step.
class Tape {
 public:
  // Constant leaf; no gradient is tracked through it.
  Var input(Tensor v);
  // Differentiable leaf. Named leaves are collected into the Gradients map.
  Var param(const std::string& name, Tensor v);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  // a [m,n] + v [1,n] broadcast over rows.
  Var add_rowvec(Var a, Var v);
  Var scale(Var a, double c);
  Var mul(Var a, Var b);
  // Elementwise multiply by a 1x1 scalar var.
  Var mul_scalar(Var a, Var s);
  Var exp_scalar(Var s);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var relu(Var a);
  // Row-wise softmax with per-row max subtraction.
  Var row_softmax(Var a);
  // Rows scaled to unit Euclidean norm. Zero rows are a domain error.
  Var l2_normalize_rows(Var a);
  // Per-row normalization, then y = xhat * gain + bias (gain/bias [1,n]).
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  // Gathers rows of table [V,d] at the given ids.
  Var embedding_lookup(Var table, const std::vector<int>& ids);
  Var slice_rows(Var a, int r0, int r1);
  Var slice_cols(Var a, int c0, int c1);
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  // Mean over all entries -> 1x1.
  Var mean_all(Var a);
  // Column-wise mean over rows: [m,n] -> [1,n].
  Var mean_rows(Var a);
  // Per-row cross entropy -sum(y * log(max(p, kProbClamp))) -> [m,1].
  // Consumes probabilities, not logits; `onehot` rows must each sum to 1.
  Var cross_entropy_rows(Var probs, Var onehot);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  // Reverse sweep from a scalar loss. Every named parameter gets an entry;
  // parameters the loss does not depend on get zeros.
  Gradients backward(Var loss);

  size_t size() const { return nodes_.size(); }

  static constexpr double kProbClamp = 1e-12;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    std::function<void(Tape&, int)> backprop;
    bool requires_grad = false;
    std::string param_name;
  };

  int push(Tensor value, std::vector<int> parents,
           std::function<void(Tape&, int)> backprop);
  bool needs_grad(const std::vector<int>& parents) const;
  Tensor& gbuf(int id) { return nodes_[id].grad; }
  const Tensor& val(int id) const { return nodes_[id].value; }
  void check(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace otclab
