#pragma once

#include "tk/tensor.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace tk::ag {

struct Node;
using Var = std::shared_ptr<Node>;

// One vertex of the computation graph. `backward` reads this node's grad
// and accumulates into the parents' grads. Nodes that do not require
// gradients drop their parent edges so dead subgraphs free early.
struct Node {
    Tensor value;
    Tensor grad; // allocated only when requires_grad
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backward;
};

Var constant(Tensor value);
Var leaf(Tensor value); // trainable input, grad accumulates across backward calls

// Differentiable primitive set. All operands are matrices; scalars are 1x1.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b); // elementwise
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var add_rowvec(const Var& a, const Var& row); // row is 1 x n, broadcast over rows
Var mul_scalar(const Var& a, const Var& s);   // s is 1 x 1
Var vexp(const Var& a);
Var vlog(const Var& a); // natural log; input must be strictly positive
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var clamp_min(const Var& a, double floor);
Var sum_all(const Var& a);            // 1 x 1
Var sum_axis(const Var& a, int axis); // 0: down rows -> 1 x n, 1: across cols -> m x 1
Var concat_cols(const std::vector<Var>& parts);
Var softmax_rows(const Var& a); // max-stabilized
Var masked_fill(const Var& a, const Tensor& keep, double fill); // keep[i]==0 -> fill
Var cosine_rows(const Var& a, const Var& b); // (a.rows x b.rows); zero-norm rows give 0
Var gather_rows(const Var& table, const std::vector<std::uint32_t>& ids);
Var gather_flat(const Var& a, const std::vector<std::size_t>& idx); // result idx.size() x 1

// Reverse pass from a scalar root. Leaf grads accumulate; run exactly once
// per graph (shared leaves across graphs are fine, shared interior nodes
// across separate backward calls are not).
void backward(const Var& root);

} // namespace tk::ag
