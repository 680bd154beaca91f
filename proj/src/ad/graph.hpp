#pragma once
#include <functional>
#include <memory>
#include <string>
#include <vector>
#include "core/tensor.hpp"

namespace vf::ad {

// Reverse-mode tape. Each op allocates a Node whose backprop closure reads
// this node's grad and accumulates into the inputs' grads. Graphs are built
// per forward pass; leaves (parameters) persist across graphs and keep
// accumulating grads until an optimizer step clears them.
struct Node;
using Val = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool is_leaf = false;
    std::vector<Val> inputs;
    std::function<void(Node&)> backprop;
    std::string name;

    Tensor& ensure_grad() {
        if (!grad.same_shape(value)) grad = Tensor(value.shape());
        return grad;
    }
    bool has_grad() const { return grad.same_shape(value); }
};

Val constant(Tensor v);
Val leaf(Tensor v, std::string name = "");

// Accumulate g into n's grad (allocating zeros first if needed).
void accumulate(Node& n, const Tensor& g);

// Backpropagate from a scalar root (numel == 1), seeding with `seed`.
void backward(const Val& root, double seed = 1.0);

// Nodes reachable from root that require grad, in topological order.
std::vector<Node*> topo_order(const Val& root);

} // namespace vf::ad
