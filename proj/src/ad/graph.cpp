#include "ad/graph.hpp"
#include "simd/kernels.hpp"
#include <unordered_set>

namespace vf::ad {

Val constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    return n;
}

Val leaf(Tensor v, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = true;
    n->is_leaf = true;
    n->name = std::move(name);
    return n;
}

void accumulate(Node& n, const Tensor& g) {
    VF_CHECK(g.same_shape(n.value), "grad shape mismatch on node '" << n.name << "'");
    Tensor& dst = n.ensure_grad();
    simd::active().axpy(g.numel(), 1.0, g.data(), dst.data());
}

std::vector<Node*> topo_order(const Val& root) {
    // Emulated-recursion post-order DFS: the stack is always a single path,
    // each node expanded exactly once, so shared subgraphs (residual
    // connections) stay linear and appear once in the order.
    std::vector<Node*> order;
    std::unordered_set<Node*> started;
    std::vector<std::pair<Node*, size_t>> stack;
    if (!root->requires_grad) return order;
    started.insert(root.get());
    stack.emplace_back(root.get(), 0);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && started.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

void backward(const Val& root, double seed) {
    VF_CHECK(root->value.numel() == 1, "backward expects a scalar root");
    if (!root->requires_grad) return;
    std::vector<Node*> order = topo_order(root);
    root->ensure_grad()[0] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->has_grad()) n->backprop(*n);
    }
}

} // namespace vf::ad
