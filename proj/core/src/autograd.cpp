#include "mffssr/autograd.hpp"

#include <algorithm>
#include <unordered_set>

#include "mffssr/errors.hpp"

namespace mffssr {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void Node::accumulate_grad(const Tensor& g) {
    if (grad.empty()) grad = Tensor(value.shape());
    check_same_shape(grad, g, "accumulate_grad");
    for (std::int64_t i = 0; i < grad.numel(); ++i) grad[i] += g[i];
}

void Node::zero_grad() {
    if (!grad.empty()) grad.fill(0.0);
}

const Tensor& Node::grad_or_zeros() {
    if (grad.empty()) grad = Tensor(value.shape());
    return grad;
}

NodeRef constant(Tensor value, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->is_leaf = true;
    n->requires_grad = false;
    n->name = std::move(name);
    return n;
}

NodeRef parameter(Tensor value, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->is_leaf = true;
    n->requires_grad = true;
    n->name = std::move(name);
    return n;
}

NodeRef make_op(Tensor value, std::vector<NodeRef> inputs,
                std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool needs = false;
    if (g_grad_enabled) {
        for (const auto& in : inputs) needs = needs || in->requires_grad;
    }
    n->requires_grad = needs;
    if (needs) {
        n->inputs = std::move(inputs);
        n->backward_fn = std::move(backward_fn);
    }
    return n;
}

void backward(const NodeRef& root) {
    if (!(root->value.shape() == Shape{1, 1, 1, 1})) {
        throw ShapeError("backward: root must be scalar (1, 1, 1, 1), actual " +
                         root->value.shape().str());
    }
    if (!root->requires_grad) return;

    // Iterative post-order DFS over the recorded graph.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        size_t next_input;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_input < f.node->inputs.size()) {
            Node* child = f.node->inputs[f.next_input++].get();
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->accumulate_grad(Tensor::scalar(1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

}  // namespace mffssr
