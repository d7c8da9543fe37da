#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mffssr/tensor.hpp"

namespace mffssr {

class Node;
using NodeRef = std::shared_ptr<Node>;

// One vertex of the reverse-mode tape. Interior nodes hold the op output
// plus a closure that routes the output gradient to the input gradients.
class Node {
public:
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    bool is_leaf = false;
    std::string name;

    std::vector<NodeRef> inputs;
    std::function<void(Node&)> backward_fn;

    void accumulate_grad(const Tensor& g);
    void zero_grad();
    // Gradient with zeros if nothing was accumulated yet.
    const Tensor& grad_or_zeros();
};

// Graph recording is on by default; inference paths disable it so
// intermediate activations are released as soon as their consumers finish.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

NodeRef constant(Tensor value, std::string name = "");
NodeRef parameter(Tensor value, std::string name);

// Interior node; keeps inputs/backward only while grad mode is on and at
// least one input requires gradients.
NodeRef make_op(Tensor value, std::vector<NodeRef> inputs,
                std::function<void(Node&)> backward_fn);

// Reverse-mode sweep from a scalar root: topological order by depth-first
// search, then backward closures in reverse. Leaf gradients accumulate, so
// callers zero parameter grads between steps.
void backward(const NodeRef& root);

struct NamedParam {
    std::string name;
    NodeRef node;
};

}  // namespace mffssr
