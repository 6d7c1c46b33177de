#include "wcad/tape.hpp"

namespace wcad {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* Tape::active() { return g_active_tape; }

bool Tape::tracked(const Tensor& t) const {
    return (t.owner == this && t.node >= 0) || t.requires_grad();
}

int Tape::input_id(const Tensor& t) {
    if (t.owner == this && t.node >= 0) return t.node;
    if (t.requires_grad()) {
        Node leaf;
        leaf.numel = t.numel();
        leaf.leaf_grad = t.grad_buffer();
        nodes_.push_back(std::move(leaf));
        return static_cast<int>(nodes_.size()) - 1;
    }
    return -1;
}

int Tape::record(size_t out_numel, BackwardFn fn) {
    Node node;
    node.numel = out_numel;
    node.fn = std::move(fn);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

float* Tape::grad_of(int id) {
    Node& node = nodes_[static_cast<size_t>(id)];
    if (node.leaf_grad) return node.leaf_grad->v.data();
    auto& g = grads_[static_cast<size_t>(id)];
    if (g.empty()) g.assign(node.numel, 0.0f);
    return g.data();
}

void Tape::backward(const Tensor& loss) {
    if (loss.owner != this || loss.node < 0) {
        throw NumericError("backward through a tensor not recorded on this tape");
    }
    if (loss.numel() != 1) {
        throw ShapeError("backward requires a scalar loss, got " + shape_str(loss.shape()));
    }
    grads_.assign(nodes_.size(), {});
    grads_[static_cast<size_t>(loss.node)].assign(1, 1.0f);
    for (int id = loss.node; id >= 0; --id) {
        Node& node = nodes_[static_cast<size_t>(id)];
        if (!node.fn) continue;  // leaf
        auto& g = grads_[static_cast<size_t>(id)];
        if (g.empty()) continue;  // not reachable from loss
        node.fn(*this, g.data());
        g.clear();
        g.shrink_to_fit();
    }
    grads_.clear();
}

TapeGuard::TapeGuard(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeGuard::~TapeGuard() { g_active_tape = previous_; }

NoGradGuard::NoGradGuard() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradGuard::~NoGradGuard() { g_active_tape = previous_; }

}  // namespace wcad
