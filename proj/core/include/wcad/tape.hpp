#pragma once

#include <functional>
#include <vector>

#include "wcad/tensor.hpp"

namespace wcad {

// Reverse-mode tape. Ops append nodes in forward order, which is already a
// topological order, so the backward sweep is a single reverse pass. Leaf
// nodes alias parameter .grad buffers; gradients accumulate there and the
// caller is responsible for zeroing them between steps.
//
// Recording is single-threaded per tape. Distinct tapes may run concurrently
// on different threads (the active tape is thread-local).
class Tape {
  public:
    using BackwardFn = std::function<void(Tape&, const float* grad_out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    // true if gradients must flow through t (recorded here or a parameter)
    bool tracked(const Tensor& t) const;

    // node id for an op input: existing node, fresh leaf for parameters,
    // -1 for constants (no gradient flows)
    int input_id(const Tensor& t);

    int record(size_t out_numel, BackwardFn fn);

    // accumulation target for node id; interior buffers are allocated
    // zero-filled on first touch during backward
    float* grad_of(int id);

    void backward(const Tensor& loss);

    size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        size_t numel = 0;
        BufferPtr leaf_grad;  // set for leaves only
        BackwardFn fn;        // empty for leaves
    };

    std::vector<Node> nodes_;
    std::vector<std::vector<float>> grads_;
    friend class TapeGuard;
};

// RAII: makes a tape the active one on this thread.
class TapeGuard {
  public:
    explicit TapeGuard(Tape& tape);
    ~TapeGuard();
    TapeGuard(const TapeGuard&) = delete;
    TapeGuard& operator=(const TapeGuard&) = delete;

  private:
    Tape* previous_;
};

// RAII: suspends recording (frozen forward passes whose inputs carry no
// trainable dependencies skip the tape entirely).
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    Tape* previous_;
};

}  // namespace wcad
