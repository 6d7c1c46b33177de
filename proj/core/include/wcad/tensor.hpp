#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "wcad/error.hpp"
#include "wcad/rng.hpp"

namespace wcad {

class Tape;

using Shape = std::vector<int>;

size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);

// ---------------------------------------------------------------------------
// Tracked float buffer. Every tensor/scratch allocation goes through this so
// the allocator high-water mark can stand in for peak device memory.
// ---------------------------------------------------------------------------
struct Buffer {
    explicit Buffer(size_t n);
    ~Buffer();
    Buffer(const Buffer&) = delete;
    Buffer& operator=(const Buffer&) = delete;
    std::vector<float> v;
};

using BufferPtr = std::shared_ptr<Buffer>;
BufferPtr make_buffer(size_t n);

size_t current_bytes();
size_t peak_bytes();
void reset_peak_bytes();

// ---------------------------------------------------------------------------
// Tensor: dense rank<=4 float array, row-major, shallow-copy value semantics.
// Buffers are immutable once produced by an op; in-place writes are reserved
// for initialization and optimizer updates on parameters.
// ---------------------------------------------------------------------------
class Tensor {
  public:
    Tensor() = default;
    Tensor(Shape shape, BufferPtr values, bool requires_grad = false);

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, float value, bool requires_grad = false);
    static Tensor from(const Shape& shape, std::vector<float> values, bool requires_grad = false);
    static Tensor uniform(const Shape& shape, float lo, float hi, Rng& rng, bool requires_grad = false);
    static Tensor normal(const Shape& shape, Rng& rng, bool requires_grad = false);
    static Tensor scalar(float value);

    bool defined() const { return static_cast<bool>(values_); }
    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    size_t numel() const { return values_ ? values_->v.size() : 0; }

    float* data() { return values_->v.data(); }
    const float* data() const { return values_->v.data(); }
    const BufferPtr& buffer() const { return values_; }

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool rg);
    bool has_grad() const { return static_cast<bool>(grad_); }
    float* grad_data();
    const float* grad_data() const;
    const BufferPtr& grad_buffer() const { return grad_; }
    void ensure_grad();  // allocates a zero grad buffer if missing
    void zero_grad();

    float item() const;
    Tensor deep_clone() const;  // fresh value buffer, grad not copied

    bool all_finite() const;

    // autograd bookkeeping (set by ops when recording on a tape)
    int node = -1;
    const Tape* owner = nullptr;

  private:
    Shape shape_;
    BufferPtr values_;
    BufferPtr grad_;
    bool requires_grad_ = false;
};

// ---------------------------------------------------------------------------
// ParamStore: ordered name -> parameter map. std::map keeps iteration
// lexicographic, which fixes initialization-independent ordering for
// checkpoints and optimizers.
// ---------------------------------------------------------------------------
class ParamStore {
  public:
    void add(const std::string& name, Tensor t);
    bool contains(const std::string& name) const;
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    void zero_grads();
    size_t size() const { return params_.size(); }

    // merge entries of other into this store (names must not collide);
    // handles are shared, requires_grad flags preserved
    void merge(const ParamStore& other);
    void merge_prefixed(const ParamStore& other, const std::string& prefix);

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

  private:
    std::map<std::string, Tensor> params_;
};

}  // namespace wcad
