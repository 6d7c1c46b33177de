#include "wcad/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace wcad {

namespace {
std::atomic<size_t> g_current_bytes{0};
std::atomic<size_t> g_peak_bytes{0};

void track_alloc(size_t bytes) {
    size_t cur = g_current_bytes.fetch_add(bytes) + bytes;
    size_t peak = g_peak_bytes.load();
    while (cur > peak && !g_peak_bytes.compare_exchange_weak(peak, cur)) {
    }
}

void track_free(size_t bytes) { g_current_bytes.fetch_sub(bytes); }
}  // namespace

Buffer::Buffer(size_t n) : v(n, 0.0f) { track_alloc(n * sizeof(float)); }
Buffer::~Buffer() { track_free(v.size() * sizeof(float)); }

BufferPtr make_buffer(size_t n) { return std::make_shared<Buffer>(n); }

size_t current_bytes() { return g_current_bytes.load(); }
size_t peak_bytes() { return g_peak_bytes.load(); }
void reset_peak_bytes() { g_peak_bytes.store(g_current_bytes.load()); }

size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape shape, BufferPtr values, bool requires_grad)
    : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
    if (shape_.size() > 4) throw ShapeError("tensor rank " + std::to_string(shape_.size()) + " exceeds 4");
    for (int d : shape_) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape_));
    }
    if (shape_numel(shape_) != values_->v.size()) {
        throw ShapeError("shape " + shape_str(shape_) + " does not match value count " +
                         std::to_string(values_->v.size()));
    }
    if (requires_grad_) ensure_grad();
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    return Tensor(shape, make_buffer(shape_numel(shape)), requires_grad);
}

Tensor Tensor::full(const Shape& shape, float value, bool requires_grad) {
    Tensor t = zeros(shape, requires_grad);
    for (auto& x : t.values_->v) x = value;
    return t;
}

Tensor Tensor::from(const Shape& shape, std::vector<float> values, bool requires_grad) {
    auto buf = make_buffer(values.size());
    buf->v = std::move(values);
    return Tensor(shape, std::move(buf), requires_grad);
}

Tensor Tensor::uniform(const Shape& shape, float lo, float hi, Rng& rng, bool requires_grad) {
    Tensor t = zeros(shape, requires_grad);
    for (auto& x : t.values_->v) x = rng.uniform(lo, hi);
    return t;
}

Tensor Tensor::normal(const Shape& shape, Rng& rng, bool requires_grad) {
    Tensor t = zeros(shape, requires_grad);
    for (auto& x : t.values_->v) x = rng.normal();
    return t;
}

Tensor Tensor::scalar(float value) { return full({1}, value); }

void Tensor::set_requires_grad(bool rg) {
    requires_grad_ = rg;
    if (rg) ensure_grad();
}

void Tensor::ensure_grad() {
    if (!grad_) grad_ = make_buffer(numel());
}

float* Tensor::grad_data() {
    ensure_grad();
    return grad_->v.data();
}

const float* Tensor::grad_data() const { return grad_ ? grad_->v.data() : nullptr; }

void Tensor::zero_grad() {
    if (grad_) std::fill(grad_->v.begin(), grad_->v.end(), 0.0f);
}

float Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of " + std::to_string(numel()) + " elements");
    return values_->v[0];
}

Tensor Tensor::deep_clone() const {
    auto buf = make_buffer(numel());
    buf->v = values_->v;
    Tensor t(shape_, std::move(buf), requires_grad_);
    return t;
}

bool Tensor::all_finite() const {
    for (float x : values_->v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void ParamStore::add(const std::string& name, Tensor t) {
    if (params_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    t.set_requires_grad(true);
    params_.emplace(name, std::move(t));
}

bool ParamStore::contains(const std::string& name) const { return params_.count(name) > 0; }

Tensor& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [name, p] : params_) p.zero_grad();
}

void ParamStore::merge(const ParamStore& other) {
    for (const auto& [name, p] : other) {
        if (params_.count(name)) throw ConfigError("parameter name collision on merge: " + name);
        params_.emplace(name, p);
    }
}

void ParamStore::merge_prefixed(const ParamStore& other, const std::string& prefix) {
    for (const auto& [name, p] : other) {
        std::string full = prefix + name;
        if (params_.count(full)) throw ConfigError("parameter name collision on merge: " + full);
        params_.emplace(full, p);
    }
}

}  // namespace wcad
