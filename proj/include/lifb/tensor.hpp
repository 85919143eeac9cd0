#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace lifb {

#ifdef LIFB_REAL_FLOAT
using real = float;
#else
using real = double;
#endif

/// Dense row-major tensor of reals. The single value carrier of the engine.
/// Accumulation order everywhere is ascending flat index.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<size_t> shape, real fill = real(0));
    Tensor(std::vector<size_t> shape, std::vector<real> values);

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    const std::vector<size_t>& shape() const { return shape_; }
    size_t ndim() const { return shape_.size(); }
    size_t dim(size_t i) const;
    size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }
    std::vector<real>& vec() { return data_; }
    const std::vector<real>& vec() const { return data_; }

    /// Bounds-checked flat element access.
    real& at(size_t i);
    real at(size_t i) const;

    /// Bounds-checked multi-index access (row-major).
    real& at(std::initializer_list<size_t> idx) { return data_[offset(idx)]; }
    real at(std::initializer_list<size_t> idx) const { return data_[offset(idx)]; }

    void fill(real v);
    void zero() { fill(real(0)); }

    /// Elementwise accumulate: this += other. Shapes must match.
    void add_(const Tensor& other);
    void scale_(real s);

    /// Reinterpret with a new shape of identical element count.
    Tensor reshaped(std::vector<size_t> new_shape) const;

    std::string shape_str() const;

private:
    size_t offset(std::initializer_list<size_t> idx) const;

    std::vector<size_t> shape_;
    std::vector<real> data_;
};

/// Throws std::invalid_argument with a message naming both shapes.
void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

/// A parameter tensor paired with its accumulated gradient.
/// Backward passes add into grad; callers zero it between steps.
struct GradPair {
    std::string name;
    Tensor value;
    Tensor grad;
    bool burst_intensity = false; // kappa-class: no weight decay, kappa update rule
    bool frozen = false;          // excluded from optimization entirely

    GradPair() = default;
    GradPair(std::string n, Tensor v)
        : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

    void zero_grad() { grad.zero(); }
};

std::string shape_to_string(const std::vector<size_t>& s);

} // namespace lifb
