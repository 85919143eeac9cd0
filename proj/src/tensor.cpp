#include "lifb/tensor.hpp"

#include <sstream>

namespace lifb {

static size_t checked_product(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero-sized dimension");
        if (n > SIZE_MAX / d) throw std::invalid_argument("Tensor: shape overflow");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<size_t> shape, real fill)
    : shape_(std::move(shape)), data_(checked_product(shape_), fill) {}

Tensor::Tensor(std::vector<size_t> shape, std::vector<real> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_product(shape_) != data_.size()) {
        throw std::invalid_argument("Tensor: value count " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
}

size_t Tensor::dim(size_t i) const {
    if (i >= shape_.size()) {
        throw std::invalid_argument("Tensor::dim: axis " + std::to_string(i) +
                                    " out of range for shape " + shape_str());
    }
    return shape_[i];
}

real& Tensor::at(size_t i) {
    if (i >= data_.size()) {
        throw std::out_of_range("Tensor::at: index " + std::to_string(i) +
                                " out of range (size " + std::to_string(data_.size()) + ")");
    }
    return data_[i];
}

real Tensor::at(size_t i) const {
    if (i >= data_.size()) {
        throw std::out_of_range("Tensor::at: index " + std::to_string(i) +
                                " out of range (size " + std::to_string(data_.size()) + ")");
    }
    return data_[i];
}

size_t Tensor::offset(std::initializer_list<size_t> idx) const {
    if (idx.size() != shape_.size()) {
        throw std::out_of_range("Tensor::at: rank mismatch, got " + std::to_string(idx.size()) +
                                " indices for shape " + shape_str());
    }
    size_t off = 0;
    size_t axis = 0;
    for (size_t v : idx) {
        if (v >= shape_[axis]) {
            throw std::out_of_range("Tensor::at: index " + std::to_string(v) + " out of range on axis " +
                                    std::to_string(axis) + " for shape " + shape_str());
        }
        off = off * shape_[axis] + v;
        ++axis;
    }
    return off;
}

void Tensor::fill(real v) {
    for (auto& x : data_) x = v;
}

void Tensor::add_(const Tensor& other) {
    require_same_shape(*this, other, "Tensor::add_");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void Tensor::scale_(real s) {
    for (auto& x : data_) x *= s;
}

Tensor Tensor::reshaped(std::vector<size_t> new_shape) const {
    if (checked_product(new_shape) != data_.size()) {
        throw std::invalid_argument("Tensor::reshaped: new shape " + shape_to_string(new_shape) +
                                    " has wrong element count for " + shape_str());
    }
    Tensor out;
    out.shape_ = std::move(new_shape);
    out.data_ = data_;
    return out;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

std::string shape_to_string(const std::vector<size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(where) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

} // namespace lifb
