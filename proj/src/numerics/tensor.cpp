#include "mtp/numerics/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace mtp::numerics {

std::string shape_to_string(const Shape &shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

std::int64_t shape_numel(const Shape &shape) {
    std::int64_t n = 1;
    for (auto e : shape) {
        if (e < 0) throw NumericError("negative extent in shape " + shape_to_string(shape));
        n *= e;
    }
    return n;
}

template <typename T>
Tensor<T>::Tensor(Shape shape)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<T>>(static_cast<std::size_t>(shape_numel(shape_)), T(0))) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<T>>(std::move(data))) {
    if (shape_numel(shape_) != static_cast<std::int64_t>(data_->size())) {
        throw NumericError("tensor shape " + shape_to_string(shape_) + " does not match buffer of " +
                           std::to_string(data_->size()) + " elements");
    }
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
    auto n = static_cast<std::size_t>(shape_numel(shape));
    return Tensor(std::move(shape), std::vector<T>(n, value));
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
    if (axis < 0) axis += rank();
    if (axis < 0 || axis >= rank()) {
        throw NumericError("axis out of range for shape " + shape_to_string(shape_));
    }
    return shape_[static_cast<std::size_t>(axis)];
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
    if (data_.use_count() > 1) data_ = std::make_shared<std::vector<T>>(*data_);
    return *data_;
}

template <typename T>
T Tensor<T>::item() const {
    if (data_->size() != 1) {
        throw NumericError("item() on tensor of shape " + shape_to_string(shape_));
    }
    return (*data_)[0];
}

template <typename T>
T Tensor<T>::at(std::int64_t row, std::int64_t col) const {
    if (rank() != 2) throw NumericError("at(row, col) requires a matrix");
    return (*data_)[static_cast<std::size_t>(row * shape_[1] + col)];
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
    if (shape_numel(shape) != numel()) {
        throw NumericError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    Tensor out = *this;
    out.shape_ = std::move(shape);
    return out;
}

template <typename T>
bool Tensor<T>::all_finite() const {
    for (T v : *data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template <typename T>
bool Tensor<T>::bitwise_equal(const Tensor &other) const {
    return shape_ == other.shape_ && data_->size() == other.data_->size() &&
           std::memcmp(data_->data(), other.data_->data(), data_->size() * sizeof(T)) == 0;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace mtp::numerics
