#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtp::numerics {

using Shape = std::vector<std::int64_t>;

/// Raised on shape mismatches, non-finite values and other numeric contract
/// violations inside the tensor engine.
class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

std::string shape_to_string(const Shape &shape);
std::int64_t shape_numel(const Shape &shape);

/// Dense row-major tensor. The buffer is shared between copies and treated as
/// immutable; `mutable_data()` detaches a private copy when the buffer is
/// shared, so a tensor captured by a graph is never modified behind its back.
template <typename T>
class Tensor {
   public:
    Tensor() : Tensor(Shape{0}) {}
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<T> data);

    static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }
    static Tensor full(Shape shape, T value);

    const Shape &shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::int64_t dim(int axis) const;
    std::int64_t numel() const { return static_cast<std::int64_t>(data_->size()); }

    std::span<const T> data() const { return *data_; }
    std::span<T> mutable_data();

    T item() const;
    T at(std::int64_t row, std::int64_t col) const;

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool flag) { requires_grad_ = flag; }

    /// Same buffer, different view of the extents.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const;
    bool bitwise_equal(const Tensor &other) const;

   private:
    Shape shape_;
    std::shared_ptr<std::vector<T>> data_;
    bool requires_grad_ = false;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace mtp::numerics
