#include "semenet/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "semenet/error.hpp"

namespace semenet {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw InvalidInputError("tensor data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_str(shape_));
  }
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::initializer_list<T> data)
    : Tensor(std::move(shape), std::vector<T>(data)) {}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw InvalidInputError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace semenet
