#include "icumm/tensor.hpp"

#include <cmath>
#include <sstream>

#include "icumm/errors.hpp"

namespace icumm {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s) : shape(std::move(s)), values(shape_size(shape), 0.0) {}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
}

Tensor Tensor::vector(std::initializer_list<double> v) {
  return Tensor({v.size()}, std::vector<double>(v));
}

Tensor Tensor::vector(std::vector<double> v) {
  const auto n = v.size();
  return Tensor({n}, std::move(v));
}

void Tensor::check_invariants() const {
  for (auto d : shape) {
    if (d == 0) throw InternalError("tensor has zero-length dimension " + shape_string(shape));
  }
  if (shape_size(shape) != values.size()) throw InternalError("tensor size/shape mismatch");
  if (!grad.empty() && grad.size() != values.size()) throw InternalError("tensor grad size mismatch");
  if (!all_finite()) throw InternalError("tensor holds non-finite values");
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : grad) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace icumm
