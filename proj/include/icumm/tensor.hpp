#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace icumm {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. `grad` is empty until a gradient is attached.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(Shape s);
  Tensor(Shape s, std::vector<double> v);

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor vector(std::initializer_list<double> v);
  static Tensor vector(std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool has_grad() const { return !grad.empty(); }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  /// Element (r, c) of a rank-2 tensor.
  double& at(std::size_t r, std::size_t c) { return values[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * shape[1] + c]; }

  std::span<double> data() { return values; }
  std::span<const double> data() const { return values; }

  /// Checks every tensor invariant; throws InternalError on violation.
  void check_invariants() const;
  bool all_finite() const;
};

}  // namespace icumm
