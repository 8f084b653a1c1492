#include "fedzge/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "fedzge/error.hpp"

namespace fedzge {

std::size_t shape_product(const Tensor::Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void validate_shape(const Tensor::Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto s : shape) {
    if (s == 0) throw ShapeError("tensor dimensions must be positive");
  }
}

std::string shape_string(const Tensor::Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
  std::size_t c = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
  return c;
}

void Tensor::check_finite(std::string_view where) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError(std::string(where) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view where) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(where) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out += b;
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  axpy(-1.0, b, out);
  return out;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (auto& v : out.data()) v *= s;
  return out;
}

Tensor& operator+=(Tensor& a, const Tensor& b) {
  axpy(1.0, b, a);
  return a;
}

void axpy(double s, const Tensor& b, Tensor& a) {
  require_same_shape(a, b, "axpy");
  auto out = a.data();
  auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * in[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace fedzge
