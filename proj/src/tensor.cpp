#include "coopsc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "coopsc/error.hpp"

namespace coopsc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kState: return "state";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kVersion: return "version";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

std::size_t element_count(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(dims[i]);
  }
  return s;
}

namespace {

void check_dims(const Shape& dims) {
  if (dims.empty() || dims.size() > 5)
    throw Error(ErrorKind::kShape, "tensor rank must be 1..5, got " + std::to_string(dims.size()));
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i] == 0)
      throw Error(ErrorKind::kShape, "tensor axis " + std::to_string(i) + " has zero extent");
}

}  // namespace

Tensor::Tensor(Shape dims, double fill) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(element_count(dims_), fill);
}

Tensor::Tensor(Shape dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (data_.size() != element_count(dims_))
    throw Error(ErrorKind::kShape, "data length " + std::to_string(data_.size()) +
                                       " does not match dims " + shape_string(dims_));
}

std::size_t Tensor::flat_index(std::initializer_list<std::size_t> index) const {
  if (index.size() != dims_.size())
    throw Error(ErrorKind::kShape, "index rank mismatch");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= dims_[axis])
      throw Error(ErrorKind::kShape, "index out of range on axis " + std::to_string(axis));
    flat = flat * dims_[axis] + i;
    ++axis;
  }
  return flat;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return data_[flat_index(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const { return data_[flat_index(index)]; }

Tensor Tensor::reshaped(Shape dims) const {
  if (element_count(dims) != data_.size())
    throw Error(ErrorKind::kShape, "cannot reshape " + shape_string(dims_) + " to " + shape_string(dims));
  return Tensor(std::move(dims), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace coopsc
