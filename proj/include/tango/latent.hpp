#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tango/tensor.hpp"

namespace tango {

struct LatentShape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t numel() const { return channels * height * width; }
  // Spatial positions; each carries a `channels`-vector.
  std::size_t positions() const { return height * width; }
  bool operator==(const LatentShape&) const = default;
  std::string to_string() const;
};

// Audio prior z of shape C x T' x F', channel-major. Values are always finite.
class LatentTensor {
 public:
  LatentTensor() = default;
  LatentTensor(LatentShape shape, std::vector<double> values);

  static LatentTensor zeros(LatentShape shape);
  static LatentTensor from_tensor(const Tensor& t);

  const LatentShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(std::size_t c, std::size_t h, std::size_t w) const;

  Tensor to_tensor() const;

  bool operator==(const LatentTensor&) const = default;

 private:
  LatentShape shape_{};
  std::vector<double> values_;
};

void require_same_shape(const LatentTensor& a, const LatentTensor& b,
                        const char* what);

// a * x + b * y, elementwise.
LatentTensor axpby(double a, const LatentTensor& x, double b,
                   const LatentTensor& y);

}  // namespace tango
