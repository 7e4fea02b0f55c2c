#include "tango/latent.hpp"

#include <cmath>

#include "tango/errors.hpp"

namespace tango {

std::string LatentShape::to_string() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" +
         std::to_string(width);
}

LatentTensor::LatentTensor(LatentShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (shape_.numel() != values_.size()) {
    throw ContractError("latent shape " + shape_.to_string() + " does not match " +
                        std::to_string(values_.size()) + " values");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractError("non-finite latent value");
  }
}

LatentTensor LatentTensor::zeros(LatentShape shape) {
  return LatentTensor(shape, std::vector<double>(shape.numel(), 0.0));
}

LatentTensor LatentTensor::from_tensor(const Tensor& t) {
  const auto& s = t.shape();
  switch (s.size()) {
    case 1: return LatentTensor({s[0], 1, 1}, t.values());
    case 3: return LatentTensor({s[0], s[1], s[2]}, t.values());
    default: throw ContractError("latent needs a rank-1 or rank-3 tensor");
  }
}

double LatentTensor::at(std::size_t c, std::size_t h, std::size_t w) const {
  if (c >= shape_.channels || h >= shape_.height || w >= shape_.width) {
    throw IndexError("latent index out of range");
  }
  return values_[(c * shape_.height + h) * shape_.width + w];
}

Tensor LatentTensor::to_tensor() const {
  return Tensor({shape_.channels, shape_.height, shape_.width}, values_);
}

void require_same_shape(const LatentTensor& a, const LatentTensor& b,
                        const char* what) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(what) + ": latent shape mismatch " +
                        a.shape().to_string() + " vs " + b.shape().to_string());
  }
}

LatentTensor axpby(double a, const LatentTensor& x, double b,
                   const LatentTensor& y) {
  require_same_shape(x, y, "axpby");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
  return LatentTensor(x.shape(), std::move(out));
}

}  // namespace tango
