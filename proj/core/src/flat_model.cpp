#include "guardfl/flat_model.hpp"

#include "guardfl/errors.hpp"

namespace guardfl {

FlatModel::FlatModel(Vec params, std::vector<LayerSpec> layers)
    : params_(std::move(params)), layers_(std::move(layers)) {
  std::size_t expected_offset = 0;
  for (const LayerSpec& layer : layers_) {
    if (layer.offset != expected_offset) {
      throw ShapeError("FlatModel: layer '" + layer.name + "' is not contiguous");
    }
    expected_offset += layer.length;
  }
  if (expected_offset != params_.size()) {
    throw ShapeError("FlatModel: layer lengths do not cover the parameter vector");
  }
}

FlatModel FlatModel::zeros_like(const FlatModel& other) {
  return FlatModel(Vec(other.size(), 0.0), other.layers_);
}

std::span<const double> FlatModel::layer_view(std::size_t index) const {
  const LayerSpec& layer = layers_.at(index);
  return {params_.data() + layer.offset, layer.length};
}

std::span<double> FlatModel::layer_view(std::size_t index) {
  const LayerSpec& layer = layers_.at(index);
  return {params_.data() + layer.offset, layer.length};
}

FlatModel& FlatModel::add_scaled(const FlatModel& other, double factor) {
  if (!same_shape(other)) throw ShapeError("FlatModel::add_scaled: layer specs differ");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params_[i] += factor * other.params_[i];
  }
  return *this;
}

FlatModel& FlatModel::scale(double factor) {
  for (double& p : params_) p *= factor;
  return *this;
}

std::vector<LayerSpec> FlatModel::grouped_layers() const {
  std::vector<LayerSpec> groups;
  for (const LayerSpec& layer : layers_) {
    const std::string group = layer.name.substr(0, layer.name.find('.'));
    if (!groups.empty() && groups.back().name == group) {
      groups.back().length += layer.length;
    } else {
      groups.push_back({group, layer.offset, layer.length});
    }
  }
  return groups;
}

FlatModel subtract(const FlatModel& a, const FlatModel& b) {
  if (!a.same_shape(b)) throw ShapeError("subtract: layer specs differ");
  FlatModel out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.params()[i] -= b.params()[i];
  return out;
}

double l2_distance(const FlatModel& a, const FlatModel& b) {
  if (!a.same_shape(b)) throw ShapeError("l2_distance: layer specs differ");
  return l2_distance(std::span<const double>(a.params()),
                     std::span<const double>(b.params()));
}

}  // namespace guardfl
