#pragma once

#include <span>
#include <string>
#include <vector>

#include "guardfl/linalg.hpp"

namespace guardfl {

struct LayerSpec {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const LayerSpec&) const = default;
};

// A model's parameters as one flat vector plus per-layer shape metadata.
// Layer entries are contiguous and cover the vector exactly; the
// constructor enforces that.
class FlatModel {
 public:
  FlatModel() = default;
  FlatModel(Vec params, std::vector<LayerSpec> layers);

  static FlatModel zeros_like(const FlatModel& other);

  std::size_t size() const { return params_.size(); }
  const Vec& params() const { return params_; }
  Vec& params() { return params_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  std::span<const double> layer_view(std::size_t index) const;
  std::span<double> layer_view(std::size_t index);
  std::span<const double> flat() const { return params_; }

  bool same_shape(const FlatModel& other) const { return layers_ == other.layers_; }

  // this += factor * other (shape-checked).
  FlatModel& add_scaled(const FlatModel& other, double factor);
  FlatModel& scale(double factor);

  // Layer entries whose names share a prefix before '.' (e.g. "fc1.w",
  // "fc1.b") merged into one contiguous span per group, in order. Feature
  // extraction treats each group as one model layer.
  std::vector<LayerSpec> grouped_layers() const;

 private:
  Vec params_;
  std::vector<LayerSpec> layers_;
};

// a - b element-wise; layer specs must match.
FlatModel subtract(const FlatModel& a, const FlatModel& b);
double l2_distance(const FlatModel& a, const FlatModel& b);

}  // namespace guardfl
