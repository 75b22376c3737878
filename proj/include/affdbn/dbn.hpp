#pragma once

#include "affdbn/common.hpp"
#include "affdbn/rbm.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace affdbn {

/// Hidden layer sizes, bottom to top. "512-256-2" or "2".
struct Architecture {
  std::vector<Index> layer_sizes;

  static Architecture parse(std::string_view text);
  std::string to_string() const;

  Index depth() const { return static_cast<Index>(layer_sizes.size()); }
  Index output_size() const { return layer_sizes.back(); }
  bool stacked() const { return layer_sizes.size() > 1; }
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// The eight architectures of the experiment grid:
/// 2, 128-64-2, 256-128-2, 512-256-2, 4, 128-64-4, 256-128-4, 512-256-4.
std::vector<Architecture> grid_architectures();

struct DbnModel {
  Architecture architecture;
  TrainConfig config;
  std::vector<RbmParams<double>> layers;

  Index input_width() const { return layers.front().n_visible(); }
  Index output_width() const { return layers.back().n_hidden(); }
};

/// Seed used for layer `layer` of a DBN trained with run seed `seed`.
std::uint64_t dbn_layer_seed(std::uint64_t seed, std::size_t layer);

/// Greedy layer-wise training; each layer after the first is trained on the
/// mean-field activations of the layer below.
DbnModel train_dbn(const Matrix& data, const Architecture& architecture, const TrainConfig& config);

/// Mean-field pass through every layer. Rows are independent.
Matrix represent(const Matrix& data, const DbnModel& model);

}  // namespace affdbn
