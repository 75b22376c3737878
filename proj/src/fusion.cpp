#include "affdbn/fusion.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace affdbn {

std::vector<ModalitySet> multimodal_combinations() {
  std::vector<ModalitySet> out;
  for (std::size_t size = 2; size <= kAllModalities.size(); ++size) {
    for (unsigned mask = 0; mask < (1U << kAllModalities.size()); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != size) continue;
      ModalitySet set;
      for (std::size_t i = 0; i < kAllModalities.size(); ++i)
        if (mask & (1U << i)) set.push_back(kAllModalities[i]);
      out.push_back(set);
    }
  }
  // Masks ascend numerically; order within a size by canonical sequence.
  std::stable_sort(out.begin(), out.end(), [](const ModalitySet& a, const ModalitySet& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

namespace {

template <typename Map>
const auto& require_part(const Map& parts, Modality m) {
  auto it = parts.find(m);
  if (it == parts.end())
    throw std::invalid_argument("missing modality '" + std::string(to_string(m)) + "'");
  return it->second;
}

}  // namespace

Vector early_fuse(const ModalityVectors& parts, const ModalitySet& modalities) {
  const ModalitySet order = canonical(modalities);
  Index width = 0;
  for (Modality m : order) width += require_part(parts, m).size();
  Vector out(width);
  Index offset = 0;
  for (Modality m : order) {
    const Vector& part = require_part(parts, m);
    out.segment(offset, part.size()) = part;
    offset += part.size();
  }
  return out;
}

Matrix early_fuse(const ModalityMatrices& parts, const ModalitySet& modalities) {
  const ModalitySet order = canonical(modalities);
  if (order.empty()) throw std::invalid_argument("early_fuse: no modalities requested");
  const Index rows = require_part(parts, order.front()).rows();
  Index width = 0;
  for (Modality m : order) {
    const Matrix& part = require_part(parts, m);
    if (part.rows() != rows) throw std::invalid_argument("early_fuse: modalities disagree on row count");
    width += part.cols();
  }
  Matrix out(rows, width);
  Index offset = 0;
  for (Modality m : order) {
    const Matrix& part = require_part(parts, m);
    out.middleCols(offset, part.cols()) = part;
    offset += part.cols();
  }
  return out;
}

ModalitySet LateFusionModel::modalities() const {
  ModalitySet out;
  for (const auto& [m, _] : per_modality) out.push_back(m);
  return out;
}

std::uint64_t late_modality_seed(std::uint64_t seed, Modality m) {
  return derive_seed(seed, "late." + std::string(to_string(m)));
}

std::uint64_t late_joint_seed(std::uint64_t seed) { return derive_seed(seed, "late.joint"); }

LateFusionModel train_late_fusion(const ModalityMatrices& data, const Architecture& architecture,
                                  const TrainConfig& config) {
  architecture.validate();
  config.validate();
  if (!architecture.stacked())
    throw std::invalid_argument("late fusion needs a stacked architecture (got '" + architecture.to_string() + "')");
  if (data.empty()) throw std::invalid_argument("late fusion: no modalities given");
  const Index rows = data.begin()->second.rows();
  for (const auto& [m, x] : data) {
    if (x.rows() != rows) throw std::invalid_argument("late fusion: modalities disagree on row count");
    if (x.rows() == 0 || x.cols() == 0)
      throw std::invalid_argument("late fusion: modality '" + std::string(to_string(m)) + "' is empty");
  }

  LateFusionModel model{architecture, config, {}, {}};
  const Index h1 = architecture.layer_sizes.front();
  ModalityMatrices activations;
  for (const auto& [m, x] : data) {
    auto layer = train_rbm(x, h1, config.with_seed(late_modality_seed(config.seed, m)));
    activations.emplace(m, transform(x, layer));
    model.per_modality.emplace(m, std::move(layer));
  }

  Architecture joint_arch{{architecture.layer_sizes.begin() + 1, architecture.layer_sizes.end()}};
  const Matrix joint_input = early_fuse(activations, model.modalities());
  model.joint = train_dbn(joint_input, joint_arch, config.with_seed(late_joint_seed(config.seed)));
  return model;
}

Matrix represent_late(const ModalityMatrices& data, const LateFusionModel& model) {
  ModalityMatrices activations;
  for (const auto& [m, layer] : model.per_modality) {
    const Matrix& x = require_part(data, m);
    if (x.cols() != layer.n_visible())
      throw std::invalid_argument("represent_late: width mismatch for modality '" + std::string(to_string(m)) + "'");
    activations.emplace(m, transform(x, layer));
  }
  return represent(early_fuse(activations, model.modalities()), model.joint);
}

}  // namespace affdbn
