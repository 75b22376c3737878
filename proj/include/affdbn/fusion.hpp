#pragma once

#include "affdbn/common.hpp"
#include "affdbn/dbn.hpp"
#include "affdbn/rbm.hpp"

#include <map>
#include <vector>

namespace affdbn {

using ModalityVectors = std::map<Modality, Vector>;
using ModalityMatrices = std::map<Modality, Matrix>;

/// The 11 subsets of the four modalities with at least two members:
/// 6 pairs, then 4 triples, then the full set; canonical order within each.
std::vector<ModalitySet> multimodal_combinations();

/// Concatenates the requested modalities in canonical order.
Vector early_fuse(const ModalityVectors& parts, const ModalitySet& modalities);

/// Column-wise concatenation of per-modality matrices in canonical order.
Matrix early_fuse(const ModalityMatrices& parts, const ModalitySet& modalities);

/// One RBM per modality (hidden size = first architecture entry), then a
/// joint DBN over the concatenated per-modality activations.
struct LateFusionModel {
  Architecture architecture;
  TrainConfig config;
  std::map<Modality, RbmParams<double>> per_modality;
  DbnModel joint;

  ModalitySet modalities() const;
};

/// Sub-seed of the unimodal RBM for `m`.
std::uint64_t late_modality_seed(std::uint64_t seed, Modality m);
/// Sub-seed of the joint DBN.
std::uint64_t late_joint_seed(std::uint64_t seed);

LateFusionModel train_late_fusion(const ModalityMatrices& data, const Architecture& architecture,
                                  const TrainConfig& config);

Matrix represent_late(const ModalityMatrices& data, const LateFusionModel& model);

}  // namespace affdbn
