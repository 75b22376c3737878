#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace affdbn {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

// Enumerators are listed in canonical (alphabetical) order; every
// concatenation of modalities follows this order.
enum class Modality { arousal, audio, valence, visual };

inline constexpr std::array<Modality, 4> kAllModalities = {
    Modality::arousal, Modality::audio, Modality::valence, Modality::visual};

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view name);

using ModalitySet = std::vector<Modality>;

/// Sorts into canonical order and rejects duplicates.
ModalitySet canonical(ModalitySet set);
/// "valence,visual" or "valence+visual" -> canonical set.
ModalitySet parse_modality_set(std::string_view text);
/// Joins with '+', canonical order.
std::string to_string(const ModalitySet& set);

enum class Label { deceptive, truthful };

std::string_view to_string(Label label);
Label parse_label(std::string_view name);

inline bool is_deceptive(Label label) { return label == Label::deceptive; }

}  // namespace affdbn
