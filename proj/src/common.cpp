#include "affdbn/common.hpp"

#include <algorithm>
#include <stdexcept>

namespace affdbn {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::arousal: return "arousal";
    case Modality::audio: return "audio";
    case Modality::valence: return "valence";
    case Modality::visual: return "visual";
  }
  return "?";
}

Modality parse_modality(std::string_view name) {
  for (Modality m : kAllModalities)
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown modality '" + std::string(name) + "'");
}

ModalitySet canonical(ModalitySet set) {
  std::sort(set.begin(), set.end());
  if (std::adjacent_find(set.begin(), set.end()) != set.end())
    throw std::invalid_argument("duplicate modality in set");
  return set;
}

ModalitySet parse_modality_set(std::string_view text) {
  ModalitySet set;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of(",+", start);
    if (end == std::string_view::npos) end = text.size();
    auto token = text.substr(start, end - start);
    if (token.empty()) throw std::invalid_argument("empty modality name in '" + std::string(text) + "'");
    set.push_back(parse_modality(token));
    start = end + 1;
  }
  return canonical(std::move(set));
}

std::string to_string(const ModalitySet& set) {
  std::string out;
  for (Modality m : set) {
    if (!out.empty()) out += '+';
    out += to_string(m);
  }
  return out;
}

std::string_view to_string(Label label) {
  return label == Label::deceptive ? "deceptive" : "truthful";
}

Label parse_label(std::string_view name) {
  if (name == "deceptive") return Label::deceptive;
  if (name == "truthful") return Label::truthful;
  throw std::invalid_argument("unknown label '" + std::string(name) + "' (expected deceptive or truthful)");
}

}  // namespace affdbn
