#include "affdbn/dbn.hpp"

#include <charconv>
#include <stdexcept>

namespace affdbn {

Architecture Architecture::parse(std::string_view text) {
  Architecture a;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of("-_", start);
    if (end == std::string_view::npos) end = text.size();
    auto token = text.substr(start, end - start);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size())
      throw std::invalid_argument("invalid architecture string '" + std::string(text) + "'");
    a.layer_sizes.push_back(static_cast<Index>(value));
    start = end + 1;
  }
  a.validate();
  return a;
}

std::string Architecture::to_string() const {
  std::string out;
  for (Index s : layer_sizes) {
    if (!out.empty()) out += '-';
    out += std::to_string(s);
  }
  return out;
}

void Architecture::validate() const {
  if (layer_sizes.empty()) throw std::invalid_argument("architecture has no layers");
  for (Index s : layer_sizes)
    if (s < 1) throw std::invalid_argument("architecture layer sizes must be positive");
}

std::vector<Architecture> grid_architectures() {
  std::vector<Architecture> out;
  for (Index top : {2, 4}) {
    out.push_back({{top}});
    for (Index first : {128, 256, 512}) out.push_back({{first, first / 2, top}});
  }
  return out;
}

std::uint64_t dbn_layer_seed(std::uint64_t seed, std::size_t layer) {
  return derive_seed(seed, "dbn.layer" + std::to_string(layer));
}

DbnModel train_dbn(const Matrix& data, const Architecture& architecture, const TrainConfig& config) {
  architecture.validate();
  config.validate();
  if (data.rows() == 0 || data.cols() == 0) throw std::invalid_argument("train_dbn: empty data");

  DbnModel model{architecture, config, {}};
  Matrix input = data;
  for (std::size_t l = 0; l < architecture.layer_sizes.size(); ++l) {
    auto layer = train_rbm(input, architecture.layer_sizes[l], config.with_seed(dbn_layer_seed(config.seed, l)));
    if (l + 1 < architecture.layer_sizes.size()) input = transform(input, layer);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Matrix represent(const Matrix& data, const DbnModel& model) {
  if (model.layers.empty()) throw std::invalid_argument("represent: model has no layers");
  if (data.cols() != model.input_width())
    throw std::invalid_argument("represent: input width " + std::to_string(data.cols()) + " does not match model width " +
                                std::to_string(model.input_width()));
  Matrix out = data;
  for (const auto& layer : model.layers) out = transform(out, layer);
  return out;
}

}  // namespace affdbn
