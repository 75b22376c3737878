#include "affdbn/align.hpp"

#include <string>

namespace affdbn {

namespace {

Matrix clamp_unit(const Matrix& x) { return x.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace

std::uint64_t aligned_av_seed(std::uint64_t seed, std::size_t layer, StreamSeeding seeding) {
  const std::string stream = seeding == StreamSeeding::shared ? "aligned.layer" : "aligned.av.layer";
  return derive_seed(seed, stream + std::to_string(layer));
}

std::uint64_t aligned_affect_seed(std::uint64_t seed, std::size_t layer, StreamSeeding seeding) {
  const std::string stream = seeding == StreamSeeding::shared ? "aligned.layer" : "aligned.affect.layer";
  return derive_seed(seed, stream + std::to_string(layer));
}

AlignedDbnModel train_affect_aligned(const Matrix& av_data, const Matrix& affect_data,
                                     const Architecture& architecture, const TrainConfig& config,
                                     StreamSeeding seeding) {
  architecture.validate();
  config.validate();
  if (av_data.rows() != affect_data.rows())
    throw std::invalid_argument("train_affect_aligned: AV and affect data have different row counts");
  if (av_data.rows() < 2) throw std::invalid_argument("train_affect_aligned: at least two rows are required");

  AlignedDbnModel model{architecture, config, {architecture, config, {}}, {architecture, config, {}}, {}};
  Matrix av_input = av_data;
  Matrix affect_input = affect_data;
  const auto depth = architecture.layer_sizes.size();
  for (std::size_t l = 0; l < depth; ++l) {
    const Index width = architecture.layer_sizes[l];
    auto affect_layer = train_rbm(affect_input, width, config.with_seed(aligned_affect_seed(config.seed, l, seeding)));
    auto av_layer = train_rbm(av_input, width, config.with_seed(aligned_av_seed(config.seed, l, seeding)));

    const Matrix x = transform(av_input, av_layer);
    const Matrix a = transform(affect_input, affect_layer);
    auto t = kabsch(x, a);
    const Matrix aligned = align_apply(x, t);

    av_input = l + 1 < depth ? clamp_unit(aligned) : aligned;
    affect_input = a;
    model.av.layers.push_back(std::move(av_layer));
    model.affect.layers.push_back(std::move(affect_layer));
    model.transforms.push_back(std::move(t));
  }
  return model;
}

Matrix represent_aligned(const Matrix& av_data, const AlignedDbnModel& model) {
  if (model.av.layers.empty()) throw std::invalid_argument("represent_aligned: model has no layers");
  if (model.transforms.size() != model.av.layers.size())
    throw std::invalid_argument("represent_aligned: transform count does not match layer count");
  if (av_data.cols() != model.av.input_width())
    throw std::invalid_argument("represent_aligned: input width does not match the AV model");

  Matrix out = av_data;
  const auto depth = model.av.layers.size();
  for (std::size_t l = 0; l < depth; ++l) {
    const Matrix aligned = align_apply(transform(out, model.av.layers[l]), model.transforms[l]);
    out = l + 1 < depth ? clamp_unit(aligned) : aligned;
  }
  return out;
}

}  // namespace affdbn
