#include "affdbn/harness.hpp"

#include "affdbn/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace affdbn {

namespace {

constexpr Index kLatentDim = 3;
constexpr double kSpeakerSpread = 0.5;
constexpr double kVideoSpread = 0.5;
constexpr double kAmplitudeCoupling = 0.3;

struct FeatureModel {
  Vector level_loading;      // latent -> level
  Vector amplitude_loading;  // latent -> log amplitude
  double base_level = 0.0;
  double base_amplitude = 1.0;
  double ar = 0.5;
};

std::vector<FeatureModel> draw_feature_models(Index count, Rng& rng) {
  std::vector<FeatureModel> out(static_cast<std::size_t>(count));
  for (auto& f : out) {
    f.level_loading = Vector(kLatentDim);
    f.amplitude_loading = Vector(kLatentDim);
    for (Index l = 0; l < kLatentDim; ++l) {
      f.level_loading(l) = rng.normal();
      f.amplitude_loading(l) = rng.normal();
    }
    // Every feature responds to the class axis by at least half a unit.
    const double sign = f.level_loading(0) < 0.0 ? -1.0 : 1.0;
    f.level_loading(0) = sign * (0.5 + std::abs(f.level_loading(0)));
    f.base_level = rng.normal();
    f.base_amplitude = rng.uniform(0.5, 1.5);
    f.ar = rng.uniform(0.3, 0.9);
  }
  return out;
}

std::string two_digit(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix, n);
  return buf;
}

}  // namespace

std::vector<SyntheticVideo> generate_synthetic_videos(const SyntheticOptions& options) {
  if (options.n_speakers < 1 || options.videos_per_speaker < 1)
    throw std::invalid_argument("synthetic: speakers and videos per speaker must be positive");
  if (options.separation < 0.0 || !std::isfinite(options.separation))
    throw std::invalid_argument("synthetic: separation must be finite and non-negative");
  if (options.min_frames < 2 || options.max_frames < options.min_frames || !(options.fps > 0.0))
    throw std::invalid_argument("synthetic: invalid frame range or fps");
  for (const auto& [m, count] : options.feature_counts)
    if (count < 1) throw std::invalid_argument("synthetic: feature counts must be positive");

  std::map<Modality, std::vector<FeatureModel>> structure;
  for (const auto& [m, count] : options.feature_counts) {
    Rng rng(derive_seed(options.seed, "synth.structure." + std::string(to_string(m))));
    structure.emplace(m, draw_feature_models(count, rng));
  }

  std::vector<SyntheticVideo> videos;
  for (int s = 0; s < options.n_speakers; ++s) {
    const std::string speaker = two_digit("s", s);
    Rng speaker_rng(derive_seed(options.seed, "synth.speaker." + speaker));
    Vector offset(kLatentDim);
    for (Index l = 0; l < kLatentDim; ++l) offset(l) = kSpeakerSpread * speaker_rng.normal();
    const bool starts_deceptive = speaker_rng.uniform() < 0.5;

    for (int v = 0; v < options.videos_per_speaker; ++v) {
      SyntheticVideo video;
      video.speaker_id = speaker;
      video.video_id = speaker + two_digit("_v", v);
      video.label = ((v % 2 == 0) == starts_deceptive) ? Label::deceptive : Label::truthful;

      Rng rng(derive_seed(options.seed, "synth.video." + video.video_id));
      Vector background = offset;
      for (Index l = 0; l < kLatentDim; ++l) background(l) += kVideoSpread * rng.normal();
      Vector informative = background;
      informative(0) += (is_deceptive(video.label) ? 0.5 : -0.5) * options.separation;

      const auto span = static_cast<std::uint64_t>(options.max_frames - options.min_frames + 1);
      const Index frames = options.min_frames + static_cast<Index>(rng.below(span));

      for (const auto& [m, features] : structure) {
        const bool carries_class =
            std::find(options.informative.begin(), options.informative.end(), m) != options.informative.end();
        const Vector& z = carries_class ? informative : background;
        FrameStream stream;
        stream.video_id = video.video_id;
        stream.modality = m;
        stream.fps = options.fps;
        stream.values.resize(frames, static_cast<Index>(features.size()));
        for (std::size_t j = 0; j < features.size(); ++j) {
          const auto& f = features[j];
          const double level = f.base_level + f.level_loading.dot(z);
          const double amplitude = f.base_amplitude * std::exp(kAmplitudeCoupling * f.amplitude_loading.dot(z));
          const double innovation = std::sqrt(1.0 - f.ar * f.ar);
          double e = rng.normal();
          for (Index t = 0; t < frames; ++t) {
            if (t > 0) e = f.ar * e + innovation * rng.normal();
            stream.values(t, static_cast<Index>(j)) = level + amplitude * e;
          }
          stream.feature_names.push_back(two_digit("f", static_cast<int>(j)));
        }
        video.streams.emplace(m, std::move(stream));
      }
      videos.push_back(std::move(video));
    }
  }
  return videos;
}

VideoRecord aggregate_record(const SyntheticVideo& video) {
  VideoRecord rec{video.video_id, video.speaker_id, video.label, {}};
  for (const auto& [m, stream] : video.streams) rec.features.emplace(m, aggregate_video(stream).values);
  return rec;
}

std::vector<VideoRecord> generate_synthetic(const SyntheticOptions& options) {
  std::vector<VideoRecord> out;
  for (const auto& v : generate_synthetic_videos(options)) out.push_back(aggregate_record(v));
  return out;
}

}  // namespace affdbn
