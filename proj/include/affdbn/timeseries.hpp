#pragma once

#include "affdbn/common.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace affdbn {

/// Number of temporal attributes computed per frame-level feature.
inline constexpr Index kAttributesPerFeature = 17;

/// Attribute names in output order.
extern const std::array<std::string_view, kAttributesPerFeature> kAttributeNames;

/// Frame-level feature values of one modality of one video.
struct FrameStream {
  std::string video_id;
  Modality modality = Modality::valence;
  Matrix values;  // frames x features
  double fps = 30.0;
  std::vector<std::string> feature_names;  // optional; empty or one per column

  Index frames() const { return values.rows(); }
  Index features() const { return values.cols(); }
};

/// Fixed-length temporal summary of one modality (17 attributes per feature).
struct AttributeVector {
  std::string video_id;
  Modality modality = Modality::valence;
  Vector values;
};

/// Pearson correlation between x[0, T-lag) and x[lag, T). Returns 0 when
/// either segment has zero variance. Throws if lag == 0 or lag >= T.
double autocorr_at_lag(std::span<const double> series, Index lag);

/// Frame lags used for the autocorrelation attributes: round(k * fps) for
/// k = 1..min(10, floor((T-1)/fps)). Empty when the series is shorter than
/// one second plus a frame.
std::vector<Index> second_lags(Index frames, double fps);

/// Linear-interpolation quantile of an ascending-sorted sample, p in [0, 1].
double sorted_quantile(std::span<const double> sorted, double p);

/// [q10 - min, q20 - q10, ..., q90 - q80].
std::array<double, 9> decile_changes(std::span<const double> series);

/// Order: mean, median, std (population), min, max, excess kurtosis,
/// mean and median autocorrelation over 1-second lags, 9 decile changes.
/// Zero-variance series yield 0 for kurtosis and both autocorrelations.
std::array<double, kAttributesPerFeature> aggregate_feature(std::span<const double> series, double fps);

/// Column j of the stream lands at [17j, 17j + 17).
AttributeVector aggregate_video(const FrameStream& stream);

}  // namespace affdbn
