#include "affdbn/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace affdbn {

const std::array<std::string_view, kAttributesPerFeature> kAttributeNames = {
    "mean",     "median",   "std",      "min",      "max",      "kurtosis",
    "ac_mean",  "ac_median", "dq10",    "dq20",     "dq30",     "dq40",
    "dq50",     "dq60",     "dq70",     "dq80",     "dq90"};

namespace {

void check_series(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("time series is empty");
  for (double x : series)
    if (!std::isfinite(x)) throw std::invalid_argument("time series contains a non-finite value");
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, 0.5);
}

}  // namespace

double autocorr_at_lag(std::span<const double> series, Index lag) {
  const auto n = static_cast<Index>(series.size());
  if (lag < 1) throw std::invalid_argument("autocorrelation lag must be positive");
  if (lag >= n) throw std::invalid_argument("autocorrelation lag must be shorter than the series");

  const Index m = n - lag;
  auto head = series.subspan(0, static_cast<std::size_t>(m));
  auto tail = series.subspan(static_cast<std::size_t>(lag));
  const double mh = std::accumulate(head.begin(), head.end(), 0.0) / static_cast<double>(m);
  const double mt = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(m);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (Index t = 0; t < m; ++t) {
    const double dx = head[t] - mh;
    const double dy = tail[t] - mt;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<Index> second_lags(Index frames, double fps) {
  if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
  std::vector<Index> lags;
  const auto max_k = std::min<Index>(10, static_cast<Index>(std::floor(static_cast<double>(frames - 1) / fps)));
  for (Index k = 1; k <= max_k; ++k) {
    auto lag = static_cast<Index>(std::llround(static_cast<double>(k) * fps));
    lags.push_back(std::clamp<Index>(lag, 1, frames - 1));
  }
  return lags;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::array<double, 9> decile_changes(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("time series is empty");
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  std::array<double, 9> out{};
  double prev = sorted.front();
  for (int d = 1; d <= 9; ++d) {
    const double q = sorted_quantile(sorted, d / 10.0);
    out[d - 1] = std::max(0.0, q - prev);
    prev = q;
  }
  return out;
}

std::array<double, kAttributesPerFeature> aggregate_feature(std::span<const double> series, double fps) {
  check_series(series);
  if (!(fps > 0.0) || !std::isfinite(fps)) throw std::invalid_argument("fps must be positive and finite");

  const auto n = static_cast<double>(series.size());
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  const bool constant = lo == hi;

  const double mean = constant ? lo : std::accumulate(series.begin(), series.end(), 0.0) / n;
  double m2 = 0.0, m4 = 0.0;
  if (!constant) {
    for (double x : series) {
      const double d = (x - mean) * (x - mean);
      m2 += d;
      m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
  }
  const bool flat = constant || m2 <= 0.0;

  std::array<double, kAttributesPerFeature> out{};
  out[0] = mean;
  out[1] = sorted_quantile(sorted, 0.5);
  out[2] = flat ? 0.0 : std::sqrt(m2);
  out[3] = lo;
  out[4] = hi;
  out[5] = flat ? 0.0 : m4 / (m2 * m2) - 3.0;

  if (!flat) {
    std::vector<double> acs;
    for (Index lag : second_lags(static_cast<Index>(series.size()), fps))
      acs.push_back(autocorr_at_lag(series, lag));
    if (!acs.empty()) {
      out[6] = std::accumulate(acs.begin(), acs.end(), 0.0) / static_cast<double>(acs.size());
      out[7] = median_of(std::move(acs));
    }
  }

  const auto changes = decile_changes(series);
  std::copy(changes.begin(), changes.end(), out.begin() + 8);
  return out;
}

AttributeVector aggregate_video(const FrameStream& stream) {
  if (stream.frames() < 1)
    throw std::invalid_argument("stream '" + stream.video_id + "' has no frames");
  if (!stream.feature_names.empty() && static_cast<Index>(stream.feature_names.size()) != stream.features())
    throw std::invalid_argument("stream '" + stream.video_id + "' feature-name count does not match its width");

  AttributeVector out{stream.video_id, stream.modality, Vector(kAttributesPerFeature * stream.features())};
  std::vector<double> column(static_cast<std::size_t>(stream.frames()));
  for (Index j = 0; j < stream.features(); ++j) {
    for (Index t = 0; t < stream.frames(); ++t) column[static_cast<std::size_t>(t)] = stream.values(t, j);
    try {
      const auto attrs = aggregate_feature(column, stream.fps);
      for (Index a = 0; a < kAttributesPerFeature; ++a) out.values(kAttributesPerFeature * j + a) = attrs[a];
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("stream '" + stream.video_id + "' (" + std::string(to_string(stream.modality)) +
                                  ") feature " + std::to_string(j) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace affdbn
