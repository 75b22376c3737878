#include "affdbn/timeseries.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace affdbn;

namespace {

// Straight-line reference over the same definitions, written without any of
// the library helpers.
std::array<double, 17> reference_aggregate(const std::vector<double>& x, double fps) {
  const std::size_t n = x.size();
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= n) return s[n - 1];
    return s[i] * (1.0 - (pos - static_cast<double>(i))) + s[i + 1] * (pos - static_cast<double>(i));
  };
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0, m4 = 0;
  for (double v : x) {
    m2 += (v - mean) * (v - mean);
    m4 += std::pow(v - mean, 4);
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  const bool flat = s.front() == s.back();

  std::vector<double> acs;
  if (!flat) {
    for (int k = 1; k <= 10; ++k) {
      if (static_cast<double>(k) * fps > static_cast<double>(n - 1)) break;
      const std::size_t lag = static_cast<std::size_t>(std::llround(k * fps));
      const std::size_t m = n - lag;
      double a = 0, b = 0;
      for (std::size_t t = 0; t < m; ++t) a += x[t], b += x[t + lag];
      a /= static_cast<double>(m);
      b /= static_cast<double>(m);
      double sab = 0, saa = 0, sbb = 0;
      for (std::size_t t = 0; t < m; ++t) {
        sab += (x[t] - a) * (x[t + lag] - b);
        saa += (x[t] - a) * (x[t] - a);
        sbb += (x[t + lag] - b) * (x[t + lag] - b);
      }
      acs.push_back(saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0);
    }
  }
  double ac_mean = 0, ac_median = 0;
  if (!acs.empty()) {
    for (double r : acs) ac_mean += r;
    ac_mean /= static_cast<double>(acs.size());
    std::sort(acs.begin(), acs.end());
    const std::size_t k = acs.size();
    ac_median = k % 2 ? acs[k / 2] : 0.5 * (acs[k / 2 - 1] + acs[k / 2]);
  }

  std::array<double, 17> out{};
  out[0] = mean;
  out[1] = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  out[2] = flat ? 0.0 : std::sqrt(m2);
  out[3] = s.front();
  out[4] = s.back();
  out[5] = flat ? 0.0 : m4 / (m2 * m2) - 3.0;
  out[6] = ac_mean;
  out[7] = ac_median;
  double prev = s.front();
  for (int d = 1; d <= 9; ++d) {
    out[7 + d] = q(d / 10.0) - prev;
    prev = q(d / 10.0);
  }
  return out;
}

std::vector<double> random_series(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  double e = 0;
  for (auto& v : x) v = e = 0.7 * e + rng.normal();
  return x;
}

}  // namespace

TEST_CASE("constant series hits every guard") {
  const std::vector<double> x(100, 5.0);
  const auto a = aggregate_feature(x, 30.0);
  CHECK(a[0] == 5.0);
  CHECK(a[1] == 5.0);
  CHECK(a[2] == 0.0);
  CHECK(a[3] == 5.0);
  CHECK(a[4] == 5.0);
  CHECK(a[5] == 0.0);
  CHECK(a[6] == 0.0);
  CHECK(a[7] == 0.0);
  for (int d = 8; d < 17; ++d) CHECK(a[d] == 0.0);
}

TEST_CASE("short arithmetic sequence") {
  const std::vector<double> x{1, 2, 3, 4};
  const auto a = aggregate_feature(x, 1.0);
  CHECK(a[0] == doctest::Approx(2.5));
  CHECK(a[1] == doctest::Approx(2.5));
  CHECK(a[3] == 1.0);
  CHECK(a[4] == 4.0);
}

TEST_CASE("aggregate_feature matches the straight-line reference") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = trial == 0 ? 300 : 2 + rng.below(600);
    const double fps = trial == 0 ? 30.0 : rng.uniform(1.0, 40.0);
    const auto x = random_series(n, rng);
    const auto got = aggregate_feature(x, fps);
    const auto want = reference_aggregate(x, fps);
    for (int k = 0; k < 17; ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-9 * (1.0 + std::abs(want[k])));
  }
}

TEST_CASE("autocorrelation examples") {
  std::vector<double> periodic(120);
  for (std::size_t t = 0; t < periodic.size(); ++t) periodic[t] = std::sin(2 * M_PI * static_cast<double>(t) / 12.0);
  CHECK(std::abs(autocorr_at_lag(periodic, 12) - 1.0) < 1e-9);

  std::vector<double> alternating(50);
  for (std::size_t t = 0; t < alternating.size(); ++t) alternating[t] = t % 2 ? -1.0 : 1.0;
  CHECK(autocorr_at_lag(alternating, 1) == doctest::Approx(-1.0));

  Rng rng(3);
  const auto x = random_series(200, rng);
  const std::vector<Index> lags = second_lags(200, 30.0);
  REQUIRE(lags.front() == 30);
  // Direct formula for lag 30 alone.
  double a = 0, b = 0;
  for (int t = 0; t < 170; ++t) a += x[t], b += x[t + 30];
  a /= 170, b /= 170;
  double sab = 0, saa = 0, sbb = 0;
  for (int t = 0; t < 170; ++t) {
    sab += (x[t] - a) * (x[t + 30] - b);
    saa += (x[t] - a) * (x[t] - a);
    sbb += (x[t + 30] - b) * (x[t + 30] - b);
  }
  CHECK(std::abs(autocorr_at_lag(x, 30) - sab / std::sqrt(saa * sbb)) < 1e-12);

  CHECK_THROWS_AS(autocorr_at_lag(x, 0), std::invalid_argument);
  CHECK_THROWS_AS(autocorr_at_lag(x, 200), std::invalid_argument);
}

TEST_CASE("lag schedule") {
  CHECK(second_lags(100, 30.0) == std::vector<Index>{30, 60, 90});
  CHECK(second_lags(10000, 30.0).size() == 10);
  CHECK(second_lags(30, 30.0).empty());
  CHECK(second_lags(31, 30.0) == std::vector<Index>{30});
}

TEST_CASE("decile changes") {
  const std::vector<double> flat(40, 2.0);
  for (double d : decile_changes(flat)) CHECK(d == 0.0);

  std::vector<double> grid(101);
  std::iota(grid.begin(), grid.end(), 0.0);
  for (double d : decile_changes(grid)) CHECK(d == doctest::Approx(10.0));

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_series(1 + rng.below(300), rng);
    const auto ch = decile_changes(x);
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    const double sum = std::accumulate(ch.begin(), ch.end(), 0.0);
    CHECK(sum == doctest::Approx(sorted_quantile(s, 0.9) - s.front()).epsilon(1e-12));
    for (double d : ch) CHECK(d >= 0.0);
  }
}

TEST_CASE("vector widths follow 17 per feature") {
  Rng rng(9);
  const std::array<std::pair<Modality, Index>, 4> mix{
      {{Modality::arousal, 1}, {Modality::valence, 1}, {Modality::audio, 58}, {Modality::visual, 31}}};
  Index total = 0;
  for (auto [m, f] : mix) {
    FrameStream s;
    s.video_id = "v";
    s.modality = m;
    s.values = testsupport::random_normal(120, f, rng);
    const auto a = aggregate_video(s);
    CHECK(a.values.size() == 17 * f);
    total += a.values.size();
  }
  CHECK(total == 1547);
}

TEST_CASE("aggregate_video rejects bad streams with the stream named") {
  FrameStream s;
  s.video_id = "clip42";
  s.values = Matrix::Zero(0, 3);
  CHECK_THROWS_WITH_AS(aggregate_video(s), doctest::Contains("clip42"), std::invalid_argument);
  s.values = Matrix::Zero(10, 2);
  s.values(4, 1) = std::nan("");
  CHECK_THROWS_AS(aggregate_video(s), std::invalid_argument);
}

TEST_CASE("property: shift covariance, ordering, length invariance") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_series(2 + rng.below(400), rng);
    const double fps = rng.uniform(1.0, 40.0);
    const double c = rng.uniform(-50.0, 50.0);
    std::vector<double> y = x;
    for (double& v : y) v += c;
    const auto a = aggregate_feature(x, fps);
    const auto b = aggregate_feature(y, fps);
    for (int k : {0, 1, 3, 4}) CHECK(b[k] == doctest::Approx(a[k] + c).epsilon(1e-9));
    CHECK(b[2] == doctest::Approx(a[2]).epsilon(1e-7));
    CHECK(b[5] == doctest::Approx(a[5]).epsilon(1e-6));
    CHECK(b[6] == doctest::Approx(a[6]).epsilon(1e-6));
    CHECK(b[7] == doctest::Approx(a[7]).epsilon(1e-6));
    for (int k = 8; k < 17; ++k) CHECK(std::abs(b[k] - a[k]) < 1e-9 * (1 + std::abs(c)));
    CHECK(a[3] <= a[1]);
    CHECK(a[1] <= a[4]);
    CHECK(a[2] >= 0.0);
  }
  const auto short_flat = aggregate_feature(std::vector<double>(10, -1.5), 30.0);
  const auto long_flat = aggregate_feature(std::vector<double>(10000, -1.5), 30.0);
  CHECK(short_flat == long_flat);
}
