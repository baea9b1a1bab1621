#include "evres/multiscale.hpp"

#include <gtest/gtest.h>

#include "evres/rng.hpp"
#include "support/oracles.hpp"

using namespace evres;

namespace {

Frame random_irradiance(int w, int h, uint64_t seed) {
  Frame f(w, h, FrameKind::irradiance);
  for (size_t i = 0; i < f.data.size(); ++i)
    f.data[i] = 0.05 + 0.95 * rng_uniform(seed, 0, i);
  return f;
}

}  // namespace

TEST(BoxDownsample, ConstantFrameStaysConstant) {
  Frame f(16, 8, FrameKind::irradiance, 0.0, 0.37);
  for (int p : {1, 2, 4, 8}) {
    const Frame out = box_downsample(f, p);
    EXPECT_EQ(out.width, 16 / p);
    EXPECT_EQ(out.height, 8 / p);
    for (double v : out.data) EXPECT_DOUBLE_EQ(v, 0.37);
  }
}

TEST(BoxDownsample, TwoByTwoMean) {
  Frame f(2, 2, FrameKind::irradiance);
  f.at(0, 0) = 1.0 / 8; f.at(1, 0) = 3.0 / 8;
  f.at(0, 1) = 5.0 / 8; f.at(1, 1) = 7.0 / 8;
  const Frame out = box_downsample(f, 2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out.data[0], 0.5, 1e-15);
}

TEST(BoxDownsample, MatchesBruteForceBlockMean) {
  const Frame f = random_irradiance(1280, 1280, 99);
  const int p = 10;
  const Frame out = box_downsample(f, p);
  for (int oy = 0; oy < out.height; oy += 37) {
    for (int ox = 0; ox < out.width; ox += 41) {
      double s = 0;
      for (int dy = 0; dy < p; ++dy)
        for (int dx = 0; dx < p; ++dx) s += f.at(ox * p + dx, oy * p + dy);
      EXPECT_NEAR(out.at(ox, oy), s / (p * p), 1e-12);
    }
  }
}

TEST(BoxDownsample, NonDivisibleDimensionsThrow) {
  Frame f(10, 10, FrameKind::irradiance, 0.0, 0.5);
  EXPECT_THROW(box_downsample(f, 3), DomainError);
}

TEST(BoxDownsample, PreservesMeanAndCascades) {
  const Frame f = random_irradiance(240, 240, 7);
  for (int p : {2, 4, 8}) {
    EXPECT_NEAR(frame_mean(box_downsample(f, p)), frame_mean(f), 1e-12);
  }
  const Frame once = box_downsample(f, 8);
  const Frame twice = box_downsample(box_downsample(f, 4), 2);
  for (size_t i = 0; i < once.data.size(); ++i)
    EXPECT_NEAR(once.data[i], twice.data[i], 1e-12);
}

TEST(AreaDownsample, ReducesToBlockMeansForIntegerRatio) {
  const Frame f = random_irradiance(128, 128, 3);
  const Frame a = box_downsample(f, 4);
  const Frame b = area_downsample(f, 32, 32);
  for (size_t i = 0; i < a.data.size(); ++i)
    EXPECT_NEAR(a.data[i], b.data[i], 1e-12);
}

TEST(AreaDownsample, FractionalRatioPreservesMean) {
  const Frame f = random_irradiance(1280, 1280, 5);
  for (int target : {346, 240}) {
    const Frame out = area_downsample(f, target, target);
    EXPECT_EQ(out.width, target);
    EXPECT_NEAR(frame_mean(out), frame_mean(f), 1e-12);
  }
}

TEST(AreaDownsample, FractionalCoverageOracle) {
  // 3 -> 2: output cell 0 covers source cells [0, 1.5): weights 1 and 0.5.
  Frame f(3, 1, FrameKind::irradiance);
  f.data = {1.0, 2.0, 4.0};
  const Frame out = area_downsample(f, 2, 1);
  EXPECT_NEAR(out.data[0], (1.0 + 0.5 * 2.0) / 1.5, 1e-13);
  EXPECT_NEAR(out.data[1], (0.5 * 2.0 + 4.0) / 1.5, 1e-13);
}

TEST(LogFrame, BasicValuesAndInverse) {
  Frame f(4, 4, FrameKind::irradiance, 0.0, 1.0);
  Frame l = log_frame(f);
  for (double v : l.data) EXPECT_DOUBLE_EQ(v, 0.0);

  Frame g(4, 4, FrameKind::irradiance, 0.0, std::exp(-1.0));
  for (double v : log_frame(g).data) EXPECT_NEAR(v, -1.0, 1e-15);

  const Frame r = random_irradiance(32, 32, 21);
  const Frame lr = log_frame(r);
  for (size_t i = 0; i < r.data.size(); ++i)
    EXPECT_NEAR(std::exp(lr.data[i]), r.data[i], 1e-12);
}

TEST(LogFrame, NonPositiveThrows) {
  Frame f(2, 2, FrameKind::irradiance, 0.0, 0.5);
  f.at(1, 1) = 0.0;
  EXPECT_THROW(log_frame(f), DomainError);
}

TEST(LogDerivative, IdenticalFramesGiveZero) {
  Frame a(8, 8, FrameKind::log_intensity, 0.0, 0.3);
  Frame b = a;
  b.timestamp = 0.01;
  const Frame d = log_derivative(a, b);
  EXPECT_EQ(d.kind, FrameKind::log_rate);
  EXPECT_NEAR(d.timestamp, 0.005, 1e-15);
  for (double v : d.data) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(LogDerivative, ExponentialIntensityIsExact) {
  // I(t) = I0 exp(alpha t): log derivative is exactly alpha.
  const double alpha = 3.7, i0 = 0.2, t0 = 0.1, t1 = 0.125;
  Frame a(4, 4, FrameKind::irradiance, t0, i0 * std::exp(alpha * t0));
  Frame b(4, 4, FrameKind::irradiance, t1, i0 * std::exp(alpha * t1));
  const Frame d = log_derivative(log_frame(a), log_frame(b));
  for (double v : d.data) EXPECT_NEAR(v, alpha, 1e-12);
}

TEST(LogDerivative, MovingEdgeMatchesDenseSamplingOracle) {
  // Soft edge translating at constant speed; forward difference over dt must
  // agree with a 10x denser sampling at edge pixels within 5%.
  const int w = 64;
  const double speed = 40.0;  // px/s
  auto render = [&](double t) {
    Frame f(w, 1, FrameKind::irradiance, t);
    for (int x = 0; x < w; ++x)
      f.at(x, 0) = 0.55 + 0.45 * std::tanh((x - speed * t - 20.0) / 3.0);
    return log_frame(f);
  };
  const double t0 = 0.1, dt = 0.01;
  const Frame coarse = log_derivative(render(t0), render(t0 + dt));
  // dense oracle: average of 10 fine forward differences = same secant, so
  // use the midpoint fine difference instead.
  const Frame fine = log_derivative(render(t0 + 0.45 * dt), render(t0 + 0.55 * dt));
  for (int x = 16; x < 28; ++x) {  // edge region at t0
    const double c = coarse.at(x, 0), f = fine.at(x, 0);
    if (std::abs(f) < 1e-3) continue;
    EXPECT_NEAR(c, f, 0.05 * std::abs(f)) << x;
  }
}

TEST(LogDerivative, BadTimeOrderThrows) {
  Frame a(2, 2, FrameKind::log_intensity, 1.0, 0.0);
  Frame b(2, 2, FrameKind::log_intensity, 1.0, 0.0);
  EXPECT_THROW(log_derivative(a, b), DomainError);
}

TEST(PowerLaw, ExactPowerLawRecovered) {
  std::vector<std::pair<double, double>> samples;
  for (double p : {1.0, 2.0, 4.0, 8.0}) samples.push_back({p, std::pow(p, -0.5)});
  const PowerLawFit fit = fit_power_law(samples);
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.pixel_sizes.size(), 4u);
}

TEST(PowerLaw, ConstantDataHasZeroSlope) {
  std::vector<std::pair<double, double>> samples = {
      {1.0, 0.7}, {2.0, 0.7}, {4.0, 0.7}, {8.0, 0.7}};
  const PowerLawFit fit = fit_power_law(samples);
  EXPECT_NEAR(fit.slope, 0.0, 1e-12);
}

TEST(PowerLaw, MatchesIndependentLeastSquaresOracle) {
  std::vector<std::pair<double, double>> samples;
  std::vector<double> lx, ly;
  for (uint64_t i = 0; i < 12; ++i) {
    const double p = 1.0 + 15.0 * rng_uniform(31, 0, i);
    const double v = std::pow(p, -0.8) * std::exp(0.2 * rng_normal(31, 1, i));
    samples.push_back({p, v});
    lx.push_back(std::log(p));
    ly.push_back(std::log(v));
  }
  const PowerLawFit fit = fit_power_law(samples);
  const auto oracle = oracles::least_squares_line(lx, ly);
  EXPECT_NEAR(fit.slope, oracle.slope, 1e-9);
  EXPECT_NEAR(fit.intercept, oracle.intercept, 1e-9);
  EXPECT_NEAR(fit.r_squared, oracle.r2, 1e-9);
}

TEST(PowerLaw, RejectsBadInput) {
  EXPECT_THROW(fit_power_law({{1.0, 1.0}, {2.0, 0.5}}), InsufficientDataError);
  EXPECT_THROW(fit_power_law({{1.0, 1.0}, {2.0, -0.5}, {4.0, 0.2}}), DomainError);
  EXPECT_THROW(fit_power_law({{1.0, 1.0}, {1.0, 0.5}, {1.0, 0.2}}),
               InsufficientDataError);
}

TEST(IntereventHistogram, SinglePixelGap) {
  EventStream s;
  s.width = 4; s.height = 4;
  s.t_start_ns = 0; s.t_end_ns = 10'000'000;
  s.events = {{1'000'000, 1, 1, +1}, {3'000'000, 1, 1, +1}};
  const auto edges = log_spaced_edges(1e-4, 1e-1, 12);
  const auto hist = interevent_histogram(s, edges);
  EXPECT_EQ(hist.gap_count, 1u);
  ASSERT_TRUE(hist.median_defined);
  EXPECT_NEAR(hist.median_dt_s, 2e-3, 1e-12);
  uint64_t total = 0;
  for (uint64_t c : hist.counts) total += c;
  EXPECT_EQ(total, 1u);
  // the covering bin holds the gap
  for (size_t b = 0; b < hist.counts.size(); ++b) {
    if (hist.counts[b] == 1) {
      EXPECT_LE(hist.bin_edges_s[b], 2e-3);
      EXPECT_GT(hist.bin_edges_s[b + 1], 2e-3);
    }
  }
}

TEST(IntereventHistogram, DistinctPixelsHaveNoGaps) {
  EventStream s;
  s.width = 4; s.height = 4;
  s.t_start_ns = 0; s.t_end_ns = 10'000'000;
  s.events = {{1'000'000, 0, 0, +1}, {2'000'000, 1, 0, +1}, {3'000'000, 2, 3, -1}};
  const auto hist = interevent_histogram(s, log_spaced_edges(1e-5, 1e-1, 8));
  EXPECT_EQ(hist.gap_count, 0u);
  EXPECT_FALSE(hist.median_defined);
}

TEST(IntereventHistogram, EmptyStreamIsEmptyHistogram) {
  EventStream s;
  s.width = 2; s.height = 2;
  s.t_start_ns = 0; s.t_end_ns = 1'000'000;
  const auto hist = interevent_histogram(s, log_spaced_edges(1e-5, 1e-1, 8));
  EXPECT_EQ(hist.gap_count, 0u);
  EXPECT_FALSE(hist.median_defined);
  for (uint64_t c : hist.counts) EXPECT_EQ(c, 0u);
}
