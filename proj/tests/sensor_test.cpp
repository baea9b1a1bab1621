#include "evres/sensor.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "evres/rng.hpp"

using namespace evres;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Single-pixel log-intensity sequence from a callable L(t).
template <typename F>
std::vector<Frame> single_pixel_sequence(const F& signal, double t0, double t1,
                                         double dt) {
  std::vector<Frame> frames;
  const int n = static_cast<int>(std::round((t1 - t0) / dt));
  for (int k = 0; k <= n; ++k) {
    const double t = t0 + k * dt;
    Frame f(1, 1, FrameKind::log_intensity, t, signal(t));
    frames.push_back(f);
  }
  return frames;
}

SensorConfig single_pixel_config(double f_cutoff = kInf) {
  SensorConfig c;
  c.contrast_threshold = 0.2;
  c.f_cutoff_hz = f_cutoff;
  c.width = 1;
  c.height = 1;
  return c;
}

}  // namespace

TEST(Lowpass, InfiniteCutoffIsIdentity) {
  PixelState s{0.1, 0.2, 0.0, 0};
  lowpass_step(s, 0.77, 1e-3, kInf);
  EXPECT_DOUBLE_EQ(s.v1, 0.77);
  EXPECT_DOUBLE_EQ(s.v2, 0.77);
}

TEST(Lowpass, UnityDcGain) {
  PixelState s{0.0, 0.0, 0.0, 0};
  const double f = 50.0;
  for (int i = 0; i < 20000; ++i) lowpass_step(s, 1.0, 1e-5, f);  // 0.2 s
  EXPECT_NEAR(s.v2, 1.0, 1e-9);
  EXPECT_NEAR(s.v1, 1.0, 1e-9);
}

TEST(Lowpass, StepResponseMatchesAnalyticCascade) {
  // Unit step at f_cutoff = 50 Hz: v2(t) = (1 - exp(-a t))^2 with a = 2*pi*50,
  // checked at 1, 5 and 20 ms regardless of the integration step.
  const double f = 50.0, a = 2.0 * M_PI * f;
  for (double dt : {1e-3, 1e-4, 2.5e-6}) {
    PixelState s{0.0, 0.0, 0.0, 0};
    double t = 0.0;
    auto check_at = [&](double target) {
      while (t < target - 0.5 * dt) {
        lowpass_step(s, 1.0, dt, f);
        t += dt;
      }
      const double expected = std::pow(1.0 - std::exp(-a * t), 2.0);
      EXPECT_NEAR(s.v2, expected, 0.01 * expected) << "dt=" << dt << " t=" << t;
    };
    check_at(1e-3);
    check_at(5e-3);
    check_at(20e-3);
  }
}

TEST(Lowpass, StepPartitioningIsExact) {
  const double f = 120.0;
  PixelState one{0.3, -0.2, 0.0, 0};
  PixelState many = one;
  lowpass_step(one, 0.9, 8e-3, f);
  for (int i = 0; i < 8; ++i) lowpass_step(many, 0.9, 1e-3, f);
  EXPECT_NEAR(one.v1, many.v1, 1e-12);
  EXPECT_NEAR(one.v2, many.v2, 1e-12);
}

TEST(Lowpass, RejectsNonPositiveDt) {
  PixelState s;
  EXPECT_THROW(lowpass_step(s, 0.0, 0.0, 100.0), DomainError);
}

TEST(GenerateEvents, RampTriggersTwoPositiveEvents) {
  const double dt = 1e-3;
  const auto frames =
      single_pixel_sequence([](double t) { return 0.5 * t; }, 0.0, 1.0, dt);
  const EventStream s = generate_events(frames, single_pixel_config());
  ASSERT_EQ(s.count(), 2u);
  EXPECT_EQ(s.events[0].polarity, +1);
  EXPECT_EQ(s.events[1].polarity, +1);
  EXPECT_NEAR(s.events[0].t_ns * 1e-9, 0.4, 0.5 * dt);
  EXPECT_NEAR(s.events[1].t_ns * 1e-9, 0.8, 0.5 * dt);
}

TEST(GenerateEvents, DescendingRampIsSignSymmetric) {
  const double dt = 1e-3;
  const auto frames =
      single_pixel_sequence([](double t) { return -0.5 * t; }, 0.0, 1.0, dt);
  const EventStream s = generate_events(frames, single_pixel_config());
  ASSERT_EQ(s.count(), 2u);
  EXPECT_EQ(s.events[0].polarity, -1);
  EXPECT_EQ(s.events[1].polarity, -1);
  EXPECT_NEAR(s.events[0].t_ns * 1e-9, 0.4, 0.5 * dt);
  EXPECT_NEAR(s.events[1].t_ns * 1e-9, 0.8, 0.5 * dt);
}

TEST(GenerateEvents, FilteredRampMatchesDenseOracle) {
  // With a 50 Hz cutoff the voltage lags the ramp, so events fire late
  // relative to the ideal model. A 100x denser simulation is the oracle.
  const double dt = 1e-3;
  auto ramp = [](double t) { return 0.5 * t; };
  const auto coarse = single_pixel_sequence(ramp, 0.0, 1.0, dt);
  const auto dense = single_pixel_sequence(ramp, 0.0, 1.0, dt / 100.0);
  const EventStream sc = generate_events(coarse, single_pixel_config(50.0));
  const EventStream sd = generate_events(dense, single_pixel_config(50.0));
  ASSERT_EQ(sc.count(), sd.count());
  ASSERT_GT(sc.count(), 0u);
  for (size_t i = 0; i < sc.count(); ++i) {
    const double tc = sc.events[i].t_ns * 1e-9;
    const double td = sd.events[i].t_ns * 1e-9;
    EXPECT_NEAR(tc, td, 2.0 * dt) << i;
    EXPECT_GT(tc, 0.4 + (i * 0.4) - 2.0 * dt);  // delayed vs ideal crossing
  }
}

TEST(GenerateEvents, MultipleCrossingsInOneInterval) {
  // A jump of 0.65 with C = 0.2 produces 3 events with interpolated times.
  std::vector<Frame> frames;
  frames.emplace_back(1, 1, FrameKind::log_intensity, 0.0, 0.0);
  frames.emplace_back(1, 1, FrameKind::log_intensity, 0.01, 0.65);
  const EventStream s = generate_events(frames, single_pixel_config());
  ASSERT_EQ(s.count(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s.events[i].polarity, +1);
    const double expected = 0.01 * (0.2 * (i + 1)) / 0.65;
    EXPECT_NEAR(s.events[i].t_ns * 1e-9, expected, 1e-9);
  }
}

TEST(GenerateEvents, ReferenceTrackingInvariant) {
  const double dt = 1e-3, c = 0.2;
  auto wobble = [](double t) { return 0.8 * std::sin(17.0 * t) + 0.3 * std::sin(41.0 * t); };
  const auto frames = single_pixel_sequence(wobble, 0.0, 1.0, dt);
  SensorConfig cfg = single_pixel_config();
  EventGenerator gen(cfg);
  gen.init(frames[0], frames[0].timestamp);
  std::vector<Event> events;
  int net = 0;
  for (size_t i = 1; i < frames.size(); ++i) {
    const size_t before = events.size();
    gen.push(frames[i], frames[i].timestamp, events);
    for (size_t k = before; k < events.size(); ++k) net += events[k].polarity;
    const PixelState st = gen.pixel_state(0, 0);
    EXPECT_NEAR(st.reference, frames[0].data[0] + c * net, 1e-12);
    EXPECT_LE(std::abs(st.v2 - st.reference), c + 1e-12);
  }
  EXPECT_GT(events.size(), 4u);
}

TEST(GenerateEvents, IdealModelClosure) {
  // C * sum(p) per pixel + first log frame reproduces the last log frame
  // within C everywhere.
  const int w = 16, h = 12;
  const double dt = 1e-3, c = 0.2;
  std::vector<Frame> frames;
  for (int k = 0; k <= 300; ++k) {
    Frame f(w, h, FrameKind::log_intensity, k * dt);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        f.at(x, y) = 0.6 * std::sin(0.3 * x + 5.0 * k * dt) *
                     std::cos(0.2 * y - 3.0 * k * dt);
    frames.push_back(std::move(f));
  }
  SensorConfig cfg;
  cfg.contrast_threshold = c;
  cfg.width = w;
  cfg.height = h;
  const EventStream s = generate_events(frames, cfg);
  ASSERT_GT(s.count(), 100u);
  Frame recon = frames.front();
  for (const Event& e : s.events) recon.at(e.x, e.y) += c * e.polarity;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      EXPECT_LE(std::abs(recon.at(x, y) - frames.back().at(x, y)), c + 1e-12);
}

TEST(GenerateEvents, OutputIsTimeSortedAndDeterministic) {
  const int w = 8, h = 8;
  std::vector<Frame> frames;
  for (int k = 0; k <= 100; ++k) {
    Frame f(w, h, FrameKind::log_intensity, k * 1e-3);
    for (size_t i = 0; i < f.data.size(); ++i)
      f.data[i] = std::sin(0.01 * k + 0.7 * i) * 0.9;
    frames.push_back(std::move(f));
  }
  SensorConfig cfg;
  cfg.width = w;
  cfg.height = h;
  const EventStream a = generate_events(frames, cfg);
  const EventStream b = generate_events(frames, cfg);
  ASSERT_EQ(a.count(), b.count());
  for (size_t i = 0; i < a.count(); ++i) EXPECT_TRUE(a.events[i] == b.events[i]);
  for (size_t i = 1; i < a.count(); ++i)
    EXPECT_LE(a.events[i - 1].t_ns, a.events[i].t_ns);
}

TEST(GenerateEvents, ErrorsOnBadInput) {
  Frame f(2, 2, FrameKind::log_intensity, 0.0, 0.0);
  Frame f2 = f;
  f2.timestamp = 1e-3;
  SensorConfig cfg;
  cfg.width = 4;
  cfg.height = 4;
  EXPECT_THROW(generate_events({f, f2}, cfg), ConfigError);

  cfg.width = 2;
  cfg.height = 2;
  Frame g = f;
  g.timestamp = -1.0;
  EXPECT_THROW(generate_events({f, g}, cfg), DomainError);
  EXPECT_THROW(generate_events({f}, cfg), ConfigError);
}

TEST(EventRate, Arithmetic) {
  EventStream s;
  s.width = 100;
  s.height = 100;
  s.t_start_ns = 0;
  s.t_end_ns = 500'000'000;  // 0.5 s
  s.events.resize(1'000'000);
  const EventRate r = event_rate(s);
  EXPECT_NEAR(r.total_mev_s, 2.0, 1e-12);
  EXPECT_NEAR(r.per_pixel_ev_s, 1'000'000 / 0.5 / 10'000, 1e-9);

  s.events.clear();
  const EventRate empty = event_rate(s);
  EXPECT_EQ(empty.count, 0u);
  EXPECT_DOUBLE_EQ(empty.total_mev_s, 0.0);
  EXPECT_DOUBLE_EQ(empty.per_pixel_ev_s, 0.0);

  s.t_end_ns = s.t_start_ns;
  EXPECT_THROW(event_rate(s), DomainError);
}

TEST(SliceWindow, FullRangeDisjointAndPartition) {
  EventStream s;
  s.width = 4;
  s.height = 4;
  s.t_start_ns = 0;
  s.t_end_ns = 1'000'000;
  for (uint64_t i = 0; i < 50; ++i)
    s.events.push_back({i * 20'000, static_cast<uint16_t>(i % 4),
                        static_cast<uint16_t>(i / 4 % 4), 1});

  const EventStream full = slice_window(s, s.t_start_ns, s.t_end_ns + 1);
  ASSERT_EQ(full.count(), s.count());
  for (size_t i = 0; i < s.count(); ++i) EXPECT_TRUE(full.events[i] == s.events[i]);

  const EventStream none = slice_window(s, 2'000'000, 3'000'000);
  EXPECT_EQ(none.count(), 0u);
  EXPECT_EQ(none.t_start_ns, 2'000'000u);

  const EventStream a = slice_window(s, 0, 300'000);
  const EventStream b = slice_window(s, 300'000, s.t_end_ns + 1);
  std::vector<Event> joined = a.events;
  joined.insert(joined.end(), b.events.begin(), b.events.end());
  ASSERT_EQ(joined.size(), s.count());
  for (size_t i = 0; i < joined.size(); ++i) EXPECT_TRUE(joined[i] == s.events[i]);

  EXPECT_THROW(slice_window(s, 10, 10), DomainError);
}
