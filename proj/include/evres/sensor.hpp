#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "evres/errors.hpp"
#include "evres/frame.hpp"

namespace evres {

struct Event {
  uint64_t t_ns = 0;  // nanoseconds since sequence start
  uint16_t x = 0;
  uint16_t y = 0;
  int8_t polarity = 1;  // -1 or +1
};

inline bool operator==(const Event& a, const Event& b) {
  return a.t_ns == b.t_ns && a.x == b.x && a.y == b.y && a.polarity == b.polarity;
}

struct SensorConfig {
  double contrast_threshold = 0.2;  // log-intensity units
  double f_cutoff_hz = std::numeric_limits<double>::infinity();
  int width = 0;
  int height = 0;

  bool ideal() const { return std::isinf(f_cutoff_hz); }
};

struct EventStream {
  std::vector<Event> events;  // non-decreasing t_ns
  int width = 0;
  int height = 0;
  uint64_t t_start_ns = 0;
  uint64_t t_end_ns = 0;
  SensorConfig config;

  size_t count() const { return events.size(); }
  double duration_s() const { return (t_end_ns - t_start_ns) * 1e-9; }
};

// Internal voltage of one pixel: two cascaded low-pass stages plus the
// reference level of the comparator.
struct PixelState {
  double v1 = 0.0;
  double v2 = 0.0;
  double reference = 0.0;
  uint64_t last_event_t_ns = 0;
};

// Second-order low-pass: two cascaded first-order stages with cutoffs
// f_cutoff and 2*f_cutoff, discretized exactly over the interval (the inner
// stage's exponential response feeds the outer stage in closed form). Unit
// step response is (1 - exp(-2*pi*f_cutoff*t))^2 independent of the step
// partitioning. f_cutoff = inf reduces to the identity.
inline void lowpass_step(PixelState& state, double input, double dt,
                         double f_cutoff_hz) {
  if (dt <= 0.0) throw DomainError("lowpass_step needs dt > 0");
  if (std::isinf(f_cutoff_hz)) {
    state.v1 = input;
    state.v2 = input;
    return;
  }
  const double a = 2.0 * M_PI * f_cutoff_hz;
  const double e1 = std::exp(-a * dt);
  const double e2 = e1 * e1;
  state.v2 = input + (state.v2 - input) * e2 + 2.0 * (state.v1 - input) * (e1 - e2);
  state.v1 = input + (state.v1 - input) * e1;
}

// Incremental event generator over a dense log-intensity frame sequence.
// init() latches the first frame as both filter state and comparator
// reference; each push() advances every pixel and emits the interval's
// events, time sorted.
class EventGenerator {
public:
  EventGenerator(const SensorConfig& config) : config_(config) {
    if (config.contrast_threshold <= 0.0)
      throw ConfigError("contrast threshold must be positive");
    if (!(config.f_cutoff_hz > 0.0))
      throw ConfigError("cutoff frequency must be positive or infinite");
  }

  bool initialized() const { return initialized_; }
  double last_time() const { return last_t_; }
  const SensorConfig& config() const { return config_; }

  void init(const Frame& log_frame, double t) {
    check_frame(log_frame);
    const size_t n = log_frame.size();
    v1_ = log_frame.data;
    v2_ = log_frame.data;
    ref_ = log_frame.data;
    last_event_t_.assign(n, 0);
    last_t_ = t;
    t0_ = t;
    initialized_ = true;
  }

  // Advances to the next frame and appends this interval's events to out.
  void push(const Frame& log_frame, double t, std::vector<Event>& out) {
    if (!initialized_) throw ConfigError("EventGenerator::push before init");
    check_frame(log_frame);
    const double dt = t - last_t_;
    if (dt <= 0.0) throw DomainError("frame timestamps must strictly increase");

    const double c = config_.contrast_threshold;
    double e1 = 0.0, e2 = 0.0;
    const bool ideal = config_.ideal();
    if (!ideal) {
      const double a = 2.0 * M_PI * config_.f_cutoff_hz;
      e1 = std::exp(-a * dt);
      e2 = e1 * e1;
    }

    const size_t first_new = out.size();
    const int w = config_.width, h = config_.height;
    for (int y = 0; y < h; ++y) {
      const size_t row = static_cast<size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        const size_t idx = row + x;
        const double input = log_frame.data[idx];
        const double v_old = v2_[idx];
        double v_new;
        if (ideal) {
          v_new = input;
          v1_[idx] = input;
        } else {
          const double u1 = v1_[idx];
          v_new = input + (v_old - input) * e2 + 2.0 * (u1 - input) * (e1 - e2);
          v1_[idx] = input + (u1 - input) * e1;
        }
        double ref = ref_[idx];

        const double dv = v_new - v_old;
        if (v_new - ref >= c) {
          const int n_cross = static_cast<int>(std::floor((v_new - ref) / c));
          for (int m = 1; m <= n_cross; ++m) {
            const double frac = (ref + m * c - v_old) / dv;
            emit(out, x, y, +1, last_t_ + frac * dt);
          }
          ref += n_cross * c;
        } else if (ref - v_new >= c) {
          const int n_cross = static_cast<int>(std::floor((ref - v_new) / c));
          for (int m = 1; m <= n_cross; ++m) {
            const double frac = (ref - m * c - v_old) / dv;
            emit(out, x, y, -1, last_t_ + frac * dt);
          }
          ref -= n_cross * c;
        }
        ref_[idx] = ref;
        v2_[idx] = v_new;
      }
    }
    std::stable_sort(out.begin() + first_new, out.end(),
                     [](const Event& a, const Event& b) { return a.t_ns < b.t_ns; });
    for (size_t i = first_new; i < out.size(); ++i) {
      const Event& e = out[i];
      last_event_t_[static_cast<size_t>(e.y) * w + e.x] = e.t_ns;
    }
    last_t_ = t;
  }

  PixelState pixel_state(int x, int y) const {
    const size_t idx = static_cast<size_t>(y) * config_.width + x;
    return {v1_[idx], v2_[idx], ref_[idx], last_event_t_[idx]};
  }

  double start_time() const { return t0_; }

private:
  void check_frame(const Frame& f) const {
    if (f.kind != FrameKind::log_intensity)
      throw ConfigError("event generation expects log-intensity frames");
    if (f.width != config_.width || f.height != config_.height) {
      std::ostringstream os;
      os << "frame resolution " << f.width << "x" << f.height
         << " does not match sensor " << config_.width << "x" << config_.height;
      throw ConfigError(os.str());
    }
  }

  static void emit(std::vector<Event>& out, int x, int y, int pol, double t) {
    Event e;
    e.t_ns = static_cast<uint64_t>(std::llround(t * 1e9));
    e.x = static_cast<uint16_t>(x);
    e.y = static_cast<uint16_t>(y);
    e.polarity = static_cast<int8_t>(pol);
    out.push_back(e);
  }

  SensorConfig config_;
  bool initialized_ = false;
  double last_t_ = 0.0;
  double t0_ = 0.0;
  std::vector<double> v1_, v2_, ref_;
  std::vector<uint64_t> last_event_t_;
};

// Whole-sequence convenience wrapper. Frames must share a uniform timestep.
inline EventStream generate_events(const std::vector<Frame>& frames,
                                   const SensorConfig& config) {
  if (frames.size() < 2)
    throw ConfigError("event generation needs at least 2 frames");
  const double dt0 = frames[1].timestamp - frames[0].timestamp;
  for (size_t i = 1; i < frames.size(); ++i) {
    const double dt = frames[i].timestamp - frames[i - 1].timestamp;
    if (dt <= 0.0) throw DomainError("frame timestamps must strictly increase");
    if (std::abs(dt - dt0) > 1e-9 * std::max(1.0, std::abs(dt0)))
      throw DomainError("frame sequence must have a uniform timestep");
  }
  EventGenerator gen(config);
  gen.init(frames[0], frames[0].timestamp);
  EventStream stream;
  stream.width = config.width;
  stream.height = config.height;
  stream.config = config;
  stream.t_start_ns = static_cast<uint64_t>(std::llround(frames[0].timestamp * 1e9));
  for (size_t i = 1; i < frames.size(); ++i)
    gen.push(frames[i], frames[i].timestamp, stream.events);
  stream.t_end_ns =
      static_cast<uint64_t>(std::llround(frames.back().timestamp * 1e9));
  return stream;
}

struct EventRate {
  double total_mev_s = 0.0;      // million events per second
  double per_pixel_ev_s = 0.0;   // events per second per pixel
  uint64_t count = 0;
};

inline EventRate event_rate(const EventStream& stream) {
  if (stream.t_end_ns <= stream.t_start_ns)
    throw DomainError("event stream has zero duration");
  const double dur = stream.duration_s();
  EventRate r;
  r.count = stream.count();
  r.total_mev_s = static_cast<double>(r.count) / dur / 1e6;
  r.per_pixel_ev_s = static_cast<double>(r.count) / dur /
                     (static_cast<double>(stream.width) * stream.height);
  return r;
}

// Events with t0 <= t < t1; metadata window updated.
inline EventStream slice_window(const EventStream& stream, uint64_t t0_ns,
                                uint64_t t1_ns) {
  if (t0_ns >= t1_ns) throw DomainError("slice window needs t0 < t1");
  EventStream out;
  out.width = stream.width;
  out.height = stream.height;
  out.config = stream.config;
  out.t_start_ns = t0_ns;
  out.t_end_ns = t1_ns;
  const auto lo = std::lower_bound(
      stream.events.begin(), stream.events.end(), t0_ns,
      [](const Event& e, uint64_t t) { return e.t_ns < t; });
  const auto hi = std::lower_bound(
      lo, stream.events.end(), t1_ns,
      [](const Event& e, uint64_t t) { return e.t_ns < t; });
  out.events.assign(lo, hi);
  return out;
}

}  // namespace evres
