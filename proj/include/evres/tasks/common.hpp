#pragma once

#include <vector>

#include "evres/sensor.hpp"

namespace evres {

// One event together with its same-pixel predecessor time. Times are in
// seconds relative to the consumer's reference time.
struct PairedEvent {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;       // event time
  double t_prev = 0.0;  // predecessor time (t - dt_k)
  double p = 0.0;       // polarity, -1 or +1
};

struct PairedEvents {
  std::vector<PairedEvent> pairs;
  int unpaired = 0;  // first event at a pixel has no residual
};

// Per-pixel predecessor pairing within the window. The first event at each
// pixel only seeds the chain.
inline PairedEvents pair_events(const EventStream& window, double t_ref_s) {
  PairedEvents out;
  std::vector<uint64_t> last(static_cast<size_t>(window.width) * window.height,
                             UINT64_MAX);
  for (const Event& e : window.events) {
    const size_t idx = static_cast<size_t>(e.y) * window.width + e.x;
    if (last[idx] == UINT64_MAX) {
      ++out.unpaired;
    } else {
      PairedEvent pe;
      pe.x = e.x;
      pe.y = e.y;
      pe.t = e.t_ns * 1e-9 - t_ref_s;
      pe.t_prev = last[idx] * 1e-9 - t_ref_s;
      pe.p = e.polarity;
      out.pairs.push_back(pe);
    }
    last[idx] = e.t_ns;
  }
  return out;
}

}  // namespace evres
