#pragma once

// Event Integration: reconstruct the log image at the end of a window by
// summing per-pixel polarity increments onto a high-resolution keyframe.

#include <sstream>

#include "evres/errors.hpp"
#include "evres/frame.hpp"
#include "evres/multiscale.hpp"
#include "evres/sensor.hpp"

namespace evres {

// Upsamples a low-resolution raster by treating it as piecewise constant on
// its footprint: each output pixel averages the cells it covers. For integer
// ratios this is exact block replication.
inline Frame upsample_to(const Frame& low, int out_w, int out_h) {
  if (out_w < low.width || out_h < low.height)
    throw DomainError("upsample target must be at least the source size");
  if (out_w == low.width && out_h == low.height) return low;
  const auto col_taps = detail::area_taps(low.width, out_w);
  const auto row_taps = detail::area_taps(low.height, out_h);
  const double norm = (static_cast<double>(low.width) / out_w) *
                      (static_cast<double>(low.height) / out_h);
  Frame out(out_w, out_h, low.kind, low.timestamp);
  for (int y = 0; y < out_h; ++y) {
    const auto& rt = row_taps[y];
    double* orow = &out.data[static_cast<size_t>(y) * out_w];
    for (int x = 0; x < out_w; ++x) {
      const auto& ct = col_taps[x];
      double s = 0.0;
      for (size_t ry = 0; ry < rt.weights.size(); ++ry) {
        const double* irow =
            &low.data[static_cast<size_t>(rt.first + ry) * low.width + ct.first];
        double sx = 0.0;
        for (size_t cx = 0; cx < ct.weights.size(); ++cx)
          sx += ct.weights[cx] * irow[cx];
        s += rt.weights[ry] * sx;
      }
      orow[x] = s / norm;
    }
  }
  return out;
}

// Per-pixel increment sum(p_i * C) at the event resolution.
inline Frame ei_increment(const EventStream& events, double c) {
  Frame inc(events.width, events.height, FrameKind::log_intensity,
            events.t_end_ns * 1e-9);
  for (const Event& e : events.events) inc.at(e.x, e.y) += e.polarity * c;
  return inc;
}

// Prediction of the log image at the window end: keyframe plus the upsampled
// event increment.
inline Frame ei_reconstruct(const Frame& keyframe, const EventStream& events,
                            double c) {
  if (keyframe.kind != FrameKind::log_intensity)
    throw ConfigError("EI keyframe must be a log-intensity frame");
  if (events.width > keyframe.width || events.height > keyframe.height) {
    std::ostringstream os;
    os << "event resolution " << events.width << "x" << events.height
       << " exceeds keyframe " << keyframe.width << "x" << keyframe.height;
    throw DomainError(os.str());
  }
  const Frame up = upsample_to(ei_increment(events, c), keyframe.width,
                               keyframe.height);
  Frame out = keyframe;
  out.timestamp = events.t_end_ns * 1e-9;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += up.data[i];
  return out;
}

}  // namespace evres
