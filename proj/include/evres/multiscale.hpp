#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "evres/errors.hpp"
#include "evres/frame.hpp"
#include "evres/sensor.hpp"

namespace evres {

// ---------------------------------------------------------------------------
// Resolution pyramid
// ---------------------------------------------------------------------------

// Box filter with side p fused with stride-p subsampling: each output pixel
// is the arithmetic mean of its p x p source block.
inline Frame box_downsample(const Frame& src, int p) {
  if (p < 1) throw DomainError("downsample factor must be >= 1");
  if (src.width % p != 0 || src.height % p != 0) {
    std::ostringstream os;
    os << "factor " << p << " does not divide " << src.width << "x" << src.height;
    throw DomainError(os.str());
  }
  if (p == 1) return src;
  Frame out(src.width / p, src.height / p, src.kind, src.timestamp);
  const double inv = 1.0 / (static_cast<double>(p) * p);
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      double s = 0.0;
      for (int dy = 0; dy < p; ++dy) {
        const double* row = &src.data[static_cast<size_t>(oy * p + dy) * src.width + ox * p];
        for (int dx = 0; dx < p; ++dx) s += row[dx];
      }
      out.at(ox, oy) = s * inv;
    }
  }
  return out;
}

namespace detail {

// Per-output-index coverage of source cells for 1-D area resampling.
struct AreaTap {
  int first;                    // first source index
  std::vector<double> weights;  // fractional coverage, sums to in/out ratio
};

// Cell boundaries are rationals o * n_in / n_out; overlaps are computed in
// integer units of 1/n_out input cells, so integer ratios are exact.
inline std::vector<AreaTap> area_taps(int n_in, int n_out) {
  std::vector<AreaTap> taps(n_out);
  for (int o = 0; o < n_out; ++o) {
    const int64_t lo = static_cast<int64_t>(o) * n_in;        // in 1/n_out units
    const int64_t hi = static_cast<int64_t>(o + 1) * n_in;
    int first = static_cast<int>(lo / n_out);
    int last = static_cast<int>((hi - 1) / n_out);
    first = std::max(first, 0);
    last = std::min(last, n_in - 1);
    AreaTap tap;
    tap.first = first;
    for (int i = first; i <= last; ++i) {
      const int64_t cell_lo = static_cast<int64_t>(i) * n_out;
      const int64_t cell_hi = cell_lo + n_out;
      const int64_t overlap = std::min(hi, cell_hi) - std::max(lo, cell_lo);
      tap.weights.push_back(static_cast<double>(overlap) / n_out);
    }
    taps[o] = std::move(tap);
  }
  return taps;
}

}  // namespace detail

// Generalized box downsampling with exact fractional pixel coverage; reduces
// to block means when the ratio is an integer. Separable in x and y.
class AreaResampler {
public:
  AreaResampler(int in_w, int in_h, int out_w, int out_h)
      : in_w_(in_w), in_h_(in_h), out_w_(out_w), out_h_(out_h),
        col_taps_(detail::area_taps(in_w, out_w)),
        row_taps_(detail::area_taps(in_h, out_h)),
        norm_(static_cast<double>(out_w) * out_h / (static_cast<double>(in_w) * in_h)),
        tmp_(static_cast<size_t>(in_h) * out_w) {
    if (out_w < 1 || out_h < 1 || out_w > in_w || out_h > in_h)
      throw DomainError("area downsampling requires 1 <= out <= in");
  }

  Frame apply(const Frame& src) {
    if (src.width != in_w_ || src.height != in_h_)
      throw DomainError("frame size does not match resampler");
    // columns
    for (int y = 0; y < in_h_; ++y) {
      const double* row = &src.data[static_cast<size_t>(y) * in_w_];
      double* trow = &tmp_[static_cast<size_t>(y) * out_w_];
      for (int o = 0; o < out_w_; ++o) {
        const auto& tap = col_taps_[o];
        double s = 0.0;
        for (size_t k = 0; k < tap.weights.size(); ++k)
          s += tap.weights[k] * row[tap.first + k];
        trow[o] = s;
      }
    }
    // rows
    Frame out(out_w_, out_h_, src.kind, src.timestamp);
    for (int o = 0; o < out_h_; ++o) {
      const auto& tap = row_taps_[o];
      double* orow = &out.data[static_cast<size_t>(o) * out_w_];
      for (size_t k = 0; k < tap.weights.size(); ++k) {
        const double w = tap.weights[k];
        const double* trow = &tmp_[static_cast<size_t>(tap.first + k) * out_w_];
        for (int x = 0; x < out_w_; ++x) orow[x] += w * trow[x];
      }
      for (int x = 0; x < out_w_; ++x) orow[x] *= norm_;
    }
    return out;
  }

private:
  int in_w_, in_h_, out_w_, out_h_;
  std::vector<detail::AreaTap> col_taps_, row_taps_;
  double norm_;
  std::vector<double> tmp_;
};

inline Frame area_downsample(const Frame& src, int out_w, int out_h) {
  return AreaResampler(src.width, src.height, out_w, out_h).apply(src);
}

// ---------------------------------------------------------------------------
// Log intensity and its temporal derivative
// ---------------------------------------------------------------------------

inline Frame log_frame(const Frame& irradiance) {
  if (irradiance.kind != FrameKind::irradiance)
    throw DomainError("log_frame expects an irradiance frame");
  Frame out(irradiance.width, irradiance.height, FrameKind::log_intensity,
            irradiance.timestamp);
  for (size_t i = 0; i < irradiance.data.size(); ++i) {
    const double v = irradiance.data[i];
    if (v <= 0.0) throw DomainError("irradiance must be strictly positive");
    out.data[i] = std::log(v);
  }
  return out;
}

// Forward difference (L1 - L0) / (t1 - t0) assigned to the midpoint time.
inline Frame log_derivative(const Frame& l0, const Frame& l1) {
  if (l0.kind != FrameKind::log_intensity || l1.kind != FrameKind::log_intensity)
    throw DomainError("log_derivative expects log-intensity frames");
  if (!l0.same_shape(l1)) throw DomainError("frame shapes differ");
  const double dt = l1.timestamp - l0.timestamp;
  if (dt <= 0.0) throw DomainError("log_derivative needs t1 > t0");
  Frame out(l0.width, l0.height, FrameKind::log_rate,
            0.5 * (l0.timestamp + l1.timestamp));
  const double inv = 1.0 / dt;
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = (l1.data[i] - l0.data[i]) * inv;
  return out;
}

// ---------------------------------------------------------------------------
// Power-law fit of |L_t| versus pixel size
// ---------------------------------------------------------------------------

struct PowerLawFit {
  double slope = 0.0;      // fitted exponent m in |L_t| ~ p^m
  double intercept = 0.0;  // in log space
  double r_squared = 0.0;
  std::vector<double> pixel_sizes;
};

inline PowerLawFit fit_power_law(
    const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3)
    throw InsufficientDataError("power-law fit needs at least 3 samples");
  std::vector<double> ps;
  for (const auto& [p, v] : samples) {
    if (p <= 0.0 || v <= 0.0)
      throw DomainError("power-law fit needs positive pixel sizes and values");
    if (std::find(ps.begin(), ps.end(), p) == ps.end()) ps.push_back(p);
  }
  if (ps.size() < 3)
    throw InsufficientDataError("power-law fit needs 3 distinct pixel sizes");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const size_t n = samples.size();
  for (const auto& [p, v] : samples) {
    const double x = std::log(p), y = std::log(v);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  PowerLawFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ym = sy / n;
  for (const auto& [p, v] : samples) {
    const double x = std::log(p), y = std::log(v);
    const double pred = fit.intercept + fit.slope * x;
    ss_res += (y - pred) * (y - pred);
    ss_tot += (y - ym) * (y - ym);
  }
  fit.r_squared = ss_tot > 0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
  std::sort(ps.begin(), ps.end());
  fit.pixel_sizes = std::move(ps);
  return fit;
}

// ---------------------------------------------------------------------------
// Inter-event time statistics
// ---------------------------------------------------------------------------

struct IntereventHistogram {
  std::vector<double> bin_edges_s;  // ascending, size = counts.size() + 1
  std::vector<uint64_t> counts;     // gaps outside the edges are clamped in
  uint64_t gap_count = 0;
  double median_dt_s = 0.0;
  bool median_defined = false;
};

inline std::vector<double> log_spaced_edges(double lo_s, double hi_s, int bins) {
  std::vector<double> edges(bins + 1);
  const double llo = std::log(lo_s), lhi = std::log(hi_s);
  for (int i = 0; i <= bins; ++i)
    edges[i] = std::exp(llo + (lhi - llo) * i / bins);
  return edges;
}

// Gaps between consecutive same-pixel events accumulated into bins.
inline IntereventHistogram interevent_histogram(const EventStream& stream,
                                                const std::vector<double>& edges_s) {
  if (edges_s.size() < 2) throw DomainError("histogram needs at least one bin");
  IntereventHistogram hist;
  hist.bin_edges_s = edges_s;
  hist.counts.assign(edges_s.size() - 1, 0);

  std::vector<uint64_t> last(static_cast<size_t>(stream.width) * stream.height,
                             UINT64_MAX);
  std::vector<uint64_t> gaps;
  uint64_t prev_t = 0;
  for (const Event& e : stream.events) {
    if (e.t_ns < prev_t) throw DomainError("event stream is not time sorted");
    prev_t = e.t_ns;
    const size_t idx = static_cast<size_t>(e.y) * stream.width + e.x;
    if (last[idx] != UINT64_MAX) gaps.push_back(e.t_ns - last[idx]);
    last[idx] = e.t_ns;
  }
  hist.gap_count = gaps.size();
  if (!gaps.empty()) {
    for (uint64_t g : gaps) {
      const double gs = g * 1e-9;
      auto it = std::upper_bound(edges_s.begin(), edges_s.end(), gs);
      int bin = static_cast<int>(it - edges_s.begin()) - 1;
      bin = std::clamp(bin, 0, static_cast<int>(hist.counts.size()) - 1);
      ++hist.counts[bin];
    }
    const size_t mid = gaps.size() / 2;
    std::nth_element(gaps.begin(), gaps.begin() + mid, gaps.end());
    double med = gaps[mid] * 1e-9;
    if (gaps.size() % 2 == 0) {
      const auto lower = std::max_element(gaps.begin(), gaps.begin() + mid);
      med = 0.5 * (med + *lower * 1e-9);
    }
    hist.median_dt_s = med;
    hist.median_defined = true;
  }
  return hist;
}

}  // namespace evres
