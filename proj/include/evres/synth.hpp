#pragma once

// Deterministic synthetic inputs: fractal value-noise textures for the
// bundled scenes and smooth random camera trajectories. Everything is a pure
// function of the seed.

#include <cmath>
#include <string>
#include <vector>

#include "evres/errors.hpp"
#include "evres/frame.hpp"
#include "evres/geometry.hpp"
#include "evres/rng.hpp"
#include "evres/scene.hpp"

namespace evres {

struct TextureParams {
  int size = 2048;
  double base_cells = 6.0;    // lattice cells of the coarsest octave
  int octaves = 8;
  double persistence = 0.65;  // amplitude falloff per octave; the log-rate
                              // scaling exponent is roughly 1 + log2(persistence)
  double log_range = 2.4;     // log-irradiance dynamic range
};

namespace detail {

inline double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

inline double lattice_value(uint64_t seed, uint64_t octave, int64_t ix, int64_t iy) {
  const uint64_t key = (static_cast<uint64_t>(ix) << 32) ^
                       (static_cast<uint64_t>(iy) & 0xffffffffull);
  return static_cast<double>(rng_u64(seed, octave + 1, key) >> 11) * 0x1.0p-53;
}

// Smoothly interpolated lattice noise in [0, 1], cell size in pixels.
inline double value_noise(uint64_t seed, uint64_t octave, double x, double y,
                          double cell) {
  const double gx = x / cell, gy = y / cell;
  const int64_t ix = static_cast<int64_t>(std::floor(gx));
  const int64_t iy = static_cast<int64_t>(std::floor(gy));
  const double fx = fade(gx - ix), fy = fade(gy - iy);
  const double v00 = lattice_value(seed, octave, ix, iy);
  const double v10 = lattice_value(seed, octave, ix + 1, iy);
  const double v01 = lattice_value(seed, octave, ix, iy + 1);
  const double v11 = lattice_value(seed, octave, ix + 1, iy + 1);
  return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

}  // namespace detail

// Multi-octave value noise mapped exponentially to irradiance in
// [exp(-log_range), 1]: log irradiance is affine in the noise, so log
// gradients are uniform across the brightness range.
inline Frame synth_texture(uint64_t seed, const TextureParams& p) {
  Frame f(p.size, p.size, FrameKind::irradiance);
  double amp_total = 0.0;
  std::vector<double> amps(p.octaves), cells(p.octaves);
  for (int o = 0; o < p.octaves; ++o) {
    amps[o] = std::pow(p.persistence, o);
    cells[o] = std::max(1.5, p.size / (p.base_cells * std::pow(2.0, o)));
    amp_total += amps[o];
  }
  for (int y = 0; y < p.size; ++y) {
    for (int x = 0; x < p.size; ++x) {
      double v = 0.0;
      for (int o = 0; o < p.octaves; ++o)
        v += amps[o] * detail::value_noise(seed, o, x, y, cells[o]);
      v /= amp_total;
      // Widen the effective range: fBm sums concentrate around 0.5.
      v = std::clamp(0.5 + 1.9 * (v - 0.5), 0.0, 1.0);
      f.at(x, y) = std::exp(p.log_range * (v - 1.0));
    }
  }
  return f;
}

// The three bundled scene textures. Parameters differ in feature scale and
// contrast so the trend criteria are checked on distinct inputs.
inline TextureParams bundled_texture_params(const std::string& name) {
  TextureParams p;
  if (name == "carpet") {
    p.base_cells = 8.0;
    p.octaves = 8;
    p.persistence = 0.6;
    p.log_range = 2.2;
  } else if (name == "rocks") {
    p.base_cells = 5.0;
    p.octaves = 8;
    p.persistence = 0.66;
    p.log_range = 2.5;
  } else if (name == "gravel") {
    p.base_cells = 12.0;
    p.octaves = 7;
    p.persistence = 0.62;
    p.log_range = 2.0;
  } else {
    throw ConfigError("unknown bundled scene '" + name +
                      "' (expected carpet, rocks or gravel)");
  }
  return p;
}

inline uint64_t bundled_texture_seed(const std::string& name) {
  uint64_t h = 14695981039346656037ull;
  for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  return h;
}

struct SceneParams {
  std::string name = "rocks";
  double depth_m = 0.6;          // camera-to-plane distance at rest
  double physical_size_m = 1.4;  // square texture extent
  int texture_size = 2048;
};

// Front-parallel plane at z = depth, texture centered on the optical axis.
inline TemplateScene bundled_scene(const SceneParams& sp) {
  TextureParams tp = bundled_texture_params(sp.name);
  tp.size = sp.texture_size;
  Frame tex = synth_texture(bundled_texture_seed(sp.name), tp);
  const Plane plane(Eigen::Vector3d::UnitZ(), sp.depth_m);
  const Eigen::Vector3d origin(-0.5 * sp.physical_size_m, -0.5 * sp.physical_size_m,
                               sp.depth_m);
  return TemplateScene::create(std::move(tex), sp.physical_size_m,
                               sp.physical_size_m, plane, origin);
}

// ---------------------------------------------------------------------------
// Random smooth trajectories
// ---------------------------------------------------------------------------

struct TrajectoryParams {
  double duration_s = 1.3;
  double knot_spacing_s = 0.002;  // tracking-protocol lattice at speed 1
  double amplitude_m = 0.16;      // peak in-plane excursion
  double depth_amplitude_m = 0.02;
  double rot_amplitude_rad = 0.025;
  double base_speed_m_s = 0.20;   // approximate peak in-plane speed
};

// Smooth quasi-periodic camera motion parallel to the scene plane with mild
// depth and orientation wobble. Control poses sample the analytic path; the
// spline itself is the ground-truth trajectory. Domain covers [0, duration].
inline CumulativeBSpline synth_trajectory(uint64_t seed,
                                          const TrajectoryParams& p) {
  CumulativeBSpline s;
  s.knot_spacing = p.knot_spacing_s;
  s.t0 = -2.0 * p.knot_spacing_s;
  const int n = static_cast<int>(std::ceil(p.duration_s / p.knot_spacing_s)) + 6;

  const double wx = p.base_speed_m_s / p.amplitude_m;
  const double wy = wx * (1.2 + 0.5 * rng_uniform(seed, 1, 0));
  const double wz = wx * (0.6 + 0.3 * rng_uniform(seed, 1, 1));
  const double phx = 2 * M_PI * rng_uniform(seed, 1, 2);
  const double phy = 2 * M_PI * rng_uniform(seed, 1, 3);
  const double phz = 2 * M_PI * rng_uniform(seed, 1, 4);
  const double ax = p.amplitude_m * (0.8 + 0.4 * rng_uniform(seed, 1, 5));
  const double ay = p.amplitude_m * (0.5 + 0.4 * rng_uniform(seed, 1, 6));
  const double wr = wx * (0.8 + 0.6 * rng_uniform(seed, 1, 7));

  for (int i = 0; i < n; ++i) {
    const double t = s.t0 + i * s.knot_spacing;
    const Eigen::Vector3d center(ax * std::sin(wx * t + phx),
                                 ay * std::sin(wy * t + phy),
                                 p.depth_amplitude_m * std::sin(wz * t + phz));
    const Eigen::Vector3d wobble(
        p.rot_amplitude_rad * std::sin(wr * t + phy),
        p.rot_amplitude_rad * std::sin(0.9 * wr * t + phz),
        0.5 * p.rot_amplitude_rad * std::sin(1.3 * wr * t + phx));
    const Eigen::Quaterniond r_wc = so3_exp(wobble);  // world-from-camera
    Pose cw;
    cw.q = r_wc.conjugate();
    cw.t = -(cw.q * center);
    s.control_poses.push_back(cw);
  }
  return s;
}

// Intrinsics shared by all simulated resolutions: identical field of view,
// focal length proportional to the sensor width.
inline CameraIntrinsics scaled_intrinsics(int width, int height,
                                          double focal_per_width = 1.4) {
  return CameraIntrinsics(focal_per_width * width, focal_per_width * width,
                          0.5 * width - 0.5, 0.5 * height - 0.5, width, height);
}

}  // namespace evres
