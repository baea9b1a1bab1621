#pragma once

// Shared end-to-end fixtures: a textured planar scene observed along a smooth
// trajectory, with dense rendering and event generation at one resolution.

#include <vector>

#include "evres/multiscale.hpp"
#include "evres/scene.hpp"
#include "evres/sensor.hpp"
#include "evres/synth.hpp"

namespace fixtures {

struct Pipeline {
  evres::TemplateScene scene;
  evres::CameraIntrinsics k;
  evres::CumulativeBSpline spline;
  double frame_rate;

  static Pipeline make(int resolution, uint64_t seed = 1,
                       const std::string& scene_name = "rocks",
                       double frame_rate = 2000.0, int texture_size = 512) {
    evres::SceneParams sp;
    sp.name = scene_name;
    sp.texture_size = texture_size;
    Pipeline p{evres::bundled_scene(sp),
               evres::scaled_intrinsics(resolution, resolution),
               evres::synth_trajectory(seed, evres::TrajectoryParams{}),
               frame_rate};
    return p;
  }

  evres::Frame log_frame_at(double t) const {
    return evres::log_frame(
        evres::render_frame(scene, k, evres::spline_sample(spline, t), t));
  }

  std::vector<evres::Frame> render_log_sequence(double t0, double t1) const {
    std::vector<evres::Frame> logs;
    const int n = static_cast<int>(std::floor((t1 - t0) * frame_rate));
    logs.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double t = t0 + i / frame_rate;
      logs.push_back(log_frame_at(t));
    }
    return logs;
  }

  evres::EventStream events(double t0, double t1,
                            double f_cutoff = std::numeric_limits<double>::infinity(),
                            double c = 0.2) const {
    evres::SensorConfig cfg;
    cfg.contrast_threshold = c;
    cfg.f_cutoff_hz = f_cutoff;
    cfg.width = k.width;
    cfg.height = k.height;
    return evres::generate_events(render_log_sequence(t0, t1), cfg);
  }
};

}  // namespace fixtures
