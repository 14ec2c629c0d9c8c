#pragma once

#include <initializer_list>
#include <vector>

#include "clique/core.hpp"
#include "clique/synth.hpp"

namespace fixture {

inline clique::Feature vec(std::initializer_list<double> xs) {
  clique::Feature f(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) f[i++] = x;
  return f;
}

// e_i in dim dimensions
inline clique::Feature axis(int dim, int i, double scale = 1.0) {
  clique::Feature f = clique::Feature::Zero(dim);
  f[i] = scale;
  return f;
}

// A few groups, two or three cameras each, two minutes.
inline clique::WorldConfig small_world(std::uint64_t seed) {
  clique::WorldConfig c;
  c.n_geo_groups = 3;
  c.cameras_per_group = 2;
  c.cameras_per_group_max = 3;
  c.duration_s = 120.0;
  c.object_arrival_rate = 2.0;
  c.feature_dim = 8;
  c.seed = seed;
  return c;
}

inline clique::WorldConfig noiseless(clique::WorldConfig c) {
  c.posture_strength = 0.0;
  c.smooth_noise = 0.0;
  c.outlier_prob = 0.0;
  return c;
}

inline clique::Detection det(clique::CameraId cam, std::int64_t frame, double fps, clique::Feature f,
                             std::optional<int> truth = std::nullopt) {
  clique::Detection d;
  d.camera = cam;
  d.frame_index = frame;
  d.timestamp_s = static_cast<double>(frame) / fps;
  d.feature = std::move(f);
  if (truth) d.truth = clique::ObjectId{*truth};
  return d;
}

// groups x cams_per_group cameras at 1 fps with no detections.
inline clique::Dataset empty_dataset(int groups, int cams_per_group, double duration_s, int dim = 4) {
  clique::Dataset ds;
  ds.duration_s = duration_s;
  ds.feature_dim = dim;
  int id = 0;
  for (int g = 0; g < groups; ++g) {
    ds.geo_groups.emplace_back(g);
    for (int j = 0; j < cams_per_group; ++j) {
      clique::Camera c;
      c.id = clique::CameraId{id++};
      c.group = clique::GeoGroupId{g};
      c.posture = clique::Posture(j * 90.0, 0.0, 0.0);
      ds.cameras.push_back(c);
    }
  }
  return ds;
}

}  // namespace fixture
