#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "clique/core.hpp"

namespace clique {

// Parameters of the synthetic city. Observations follow
//   obs = normalize(normalize(X_o + beta * P_c) + n_t [+ spike])
// where X_o is the object identity, P_c the camera's posture embedding and
// n_t a per-(object, camera) AR(1) walk.
struct WorldConfig {
  int n_geo_groups{7};
  int cameras_per_group{3};
  int cameras_per_group_max{0};  // > cameras_per_group draws a per-group count
  double duration_s{600.0};
  double window_s{30.0};
  double fps{1.0};
  double object_arrival_rate{2.0};  // objects per geo-group per window
  double dwell_s{20.0};
  double revisit_prob{0.1};
  bool revisit_fixed_next{false};  // revisit group g+1 instead of a random one
  int revisit_max_lag_windows{2};
  int feature_dim{16};
  double posture_strength{0.195};  // beta
  double smooth_noise{0.04};     // sigma_s, step scale of the walk
  double smooth_memory{0.8};     // AR(1) coefficient of the walk
  double outlier_prob{0.05};     // p_o
  double outlier_scale{0.6};     // sigma_o
  double capture_prob{0.9};
  double capture_spread{0.3};  // per-camera capture prob = capture_prob * (1 - spread * u)
  std::uint64_t seed{1};

  void validate() const;
  std::string hash() const;
};

void to_json(nlohmann::json& j, const WorldConfig& c);
// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, WorldConfig& c);

struct Revisit {
  ObjectId object;
  GeoGroupId from;
  GeoGroupId to;
  int lag_windows{0};
};

struct GeneratedWorld {
  Dataset dataset;
  std::vector<Revisit> revisits;
  std::vector<double> capture_probs;  // per camera, indexed by camera id
};

// Unit posture embedding for an orientation: cos/sin of the angle projected
// onto a fixed orthonormal pair of feature-space directions, so embeddings of
// nearby orientations are close.
Feature posture_embedding(double orientation_deg, int feature_dim);

GeneratedWorld generate_world(const WorldConfig& config);

struct PostureRatio {
  double cross_posture_mean{0.0};  // same object, different cameras
  double same_posture_mean{0.0};   // same object, same camera
  double ratio() const { return cross_posture_mean / same_posture_mean; }
};

PostureRatio measure_posture_ratio(const Dataset& ds);

// Bisects beta so the cross/same posture distance ratio approaches target.
double calibrate_posture_strength(WorldConfig config, double target_ratio = 3.0,
                                  int iterations = 20);

struct AugmentConfig {
  int epochs{1};
  double removal_lo{0.0};
  double removal_hi{1.0};
  ObjectId target;
  std::uint64_t seed{1};

  void validate() const;
};

void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

// Duplicates the base recording into epochs. Epoch 0 is untouched; every
// later epoch drops a random fraction of objects wholesale and always drops
// the target.
Dataset augment(const Dataset& base, const AugmentConfig& cfg);

// Keeps every factor-th frame per camera and scales fps accordingly.
Dataset downsample(const Dataset& ds, int factor);

nlohmann::json generation_manifest(const WorldConfig& config, const GeneratedWorld& world);

}  // namespace clique
