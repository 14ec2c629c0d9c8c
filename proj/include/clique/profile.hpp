#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "clique/core.hpp"

namespace clique {

// Windows examined during ingestion-time profiling: an evenly spaced subset
// covering ceil(fraction * n_windows) windows, always including window 0.
std::vector<std::int32_t> profiling_windows(int n_windows, double sample_fraction);

struct CameraProfile {
  CameraId camera;
  double mean_distinct_objects_per_window{0.0};
  int sample_windows_used{0};
};

struct StarterProfile {
  std::vector<CameraProfile> cameras;
  // Per group, cameras ordered by density (descending), ties by lowest id.
  std::map<GeoGroupId, std::vector<CameraId>> ranking;
  int windows_used{0};
  int windows_total{0};

  std::map<GeoGroupId, CameraId> starters() const;
};

StarterProfile profile_cameras(const Dataset& ds, double sample_fraction);

// Highest ranked in-scope camera of every group; throws if a group has none.
std::map<GeoGroupId, CameraId> select_starters(const StarterProfile& profile,
                                               const std::set<CameraId>& scope);

// The top n in-scope cameras of every group.
std::map<GeoGroupId, std::vector<CameraId>> top_cameras(const StarterProfile& profile,
                                                        const std::set<CameraId>& scope,
                                                        int n);

struct Thresholds {
  double d_short{0.73};
  double d_long{0.91};
  bool adjusted{false};  // d_short was shrunk to stay below d_long

  double p_high() const { return 1.0 / d_short; }
  double p_low() const { return 1.0 / d_long; }
  void validate() const;
};

void to_json(nlohmann::json& j, const Thresholds& t);
void from_json(const nlohmann::json& j, Thresholds& t);

struct LabeledFeature {
  Feature feature;
  ObjectId object;
};

// Detections with truth labels inside the given windows, at most max_count
// of them (evenly strided) to bound the pair enumeration.
std::vector<LabeledFeature> labeled_sample(const Dataset& ds,
                                           std::span<const std::int32_t> windows,
                                           std::size_t max_count = 2500);

// d_short: largest tau such that at least 99% of labeled pairs closer than
// tau are same-object pairs. d_long: 95th percentile of same-object pair
// distances. A zero d_long (identical same-object features) takes the value
// of d_short. If d_short >= d_long it is shrunk to 0.99 * d_long.
Thresholds calibrate_thresholds(std::span<const LabeledFeature> sample);

// The unadjusted d_short: the 99%-purity cut alone.
double purity_cut(std::span<const LabeledFeature> sample);

struct ClipStats {
  std::int64_t boxes{0};        // x1
  std::int64_t busy_frames{0};  // x2: frames with at least one box
};

ClipStats clip_stats(std::span<const Detection> clip);

struct KSample {
  ClipStats stats;
  int true_k{0};
};

// k = a . z(x1, x2) + b with z = [x1, x2, (x1/x2)^2, x1/x2, x2/x1].
struct KModel {
  Eigen::Matrix<double, 5, 1> a = Eigen::Matrix<double, 5, 1>::Zero();
  double b{1.0};
  double ridge_lambda{1.0};

  static Eigen::Matrix<double, 5, 1> features(const ClipStats& s);
  double raw(const ClipStats& s) const { return a.dot(features(s)) + b; }
};

void to_json(nlohmann::json& j, const KModel& m);
void from_json(const nlohmann::json& j, KModel& m);

// Closed-form ridge fit; the intercept is not penalized.
KModel train_k_model(std::span<const KSample> samples, double ridge_lambda = 1.0);

// One sample per non-empty labeled clip in the given windows.
std::vector<KSample> k_samples(const Dataset& ds, std::span<const std::int32_t> windows);

}  // namespace clique
