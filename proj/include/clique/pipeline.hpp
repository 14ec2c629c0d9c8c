#pragma once

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clique/optimize.hpp"
#include "clique/profile.hpp"
#include "clique/search.hpp"
#include "clique/synth.hpp"

namespace clique {

struct ProfileOptions {
  double sample_fraction{0.1};
  bool skip_calibration{false};  // keep the 0.73 / 0.91 defaults
  double ridge_lambda{1.0};
  int lag_windows{2};
};

void to_json(nlohmann::json& j, const ProfileOptions& o);
void from_json(const nlohmann::json& j, ProfileOptions& o);

// Everything learnt at ingestion time; serialized as the profile sidecar.
struct Profile {
  std::string dataset_hash;
  ProfileOptions options;
  std::vector<std::int32_t> windows;
  StarterProfile cameras;
  Thresholds thresholds;
  KModel k_model;
  CorrelationModel correlation;
};

Profile build_profile(const Dataset& ds, const ProfileOptions& options);
Profile build_profile(const Dataset& ds, const std::string& hash, const ProfileOptions& options);

nlohmann::json profile_to_json(const Profile& p);
Profile profile_from_json(const nlohmann::json& j);

enum class StarterPolicy { Density, Posture, Random };
StarterPolicy starter_policy_from_string(const std::string& s);
CameraPolicy camera_policy_from_string(const std::string& s);
std::string_view to_string(StarterPolicy p);
std::string_view to_string(CameraPolicy p);

// A query over one repository, with its origin camera excluded.
struct QueryCase {
  std::string id;
  std::shared_ptr<const Repository> repo;
  ObjectId target_object;
  std::optional<CameraId> origin;  // unset for a query given as a bare feature
  Feature target;
  std::set<CameraId> scope;
  std::set<std::uint32_t> truth;  // in-scope cells holding the target
};

// The camera with the most target detections is the origin; the query
// feature is a seeded pick among its detections of the target.
QueryCase make_query_case(std::shared_ptr<const Repository> repo, ObjectId target, std::uint64_t seed,
                          bool exclude_origin = true);

// The query feature is the index-th detection of target in file order; its
// camera is the origin.
QueryCase query_case_from_detection(std::shared_ptr<const Repository> repo, ObjectId target,
                                    std::size_t detection_index, bool exclude_origin = true);

// Cells (as repository indices) holding detections of object from in-scope cameras.
std::set<std::uint32_t> true_cells(const Repository& repo, ObjectId object, const std::set<CameraId>& scope);

// Starter per group under a policy; Random draws from the in-scope cameras.
std::map<GeoGroupId, CameraId> choose_starters(StarterPolicy policy, const Profile& profile,
                                               const Dataset& ds, const std::set<CameraId>& scope,
                                               const Posture& origin, std::uint64_t seed);

// All clips of the top n density cameras per group, as if processed at ingestion.
std::set<ClipKey> preprocessed_clips(const Repository& repo, const Profile& profile,
                                     const std::set<CameraId>& scope, int per_group);

}  // namespace clique
