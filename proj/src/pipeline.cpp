#include "clique/pipeline.hpp"

#include <algorithm>

#include "clique/io.hpp"
#include "clique/json_fields.hpp"
#include "clique/rng.hpp"

namespace clique {

using nlohmann::json;

void to_json(json& j, const ProfileOptions& o) {
  j = {{"sample_fraction", o.sample_fraction},
       {"skip_calibration", o.skip_calibration},
       {"ridge_lambda", o.ridge_lambda},
       {"lag_windows", o.lag_windows}};
}

void from_json(const json& j, ProfileOptions& o) {
  FieldReader r(j, "profile");
  r.opt("sample_fraction", o.sample_fraction)
      .opt("skip_calibration", o.skip_calibration)
      .opt("ridge_lambda", o.ridge_lambda)
      .opt("lag_windows", o.lag_windows)
      .finish();
}

Profile build_profile(const Dataset& ds, const ProfileOptions& options) {
  return build_profile(ds, dataset_hash(ds), options);
}

Profile build_profile(const Dataset& ds, const std::string& hash, const ProfileOptions& options) {
  Profile p;
  p.dataset_hash = hash;
  p.options = options;
  p.windows = profiling_windows(ds.window_count(), options.sample_fraction);
  p.cameras = profile_cameras(ds, options.sample_fraction);
  if (!options.skip_calibration) p.thresholds = calibrate_thresholds(labeled_sample(ds, p.windows));
  const auto ks = k_samples(ds, p.windows);
  if (ks.size() < 6)
    throw InvalidInput("profiling windows hold " + std::to_string(ks.size()) +
                       " non-empty clips; the k-model needs 6 (raise profile.sample_fraction)");
  p.k_model = train_k_model(ks, options.ridge_lambda);
  p.correlation = build_correlation(ds, p.windows, options.lag_windows);
  return p;
}

json profile_to_json(const Profile& p) {
  json cams = json::array();
  for (const auto& c : p.cameras.cameras)
    cams.push_back({{"camera_id", c.camera.value},
                    {"mean_distinct_objects_per_window", c.mean_distinct_objects_per_window},
                    {"sample_windows_used", c.sample_windows_used}});
  json ranking = json::array();
  json starters = json::array();
  for (const auto& [g, order] : p.cameras.ranking) {
    json ids = json::array();
    for (auto c : order) ids.push_back(c.value);
    ranking.push_back({{"geo_group_id", g.value}, {"cameras", ids}});
    starters.push_back({{"geo_group_id", g.value}, {"camera_id", order.front().value}});
  }
  return {{"schema", "clique-profile/1"},
          {"dataset_hash", p.dataset_hash},
          {"options", p.options},
          {"profiling_windows", p.windows},
          {"overhead", {{"windows_used", p.cameras.windows_used}, {"windows_total", p.cameras.windows_total}}},
          {"cameras", cams},
          {"starter_ranking", ranking},
          {"starters", starters},
          {"thresholds", p.thresholds},
          {"k_model", p.k_model},
          {"correlation", p.correlation}};
}

Profile profile_from_json(const json& j) {
  FieldReader r(j, "profile");
  std::string schema;
  Profile p;
  r.req("schema", schema).req("dataset_hash", p.dataset_hash).req("options", p.options);
  if (schema != "clique-profile/1") throw InvalidInput("unsupported profile schema '" + schema + "'");
  r.req("profiling_windows", p.windows).req("thresholds", p.thresholds).req("k_model", p.k_model);
  r.req("correlation", p.correlation);
  const auto& overhead = r.sub("overhead");
  p.cameras.windows_used = overhead.at("windows_used").get<int>();
  p.cameras.windows_total = overhead.at("windows_total").get<int>();
  for (const auto& c : r.sub("cameras"))
    p.cameras.cameras.push_back({CameraId{c.at("camera_id").get<std::int32_t>()},
                                 c.at("mean_distinct_objects_per_window").get<double>(),
                                 c.at("sample_windows_used").get<int>()});
  for (const auto& g : r.sub("starter_ranking")) {
    auto& order = p.cameras.ranking[GeoGroupId{g.at("geo_group_id").get<std::int32_t>()}];
    for (const auto& c : g.at("cameras")) order.emplace_back(c.get<std::int32_t>());
  }
  r.sub("starters");
  r.finish();
  return p;
}

StarterPolicy starter_policy_from_string(const std::string& s) {
  if (s == "density") return StarterPolicy::Density;
  if (s == "posture") return StarterPolicy::Posture;
  if (s == "random") return StarterPolicy::Random;
  throw InvalidInput("unknown starter policy '" + s + "'");
}

CameraPolicy camera_policy_from_string(const std::string& s) {
  if (s == "random") return CameraPolicy::Random;
  if (s == "complementary") return CameraPolicy::Complementary;
  throw InvalidInput("unknown camera policy '" + s + "'");
}

std::string_view to_string(StarterPolicy p) {
  return p == StarterPolicy::Density ? "density" : p == StarterPolicy::Posture ? "posture" : "random";
}

std::string_view to_string(CameraPolicy p) { return p == CameraPolicy::Random ? "random" : "complementary"; }

std::set<std::uint32_t> true_cells(const Repository& repo, ObjectId object, const std::set<CameraId>& scope) {
  std::set<std::uint32_t> out;
  for (std::size_t i = 0; i < repo.cells.size(); ++i) {
    for (const auto& [cam, dets] : repo.cells[i].clips) {
      if (!scope.count(cam)) continue;
      if (std::any_of(dets.begin(), dets.end(), [&](const Detection& d) { return d.truth == object; })) {
        out.insert(static_cast<std::uint32_t>(i));
        break;
      }
    }
  }
  return out;
}

QueryCase make_query_case(std::shared_ptr<const Repository> repo, ObjectId target, std::uint64_t seed,
                          bool exclude_origin) {
  const Dataset& ds = repo->dataset;
  std::map<CameraId, std::vector<const Detection*>> by_camera;
  for (const auto& d : ds.detections)
    if (d.truth == target) by_camera[d.camera].push_back(&d);
  if (by_camera.empty()) throw InvalidInput("target object " + std::to_string(target.value) + " has no detections");
  auto origin = by_camera.begin();
  for (auto it = by_camera.begin(); it != by_camera.end(); ++it)
    if (it->second.size() > origin->second.size()) origin = it;

  QueryCase q;
  q.id = "obj" + std::to_string(target.value);
  q.target_object = target;
  q.origin = origin->first;
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(target.value), 0x71ULL}));
  q.target = origin->second[rng.index(origin->second.size())]->feature;
  for (const auto& c : ds.cameras)
    if (!exclude_origin || c.id != *q.origin) q.scope.insert(c.id);
  q.truth = true_cells(*repo, target, q.scope);
  q.repo = std::move(repo);
  return q;
}

QueryCase query_case_from_detection(std::shared_ptr<const Repository> repo, ObjectId target,
                                    std::size_t detection_index, bool exclude_origin) {
  const Dataset& ds = repo->dataset;
  std::vector<const Detection*> dets;
  for (const auto& d : ds.detections)
    if (d.truth == target) dets.push_back(&d);
  if (detection_index >= dets.size())
    throw InvalidInput("target object " + std::to_string(target.value) + " has " + std::to_string(dets.size()) +
                       " detections; index " + std::to_string(detection_index) + " is out of range");
  QueryCase q;
  q.id = "obj" + std::to_string(target.value) + "-det" + std::to_string(detection_index);
  q.target_object = target;
  q.origin = dets[detection_index]->camera;
  q.target = dets[detection_index]->feature;
  for (const auto& c : ds.cameras)
    if (!exclude_origin || c.id != *q.origin) q.scope.insert(c.id);
  q.truth = true_cells(*repo, target, q.scope);
  q.repo = std::move(repo);
  return q;
}

std::map<GeoGroupId, CameraId> choose_starters(StarterPolicy policy, const Profile& profile, const Dataset& ds,
                                               const std::set<CameraId>& scope, const Posture& origin,
                                               std::uint64_t seed) {
  switch (policy) {
    case StarterPolicy::Density:
      return select_starters(profile.cameras, scope);
    case StarterPolicy::Posture:
      return starter_by_posture(origin, ds.cameras, scope);
    case StarterPolicy::Random: {
      std::map<GeoGroupId, CameraId> out;
      for (auto g : ds.geo_groups) {
        std::vector<CameraId> pool;
        for (auto c : ds.cameras_in(g))
          if (scope.count(c)) pool.push_back(c);
        if (pool.empty()) throw InvalidInput("geo-group " + std::to_string(g.value) + " has no camera in scope");
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(g.value), 0x7374ULL}));
        out[g] = pool[rng.index(pool.size())];
      }
      return out;
    }
  }
  throw std::logic_error("unhandled starter policy");
}

std::set<ClipKey> preprocessed_clips(const Repository& repo, const Profile& profile, const std::set<CameraId>& scope,
                                     int per_group) {
  std::set<ClipKey> out;
  if (per_group <= 0) return out;
  const auto top = top_cameras(profile.cameras, scope, per_group);
  for (const auto& cell : repo.cells)
    if (auto it = top.find(cell.id.group); it != top.end())
      for (auto cam : it->second) out.insert({cell.id, cam});
  return out;
}

}  // namespace clique
