#include "clique/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "clique/io.hpp"
#include "clique/json_fields.hpp"
#include "clique/rng.hpp"

namespace clique {

using nlohmann::json;

void WorldConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidInput("world config: " + m); };
  if (n_geo_groups < 1) fail("n_geo_groups must be >= 1");
  if (cameras_per_group < 1) fail("cameras_per_group must be >= 1");
  if (cameras_per_group_max != 0 && cameras_per_group_max < cameras_per_group)
    fail("cameras_per_group_max must be 0 or >= cameras_per_group");
  if (!(duration_s > 0.0)) fail("duration_s must be positive");
  if (!(window_s > 0.0)) fail("window_s must be positive");
  if (!(fps > 0.0)) fail("fps must be positive");
  if (object_arrival_rate < 0.0) fail("object_arrival_rate must be non-negative");
  if (!(dwell_s > 0.0)) fail("dwell_s must be positive");
  if (revisit_prob < 0.0 || revisit_prob > 1.0) fail("revisit_prob must be in [0,1]");
  if (revisit_max_lag_windows < 1) fail("revisit_max_lag_windows must be >= 1");
  if (feature_dim < 2) fail("feature_dim must be >= 2");
  if (posture_strength < 0.0) fail("posture_strength must be non-negative");
  if (smooth_noise < 0.0) fail("smooth_noise must be non-negative");
  if (smooth_memory < 0.0 || smooth_memory >= 1.0) fail("smooth_memory must be in [0,1)");
  if (outlier_prob < 0.0 || outlier_prob > 1.0) fail("outlier_prob must be in [0,1]");
  if (outlier_scale < 0.0) fail("outlier_scale must be non-negative");
  if (!(capture_prob > 0.0) || capture_prob > 1.0) fail("capture_prob must be in (0,1]");
  if (capture_spread < 0.0 || capture_spread >= 1.0) fail("capture_spread must be in [0,1)");
}

std::string WorldConfig::hash() const {
  json j;
  to_json(j, *this);
  return hex64(fnv1a64(j.dump()));
}

void to_json(json& j, const WorldConfig& c) {
  j = {{"n_geo_groups", c.n_geo_groups},
       {"cameras_per_group", c.cameras_per_group},
       {"cameras_per_group_max", c.cameras_per_group_max},
       {"duration_s", c.duration_s},
       {"window_s", c.window_s},
       {"fps", c.fps},
       {"object_arrival_rate", c.object_arrival_rate},
       {"dwell_s", c.dwell_s},
       {"revisit_prob", c.revisit_prob},
       {"revisit_fixed_next", c.revisit_fixed_next},
       {"revisit_max_lag_windows", c.revisit_max_lag_windows},
       {"feature_dim", c.feature_dim},
       {"posture_strength", c.posture_strength},
       {"smooth_noise", c.smooth_noise},
       {"smooth_memory", c.smooth_memory},
       {"outlier_prob", c.outlier_prob},
       {"outlier_scale", c.outlier_scale},
       {"capture_prob", c.capture_prob},
       {"capture_spread", c.capture_spread},
       {"seed", c.seed}};
}

void from_json(const json& j, WorldConfig& c) {
  FieldReader r(j, "world");
  r.opt("n_geo_groups", c.n_geo_groups)
      .opt("cameras_per_group", c.cameras_per_group)
      .opt("cameras_per_group_max", c.cameras_per_group_max)
      .opt("duration_s", c.duration_s)
      .opt("window_s", c.window_s)
      .opt("fps", c.fps)
      .opt("object_arrival_rate", c.object_arrival_rate)
      .opt("dwell_s", c.dwell_s)
      .opt("revisit_prob", c.revisit_prob)
      .opt("revisit_fixed_next", c.revisit_fixed_next)
      .opt("revisit_max_lag_windows", c.revisit_max_lag_windows)
      .opt("feature_dim", c.feature_dim)
      .opt("posture_strength", c.posture_strength)
      .opt("smooth_noise", c.smooth_noise)
      .opt("smooth_memory", c.smooth_memory)
      .opt("outlier_prob", c.outlier_prob)
      .opt("outlier_scale", c.outlier_scale)
      .opt("capture_prob", c.capture_prob)
      .opt("capture_spread", c.capture_spread)
      .opt("seed", c.seed)
      .finish();
}

Feature posture_embedding(double orientation_deg, int feature_dim) {
  // Fixed basis per dimension, independent of any world seed.
  Rng rng(derive_seed(0x706f7374757265ULL, {static_cast<std::uint64_t>(feature_dim)}));
  Feature u(feature_dim), v(feature_dim);
  for (int i = 0; i < feature_dim; ++i) u[i] = rng.normal();
  for (int i = 0; i < feature_dim; ++i) v[i] = rng.normal();
  u.normalize();
  v -= v.dot(u) * u;
  v.normalize();
  const double th = wrap_degrees(orientation_deg) * M_PI / 180.0;
  return std::cos(th) * u + std::sin(th) * v;
}

namespace {

struct Visit {
  ObjectId object;
  std::size_t group_pos;
  double t_start;
  double t_end;
};

Feature random_direction(Rng& rng, int dim) {
  Feature f(dim);
  for (int i = 0; i < dim; ++i) f[i] = rng.normal();
  return normalized(f);
}

Feature gaussian(Rng& rng, int dim, double scale) {
  Feature f(dim);
  const double sd = scale / std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < dim; ++i) f[i] = sd * rng.normal();
  return f;
}

bool file_order(const Detection& a, const Detection& b) {
  if (a.timestamp_s != b.timestamp_s) return a.timestamp_s < b.timestamp_s;
  if (a.camera != b.camera) return a.camera < b.camera;
  const std::int32_t ta = a.truth ? a.truth->value : -1;
  const std::int32_t tb = b.truth ? b.truth->value : -1;
  if (ta != tb) return ta < tb;
  return detection_less(a, b);
}

}  // namespace

GeneratedWorld generate_world(const WorldConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, {1}));
  GeneratedWorld out;
  Dataset& ds = out.dataset;
  ds.duration_s = cfg.duration_s;
  ds.window_s = cfg.window_s;
  ds.feature_dim = cfg.feature_dim;
  ds.meta.seed = cfg.seed;
  ds.meta.config_hash = cfg.hash();

  std::vector<std::vector<std::size_t>> group_cams(static_cast<std::size_t>(cfg.n_geo_groups));
  std::int32_t next_cam = 0;
  for (int g = 0; g < cfg.n_geo_groups; ++g) {
    ds.geo_groups.emplace_back(g);
    int n = cfg.cameras_per_group;
    if (cfg.cameras_per_group_max > cfg.cameras_per_group)
      n += static_cast<int>(rng.index(
          static_cast<std::size_t>(cfg.cameras_per_group_max - cfg.cameras_per_group + 1)));
    const double base = rng.uniform(0.0, 360.0);
    for (int j = 0; j < n; ++j) {
      Camera c;
      c.id = CameraId{next_cam++};
      c.group = GeoGroupId{g};
      c.fps = cfg.fps;
      const double orientation = base + j * 360.0 / n + rng.uniform(-15.0, 15.0);
      c.posture = Posture(orientation, (g % 3) * 100.0 + rng.uniform(-5.0, 5.0),
                          (g / 3) * 100.0 + rng.uniform(-5.0, 5.0));
      group_cams[static_cast<std::size_t>(g)].push_back(ds.cameras.size());
      ds.cameras.push_back(c);
      out.capture_probs.push_back(cfg.capture_prob * (1.0 - cfg.capture_spread * rng.uniform()));
    }
  }

  std::vector<Feature> cam_offset;
  for (const auto& c : ds.cameras)
    cam_offset.push_back(cfg.posture_strength * posture_embedding(c.posture.orientation_deg, cfg.feature_dim));

  // Object arrivals and revisits.
  std::vector<Visit> visits;
  std::vector<Feature> identity;
  const int n_windows = static_cast<int>(std::ceil(cfg.duration_s / cfg.window_s - 1e-12));
  for (int w = 0; w < n_windows; ++w) {
    for (int g = 0; g < cfg.n_geo_groups; ++g) {
      const int arrivals = rng.poisson(cfg.object_arrival_rate);
      for (int a = 0; a < arrivals; ++a) {
        const ObjectId obj{static_cast<std::int32_t>(identity.size())};
        identity.push_back(random_direction(rng, cfg.feature_dim));
        const double t0 = rng.uniform(w * cfg.window_s, std::min((w + 1) * cfg.window_s, cfg.duration_s));
        const double dwell = cfg.dwell_s * rng.uniform(0.5, 1.5);
        visits.push_back({obj, static_cast<std::size_t>(g), t0, t0 + dwell});
        if (cfg.n_geo_groups > 1 && rng.bernoulli(cfg.revisit_prob)) {
          int dest = (g + 1) % cfg.n_geo_groups;
          if (!cfg.revisit_fixed_next) {
            dest = static_cast<int>(rng.index(static_cast<std::size_t>(cfg.n_geo_groups - 1)));
            if (dest >= g) ++dest;
          }
          const int lag = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(cfg.revisit_max_lag_windows)));
          const double t1 = t0 + lag * cfg.window_s;
          if (t1 < cfg.duration_s) {
            visits.push_back({obj, static_cast<std::size_t>(dest), t1, t1 + dwell});
            out.revisits.push_back({obj, GeoGroupId{g}, GeoGroupId{dest}, lag});
          }
        }
      }
    }
  }

  // Observations.
  const double walk_sd = cfg.smooth_noise;
  const double stationary = walk_sd / std::sqrt(1.0 - cfg.smooth_memory * cfg.smooth_memory);
  const auto frame_limit = static_cast<std::int64_t>(std::ceil(cfg.duration_s * cfg.fps - 1e-9));
  for (const auto& v : visits) {
    for (auto ci : group_cams[v.group_pos]) {
      const Camera& cam = ds.cameras[ci];
      if (!rng.bernoulli(out.capture_probs[ci])) continue;
      const Feature seen = normalized(identity[static_cast<std::size_t>(v.object.value)] + cam_offset[ci]);
      Feature walk = gaussian(rng, cfg.feature_dim, stationary);
      const auto f0 = static_cast<std::int64_t>(std::ceil(v.t_start * cam.fps - 1e-9));
      for (std::int64_t f = f0; f < frame_limit && static_cast<double>(f) / cam.fps < v.t_end; ++f) {
        Feature obs = seen + walk;
        if (rng.bernoulli(cfg.outlier_prob)) obs += gaussian(rng, cfg.feature_dim, cfg.outlier_scale);
        Detection d;
        d.camera = cam.id;
        d.frame_index = f;
        d.timestamp_s = static_cast<double>(f) / cam.fps;
        d.feature = normalized(obs);
        d.truth = v.object;
        ds.detections.push_back(std::move(d));
        walk = cfg.smooth_memory * walk + gaussian(rng, cfg.feature_dim, walk_sd);
      }
    }
  }
  std::sort(ds.detections.begin(), ds.detections.end(), file_order);
  return out;
}

PostureRatio measure_posture_ratio(const Dataset& ds) {
  std::map<ObjectId, std::vector<const Detection*>> by_object;
  for (const auto& d : ds.detections)
    if (d.truth) by_object[*d.truth].push_back(&d);
  double cross = 0.0, same = 0.0;
  std::size_t n_cross = 0, n_same = 0;
  for (const auto& [obj, dets] : by_object) {
    for (std::size_t i = 0; i < dets.size(); ++i) {
      for (std::size_t j = i + 1; j < dets.size(); ++j) {
        const auto& a = *dets[i];
        const auto& b = *dets[j];
        if (ds.camera(a.camera).group != ds.camera(b.camera).group) continue;
        const double dist = distance(a.feature, b.feature);
        if (a.camera == b.camera) {
          same += dist;
          ++n_same;
        } else {
          cross += dist;
          ++n_cross;
        }
      }
    }
  }
  PostureRatio r;
  if (n_cross) r.cross_posture_mean = cross / static_cast<double>(n_cross);
  if (n_same) r.same_posture_mean = same / static_cast<double>(n_same);
  return r;
}

double calibrate_posture_strength(WorldConfig config, double target_ratio, int iterations) {
  double lo = 0.0, hi = 4.0;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    config.posture_strength = mid;
    const auto r = measure_posture_ratio(generate_world(config).dataset);
    if (r.ratio() < target_ratio)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

void AugmentConfig::validate() const {
  if (epochs < 1) throw InvalidInput("augment: epochs must be >= 1");
  if (removal_lo < 0.0 || removal_hi > 1.0 || removal_lo > removal_hi)
    throw InvalidInput("augment: removal range must satisfy 0 <= lo <= hi <= 1");
}

void to_json(json& j, const AugmentConfig& c) {
  j = {{"epochs", c.epochs},
       {"removal_fraction_range", {c.removal_lo, c.removal_hi}},
       {"target_object_id", c.target.value},
       {"seed", c.seed}};
}

void from_json(const json& j, AugmentConfig& c) {
  FieldReader r(j, "augment");
  std::vector<double> range{c.removal_lo, c.removal_hi};
  std::int32_t target = c.target.value;
  r.opt("epochs", c.epochs)
      .opt("removal_fraction_range", range)
      .opt("target_object_id", target)
      .opt("seed", c.seed)
      .finish();
  if (range.size() != 2) throw InvalidInput("augment.removal_fraction_range needs 2 values");
  c.removal_lo = range[0];
  c.removal_hi = range[1];
  c.target = ObjectId{target};
}

Dataset augment(const Dataset& base, const AugmentConfig& cfg) {
  cfg.validate();
  std::set<ObjectId> objects;
  for (const auto& d : base.detections)
    if (d.truth) objects.insert(*d.truth);
  if (!objects.count(cfg.target))
    throw InvalidInput("augment: target object " + std::to_string(cfg.target.value) + " not in base");
  if (cfg.epochs == 1) return base;

  std::map<CameraId, std::int64_t> frames_per_epoch;
  for (const auto& c : base.cameras) {
    const double f = base.duration_s * c.fps;
    if (std::abs(f - std::round(f)) > 1e-9)
      throw InvalidInput("augment: base duration must span a whole number of frames");
    frames_per_epoch[c.id] = static_cast<std::int64_t>(std::llround(f));
  }

  Dataset out = base;
  out.duration_s = base.duration_s * cfg.epochs;
  json cj;
  to_json(cj, cfg);
  out.meta.config_hash = hex64(fnv1a64(cj.dump(), fnv1a64(base.meta.config_hash)));

  const std::vector<ObjectId> pool(objects.begin(), objects.end());
  Rng rng(derive_seed(cfg.seed, {2}));
  for (int e = 1; e < cfg.epochs; ++e) {
    const double fraction = rng.uniform(cfg.removal_lo, cfg.removal_hi);
    auto order = pool;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    const auto n_remove = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
    std::set<ObjectId> removed(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_remove));
    removed.insert(cfg.target);
    for (const auto& d : base.detections) {
      if (d.truth && removed.count(*d.truth)) continue;
      Detection c = d;
      c.frame_index += frames_per_epoch.at(d.camera) * e;
      c.timestamp_s = static_cast<double>(c.frame_index) / base.camera(d.camera).fps;
      out.detections.push_back(std::move(c));
    }
  }
  return out;
}

Dataset downsample(const Dataset& ds, int factor) {
  if (factor < 1) throw InvalidInput("downsample factor must be >= 1");
  Dataset out = ds;
  out.detections.clear();
  for (auto& c : out.cameras) c.fps /= factor;
  for (const auto& d : ds.detections) {
    if (d.frame_index % factor != 0) continue;
    Detection c = d;
    c.frame_index /= factor;
    out.detections.push_back(std::move(c));
  }
  return out;
}

json generation_manifest(const WorldConfig& config, const GeneratedWorld& world) {
  json cfg;
  to_json(cfg, config);
  json revisits = json::array();
  for (const auto& r : world.revisits)
    revisits.push_back({{"object_id", r.object.value},
                        {"from_group", r.from.value},
                        {"to_group", r.to.value},
                        {"lag_windows", r.lag_windows}});
  json truth = json::object();
  for (const auto& [obj, cells] : truth_cells(world.dataset)) {
    json cs = json::array();
    for (const auto& c : cells) cs.push_back({c.group.value, c.window});
    truth[std::to_string(obj.value)] = cs;
  }
  json probs = json::array();
  for (double p : world.capture_probs) probs.push_back(p);
  return {{"generator", "clique-synth/1"},
          {"config", cfg},
          {"seed", config.seed},
          {"dataset_hash", dataset_hash(world.dataset)},
          {"detections", world.dataset.detections.size()},
          {"objects", truth.size()},
          {"truth_cells", truth},
          {"camera_capture_probs", probs},
          {"revisits", revisits}};
}

}  // namespace clique
