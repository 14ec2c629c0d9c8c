#include "clique/profile.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "clique/json_fields.hpp"

namespace clique {

using nlohmann::json;

std::vector<std::int32_t> profiling_windows(int n_windows, double sample_fraction) {
  if (!(sample_fraction > 0.0) || sample_fraction > 1.0)
    throw InvalidInput("sample_fraction must be in (0, 1]");
  std::vector<std::int32_t> out;
  if (n_windows <= 0) return out;
  const auto m = std::max(1, static_cast<int>(std::ceil(sample_fraction * n_windows - 1e-9)));
  for (int i = 0; i < m; ++i)
    out.push_back(static_cast<std::int32_t>((static_cast<long long>(i) * n_windows) / m));
  return out;
}

namespace {

// (camera, window) -> detections
std::map<std::pair<CameraId, std::int32_t>, std::vector<const Detection*>> index_clips(
    const Dataset& ds, std::span<const std::int32_t> windows) {
  const std::set<std::int32_t> wanted(windows.begin(), windows.end());
  std::map<std::pair<CameraId, std::int32_t>, std::vector<const Detection*>> out;
  for (const auto& d : ds.detections) {
    const auto w = ds.window_of(d.timestamp_s);
    if (wanted.count(w)) out[{d.camera, w}].push_back(&d);
  }
  return out;
}

std::set<ObjectId> distinct_objects(const std::vector<const Detection*>& dets) {
  std::set<ObjectId> s;
  for (const auto* d : dets)
    if (d->truth) s.insert(*d->truth);
  return s;
}

}  // namespace

std::map<GeoGroupId, CameraId> StarterProfile::starters() const {
  std::map<GeoGroupId, CameraId> out;
  for (const auto& [g, cams] : ranking) {
    if (cams.empty()) throw InvalidInput("geo-group " + std::to_string(g.value) + " has no cameras");
    out[g] = cams.front();
  }
  return out;
}

StarterProfile profile_cameras(const Dataset& ds, double sample_fraction) {
  const auto windows = profiling_windows(ds.window_count(), sample_fraction);
  const auto clips = index_clips(ds, windows);
  StarterProfile p;
  p.windows_used = static_cast<int>(windows.size());
  p.windows_total = ds.window_count();
  std::map<CameraId, double> density;
  for (const auto& cam : ds.cameras) {
    double total = 0.0;
    for (auto w : windows)
      if (auto it = clips.find({cam.id, w}); it != clips.end())
        total += static_cast<double>(distinct_objects(it->second).size());
    const double mean = windows.empty() ? 0.0 : total / static_cast<double>(windows.size());
    p.cameras.push_back({cam.id, mean, static_cast<int>(windows.size())});
    density[cam.id] = mean;
  }
  for (auto g : ds.geo_groups) {
    auto cams = ds.cameras_in(g);
    if (cams.empty()) throw InvalidInput("geo-group " + std::to_string(g.value) + " has no cameras");
    std::stable_sort(cams.begin(), cams.end(), [&](CameraId a, CameraId b) {
      if (density[a] != density[b]) return density[a] > density[b];
      return a < b;
    });
    p.ranking[g] = cams;
  }
  return p;
}

std::map<GeoGroupId, std::vector<CameraId>> top_cameras(const StarterProfile& profile,
                                                        const std::set<CameraId>& scope, int n) {
  std::map<GeoGroupId, std::vector<CameraId>> out;
  for (const auto& [g, cams] : profile.ranking) {
    auto& picked = out[g];
    for (auto c : cams) {
      if (static_cast<int>(picked.size()) >= n) break;
      if (scope.count(c)) picked.push_back(c);
    }
  }
  return out;
}

std::map<GeoGroupId, CameraId> select_starters(const StarterProfile& profile,
                                               const std::set<CameraId>& scope) {
  std::map<GeoGroupId, CameraId> out;
  for (const auto& [g, cams] : top_cameras(profile, scope, 1)) {
    if (cams.empty())
      throw InvalidInput("geo-group " + std::to_string(g.value) + " has no camera in scope");
    out[g] = cams.front();
  }
  return out;
}

void Thresholds::validate() const {
  if (!(d_short > 0.0) || !(d_long > d_short) || !std::isfinite(d_long))
    throw InvalidInput("thresholds must satisfy 0 < d_short < d_long");
}

void to_json(json& j, const Thresholds& t) {
  j = {{"d_short", t.d_short},
       {"d_long", t.d_long},
       {"p_high", t.p_high()},
       {"p_low", t.p_low()},
       {"adjusted", t.adjusted}};
}

void from_json(const json& j, Thresholds& t) {
  FieldReader r(j, "thresholds");
  double ignored = 0.0;
  r.req("d_short", t.d_short).req("d_long", t.d_long).opt("adjusted", t.adjusted);
  r.opt("p_high", ignored).opt("p_low", ignored).finish();
  t.validate();
}

std::vector<LabeledFeature> labeled_sample(const Dataset& ds, std::span<const std::int32_t> windows,
                                           std::size_t max_count) {
  const std::set<std::int32_t> wanted(windows.begin(), windows.end());
  std::vector<LabeledFeature> all;
  for (const auto& d : ds.detections)
    if (d.truth && wanted.count(ds.window_of(d.timestamp_s))) all.push_back({d.feature, *d.truth});
  if (max_count == 0 || all.size() <= max_count) return all;
  std::vector<LabeledFeature> out;
  out.reserve(max_count);
  for (std::size_t i = 0; i < max_count; ++i) out.push_back(all[i * all.size() / max_count]);
  return out;
}

namespace {

struct Pair {
  double dist;
  bool same;
};

std::vector<Pair> sorted_pairs(std::span<const LabeledFeature> sample) {
  std::map<ObjectId, int> counts;
  for (const auto& s : sample) ++counts[s.object];
  int rich = 0;
  for (const auto& [o, n] : counts) rich += n >= 2 ? 1 : 0;
  if (rich < 2) throw InvalidInput("threshold calibration needs >= 2 objects with >= 2 detections");
  std::vector<Pair> pairs;
  pairs.reserve(sample.size() * (sample.size() - 1) / 2);
  for (std::size_t i = 0; i < sample.size(); ++i)
    for (std::size_t j = i + 1; j < sample.size(); ++j)
      pairs.push_back({distance(sample[i].feature, sample[j].feature), sample[i].object == sample[j].object});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist < b.dist; });
  return pairs;
}

double purity_cut(const std::vector<Pair>& pairs) {
  // Sweep candidate cut points; pairs strictly closer than pairs[i].dist form the prefix.
  double cut = pairs.front().dist;
  std::size_t same_below = 0;
  std::size_t i = 0;
  while (i < pairs.size()) {
    const double tau = pairs[i].dist;
    if (i == 0 || static_cast<double>(same_below) >= 0.99 * static_cast<double>(i)) cut = tau;
    while (i < pairs.size() && pairs[i].dist == tau) same_below += pairs[i++].same ? 1 : 0;
  }
  if (static_cast<double>(same_below) >= 0.99 * static_cast<double>(pairs.size()))
    cut = std::nextafter(pairs.back().dist, INFINITY);
  return cut;
}

}  // namespace

double purity_cut(std::span<const LabeledFeature> sample) { return purity_cut(sorted_pairs(sample)); }

Thresholds calibrate_thresholds(std::span<const LabeledFeature> sample) {
  const auto pairs = sorted_pairs(sample);
  const double d_short = purity_cut(pairs);

  std::vector<double> same;
  for (const auto& p : pairs)
    if (p.same) same.push_back(p.dist);
  const double pos = 0.95 * static_cast<double>(same.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, same.size() - 1);
  const double d_long = same[lo] + (pos - static_cast<double>(lo)) * (same[hi] - same[lo]);

  Thresholds t;
  t.d_short = d_short;
  t.d_long = d_long;
  // Noiseless sample: every same-object pair coincides, so the purity cut
  // is the only informative distance.
  if (!(t.d_long > 0.0)) t.d_long = d_short;
  if (!(t.d_short < t.d_long)) {
    t.d_short = 0.99 * t.d_long;
    t.adjusted = true;
  }
  if (!(t.d_short > 0.0)) throw InvalidInput("degenerate threshold calibration sample");
  return t;
}

ClipStats clip_stats(std::span<const Detection> clip) {
  ClipStats s;
  s.boxes = static_cast<std::int64_t>(clip.size());
  std::set<std::int64_t> frames;
  for (const auto& d : clip) frames.insert(d.frame_index);
  s.busy_frames = static_cast<std::int64_t>(frames.size());
  return s;
}

Eigen::Matrix<double, 5, 1> KModel::features(const ClipStats& s) {
  const double x1 = static_cast<double>(s.boxes);
  const double x2 = static_cast<double>(s.busy_frames);
  Eigen::Matrix<double, 5, 1> z;
  if (x1 <= 0.0 || x2 <= 0.0) {
    z << x1, x2, 0.0, 0.0, 0.0;
    return z;
  }
  const double r = x1 / x2;
  z << x1, x2, r * r, r, x2 / x1;
  return z;
}

void to_json(json& j, const KModel& m) {
  j = {{"a", {m.a[0], m.a[1], m.a[2], m.a[3], m.a[4]}}, {"b", m.b}, {"ridge_lambda", m.ridge_lambda}};
}

void from_json(const json& j, KModel& m) {
  FieldReader r(j, "k_model");
  std::vector<double> a;
  r.req("a", a).req("b", m.b).req("ridge_lambda", m.ridge_lambda).finish();
  if (a.size() != 5) throw InvalidInput("k_model.a needs 5 coefficients");
  for (int i = 0; i < 5; ++i) m.a[i] = a[static_cast<std::size_t>(i)];
  if (!m.a.allFinite() || !std::isfinite(m.b)) throw InvalidInput("k_model has non-finite coefficients");
}

KModel train_k_model(std::span<const KSample> samples, double ridge_lambda) {
  if (!(ridge_lambda > 0.0)) throw InvalidInput("ridge_lambda must be positive");
  if (samples.size() < 6) throw InvalidInput("k-model training needs at least 6 clips");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd Z(n, 6);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (s.stats.busy_frames <= 0 || s.stats.boxes <= 0)
      throw InvalidInput("k-model training clips need x1 > 0 and x2 > 0");
    Z.row(i).head<5>() = KModel::features(s.stats).transpose();
    Z(i, 5) = 1.0;
    y[i] = s.true_k;
  }
  Eigen::MatrixXd A = Z.transpose() * Z;
  A.diagonal().head<5>().array() += ridge_lambda;
  const Eigen::VectorXd rhs = Z.transpose() * y;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::logic_error("ridge system is not positive definite");
  const Eigen::VectorXd w = ldlt.solve(rhs);
  if (!w.allFinite()) throw std::logic_error("ridge solve produced non-finite coefficients");
  KModel m;
  m.a = w.head<5>();
  m.b = w[5];
  m.ridge_lambda = ridge_lambda;
  return m;
}

std::vector<KSample> k_samples(const Dataset& ds, std::span<const std::int32_t> windows) {
  std::vector<KSample> out;
  for (const auto& [key, dets] : index_clips(ds, windows)) {
    std::vector<Detection> clip;
    for (const auto* d : dets) clip.push_back(*d);
    const auto stats = clip_stats(clip);
    if (stats.boxes == 0) continue;
    out.push_back({stats, static_cast<int>(distinct_objects(dets).size())});
  }
  return out;
}

}  // namespace clique
