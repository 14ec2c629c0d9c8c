#include "clique/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clique {

Feature normalize(const Feature& v) { return normalized(v); }

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w = 0.0;
  return w;
}

double angular_difference(double a_deg, double b_deg) {
  const double d = wrap_degrees(a_deg - b_deg);
  return d > 180.0 ? 360.0 - d : d;
}

const Camera& Dataset::camera(CameraId id) const {
  auto it = std::lower_bound(cameras.begin(), cameras.end(), id,
                             [](const Camera& c, CameraId v) { return c.id < v; });
  if (it == cameras.end() || it->id != id)
    throw InvalidInput("unknown camera id " + std::to_string(id.value));
  return *it;
}

std::vector<CameraId> Dataset::cameras_in(GeoGroupId group) const {
  std::vector<CameraId> out;
  for (const auto& c : cameras)
    if (c.group == group) out.push_back(c.id);
  return out;
}

int Dataset::window_count() const {
  if (!(window_s > 0.0)) throw InvalidInput("window length must be positive");
  int n = static_cast<int>(std::ceil(duration_s / window_s - 1e-12));
  for (const auto& d : detections) n = std::max(n, window_of(d.timestamp_s) + 1);
  return std::max(n, 0);
}

std::int32_t Dataset::window_of(double timestamp_s) const {
  return static_cast<std::int32_t>(std::floor(timestamp_s / window_s));
}

void Dataset::validate() const {
  if (feature_dim < 2) throw InvalidInput("feature_dim must be >= 2");
  if (!(window_s > 0.0)) throw InvalidInput("window_s must be positive");
  if (!(duration_s >= 0.0)) throw InvalidInput("duration_s must be non-negative");
  if (!std::is_sorted(geo_groups.begin(), geo_groups.end()) ||
      std::adjacent_find(geo_groups.begin(), geo_groups.end()) != geo_groups.end())
    throw InvalidInput("geo_groups must be sorted and unique");
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const auto& c = cameras[i];
    if (i > 0 && !(cameras[i - 1].id < c.id))
      throw InvalidInput("cameras must be sorted by unique id");
    if (!std::binary_search(geo_groups.begin(), geo_groups.end(), c.group))
      throw InvalidInput("camera " + std::to_string(c.id.value) + " has unknown geo-group");
    if (!(c.fps > 0.0)) throw InvalidInput("camera fps must be positive");
  }
  for (auto g : geo_groups)
    if (cameras_in(g).empty())
      throw InvalidInput("geo-group " + std::to_string(g.value) + " has no cameras");
  for (const auto& d : detections) {
    const auto& c = camera(d.camera);
    if (d.frame_index < 0) throw InvalidInput("negative frame index");
    if (d.feature.size() != feature_dim) throw InvalidInput("feature dimension mismatch");
    if (!d.feature.allFinite()) throw InvalidInput("non-finite feature");
    if (std::abs(d.timestamp_s - static_cast<double>(d.frame_index) / c.fps) > 1e-6)
      throw InvalidInput("timestamp does not match frame_index / fps");
    if (d.timestamp_s < 0.0 || d.timestamp_s >= duration_s)
      throw InvalidInput("detection outside dataset duration");
  }
}

std::map<ObjectId, std::set<CellId>> truth_cells(const Dataset& ds) {
  return truth_cells(ds, ds.window_s);
}

std::map<ObjectId, std::set<CellId>> truth_cells(const Dataset& ds, double window_s) {
  std::map<ObjectId, std::set<CellId>> out;
  for (const auto& d : ds.detections) {
    if (!d.truth) continue;
    const auto w = static_cast<std::int32_t>(std::floor(d.timestamp_s / window_s));
    out[*d.truth].insert(CellId{ds.camera(d.camera).group, w});
  }
  return out;
}

std::size_t Cell::detection_count() const {
  std::size_t n = 0;
  for (const auto& [cam, dets] : clips) n += dets.size();
  return n;
}

bool detection_less(const Detection& a, const Detection& b) {
  if (a.camera != b.camera) return a.camera < b.camera;
  if (a.frame_index != b.frame_index) return a.frame_index < b.frame_index;
  if (a.timestamp_s != b.timestamp_s) return a.timestamp_s < b.timestamp_s;
  const std::int32_t ta = a.truth ? a.truth->value : -1;
  const std::int32_t tb = b.truth ? b.truth->value : -1;
  if (ta != tb) return ta < tb;
  return std::lexicographical_compare(a.feature.data(), a.feature.data() + a.feature.size(),
                                      b.feature.data(), b.feature.data() + b.feature.size());
}

std::vector<Cell> build_cells(const Dataset& ds, double window_s) {
  if (!(window_s > 0.0)) throw InvalidInput("window_s must be positive");
  Dataset probe;
  probe.duration_s = ds.duration_s;
  probe.window_s = window_s;
  int n_windows = static_cast<int>(std::ceil(ds.duration_s / window_s - 1e-12));
  for (const auto& d : ds.detections)
    n_windows = std::max(n_windows, probe.window_of(d.timestamp_s) + 1);

  const auto n_groups = ds.geo_groups.size();
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n_windows) * n_groups);
  for (int w = 0; w < n_windows; ++w) {
    for (auto g : ds.geo_groups) {
      Cell c;
      c.id = CellId{g, w};
      c.t_start = w * window_s;
      c.t_end = (w + 1) * window_s;
      for (auto cam : ds.cameras_in(g)) c.clips[cam];
      cells.push_back(std::move(c));
    }
  }

  std::map<GeoGroupId, std::size_t> group_pos;
  for (std::size_t i = 0; i < n_groups; ++i) group_pos[ds.geo_groups[i]] = i;

  for (const auto& d : ds.detections) {
    const auto w = probe.window_of(d.timestamp_s);
    const auto& cam = ds.camera(d.camera);
    auto& cell = cells[static_cast<std::size_t>(w) * n_groups + group_pos.at(cam.group)];
    cell.clips[d.camera].push_back(d);
  }
  for (auto& c : cells)
    for (auto& [cam, dets] : c.clips) std::sort(dets.begin(), dets.end(), detection_less);
  return cells;
}

}  // namespace clique
