#include "clique/optimize.hpp"

#include <algorithm>
#include <limits>

#include "clique/json_fields.hpp"

namespace clique {

using nlohmann::json;

double CorrelationModel::share(GeoGroupId from, GeoGroupId to) const {
  auto it = entries.find({from, to});
  return it == entries.end() ? 0.0 : it->second.share;
}

void to_json(json& j, const CorrelationModel& m) {
  json entries = json::array();
  for (const auto& [key, e] : m.entries)
    entries.push_back({{"from", key.first.value},
                       {"to", key.second.value},
                       {"share", e.share},
                       {"lag_min", e.lag_min},
                       {"lag_max", e.lag_max}});
  j = {{"lag_windows", m.lag_windows}, {"entries", entries}};
}

void from_json(const json& j, CorrelationModel& m) {
  FieldReader r(j, "correlation");
  r.req("lag_windows", m.lag_windows);
  m.entries.clear();
  for (const auto& e : r.sub("entries")) {
    FieldReader er(e, "correlation.entries[]");
    std::int32_t from = 0, to = 0;
    CorrelationEntry ce;
    er.req("from", from).req("to", to).req("share", ce.share).req("lag_min", ce.lag_min).req("lag_max", ce.lag_max);
    er.finish();
    if (ce.share < 0.0 || ce.share > 1.0) throw InvalidInput("correlation share outside [0,1]");
    m.entries[{GeoGroupId{from}, GeoGroupId{to}}] = ce;
  }
  r.finish();
}

CorrelationModel build_correlation(const Dataset& ds, std::span<const std::int32_t> windows, int lag_windows) {
  if (lag_windows < 0) throw InvalidInput("lag_windows must be non-negative");
  // (group, window) -> objects
  std::map<std::pair<GeoGroupId, std::int32_t>, std::set<ObjectId>> seen;
  for (const auto& d : ds.detections)
    if (d.truth) seen[{ds.camera(d.camera).group, ds.window_of(d.timestamp_s)}].insert(*d.truth);

  CorrelationModel m;
  m.lag_windows = lag_windows;
  for (auto a : ds.geo_groups) {
    for (auto b : ds.geo_groups) {
      if (a == b) continue;
      std::size_t total = 0, shared = 0;
      int lag_min = std::numeric_limits<int>::max(), lag_max = 0;
      for (auto w : windows) {
        auto it = seen.find({a, w});
        if (it == seen.end()) continue;
        for (auto obj : it->second) {
          ++total;
          for (int lag = 0; lag <= lag_windows; ++lag) {
            auto jt = seen.find({b, w + lag});
            if (jt != seen.end() && jt->second.count(obj)) {
              ++shared;
              lag_min = std::min(lag_min, lag);
              lag_max = std::max(lag_max, lag);
              break;
            }
          }
        }
      }
      if (total == 0) continue;
      CorrelationEntry e;
      e.share = static_cast<double>(shared) / static_cast<double>(total);
      e.lag_min = shared ? lag_min : 0;
      e.lag_max = shared ? lag_max : 0;
      m.entries[{a, b}] = e;
    }
  }
  return m;
}

std::map<GeoGroupId, CameraId> starter_by_posture(const Posture& origin, std::span<const Camera> cameras,
                                                  const std::set<CameraId>& scope) {
  std::map<GeoGroupId, std::pair<double, CameraId>> best;
  for (const auto& c : cameras) {
    if (!scope.count(c.id)) continue;
    const double diff = angular_difference(origin.orientation_deg, c.posture.orientation_deg);
    auto it = best.find(c.group);
    if (it == best.end() || diff < it->second.first ||
        (diff == it->second.first && c.id < it->second.second))
      best[c.group] = {diff, c.id};
  }
  std::map<GeoGroupId, CameraId> out;
  for (const auto& [g, v] : best) out[g] = v.second;
  return out;
}

CameraId next_camera_complementary(const CellState& cell, std::span<const Camera> cameras) {
  if (!cell.has_unprocessed()) throw InvalidInput("cell has no unprocessed cameras");
  auto orientation = [&](CameraId id) {
    for (const auto& c : cameras)
      if (c.id == id) return c.posture.orientation_deg;
    throw InvalidInput("unknown camera id " + std::to_string(id.value));
  };
  const auto& unprocessed = cell.unprocessed();
  if (cell.processed().empty()) return *unprocessed.begin();
  const double last = orientation(cell.processed().back().camera);
  CameraId best = *unprocessed.begin();
  double best_diff = -1.0;
  for (auto c : unprocessed) {
    const double diff = angular_difference(last, orientation(c));
    if (diff > best_diff) {
      best_diff = diff;
      best = c;
    }
  }
  return best;
}

std::vector<std::pair<CellId, double>> correlated_cells(const CellId& green, const CorrelationModel& model,
                                                        int n_windows) {
  std::map<CellId, double> out;
  auto add = [&](CellId c, double s) {
    if (s <= 0.0 || c.window < 0 || c.window >= n_windows) return;
    out[c] = std::max(out[c], s);
  };
  for (const auto& [key, e] : model.entries) {
    if (e.share <= 0.0) continue;
    // Objects leaving the green cell's group show up downstream...
    if (key.first == green.group)
      for (int lag = e.lag_min; lag <= e.lag_max; ++lag) add(CellId{key.second, green.window + lag}, e.share);
    // ...and objects arriving here were seen upstream earlier.
    if (key.second == green.group)
      for (int lag = e.lag_min; lag <= e.lag_max; ++lag) add(CellId{key.first, green.window - lag}, e.share);
  }
  out.erase(green);
  return {out.begin(), out.end()};
}

}  // namespace clique
