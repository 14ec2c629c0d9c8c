#pragma once

#include <json.hpp>

#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "clique/core.hpp"
#include "clique/promise.hpp"

namespace clique {

// Directed cross-location correlation learnt from labeled profiling windows.
struct CorrelationEntry {
  double share{0.0};  // fraction of a's objects that reappear in b
  int lag_min{0};     // observed reappearance lag range, in windows
  int lag_max{0};
};

struct CorrelationModel {
  int lag_windows{2};
  std::map<std::pair<GeoGroupId, GeoGroupId>, CorrelationEntry> entries;

  double share(GeoGroupId from, GeoGroupId to) const;
};

void to_json(nlohmann::json& j, const CorrelationModel& m);
void from_json(const nlohmann::json& j, CorrelationModel& m);

// share(a, b) = |objects seen in a during window w that appear in b during
// w .. w + lag_windows| / |objects seen in a|, summed over the sampled w.
CorrelationModel build_correlation(const Dataset& ds, std::span<const std::int32_t> windows,
                                   int lag_windows);

// Per group, the in-scope camera whose orientation is closest to origin's.
std::map<GeoGroupId, CameraId> starter_by_posture(const Posture& origin, std::span<const Camera> cameras,
                                                  const std::set<CameraId>& scope);

// The unprocessed camera with the largest viewpoint difference from the
// camera processed last in this cell.
CameraId next_camera_complementary(const CellState& cell, std::span<const Camera> cameras);

// Cells expected to share objects with a cell that just turned green, with
// the expected share. Only positive shares are returned.
std::vector<std::pair<CellId, double>> correlated_cells(const CellId& green, const CorrelationModel& model,
                                                        int n_windows);

}  // namespace clique
