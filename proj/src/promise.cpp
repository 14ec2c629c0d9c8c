#include "clique/promise.hpp"

#include <algorithm>
#include <limits>

namespace clique {

double single_camera_promise(const Feature& target, const ClusterSet& clusters) {
  if (clusters.empty()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : clusters.centroids) best = std::min(best, distance(target, c));
  return 1.0 / std::max(best, kPromiseDistanceFloor);
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Gray:
      return "gray";
    case Category::Green:
      return "green";
    case Category::Red:
      return "red";
  }
  return "?";
}

double vote(double promise, const Thresholds& th, const VotePolicy& policy) {
  if (promise > th.p_high()) return policy.high_weight;
  if (promise > th.p_low()) return policy.medium_weight;
  return policy.low_weight;
}

CellState::CellState(CellId id, std::set<CameraId> cameras) : id_(id), unprocessed_(std::move(cameras)) {}

bool CellState::was_processed(CameraId c) const {
  return std::any_of(processed_.begin(), processed_.end(),
                     [&](const ProcessedCamera& p) { return p.camera == c; });
}

void CellState::record(CameraId camera, double promise, double vote_weight, const VotePolicy& policy) {
  if (was_processed(camera))
    throw std::logic_error("camera " + std::to_string(camera.value) + " already processed for this cell");
  unprocessed_.erase(camera);
  processed_.push_back({camera, promise, vote_weight});
  vote_sum_ += vote_weight;
  multi_promise_ = std::max(multi_promise_, promise);
  category_ = categorize(*this, category_, policy);
  if (!has_unprocessed()) settled_ = vote_sum_ >= policy.green_at ? Category::Green : Category::Red;
}

double multi_camera_promise(const CellState& state) {
  double best = 0.0;
  for (const auto& p : state.processed()) best = std::max(best, p.promise);
  return best;
}

Category categorize(const CellState& state, Category previous, const VotePolicy& policy) {
  if (previous == Category::Green) return Category::Green;
  // Sums of halves are exact in binary floating point.
  if (state.vote_sum() >= policy.green_at) return Category::Green;
  if (previous == Category::Red) return Category::Red;
  if (state.vote_sum() <= policy.red_at) return Category::Red;
  if (!state.has_unprocessed() && !state.processed().empty()) return Category::Red;
  return Category::Gray;
}

}  // namespace clique
