#pragma once

#include <set>
#include <string_view>
#include <vector>

#include "clique/cluster.hpp"
#include "clique/core.hpp"
#include "clique/profile.hpp"

namespace clique {

inline constexpr double kPromiseDistanceFloor = 1e-6;

// 1 / (distance from target to the nearest centroid), 0 for an empty set.
double single_camera_promise(const Feature& target, const ClusterSet& clusters);

enum class Category { Gray, Green, Red };

std::string_view to_string(Category c);

// Vote weights and category boundaries. Medium votes weigh 1/k with k = 2;
// low votes mirror them so two low votes make a cell red.
struct VotePolicy {
  double high_weight{1.0};
  double medium_weight{0.5};
  double low_weight{-0.5};
  double green_at{1.0};
  double red_at{-1.0};
};

double vote(double promise, const Thresholds& th, const VotePolicy& policy = {});

struct ProcessedCamera {
  CameraId camera;
  double promise{0.0};
  double vote{0.0};
};

class CellState {
 public:
  CellState() = default;
  CellState(CellId id, std::set<CameraId> cameras);

  const CellId& id() const { return id_; }
  const std::vector<ProcessedCamera>& processed() const { return processed_; }
  const std::set<CameraId>& unprocessed() const { return unprocessed_; }
  double vote_sum() const { return vote_sum_; }
  double multi_promise() const { return multi_promise_; }
  Category category() const { return category_; }
  // Category used to break promise ties in the rank. An exhausted cell is
  // judged on its full vote set, so the order its cameras came in is irrelevant.
  Category rank_category() const { return has_unprocessed() ? category_ : settled_; }
  bool has_unprocessed() const { return !unprocessed_.empty(); }
  bool was_processed(CameraId c) const;

  // Records one camera's promise and vote and recategorizes the cell.
  void record(CameraId camera, double promise, double vote_weight, const VotePolicy& policy = {});

 private:
  CellId id_;
  std::vector<ProcessedCamera> processed_;
  std::set<CameraId> unprocessed_;
  double vote_sum_{0.0};
  double multi_promise_{0.0};
  Category category_{Category::Gray};
  Category settled_{Category::Gray};
};

double multi_camera_promise(const CellState& state);

// Category implied by the votes so far, given the category held before the
// latest vote. Green is never demoted; Red only ever moves to Green.
Category categorize(const CellState& state, Category previous, const VotePolicy& policy = {});

}  // namespace clique
