#pragma once

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clique/cluster.hpp"
#include "clique/core.hpp"
#include "clique/optimize.hpp"
#include "clique/profile.hpp"
#include "clique/promise.hpp"

namespace clique {

// Simulated processing cost of the detection + feature extraction pipeline.
struct CostModel {
  double det_fps{40.0};     // detector throughput, frames/s
  double feat_per_s{80.0};  // extractor throughput, features/s
  double video_fps{1.0};    // analyzed frame rate
  double match_cost{0.0};

  void validate() const;
  double clip_cost(double window_s, std::size_t boxes) const {
    return window_s * video_fps / det_fps + static_cast<double>(boxes) / feat_per_s;
  }
};

void to_json(nlohmann::json& j, const CostModel& c);
void from_json(const nlohmann::json& j, CostModel& c);

// Immutable dataset plus its cells; shared by every query over it.
struct Repository {
  Dataset dataset;
  std::vector<Cell> cells;  // window-major, then geo-group
  std::string hash;
  std::map<CellId, std::size_t> index;

  int n_windows{0};

  explicit Repository(Dataset ds);
};

enum class ClipScoring { Clustered, Individual };
enum class CellExpansion { OneCamera, AllCameras };
enum class CameraPolicy { Random, Complementary };
enum class Phase { Stage1, GrayPhase, GreenPhase, RedPhase, Done };

std::string_view to_string(ClipScoring s);
std::string_view to_string(Phase p);

struct SearchOptions {
  CostModel cost;
  Thresholds thresholds;
  VotePolicy votes;
  KModel k_model;
  KMeansOptions kmeans;
  ClipScoring scoring{ClipScoring::Clustered};
  CellExpansion expansion{CellExpansion::OneCamera};
  CameraPolicy camera_policy{CameraPolicy::Random};
  std::optional<CorrelationModel> correlation;
  std::uint64_t seed{0};
};

using ClipKey = std::pair<CellId, CameraId>;

// Processed clips keyed by (cell, camera), tied to one dataset.
struct ClipCache {
  std::string dataset_hash;
  ClipScoring scoring{ClipScoring::Clustered};
  std::map<ClipKey, ClusterSet> entries;
};

nlohmann::json cache_to_json(const ClipCache& cache);
ClipCache cache_from_json(const nlohmann::json& j);

struct QuerySpec {
  Feature target;
  std::set<CameraId> scope;  // cameras the query may look at
  std::map<GeoGroupId, CameraId> starters;
  std::set<ClipKey> preprocessed;  // clips already processed at ingestion
};

struct Snapshot {
  double clock_s{0.0};
  std::size_t clips_processed{0};
  std::vector<std::uint32_t> rank;  // cell indices, best first
};

struct StepEvent {
  std::size_t cell{0};
  std::vector<CameraId> cameras;
  Category category{Category::Gray};
  Phase phase{Phase::Done};
  double clock_s{0.0};
};

class SearchState {
 public:
  const Repository& repo() const { return *repo_; }
  const SearchOptions& options() const { return options_; }
  const Feature& target() const { return target_; }
  const std::vector<CellState>& cells() const { return cells_; }
  const std::vector<std::uint32_t>& rank() const { return rank_; }
  const std::vector<Snapshot>& timeline() const { return timeline_; }
  const ClipCache& cache() const { return cache_; }
  const std::set<std::uint32_t>& boosted() const { return boosted_; }
  const std::vector<std::uint32_t>& order() const { return order_; }
  double clock() const { return clock_; }
  double stage1_cost() const { return stage1_cost_; }
  std::size_t clips_processed() const { return clips_processed_; }
  Phase phase() const { return phase_; }

 private:
  friend SearchState make_search(const Repository&, QuerySpec, SearchOptions);
  friend void run_stage1(SearchState&);
  friend StepEvent step(SearchState&);
  friend void warm_cache(SearchState&, const ClipCache&);

  void process(std::size_t cell, CameraId camera);
  void rerank();
  void snapshot();
  std::optional<std::size_t> select_cell();
  CameraId select_camera(std::size_t cell);

  const Repository* repo_{nullptr};
  SearchOptions options_;
  Feature target_;
  std::set<CameraId> scope_;
  std::map<GeoGroupId, CameraId> starters_;
  std::set<ClipKey> preprocessed_;
  std::set<ClipKey> charged_;
  std::vector<CellState> cells_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> position_;  // inverse of order_
  std::vector<std::uint32_t> rank_;
  std::vector<Snapshot> timeline_;
  std::map<std::uint32_t, double> boost_share_;
  std::set<std::uint32_t> boosted_;
  ClipCache cache_;
  double clock_{0.0};
  double stage1_cost_{0.0};
  std::size_t clips_processed_{0};
  Phase phase_{Phase::Stage1};
};

// Builds the query state without processing anything.
SearchState make_search(const Repository& repo, QuerySpec spec, SearchOptions options);

// Stage 1: one starter clip per cell in a seeded order, a snapshot after each.
void run_stage1(SearchState& state);

// make_search, optional warm_cache, then Stage 1.
SearchState init_query(const Repository& repo, QuerySpec spec, SearchOptions options,
                       const ClipCache* warm = nullptr);

// Processes the next cell (one camera, or all remaining cameras when the
// expansion mode says so). Returns an event with phase Done when finished.
StepEvent step(SearchState& state);

// Imports processed clips; later uses of them cost nothing.
void warm_cache(SearchState& state, const ClipCache& prior);

// User-facing ordering: multi-camera promise descending, then green, gray,
// red, then position (cell index when position is empty).
std::vector<std::uint32_t> rank_cells(const std::vector<CellState>& cells,
                                      std::span<const std::uint32_t> position = {});

// Seeded permutation of cell indices; Stage 1 visits cells in this order and
// equal-promise cells are broken by it.
std::vector<std::uint32_t> sampling_order(std::size_t n_cells, std::uint64_t seed);

struct StopCondition {
  enum class Kind { None, AccuracyGoal, Budget } kind{Kind::None};
  double goal{0.0};
  std::set<std::uint32_t> truth;  // cell indices, for AccuracyGoal
  double budget_s{0.0};
  const std::atomic<bool>* cancel{nullptr};
};

enum class StopReason { Exhausted, AccuracyGoal, Budget, Cancelled };
std::string_view to_string(StopReason r);

struct QueryResult {
  std::vector<std::uint32_t> rank;
  std::vector<Snapshot> timeline;
  std::size_t clips_processed{0};
  double clock_s{0.0};
  double stage1_cost_s{0.0};
  StopReason stop{StopReason::Exhausted};
  ClipCache cache;
};

// on_step sees every Stage-2 step after it is applied.
QueryResult run(SearchState& state, const StopCondition& stop = {},
                const std::function<void(const StepEvent&)>& on_step = {});

}  // namespace clique
