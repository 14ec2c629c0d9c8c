#include "clique/search.hpp"

#include <algorithm>
#include <numeric>

#include "clique/io.hpp"
#include "clique/json_fields.hpp"
#include "clique/metrics.hpp"
#include "clique/rng.hpp"

namespace clique {

using nlohmann::json;

void CostModel::validate() const {
  if (!(det_fps > 0.0) || !(feat_per_s > 0.0) || !(video_fps > 0.0) || match_cost < 0.0)
    throw InvalidInput("cost model rates must be positive and match_cost non-negative");
}

void to_json(json& j, const CostModel& c) {
  j = {{"det_fps", c.det_fps}, {"feat_per_s", c.feat_per_s}, {"video_fps", c.video_fps}, {"match_cost", c.match_cost}};
}

void from_json(const json& j, CostModel& c) {
  FieldReader r(j, "cost");
  r.opt("det_fps", c.det_fps)
      .opt("feat_per_s", c.feat_per_s)
      .opt("video_fps", c.video_fps)
      .opt("match_cost", c.match_cost)
      .finish();
  c.validate();
}

Repository::Repository(Dataset ds) : dataset(std::move(ds)) {
  dataset.validate();
  cells = build_cells(dataset, dataset.window_s);
  hash = dataset_hash(dataset);
  for (std::size_t i = 0; i < cells.size(); ++i) index[cells[i].id] = i;
  n_windows = dataset.geo_groups.empty() ? 0 : static_cast<int>(cells.size() / dataset.geo_groups.size());
}

std::string_view to_string(ClipScoring s) { return s == ClipScoring::Clustered ? "clustered" : "individual"; }

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Stage1:
      return "stage1";
    case Phase::GrayPhase:
      return "gray";
    case Phase::GreenPhase:
      return "green";
    case Phase::RedPhase:
      return "red";
    case Phase::Done:
      return "done";
  }
  return "?";
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Exhausted:
      return "exhausted";
    case StopReason::AccuracyGoal:
      return "accuracy_goal";
    case StopReason::Budget:
      return "budget";
    case StopReason::Cancelled:
      return "cancelled";
  }
  return "?";
}

json cache_to_json(const ClipCache& cache) {
  json entries = json::array();
  for (const auto& [key, cs] : cache.entries) {
    json centroids = json::array();
    for (const auto& c : cs.centroids) centroids.push_back(feature_to_json(c));
    entries.push_back({{"geo_group_id", key.first.group.value},
                       {"window", key.first.window},
                       {"camera_id", key.second.value},
                       {"k_used", cs.k_used},
                       {"inertia", cs.inertia},
                       {"assignments", cs.assignments},
                       {"centroids", centroids}});
  }
  return {{"schema", "clique-cache/1"},
          {"dataset_hash", cache.dataset_hash},
          {"scoring", to_string(cache.scoring)},
          {"entries", entries}};
}

ClipCache cache_from_json(const json& j) {
  FieldReader r(j, "cache");
  std::string schema, scoring;
  ClipCache cache;
  r.req("schema", schema).req("dataset_hash", cache.dataset_hash).req("scoring", scoring);
  if (schema != "clique-cache/1") throw InvalidInput("unsupported cache schema '" + schema + "'");
  if (scoring == "clustered")
    cache.scoring = ClipScoring::Clustered;
  else if (scoring == "individual")
    cache.scoring = ClipScoring::Individual;
  else
    throw InvalidInput("unknown cache scoring '" + scoring + "'");
  for (const auto& e : r.sub("entries")) {
    FieldReader er(e, "cache.entries[]");
    std::int32_t g = 0, w = 0, cam = 0;
    ClusterSet cs;
    json centroids;
    er.req("geo_group_id", g).req("window", w).req("camera_id", cam);
    er.req("k_used", cs.k_used).req("inertia", cs.inertia).req("assignments", cs.assignments);
    er.req("centroids", centroids).finish();
    for (const auto& c : centroids) cs.centroids.push_back(feature_from_json(c));
    cache.entries[{CellId{GeoGroupId{g}, w}, CameraId{cam}}] = std::move(cs);
  }
  r.finish();
  return cache;
}

std::vector<std::uint32_t> rank_cells(const std::vector<CellState>& cells, std::span<const std::uint32_t> position) {
  if (!position.empty() && position.size() != cells.size()) throw std::invalid_argument("position size mismatch");
  auto order = [](Category c) { return c == Category::Green ? 0 : c == Category::Gray ? 1 : 2; };
  auto pos = [&](std::uint32_t i) { return position.empty() ? i : position[i]; };
  std::vector<std::uint32_t> rank(cells.size());
  std::iota(rank.begin(), rank.end(), 0u);
  std::sort(rank.begin(), rank.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& ca = cells[a];
    const auto& cb = cells[b];
    if (ca.multi_promise() != cb.multi_promise()) return ca.multi_promise() > cb.multi_promise();
    if (ca.rank_category() != cb.rank_category()) return order(ca.rank_category()) < order(cb.rank_category());
    return pos(a) < pos(b);
  });
  return rank;
}

std::vector<std::uint32_t> sampling_order(std::size_t n_cells, std::uint64_t seed) {
  std::vector<std::uint32_t> order(n_cells);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(derive_seed(seed, {0x7374616765ULL}));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

SearchState make_search(const Repository& repo, QuerySpec spec, SearchOptions options) {
  options.cost.validate();
  options.thresholds.validate();
  SearchState s;
  s.repo_ = &repo;
  s.target_ = normalize(spec.target);
  if (s.target_.size() != repo.dataset.feature_dim) throw InvalidInput("target feature dimension mismatch");
  s.scope_ = std::move(spec.scope);
  s.preprocessed_ = std::move(spec.preprocessed);
  for (auto g : repo.dataset.geo_groups) {
    auto it = spec.starters.find(g);
    if (it == spec.starters.end())
      throw InvalidInput("no starter camera for geo-group " + std::to_string(g.value));
    const auto& cam = repo.dataset.camera(it->second);
    if (cam.group != g || !s.scope_.count(cam.id))
      throw InvalidInput("starter camera " + std::to_string(cam.id.value) + " is not an in-scope camera of its group");
  }
  s.starters_ = std::move(spec.starters);
  for (const auto& cell : repo.cells) {
    std::set<CameraId> cams;
    for (const auto& [cam, dets] : cell.clips)
      if (s.scope_.count(cam)) cams.insert(cam);
    s.cells_.emplace_back(cell.id, std::move(cams));
  }
  s.cache_.dataset_hash = repo.hash;
  s.cache_.scoring = options.scoring;
  s.options_ = std::move(options);
  s.order_ = sampling_order(s.cells_.size(), s.options_.seed);
  s.position_.resize(s.order_.size());
  for (std::size_t i = 0; i < s.order_.size(); ++i) s.position_[s.order_[i]] = static_cast<std::uint32_t>(i);
  s.rank_ = rank_cells(s.cells_, s.position_);
  return s;
}

void SearchState::process(std::size_t cell_index, CameraId camera) {
  const Cell& cell = repo_->cells[cell_index];
  const ClipKey key{cell.id, camera};
  if (!charged_.insert(key).second) throw std::logic_error("clip processed twice in one query");
  auto it = cache_.entries.find(key);
  if (it == cache_.entries.end()) {
    ClusterSet cs;
    const auto& clip = cell.clips.at(camera);
    if (options_.scoring == ClipScoring::Clustered) {
      cs = cluster_clip(cell, camera, options_.k_model, options_.seed, options_.kmeans);
    } else {
      std::vector<Feature> features;
      for (const auto& d : clip) features.push_back(d.feature);
      cs = identity_clusters(features);
    }
    if (!preprocessed_.count(key)) clock_ += options_.cost.clip_cost(repo_->dataset.window_s, clip.size());
    it = cache_.entries.emplace(key, std::move(cs)).first;
  }
  clock_ += options_.cost.match_cost;
  ++clips_processed_;

  auto& state = cells_[cell_index];
  const Category before = state.category();
  const double p = single_camera_promise(target_, it->second);
  state.record(camera, p, vote(p, options_.thresholds, options_.votes), options_.votes);

  if (options_.correlation && before != Category::Green && state.category() == Category::Green) {
    for (const auto& [cid, share] : correlated_cells(cell.id, *options_.correlation, repo_->n_windows)) {
      auto jt = repo_->index.find(cid);
      if (jt == repo_->index.end()) continue;
      const auto idx = static_cast<std::uint32_t>(jt->second);
      if (cells_[idx].category() != Category::Gray) continue;
      auto& b = boost_share_[idx];
      b = std::max(b, share);
      boosted_.insert(idx);
    }
  }
}

void SearchState::rerank() { rank_ = rank_cells(cells_, position_); }

void SearchState::snapshot() { timeline_.push_back({clock_, clips_processed_, rank_}); }

std::optional<std::size_t> SearchState::select_cell() {
  auto eligible = [&](std::size_t i, Category c) {
    return cells_[i].category() == c && cells_[i].has_unprocessed();
  };
  std::optional<std::size_t> boosted;
  for (auto idx : boosted_) {
    if (!eligible(idx, Category::Gray)) continue;
    if (!boosted) {
      boosted = idx;
      continue;
    }
    const double sb = boost_share_[static_cast<std::uint32_t>(*boosted)], si = boost_share_[idx];
    const double pi = cells_[idx].multi_promise(), pb = cells_[*boosted].multi_promise();
    if (si > sb || (si == sb && (pi > pb || (pi == pb && position_[idx] < position_[*boosted])))) boosted = idx;
  }
  if (boosted) return boosted;
  for (auto cat : {Category::Gray, Category::Green, Category::Red}) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (!eligible(i, cat)) continue;
      if (!best || cells_[i].multi_promise() > cells_[*best].multi_promise() ||
          (cells_[i].multi_promise() == cells_[*best].multi_promise() && position_[i] < position_[*best]))
        best = i;
    }
    if (best) return best;
  }
  return std::nullopt;
}

CameraId SearchState::select_camera(std::size_t cell_index) {
  const auto& cell = cells_[cell_index];
  if (options_.camera_policy == CameraPolicy::Complementary)
    return next_camera_complementary(cell, repo_->dataset.cameras);
  const std::vector<CameraId> pool(cell.unprocessed().begin(), cell.unprocessed().end());
  Rng rng(derive_seed(options_.seed, {static_cast<std::uint64_t>(cell.id().group.value),
                                      static_cast<std::uint64_t>(cell.id().window),
                                      static_cast<std::uint64_t>(cell.processed().size()), 0x63616dULL}));
  return pool[rng.index(pool.size())];
}

void run_stage1(SearchState& s) {
  if (s.phase_ != Phase::Stage1) throw std::logic_error("stage 1 already ran");
  for (std::size_t i : s.order_) {
    const auto starter = s.starters_.at(s.repo_->cells[i].id.group);
    s.process(i, starter);
    s.rerank();
    s.snapshot();
  }
  s.stage1_cost_ = s.clock_;
  s.phase_ = Phase::GrayPhase;
}

SearchState init_query(const Repository& repo, QuerySpec spec, SearchOptions options, const ClipCache* warm) {
  SearchState s = make_search(repo, std::move(spec), std::move(options));
  if (warm) warm_cache(s, *warm);
  run_stage1(s);
  return s;
}

StepEvent step(SearchState& s) {
  StepEvent ev;
  if (s.phase_ == Phase::Stage1) run_stage1(s);
  if (s.phase_ != Phase::Done) {
    if (auto sel = s.select_cell()) {
      const Category cat = s.cells_[*sel].category();
      s.phase_ = cat == Category::Gray ? Phase::GrayPhase : cat == Category::Green ? Phase::GreenPhase : Phase::RedPhase;
      ev.cell = *sel;
      ev.phase = s.phase_;
      do {
        const CameraId cam = s.select_camera(*sel);
        s.process(*sel, cam);
        ev.cameras.push_back(cam);
      } while (s.options_.expansion == CellExpansion::AllCameras && s.cells_[*sel].has_unprocessed());
      s.rerank();
      s.snapshot();
      ev.category = s.cells_[*sel].category();
    } else {
      s.phase_ = Phase::Done;
    }
  }
  if (s.phase_ == Phase::Done) ev.phase = Phase::Done;
  ev.clock_s = s.clock_;
  return ev;
}

void warm_cache(SearchState& s, const ClipCache& prior) {
  if (prior.dataset_hash != s.repo_->hash) throw InvalidInput("cache belongs to a different dataset");
  if (prior.scoring != s.options_.scoring) throw InvalidInput("cache was built with a different clip scoring");
  for (const auto& [key, cs] : prior.entries) s.cache_.entries.emplace(key, cs);
}

QueryResult run(SearchState& s, const StopCondition& stop, const std::function<void(const StepEvent&)>& on_step) {
  if (s.phase() == Phase::Stage1) run_stage1(s);
  QueryResult r;
  r.stop = StopReason::Exhausted;
  for (;;) {
    if (stop.cancel && stop.cancel->load()) {
      r.stop = StopReason::Cancelled;
      break;
    }
    if (stop.kind == StopCondition::Kind::AccuracyGoal && recall_at_k(s.rank(), stop.truth) >= stop.goal) {
      r.stop = StopReason::AccuracyGoal;
      break;
    }
    if (stop.kind == StopCondition::Kind::Budget && s.clock() >= stop.budget_s) {
      r.stop = StopReason::Budget;
      break;
    }
    const StepEvent ev = step(s);
    if (on_step) on_step(ev);
    if (ev.phase == Phase::Done) break;
  }
  r.rank = s.rank();
  r.timeline = s.timeline();
  r.clips_processed = s.clips_processed();
  r.clock_s = s.clock();
  r.stage1_cost_s = s.stage1_cost();
  r.cache = s.cache();
  return r;
}

}  // namespace clique
