#include "clique/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "clique/rng.hpp"

namespace clique {

int predict_k(const ClipStats& stats, const KModel& model) {
  if (stats.boxes <= 0 || stats.busy_frames <= 0) return 0;
  const double k = std::round(model.raw(stats));
  if (!std::isfinite(k)) return 1;
  return static_cast<int>(std::clamp(k, 1.0, static_cast<double>(stats.boxes)));
}

namespace {

struct Fit {
  std::vector<Feature> centroids;
  std::vector<int> assignments;
  double inertia{0.0};
};

double assign(std::span<const Feature> pts, const std::vector<Feature>& centroids,
              std::vector<int>& assignments) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d2 = (pts[i] - centroids[c]).squaredNorm();
      if (d2 < best) {
        best = d2;
        arg = static_cast<int>(c);
      }
    }
    assignments[i] = arg;
    inertia += best;
  }
  return inertia;
}

std::vector<Feature> plus_plus_seeds(std::span<const Feature> pts, int k, Rng& rng) {
  std::vector<Feature> seeds;
  seeds.push_back(pts[rng.index(pts.size())]);
  std::vector<double> d2(pts.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(seeds.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d2[i] = std::min(d2[i], (pts[i] - seeds.back()).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.index(pts.size());
    } else {
      double r = rng.uniform() * total;
      for (pick = 0; pick + 1 < pts.size(); ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    }
    seeds.push_back(pts[pick]);
  }
  return seeds;
}

Fit lloyd(std::span<const Feature> pts, int k, Rng& rng, const KMeansOptions& opts) {
  Fit fit;
  fit.centroids = plus_plus_seeds(pts, k, rng);
  fit.assignments.assign(pts.size(), 0);
  fit.inertia = assign(pts, fit.centroids, fit.assignments);
  const auto dim = pts.front().size();
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::vector<Feature> sums(static_cast<std::size_t>(k), Feature::Zero(dim));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sums[static_cast<std::size_t>(fit.assignments[i])] += pts[i];
      ++counts[static_cast<std::size_t>(fit.assignments[i])];
    }
    auto next = fit.centroids;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0)
        next[static_cast<std::size_t>(c)] = sums[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)];
    }
    // An empty cluster takes over the point farthest from its centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = (pts[i] - next[static_cast<std::size_t>(fit.assignments[i])]).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      next[static_cast<std::size_t>(c)] = pts[far];
      counts[static_cast<std::size_t>(c)] = 1;
    }
    std::vector<int> assignments(pts.size(), 0);
    const double inertia = assign(pts, next, assignments);
    if (inertia > fit.inertia + 1e-9 * (1.0 + fit.inertia))
      throw std::logic_error("k-means inertia increased during a Lloyd iteration");
    const double gain = fit.inertia - inertia;
    fit.centroids = std::move(next);
    fit.assignments = std::move(assignments);
    fit.inertia = inertia;
    if (gain < opts.tolerance) break;
  }
  return fit;
}

}  // namespace

ClusterSet kmeans(std::span<const Feature> features, int k, std::uint64_t seed, const KMeansOptions& opts) {
  if (k < 1 || static_cast<std::size_t>(k) > features.size())
    throw InvalidInput("k must be in [1, number of features]");
  Fit best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    Fit fit = lloyd(features, k, rng, opts);
    if (fit.inertia < best.inertia) best = std::move(fit);
  }
  ClusterSet out;
  out.k_used = k;
  for (std::size_t c = 0; c < best.centroids.size(); ++c) {
    const Feature& m = best.centroids[c];
    if (m.norm() > 1e-12) {
      out.centroids.push_back(m / m.norm());
    } else {
      // Mean collapsed to the origin; fall back to a member.
      auto it = std::find(best.assignments.begin(), best.assignments.end(), static_cast<int>(c));
      out.centroids.push_back(normalize(features[it == best.assignments.end() ? 0 : static_cast<std::size_t>(it - best.assignments.begin())]));
    }
  }
  out.assignments.assign(features.size(), 0);
  out.inertia = assign(features, out.centroids, out.assignments);
  return out;
}

ClusterSet identity_clusters(std::span<const Feature> features) {
  ClusterSet out;
  out.k_used = static_cast<int>(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.centroids.push_back(features[i]);
    out.assignments.push_back(static_cast<int>(i));
  }
  return out;
}

std::uint64_t clip_seed(std::uint64_t base, const CellId& cell, CameraId camera) {
  return derive_seed(base, {static_cast<std::uint64_t>(cell.group.value),
                            static_cast<std::uint64_t>(cell.window),
                            static_cast<std::uint64_t>(camera.value)});
}

ClusterSet cluster_clip(const Cell& cell, CameraId camera, const KModel& model, std::uint64_t seed,
                        const KMeansOptions& opts) {
  auto it = cell.clips.find(camera);
  if (it == cell.clips.end())
    throw InvalidInput("camera " + std::to_string(camera.value) + " is not in the cell's geo-group");
  const auto& clip = it->second;
  const int k = predict_k(clip_stats(clip), model);
  if (k == 0) return {};
  std::vector<Feature> features;
  features.reserve(clip.size());
  for (const auto& d : clip) features.push_back(d.feature);
  return kmeans(features, k, clip_seed(seed, cell.id, camera), opts);
}

double purity(std::span<const int> assignments, std::span<const std::int32_t> labels) {
  if (assignments.size() != labels.size()) throw InvalidInput("purity: size mismatch");
  if (assignments.empty()) return 1.0;
  std::map<int, std::map<std::int32_t, int>> table;
  for (std::size_t i = 0; i < assignments.size(); ++i) ++table[assignments[i]][labels[i]];
  int correct = 0;
  for (const auto& [c, hist] : table) {
    int best = 0;
    for (const auto& [l, n] : hist) best = std::max(best, n);
    correct += best;
  }
  return static_cast<double>(correct) / static_cast<double>(assignments.size());
}

}  // namespace clique
