#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "clique/core.hpp"
#include "clique/profile.hpp"

namespace clique {

// Distinct objects recognized in one camera clip.
struct ClusterSet {
  std::vector<Feature> centroids;  // unit length
  std::vector<int> assignments;    // detection index -> centroid index
  double inertia{0.0};             // sum of squared distances to assigned centroid
  int k_used{0};

  bool empty() const { return centroids.empty(); }
};

struct KMeansOptions {
  int restarts{5};
  int max_iterations{100};
  double tolerance{1e-6};
};

// 0 for empty clips, otherwise round(a.z + b) clamped to [1, x1].
int predict_k(const ClipStats& stats, const KModel& model);

// Lloyd iterations from k-means++ seeds, best of several restarts. Centroids
// are renormalized onto the unit sphere at the end and points reassigned.
ClusterSet kmeans(std::span<const Feature> features, int k, std::uint64_t seed,
                  const KMeansOptions& opts = {});

// Treats every detection as its own centroid; the no-clustering baseline.
ClusterSet identity_clusters(std::span<const Feature> features);

// Seed for clustering one clip, fixed by clip identity alone.
std::uint64_t clip_seed(std::uint64_t base, const CellId& cell, CameraId camera);

ClusterSet cluster_clip(const Cell& cell, CameraId camera, const KModel& model,
                        std::uint64_t seed = 0, const KMeansOptions& opts = {});

// Fraction of points whose cluster's majority label equals their own label.
double purity(std::span<const int> assignments, std::span<const std::int32_t> labels);

}  // namespace clique
