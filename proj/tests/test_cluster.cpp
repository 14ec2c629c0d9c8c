#include <doctest.h>

#include <cmath>

#include "clique/cluster.hpp"
#include "clique/rng.hpp"
#include "clique/synth.hpp"
#include "fixtures.hpp"

using namespace clique;
using fixture::vec;

TEST_CASE("predict_k") {
  KModel m;
  CHECK(predict_k({0, 0}, m) == 0);
  m.b = 7.6;
  CHECK(predict_k({5, 3}, m) == 5);
  m.b = -3.0;
  CHECK(predict_k({5, 3}, m) == 1);

  std::vector<KSample> single;
  for (int n = 5; n <= 40; ++n) single.push_back({{n, n}, 1});
  CHECK(predict_k({30, 30}, train_k_model(single)) == 1);
}

TEST_CASE("kmeans on identical features") {
  std::vector<Feature> pts(6, normalize(vec({1, 2, 3})));
  const auto cs = kmeans(pts, 1, 1);
  REQUIRE(cs.centroids.size() == 1);
  CHECK(distance(cs.centroids[0], pts[0]) <= 1e-12);
  CHECK(cs.inertia <= 1e-20);
}

TEST_CASE("kmeans with k equal to the point count") {
  Rng rng(5);
  std::vector<Feature> pts;
  for (int i = 0; i < 7; ++i) pts.push_back(normalize(vec({rng.normal(), rng.normal(), rng.normal()})));
  const auto cs = kmeans(pts, 7, 3);
  CHECK(cs.inertia <= 1e-20);
  CHECK(std::set<int>(cs.assignments.begin(), cs.assignments.end()).size() == 7);
}

TEST_CASE("kmeans separates two blobs") {
  auto cfg = fixture::noiseless(fixture::small_world(50));
  cfg.smooth_noise = 0.03;
  const auto ds = generate_world(cfg).dataset;
  // two objects seen by one camera
  std::map<ObjectId, std::vector<Feature>> by_obj;
  for (const auto& d : ds.detections)
    if (d.camera == CameraId{0}) by_obj[*d.truth].push_back(d.feature);
  REQUIRE(by_obj.size() >= 2);
  std::vector<Feature> pts;
  std::vector<std::int32_t> labels;
  auto it = by_obj.begin();
  for (int o = 0; o < 2; ++o, ++it)
    for (const auto& f : it->second) {
      pts.push_back(f);
      labels.push_back(it->first.value);
    }
  const auto cs = kmeans(pts, 2, 9);
  CHECK(purity(cs.assignments, labels) == 1.0);
}

TEST_CASE("kmeans assigns every point to its nearest centroid") {
  Rng rng(6);
  std::vector<Feature> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(normalize(vec({rng.normal(), rng.normal(), rng.normal(), rng.normal()})));
  for (int k : {1, 2, 5, 9}) {
    const auto cs = kmeans(pts, k, 11);
    CHECK(cs.k_used == k);
    CHECK(static_cast<int>(cs.centroids.size()) == k);
    double inertia = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double mine = distance(pts[i], cs.centroids[static_cast<std::size_t>(cs.assignments[i])]);
      for (const auto& c : cs.centroids) CHECK(mine <= distance(pts[i], c) + 1e-12);
      inertia += mine * mine;
      CHECK(std::abs(cs.centroids[static_cast<std::size_t>(cs.assignments[i])].norm() - 1.0) <= 1e-9);
    }
    CHECK(cs.inertia == doctest::Approx(inertia));
  }
  CHECK_THROWS_AS(kmeans(pts, 0, 1), InvalidInput);
  CHECK_THROWS_AS(kmeans(pts, 61, 1), InvalidInput);
}

TEST_CASE("identity clusters") {
  std::vector<Feature> pts{vec({1, 0}), vec({0, 1})};
  const auto cs = identity_clusters(pts);
  CHECK(cs.k_used == 2);
  CHECK(cs.assignments == std::vector<int>{0, 1});
  CHECK(identity_clusters({}).empty());
}

TEST_CASE("purity") {
  const std::vector<int> a{0, 0, 0, 1, 1, 1};
  const std::vector<std::int32_t> l{5, 5, 6, 7, 7, 7};
  CHECK(purity(a, l) == doctest::Approx(5.0 / 6.0));
  CHECK_THROWS_AS(purity(a, std::vector<std::int32_t>{1}), InvalidInput);
}

namespace {

Cell two_object_clip(double noise, std::uint64_t seed) {
  Rng rng(seed);
  Cell cell;
  cell.id = CellId{GeoGroupId{0}, 0};
  auto& clip = cell.clips[CameraId{0}];
  const Feature a = normalize(vec({1, 0.2, 0, 0, 0, 0, 0, 0}));
  const Feature b = normalize(vec({0, 0, 1, 0, 0.3, 0, 0, 0}));
  for (int f = 0; f < 30; ++f) {
    for (int o = 0; o < 2; ++o) {
      if (o == 1 && f % 3 == 0) continue;
      Feature x = o == 0 ? a : b;
      for (int i = 0; i < 8; ++i) x[i] += noise * rng.normal();
      clip.push_back(fixture::det(CameraId{0}, f, 1.0, normalize(x), o));
    }
  }
  return cell;
}

KModel two_object_model() {
  std::vector<KSample> s;
  for (int x2 = 10; x2 <= 30; ++x2) {
    s.push_back({{x2, x2}, 1});
    s.push_back({{2 * x2 - x2 / 3, x2}, 2});
  }
  return train_k_model(s);
}

}  // namespace

TEST_CASE("cluster_clip on a two-object clip") {
  const auto model = two_object_model();
  const auto cell = two_object_clip(0.08, 3);
  const auto cs = cluster_clip(cell, CameraId{0}, model, 17);
  CHECK(cs.k_used == 2);
  std::vector<std::int32_t> labels;
  for (const auto& d : cell.clips.at(CameraId{0})) labels.push_back(d.truth->value);
  CHECK(purity(cs.assignments, labels) >= 0.9);

  const auto again = cluster_clip(cell, CameraId{0}, model, 17);
  CHECK(again.assignments == cs.assignments);
  CHECK(again.inertia == cs.inertia);
  for (std::size_t i = 0; i < cs.centroids.size(); ++i) CHECK(again.centroids[i] == cs.centroids[i]);
}

TEST_CASE("cluster_clip on an empty clip") {
  Cell cell;
  cell.clips[CameraId{3}];
  const auto cs = cluster_clip(cell, CameraId{3}, KModel{});
  CHECK(cs.k_used == 0);
  CHECK(cs.empty());
  CHECK_THROWS_AS(cluster_clip(cell, CameraId{4}, KModel{}), InvalidInput);
}

TEST_CASE("clip seed depends only on clip identity") {
  const CellId c{GeoGroupId{1}, 4};
  CHECK(clip_seed(7, c, CameraId{2}) == clip_seed(7, c, CameraId{2}));
  CHECK(clip_seed(7, c, CameraId{2}) != clip_seed(7, c, CameraId{3}));
  CHECK(clip_seed(7, c, CameraId{2}) != clip_seed(7, CellId{GeoGroupId{1}, 5}, CameraId{2}));
}
