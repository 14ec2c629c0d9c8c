#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "clique/pipeline.hpp"
#include "clique/profile.hpp"
#include "clique/rng.hpp"
#include "clique/synth.hpp"
#include "fixtures.hpp"

using namespace clique;
using fixture::vec;

TEST_CASE("profiling windows") {
  CHECK(profiling_windows(20, 1.0).size() == 20);
  const auto w = profiling_windows(20, 0.1);
  CHECK(w == std::vector<std::int32_t>{0, 10});
  CHECK(profiling_windows(3, 0.01) == std::vector<std::int32_t>{0});
  CHECK(profiling_windows(0, 0.5).empty());
  CHECK_THROWS_AS(profiling_windows(10, 0.0), InvalidInput);
  CHECK_THROWS_AS(profiling_windows(10, 1.5), InvalidInput);
}

TEST_CASE("starter is the densest camera") {
  auto ds = fixture::empty_dataset(1, 2, 30.0);
  for (int o = 0; o < 3; ++o) ds.detections.push_back(fixture::det(CameraId{0}, o, 1.0, vec({1, 0, 0, 0}), o));
  for (int o = 0; o < 5; ++o) ds.detections.push_back(fixture::det(CameraId{1}, o, 1.0, vec({1, 0, 0, 0}), o));
  // repeated boxes of one object do not count twice
  for (int f = 10; f < 20; ++f) ds.detections.push_back(fixture::det(CameraId{0}, f, 1.0, vec({1, 0, 0, 0}), 0));
  const auto p = profile_cameras(ds, 1.0);
  CHECK(p.starters().at(GeoGroupId{0}) == CameraId{1});
  CHECK(p.cameras[0].mean_distinct_objects_per_window == doctest::Approx(3.0));
  CHECK(p.cameras[1].mean_distinct_objects_per_window == doctest::Approx(5.0));
}

TEST_CASE("all-empty cameras fall back to the lowest id") {
  const auto ds = fixture::empty_dataset(2, 3, 60.0);
  const auto p = profile_cameras(ds, 1.0);
  CHECK(p.starters().at(GeoGroupId{0}) == CameraId{0});
  CHECK(p.starters().at(GeoGroupId{1}) == CameraId{3});
  CHECK(select_starters(p, {CameraId{1}, CameraId{2}, CameraId{5}}).at(GeoGroupId{0}) == CameraId{1});
  CHECK_THROWS_AS(select_starters(p, {CameraId{1}}), InvalidInput);
}

TEST_CASE("starter matches a brute-force density count") {
  auto cfg = fixture::small_world(40);
  cfg.capture_spread = 0.9;
  cfg.duration_s = 300.0;
  const auto ds = generate_world(cfg).dataset;
  const auto p = profile_cameras(ds, 1.0);
  std::map<CameraId, std::set<std::pair<int, int>>> seen;  // (window, object)
  for (const auto& d : ds.detections)
    seen[d.camera].insert({ds.window_of(d.timestamp_s), d.truth->value});
  for (auto g : ds.geo_groups) {
    CameraId best{-1};
    std::size_t best_n = 0;
    for (auto c : ds.cameras_in(g)) {
      const auto n = seen[c].size();
      if (best.value < 0 || n > best_n) {
        best = c;
        best_n = n;
      }
    }
    CHECK(p.starters().at(g) == best);
  }
}

TEST_CASE("thresholds on cleanly separated objects") {
  std::vector<LabeledFeature> s;
  for (int i = 0; i < 3; ++i) {
    s.push_back({normalize(vec({1, 0.05 * i, 0})), ObjectId{0}});
    s.push_back({normalize(vec({0.05 * i, 1, 0})), ObjectId{1}});
  }
  double max_same = 0.0, min_cross = 10.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double d = distance(s[i].feature, s[j].feature);
      if (s[i].object == s[j].object)
        max_same = std::max(max_same, d);
      else
        min_cross = std::min(min_cross, d);
    }
  const double cut = purity_cut(s);
  CHECK(cut > max_same);
  CHECK(cut <= min_cross);
  // every same pair sits below the cut, so the 95th percentile does too and
  // d_short is pulled under d_long
  const auto t = calibrate_thresholds(s);
  CHECK(t.adjusted);
  CHECK(t.d_short == doctest::Approx(0.99 * t.d_long));
  CHECK(t.d_long < cut);
}

TEST_CASE("calibrated thresholds hold 99% precision on exhaustive recount") {
  auto cfg = fixture::small_world(41);
  cfg.duration_s = 300.0;
  const auto ds = generate_world(cfg).dataset;
  const auto windows = profiling_windows(ds.window_count(), 1.0);
  const auto sample = labeled_sample(ds, windows, 600);
  const auto t = calibrate_thresholds(sample);
  std::size_t close = 0, close_same = 0;
  std::vector<double> same;
  for (std::size_t i = 0; i < sample.size(); ++i)
    for (std::size_t j = i + 1; j < sample.size(); ++j) {
      const double d = distance(sample[i].feature, sample[j].feature);
      const bool s = sample[i].object == sample[j].object;
      if (s) same.push_back(d);
      if (d < t.d_short) {
        ++close;
        close_same += s;
      }
    }
  if (!t.adjusted) {
    REQUIRE(close > 0);
    CHECK(static_cast<double>(close_same) >= 0.99 * static_cast<double>(close));
  }
  std::sort(same.begin(), same.end());
  const auto below = std::count_if(same.begin(), same.end(), [&](double d) { return d <= t.d_long; });
  CHECK(static_cast<double>(below) / static_cast<double>(same.size()) == doctest::Approx(0.95).epsilon(0.01));
  CHECK(std::isfinite(t.d_long));
  CHECK(t.d_short < t.d_long);
}

TEST_CASE("profiling needs enough clips for the k-model") {
  const auto ds = generate_world(fixture::small_world(44)).dataset;
  ProfileOptions o;
  o.sample_fraction = 0.01;
  CHECK_THROWS_AS(build_profile(ds, o), InvalidInput);
}

TEST_CASE("thresholds defaults and validation") {
  const Thresholds t;
  CHECK(t.d_short == 0.73);
  CHECK(t.d_long == 0.91);
  CHECK(t.p_high() == doctest::Approx(1.0 / 0.73));
  CHECK(t.p_low() == doctest::Approx(1.0 / 0.91));
  Thresholds bad;
  bad.d_short = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  std::vector<LabeledFeature> one_object{{vec({1, 0}), ObjectId{0}}, {vec({0, 1}), ObjectId{0}}};
  CHECK_THROWS_AS(calibrate_thresholds(one_object), InvalidInput);
}

TEST_CASE("profile with skip_calibration keeps the default thresholds") {
  const auto ds = generate_world(fixture::small_world(42)).dataset;
  ProfileOptions o;
  o.skip_calibration = true;
  o.sample_fraction = 1.0;
  const auto p = build_profile(ds, o);
  CHECK(p.thresholds.d_short == 0.73);
  CHECK(p.thresholds.d_long == 0.91);
  const auto back = profile_from_json(profile_to_json(p));
  CHECK(profile_to_json(back).dump() == profile_to_json(p).dump());
}

TEST_CASE("noiseless profile thresholds are finite and ordered") {
  const auto ds = generate_world(fixture::noiseless(fixture::small_world(43))).dataset;
  ProfileOptions o;
  o.sample_fraction = 1.0;
  const auto p = build_profile(ds, o);
  CHECK(std::isfinite(p.thresholds.d_short));
  CHECK(std::isfinite(p.thresholds.d_long));
  CHECK(p.thresholds.d_short < p.thresholds.d_long);
}

TEST_CASE("k-model on single-object clips") {
  std::vector<KSample> s;
  for (int n = 5; n <= 40; ++n) s.push_back({{n, n}, 1});
  const auto m = train_k_model(s, 1.0);
  for (int n : {7, 20, 30, 38}) CHECK(std::abs(m.raw({n, n}) - 1.0) < 0.5);
}

TEST_CASE("k-model ridge limit shrinks to the mean") {
  std::vector<KSample> s;
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto x2 = static_cast<std::int64_t>(5 + rng.index(25));
    const auto k = 1 + static_cast<int>(rng.index(4));
    s.push_back({{x2 * k, x2}, k});
    sum += k;
  }
  const auto m = train_k_model(s, 1e12);
  CHECK(m.a.norm() < 1e-6);
  CHECK(m.b == doctest::Approx(sum / 50.0).epsilon(1e-6));
}

TEST_CASE("k-model recovers a linear rule exactly") {
  // k = x1 / x2 is a feature of the model, so the fit is near exact.
  std::vector<KSample> s;
  for (int k = 1; k <= 4; ++k)
    for (int x2 = 10; x2 <= 30; x2 += 5) s.push_back({{x2 * k, x2}, k});
  const auto m = train_k_model(s, 1e-6);
  for (const auto& x : s) CHECK(m.raw(x.stats) == doctest::Approx(x.true_k).epsilon(1e-3));
}

TEST_CASE("k-model training input checks") {
  std::vector<KSample> few(3, KSample{{2, 2}, 1});
  CHECK_THROWS_AS(train_k_model(few, 1.0), InvalidInput);
  std::vector<KSample> zeros(10, KSample{{0, 0}, 0});
  CHECK_THROWS_AS(train_k_model(zeros, 1.0), InvalidInput);
  std::vector<KSample> ok(10, KSample{{2, 2}, 1});
  CHECK_THROWS_AS(train_k_model(ok, 0.0), InvalidInput);
}

TEST_CASE("k-model generalizes to held-out clips") {
  WorldConfig cfg;
  cfg.duration_s = 300.0;
  cfg.seed = 5;
  const auto train_ds = generate_world(cfg).dataset;
  cfg.seed = 6;
  const auto test_ds = generate_world(cfg).dataset;
  const auto w = profiling_windows(train_ds.window_count(), 1.0);
  const auto m = train_k_model(k_samples(train_ds, w), 1.0);
  const auto held = k_samples(test_ds, w);
  double err = 0.0;
  for (const auto& s : held) err += std::abs(m.raw(s.stats) - s.true_k);
  CHECK(err / static_cast<double>(held.size()) <= 1.0);
}
