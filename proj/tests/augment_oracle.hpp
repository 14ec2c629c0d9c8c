#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "clique/synth.hpp"

namespace fixture {

using DetKey = std::tuple<std::int32_t, std::int64_t, std::int32_t, std::vector<double>>;

inline DetKey key_of(const clique::Detection& d, std::int64_t frame) {
  return {d.camera.value, frame, d.truth ? d.truth->value : -1,
          std::vector<double>(d.feature.data(), d.feature.data() + d.feature.size())};
}

// Checks an augmented dataset against its base by multiset comparison.
// Returns an empty string on success, otherwise the first violation.
inline std::string check_augmentation(const clique::Dataset& base, const clique::Dataset& out,
                                      const clique::AugmentConfig& cfg) {
  using namespace clique;
  if (std::abs(out.duration_s - base.duration_s * cfg.epochs) > 1e-9) return "duration";
  std::map<std::int32_t, std::int64_t> frames;
  for (const auto& c : base.cameras) frames[c.id.value] = std::llround(base.duration_s * c.fps);

  std::map<ObjectId, std::multiset<DetKey>> base_by_obj;
  std::multiset<DetKey> base_all;
  std::set<ObjectId> objects;
  for (const auto& d : base.detections) {
    base_all.insert(key_of(d, d.frame_index));
    if (d.truth) {
      base_by_obj[*d.truth].insert(key_of(d, d.frame_index));
      objects.insert(*d.truth);
    }
  }

  std::vector<std::multiset<DetKey>> epoch_all(static_cast<std::size_t>(cfg.epochs));
  std::vector<std::map<ObjectId, std::multiset<DetKey>>> epoch_obj(static_cast<std::size_t>(cfg.epochs));
  for (const auto& d : out.detections) {
    const auto f = frames.at(d.camera.value);
    const auto e = d.frame_index / f;
    if (e < 0 || e >= cfg.epochs) return "detection outside every epoch";
    const auto shifted = d.frame_index - e * f;
    // time-shift identity
    const double expect_t = static_cast<double>(d.frame_index) / base.camera(d.camera).fps;
    if (std::abs(d.timestamp_s - expect_t) > 1e-9) return "timestamp not frame/fps";
    if (std::abs(d.timestamp_s - (static_cast<double>(shifted) / base.camera(d.camera).fps +
                                  static_cast<double>(e) * base.duration_s)) > 1e-6)
      return "epoch shift is not a whole base period";
    epoch_all[static_cast<std::size_t>(e)].insert(key_of(d, shifted));
    if (d.truth) epoch_obj[static_cast<std::size_t>(e)][*d.truth].insert(key_of(d, shifted));
  }

  if (epoch_all[0] != base_all) return "epoch 0 differs from base";
  for (int e = 1; e < cfg.epochs; ++e) {
    const auto& present = epoch_obj[static_cast<std::size_t>(e)];
    if (present.count(cfg.target)) return "target present in epoch " + std::to_string(e);
    std::size_t removed = 0;
    for (auto o : objects) {
      auto it = present.find(o);
      if (it == present.end()) {
        if (o != cfg.target) ++removed;
        continue;
      }
      if (it->second != base_by_obj.at(o)) return "object partially removed in epoch " + std::to_string(e);
    }
    // unlabeled detections are never removed
    std::multiset<DetKey> unlabeled_base, unlabeled_e;
    for (const auto& k : base_all)
      if (std::get<2>(k) < 0) unlabeled_base.insert(k);
    for (const auto& k : epoch_all[static_cast<std::size_t>(e)])
      if (std::get<2>(k) < 0) unlabeled_e.insert(k);
    if (unlabeled_base != unlabeled_e) return "unlabeled detections changed";
    const double n = static_cast<double>(objects.size());
    if (static_cast<double>(removed) > std::round(cfg.removal_hi * n) ||
        static_cast<double>(removed) + 1.0 < std::round(cfg.removal_lo * n))
      return "removal fraction outside range in epoch " + std::to_string(e);
  }
  return {};
}

}  // namespace fixture
