#include "clique/metrics.hpp"

#include <algorithm>

#include "clique/core.hpp"
#include "clique/search.hpp"

namespace clique {

double recall_at_k(std::span<const std::uint32_t> rank, const std::set<std::uint32_t>& truth, std::size_t k) {
  if (truth.empty()) throw InvalidInput("recall_at_k needs at least one true cell");
  const std::size_t n = std::min(k, rank.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += truth.count(rank[i]);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

const Snapshot* first_reaching(std::span<const Snapshot> timeline, const std::set<std::uint32_t>& truth,
                               double goal, std::size_t k) {
  for (const auto& s : timeline)
    if (recall_at_k(s.rank, truth, k) >= goal) return &s;
  return nullptr;
}

}  // namespace

std::optional<double> delay_to_goal(std::span<const Snapshot> timeline, const std::set<std::uint32_t>& truth,
                                    double goal, std::size_t k) {
  if (const auto* s = first_reaching(timeline, truth, goal, k)) return s->clock_s;
  return std::nullopt;
}

std::optional<std::size_t> clips_to_goal(std::span<const Snapshot> timeline, const std::set<std::uint32_t>& truth,
                                         double goal, std::size_t k) {
  if (const auto* s = first_reaching(timeline, truth, goal, k)) return s->clips_processed;
  return std::nullopt;
}

}  // namespace clique
