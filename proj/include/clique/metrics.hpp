#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace clique {

struct Snapshot;

// |top-k of rank ∩ truth| / |truth|; truth must be non-empty.
double recall_at_k(std::span<const std::uint32_t> rank, const std::set<std::uint32_t>& truth,
                   std::size_t k = 5);

// Clock of the first snapshot whose recall@k reaches goal.
std::optional<double> delay_to_goal(std::span<const Snapshot> timeline, const std::set<std::uint32_t>& truth,
                                    double goal, std::size_t k = 5);

// Clips processed at that same snapshot.
std::optional<std::size_t> clips_to_goal(std::span<const Snapshot> timeline,
                                         const std::set<std::uint32_t>& truth, double goal,
                                         std::size_t k = 5);

}  // namespace clique
