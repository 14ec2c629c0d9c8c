#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clique/metrics.hpp"
#include "clique/pipeline.hpp"
#include "clique/search.hpp"
#include "clique/synth.hpp"

namespace clique {

inline constexpr std::array<double, 4> kAccuracyGoals{0.25, 0.50, 0.75, 0.99};

// Clique is the full engine. NoCluster scores clips by their closest single
// detection, NoSample processes every remaining camera of a cell at once
// from random starters, NoSampleCluster does both.
enum class Variant { Clique, NoCluster, NoSample, NoSampleCluster };

std::string_view to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct Policies {
  StarterPolicy starter{StarterPolicy::Density};
  CameraPolicy camera{CameraPolicy::Random};
  bool correlation{false};
  std::optional<double> origin_orientation_deg;  // posture starters; defaults to the origin camera's
};

// Knobs shared by every variant of one trial.
struct RunKnobs {
  CostModel cost;
  VotePolicy votes;
  KMeansOptions kmeans;
  Policies policies;
  int preprocessed_per_group{0};
  std::optional<Thresholds> thresholds_override;
  std::uint64_t seed{7};
};

void to_json(nlohmann::json& j, const RunKnobs& k);
void from_json(const nlohmann::json& j, RunKnobs& k);

SearchOptions variant_options(Variant v, const Profile& profile, const RunKnobs& knobs);
QuerySpec variant_spec(Variant v, const QueryCase& q, const Profile& profile, const RunKnobs& knobs);

// The search seed is derived from knobs.seed and the target, so variants of one
// query are paired.
QueryResult run_query(Variant v, const QueryCase& q, const Profile& profile, const RunKnobs& knobs,
                      const StopCondition& stop = {}, const ClipCache* warm = nullptr);

struct QueryBenchResult {
  std::string query_id;
  Variant variant{Variant::Clique};
  double eventual_recall_at_5{0.0};
  std::array<std::optional<double>, 4> delays;            // per kAccuracyGoals
  std::array<std::optional<std::size_t>, 4> clips_to_goal;  // per kAccuracyGoals
  std::size_t clips_processed{0};
  double clock_s{0.0};
  double stage1_cost_s{0.0};
  std::size_t true_cells{0};
};

QueryBenchResult summarize(Variant v, const QueryCase& q, const QueryResult& r);

// Runs one variant to exhaustion and summarizes its timeline.
QueryBenchResult run_variant(Variant v, const QueryCase& q, const Profile& profile, const RunKnobs& knobs);

struct BenchConfig {
  WorldConfig world;  // the base epoch
  int epochs{20};
  double removal_lo{0.0};
  double removal_hi{1.0};
  std::vector<std::uint64_t> world_seeds{1};
  int n_queries{20};  // per world
  std::vector<Variant> variants{Variant::Clique, Variant::NoCluster, Variant::NoSample, Variant::NoSampleCluster};
  ProfileOptions profile;
  RunKnobs knobs;

  BenchConfig();
};

void to_json(nlohmann::json& j, const BenchConfig& c);
void from_json(const nlohmann::json& j, BenchConfig& c);

struct PreparedWorld {
  GeneratedWorld world;
  Profile profile;
  std::vector<QueryCase> queries;
  int excluded_queries{0};  // targets with no in-scope true cell
};

// Base world, profile and augmented query cases for one seed.
PreparedWorld prepare_world(const BenchConfig& config, std::uint64_t world_seed);

struct BenchReport {
  nlohmann::json config;
  std::vector<QueryBenchResult> rows;
  int excluded_queries{0};

  nlohmann::json to_json() const;
  std::string text_table() const;
  std::string per_query_csv() const;
  std::string delay_cdf_csv() const;
};

BenchReport bench(const BenchConfig& config);

// report.json, report.txt, per_query.csv, delay_cdf.csv
void write_bench_report(const BenchReport& report, const std::filesystem::path& out_dir);

}  // namespace clique
