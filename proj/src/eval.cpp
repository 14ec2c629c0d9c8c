#include "clique/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "clique/io.hpp"
#include "clique/json_fields.hpp"
#include "clique/rng.hpp"

namespace clique {

using nlohmann::json;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Clique:
      return "Clique";
    case Variant::NoCluster:
      return "NoCluster";
    case Variant::NoSample:
      return "NoSample";
    case Variant::NoSampleCluster:
      return "NoSampleCluster";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  for (auto v : {Variant::Clique, Variant::NoCluster, Variant::NoSample, Variant::NoSampleCluster})
    if (s == to_string(v)) return v;
  throw InvalidInput("unknown variant '" + s + "'");
}

void to_json(json& j, const RunKnobs& k) {
  j = {{"cost", k.cost},
       {"starter_policy", to_string(k.policies.starter)},
       {"camera_policy", to_string(k.policies.camera)},
       {"correlation", k.policies.correlation},
       {"preprocessed_per_group", k.preprocessed_per_group},
       {"seed", k.seed}};
  if (k.policies.origin_orientation_deg) j["origin_orientation_deg"] = *k.policies.origin_orientation_deg;
  if (k.thresholds_override) j["thresholds"] = *k.thresholds_override;
}

void from_json(const json& j, RunKnobs& k) {
  FieldReader r(j, "run");
  std::string starter{to_string(k.policies.starter)}, camera{to_string(k.policies.camera)};
  r.opt("cost", k.cost)
      .opt("starter_policy", starter)
      .opt("camera_policy", camera)
      .opt("correlation", k.policies.correlation)
      .opt("preprocessed_per_group", k.preprocessed_per_group)
      .opt("seed", k.seed);
  if (r.has("origin_orientation_deg")) k.policies.origin_orientation_deg = r.sub("origin_orientation_deg").get<double>();
  if (r.has("thresholds")) k.thresholds_override = r.sub("thresholds").get<Thresholds>();
  r.finish();
  k.policies.starter = starter_policy_from_string(starter);
  k.policies.camera = camera_policy_from_string(camera);
  if (k.preprocessed_per_group < 0) throw InvalidInput("run.preprocessed_per_group must be >= 0");
}

namespace {

bool clustered(Variant v) { return v == Variant::Clique || v == Variant::NoSample; }
bool sampling(Variant v) { return v == Variant::Clique || v == Variant::NoCluster; }

}  // namespace

SearchOptions variant_options(Variant v, const Profile& profile, const RunKnobs& knobs) {
  SearchOptions o;
  o.cost = knobs.cost;
  o.thresholds = knobs.thresholds_override.value_or(profile.thresholds);
  o.votes = knobs.votes;
  o.k_model = profile.k_model;
  o.kmeans = knobs.kmeans;
  o.scoring = clustered(v) ? ClipScoring::Clustered : ClipScoring::Individual;
  o.expansion = sampling(v) ? CellExpansion::OneCamera : CellExpansion::AllCameras;
  o.camera_policy = knobs.policies.camera;
  if (knobs.policies.correlation) o.correlation = profile.correlation;
  o.seed = knobs.seed;
  return o;
}

QuerySpec variant_spec(Variant v, const QueryCase& q, const Profile& profile, const RunKnobs& knobs) {
  const Dataset& ds = q.repo->dataset;
  const StarterPolicy policy = sampling(v) ? knobs.policies.starter : StarterPolicy::Random;
  Posture origin;
  if (knobs.policies.origin_orientation_deg)
    origin = Posture(*knobs.policies.origin_orientation_deg, 0.0, 0.0);
  else if (q.origin)
    origin = ds.camera(*q.origin).posture;
  else if (policy == StarterPolicy::Posture)
    throw InvalidInput("posture starters need an origin camera or origin_orientation_deg");
  QuerySpec spec;
  spec.target = q.target;
  spec.scope = q.scope;
  spec.starters = choose_starters(policy, profile, ds, q.scope, origin,
                                  derive_seed(knobs.seed, {static_cast<std::uint64_t>(q.target_object.value)}));
  spec.preprocessed = preprocessed_clips(*q.repo, profile, q.scope, knobs.preprocessed_per_group);
  return spec;
}

QueryResult run_query(Variant v, const QueryCase& q, const Profile& profile, const RunKnobs& knobs,
                      const StopCondition& stop, const ClipCache* warm) {
  SearchOptions options = variant_options(v, profile, knobs);
  options.seed = derive_seed(knobs.seed, {static_cast<std::uint64_t>(q.target_object.value), 0x71ULL});
  SearchState state = init_query(*q.repo, variant_spec(v, q, profile, knobs), std::move(options), warm);
  return run(state, stop);
}

QueryBenchResult summarize(Variant v, const QueryCase& q, const QueryResult& r) {
  QueryBenchResult b;
  b.query_id = q.id;
  b.variant = v;
  b.eventual_recall_at_5 = recall_at_k(r.rank, q.truth);
  for (std::size_t g = 0; g < kAccuracyGoals.size(); ++g) {
    b.delays[g] = delay_to_goal(r.timeline, q.truth, kAccuracyGoals[g]);
    b.clips_to_goal[g] = clips_to_goal(r.timeline, q.truth, kAccuracyGoals[g]);
  }
  b.clips_processed = r.clips_processed;
  b.clock_s = r.clock_s;
  b.stage1_cost_s = r.stage1_cost_s;
  b.true_cells = q.truth.size();
  return b;
}

QueryBenchResult run_variant(Variant v, const QueryCase& q, const Profile& profile, const RunKnobs& knobs) {
  return summarize(v, q, run_query(v, q, profile, knobs));
}

BenchConfig::BenchConfig() {
  // 2-5 cameras at each of 7 intersections, a 60 s base recording and a
  // crowded 8-d feature space; beta recalibrated for these noise settings.
  world.duration_s = 60.0;
  world.cameras_per_group = 2;
  world.cameras_per_group_max = 5;
  world.object_arrival_rate = 6.0;
  world.revisit_prob = 0.6;
  world.revisit_max_lag_windows = 1;
  world.feature_dim = 8;
  world.outlier_scale = 2.0;
  world.posture_strength = 0.257;
  world.capture_spread = 0.9;
  epochs = 20;
  profile.sample_fraction = 1.0;
}

void to_json(json& j, const BenchConfig& c) {
  json variants = json::array();
  for (auto v : c.variants) variants.push_back(to_string(v));
  j = {{"world", c.world},
       {"epochs", c.epochs},
       {"removal_fraction_range", {c.removal_lo, c.removal_hi}},
       {"world_seeds", c.world_seeds},
       {"n_queries", c.n_queries},
       {"variants", variants},
       {"profile", c.profile},
       {"run", c.knobs}};
}

void from_json(const json& j, BenchConfig& c) {
  FieldReader r(j, "bench");
  std::vector<double> range{c.removal_lo, c.removal_hi};
  std::vector<std::string> variants;
  for (auto v : c.variants) variants.emplace_back(to_string(v));
  r.opt("world", c.world)
      .opt("epochs", c.epochs)
      .opt("removal_fraction_range", range)
      .opt("world_seeds", c.world_seeds)
      .opt("n_queries", c.n_queries)
      .opt("variants", variants)
      .opt("profile", c.profile)
      .opt("run", c.knobs)
      .finish();
  if (range.size() != 2) throw InvalidInput("bench.removal_fraction_range needs 2 values");
  c.removal_lo = range[0];
  c.removal_hi = range[1];
  c.variants.clear();
  for (const auto& v : variants) c.variants.push_back(variant_from_string(v));
  if (c.n_queries < 1) throw InvalidInput("bench.n_queries must be >= 1");
  if (c.world_seeds.empty()) throw InvalidInput("bench.world_seeds must not be empty");
  c.world.validate();
  AugmentConfig probe;
  probe.epochs = c.epochs;
  probe.removal_lo = c.removal_lo;
  probe.removal_hi = c.removal_hi;
  probe.validate();
}

PreparedWorld prepare_world(const BenchConfig& config, std::uint64_t world_seed) {
  PreparedWorld pw;
  WorldConfig wc = config.world;
  wc.seed = world_seed;
  pw.world = generate_world(wc);
  const Dataset& base = pw.world.dataset;
  pw.profile = build_profile(base, config.profile);

  // Targets must be visible to at least two cameras so something remains
  // once the origin camera leaves the scope.
  std::map<ObjectId, std::set<CameraId>> cams_of;
  for (const auto& d : base.detections)
    if (d.truth) cams_of[*d.truth].insert(d.camera);
  std::vector<ObjectId> candidates;
  for (const auto& [obj, cams] : cams_of)
    if (cams.size() >= 2) candidates.push_back(obj);
  Rng rng(derive_seed(world_seed, {0x7175657279ULL}));
  for (std::size_t i = candidates.size(); i > 1; --i) std::swap(candidates[i - 1], candidates[rng.index(i)]);

  for (auto target : candidates) {
    if (static_cast<int>(pw.queries.size()) >= config.n_queries) break;
    AugmentConfig ac;
    ac.epochs = config.epochs;
    ac.removal_lo = config.removal_lo;
    ac.removal_hi = config.removal_hi;
    ac.target = target;
    ac.seed = derive_seed(world_seed, {static_cast<std::uint64_t>(target.value), 0x6175ULL});
    auto repo = std::make_shared<const Repository>(augment(base, ac));
    auto q = make_query_case(repo, target, world_seed);
    if (q.truth.empty()) {
      ++pw.excluded_queries;
      continue;
    }
    q.id = "w" + std::to_string(world_seed) + "-obj" + std::to_string(target.value);
    pw.queries.push_back(std::move(q));
  }
  return pw;
}

BenchReport bench(const BenchConfig& config) {
  BenchReport report;
  report.config = config;
  for (auto seed : config.world_seeds) {
    const PreparedWorld pw = prepare_world(config, seed);
    report.excluded_queries += pw.excluded_queries;
    std::vector<std::vector<QueryBenchResult>> per_query(pw.queries.size());
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < pw.queries.size(); start += workers) {
      std::vector<std::future<std::vector<QueryBenchResult>>> jobs;
      for (std::size_t i = start; i < std::min(pw.queries.size(), start + workers); ++i) {
        jobs.push_back(std::async(std::launch::async, [&, i] {
          std::vector<QueryBenchResult> rows;
          for (auto v : config.variants) rows.push_back(run_variant(v, pw.queries[i], pw.profile, config.knobs));
          return rows;
        }));
      }
      for (std::size_t i = 0; i < jobs.size(); ++i) per_query[start + i] = jobs[i].get();
    }
    for (auto& rows : per_query)
      for (auto& r : rows) report.rows.push_back(std::move(r));
  }
  return report;
}

namespace {

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Stats {
  std::size_t n{0};
  double mean{0.0}, stddev{0.0}, p50{0.0}, p90{0.0};
};

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
  s.p50 = percentile(v, 0.5);
  s.p90 = percentile(v, 0.9);
  return s;
}

json stats_json(const Stats& s) {
  return {{"n", s.n}, {"mean", s.mean}, {"stddev", s.stddev}, {"p50", s.p50}, {"p90", s.p90}};
}

std::vector<Variant> variants_in(const std::vector<QueryBenchResult>& rows) {
  std::vector<Variant> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.variant) == out.end()) out.push_back(r.variant);
  return out;
}

std::vector<double> delays_for(const std::vector<QueryBenchResult>& rows, Variant v, std::size_t g) {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.variant == v && r.delays[g]) out.push_back(*r.delays[g]);
  return out;
}

}  // namespace

json BenchReport::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) {
    json delays = json::object(), clips = json::object();
    for (std::size_t g = 0; g < kAccuracyGoals.size(); ++g) {
      const auto key = fmt(kAccuracyGoals[g], 2);
      delays[key] = r.delays[g] ? json(*r.delays[g]) : json(nullptr);
      clips[key] = r.clips_to_goal[g] ? json(*r.clips_to_goal[g]) : json(nullptr);
    }
    rows_j.push_back({{"query_id", r.query_id},
                      {"variant", to_string(r.variant)},
                      {"eventual_recall_at_5", r.eventual_recall_at_5},
                      {"delays_s", delays},
                      {"clips_to_goal", clips},
                      {"clips_processed", r.clips_processed},
                      {"clock_s", r.clock_s},
                      {"stage1_cost_s", r.stage1_cost_s},
                      {"true_cells", r.true_cells}});
  }
  json summary = json::object();
  for (auto v : variants_in(rows)) {
    std::vector<double> recall;
    for (const auto& r : rows)
      if (r.variant == v) recall.push_back(r.eventual_recall_at_5);
    json goals = json::object();
    for (std::size_t g = 0; g < kAccuracyGoals.size(); ++g)
      goals[fmt(kAccuracyGoals[g], 2)] = stats_json(stats_of(delays_for(rows, v, g)));
    summary[std::string(to_string(v))] = {{"queries", recall.size()},
                                          {"eventual_recall_at_5", stats_json(stats_of(recall))},
                                          {"delays_s", goals}};
  }
  return {{"schema", "clique-bench/1"},
          {"config", config},
          {"excluded_queries", excluded_queries},
          {"summary", summary},
          {"rows", rows_j}};
}

std::string BenchReport::text_table() const {
  std::ostringstream out;
  out << "queries excluded (no in-scope true cell): " << excluded_queries << "\n\n";
  out << "variant          queries  recall@5  goal  reached  mean_delay_s  p50_s     p90_s\n";
  for (auto v : variants_in(rows)) {
    std::vector<double> recall;
    for (const auto& r : rows)
      if (r.variant == v) recall.push_back(r.eventual_recall_at_5);
    const auto rs = stats_of(recall);
    for (std::size_t g = 0; g < kAccuracyGoals.size(); ++g) {
      const auto s = stats_of(delays_for(rows, v, g));
      char line[256];
      std::snprintf(line, sizeof line, "%-16s %7zu  %8.3f  %4.2f  %7zu  %12.2f  %8.2f  %8.2f\n",
                    std::string(to_string(v)).c_str(), rs.n, rs.mean, kAccuracyGoals[g], s.n, s.mean, s.p50, s.p90);
      out << line;
    }
  }
  return out.str();
}

std::string BenchReport::per_query_csv() const {
  std::ostringstream out;
  out << "query_id,variant,eventual_recall_at_5,true_cells,clips_processed,clock_s,stage1_cost_s";
  for (double g : kAccuracyGoals) out << ",delay_" << fmt(g, 2) << ",clips_" << fmt(g, 2);
  out << "\n";
  for (const auto& r : rows) {
    out << r.query_id << ',' << to_string(r.variant) << ',' << fmt(r.eventual_recall_at_5, 4) << ',' << r.true_cells
        << ',' << r.clips_processed << ',' << fmt(r.clock_s, 4) << ',' << fmt(r.stage1_cost_s, 4);
    for (std::size_t g = 0; g < kAccuracyGoals.size(); ++g) {
      out << ',' << (r.delays[g] ? fmt(*r.delays[g], 4) : std::string());
      out << ',' << (r.clips_to_goal[g] ? std::to_string(*r.clips_to_goal[g]) : std::string());
    }
    out << "\n";
  }
  return out.str();
}

std::string BenchReport::delay_cdf_csv() const {
  std::ostringstream out;
  out << "variant,goal,delay_s,cdf\n";
  for (auto v : variants_in(rows)) {
    std::size_t total = 0;
    for (const auto& r : rows) total += r.variant == v ? 1 : 0;
    for (std::size_t g = 0; g < kAccuracyGoals.size(); ++g) {
      auto d = delays_for(rows, v, g);
      std::sort(d.begin(), d.end());
      for (std::size_t i = 0; i < d.size(); ++i)
        out << to_string(v) << ',' << fmt(kAccuracyGoals[g], 2) << ',' << fmt(d[i], 4) << ','
            << fmt(static_cast<double>(i + 1) / static_cast<double>(total), 4) << "\n";
    }
  }
  return out.str();
}

void write_bench_report(const BenchReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_json(out_dir / "report.json", report.to_json());
  write_file(out_dir / "report.txt", report.text_table());
  write_file(out_dir / "per_query.csv", report.per_query_csv());
  write_file(out_dir / "delay_cdf.csv", report.delay_cdf_csv());
}

}  // namespace clique
