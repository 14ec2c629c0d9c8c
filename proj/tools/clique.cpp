#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "clique/eval.hpp"
#include "clique/io.hpp"
#include "clique/json_fields.hpp"
#include "clique/metrics.hpp"
#include "clique/pipeline.hpp"

using namespace clique;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

// Top-level run configuration. Every section is optional.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  WorldConfig world;
  AugmentConfig augment;
  ProfileOptions profile;
  RunKnobs query;
  Variant variant{Variant::Clique};
  BenchConfig bench;
};

RunConfig load_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  const json j = read_json(path);
  FieldReader r(j, "config");
  std::string variant{to_string(c.variant)};
  r.opt("world", c.world)
      .opt("augment", c.augment)
      .opt("profile", c.profile)
      .opt("query", c.query)
      .opt("variant", variant)
      .opt("bench", c.bench);
  if (r.has("seed")) c.seed = r.sub("seed").get<std::uint64_t>();
  r.finish();
  c.variant = variant_from_string(variant);
  c.world.validate();
  return c;
}

fs::path sidecar(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

json cell_json(const Repository& repo, std::uint32_t idx) {
  const auto& id = repo.cells[idx].id;
  return {{"cell", idx}, {"geo_group_id", id.group.value}, {"window", id.window}};
}

json top_json(const SearchState& s, std::size_t k) {
  json top = json::array();
  const auto& rank = s.rank();
  for (std::size_t i = 0; i < std::min(k, rank.size()); ++i) {
    json c = cell_json(s.repo(), rank[i]);
    c["promise"] = s.cells()[rank[i]].multi_promise();
    c["category"] = to_string(s.cells()[rank[i]].category());
    top.push_back(c);
  }
  return top;
}

void emit(const json& j) { std::cout << j.dump() << '\n' << std::flush; }

StopCondition parse_stop(const std::string& text, const std::set<std::uint32_t>& truth) {
  StopCondition s;
  s.cancel = &g_cancel;
  if (text == "none") return s;
  auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidInput("--stop must be none, goal:X or budget:S");
  const std::string kind = text.substr(0, colon);
  double value = 0.0;
  try {
    value = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw InvalidInput("--stop value is not a number: '" + text + "'");
  }
  if (kind == "goal") {
    if (value <= 0.0 || value > 1.0) throw InvalidInput("goal must be in (0,1]");
    if (truth.empty()) throw InvalidInput("goal:X needs a target object with at least one in-scope true cell");
    s.kind = StopCondition::Kind::AccuracyGoal;
    s.goal = value;
    s.truth = truth;
  } else if (kind == "budget") {
    if (value < 0.0) throw InvalidInput("budget must be non-negative");
    s.kind = StopCondition::Kind::Budget;
    s.budget_s = value;
  } else {
    throw InvalidInput("--stop must be none, goal:X or budget:S");
  }
  return s;
}

std::string result_text(const json& r) {
  std::ostringstream out;
  out << "variant          " << r["variant"].get<std::string>() << "\n";
  out << "stop             " << r["stop"].get<std::string>() << "\n";
  out << "clips processed  " << r["clips_processed"].get<std::size_t>() << "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "clock            %.3f s (stage 1 %.3f s)\n", r["clock_s"].get<double>(),
                r["stage1_cost_s"].get<double>());
  out << buf;
  if (r.contains("recall_at_5")) {
    std::snprintf(buf, sizeof buf, "recall@5         %.3f\n", r["recall_at_5"].get<double>());
    out << buf;
  }
  out << "\nrank  cell  group  window  promise    category\n";
  int i = 0;
  for (const auto& c : r["top"]) {
    std::snprintf(buf, sizeof buf, "%4d  %4u  %5d  %6d  %9.4f  %s\n", ++i, c["cell"].get<unsigned>(),
                  c["geo_group_id"].get<int>(), c["window"].get<int>(), c["promise"].get<double>(),
                  c["category"].get<std::string>().c_str());
    out << buf;
  }
  return out.str();
}

// Renders a bench report.json as the text table.
std::string report_text(const json& report) {
  std::ostringstream out;
  out << "queries excluded (no in-scope true cell): " << report.at("excluded_queries").get<int>() << "\n\n";
  out << "variant          queries  recall@5  goal  reached  mean_delay_s  p50_s     p90_s\n";
  for (const auto& [variant, s] : report.at("summary").items()) {
    for (const auto& [goal, d] : s.at("delays_s").items()) {
      char line[256];
      std::snprintf(line, sizeof line, "%-16s %7zu  %8.3f  %4s  %7zu  %12.2f  %8.2f  %8.2f\n", variant.c_str(),
                    s.at("queries").get<std::size_t>(), s.at("eventual_recall_at_5").at("mean").get<double>(),
                    goal.c_str(), d.at("n").get<std::size_t>(), d.at("mean").get<double>(), d.at("p50").get<double>(),
                    d.at("p90").get<double>());
      out << line;
    }
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal object re-identification query engine"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Overrides the seed of the command");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic world");
  std::string synth_out;
  bool calibrate = false;
  synth->add_option("--out", synth_out, "Dataset path (JSONL); the manifest goes to <out>.manifest.json")->required();
  synth->add_flag("--calibrate-posture", calibrate, "Bisect posture strength for a 3x cross/same distance ratio");

  // augment
  auto* aug = app.add_subcommand("augment", "Duplicate a dataset into epochs around a target");
  std::string aug_in, aug_out;
  std::optional<std::int32_t> aug_target;
  std::optional<int> aug_epochs;
  aug->add_option("--dataset", aug_in, "Base dataset")->required()->check(CLI::ExistingFile);
  aug->add_option("--out", aug_out, "Augmented dataset path")->required();
  aug->add_option("--target-object", aug_target, "Object kept only in epoch 0");
  aug->add_option("--epochs", aug_epochs, "Number of epochs");

  // profile
  auto* prof = app.add_subcommand("profile", "Profile a dataset at ingestion");
  std::string prof_in, prof_out;
  bool skip_calibration = false;
  prof->add_option("--dataset", prof_in, "Dataset")->required()->check(CLI::ExistingFile);
  prof->add_option("--out", prof_out, "Profile sidecar path")->required();
  prof->add_flag("--skip-calibration", skip_calibration, "Keep default thresholds 0.73 / 0.91");

  // query
  auto* query = app.add_subcommand("query", "Run one query, streaming rank snapshots");
  std::string q_dataset, q_profile, q_feature, q_out, q_cache, q_save_cache, q_stop = "none";
  std::string q_variant, q_starter, q_camera, q_correlation;
  std::optional<std::int32_t> q_target;
  std::size_t q_det_index = 0;
  bool q_keep_origin = false;
  std::size_t q_top = 10;
  int q_pre = -1;
  query->add_option("--dataset", q_dataset, "Dataset")->required()->check(CLI::ExistingFile);
  query->add_option("--profile", q_profile, "Profile sidecar")->required()->check(CLI::ExistingFile);
  auto* tgt = query->add_option("--target-object", q_target, "Query by a labeled object");
  query->add_option("--detection-index", q_det_index, "Which detection of the object is the query image")->needs(tgt);
  auto* feat = query->add_option("--target-feature", q_feature, "JSON file holding the query feature vector")
                   ->check(CLI::ExistingFile);
  tgt->excludes(feat);
  query->add_flag("--keep-origin", q_keep_origin, "Keep the origin camera in scope");
  query->add_option("--variant", q_variant, "Clique, NoCluster, NoSample or NoSampleCluster");
  query->add_option("--starter-policy", q_starter, "density, posture or random")
      ->check(CLI::IsMember({"density", "posture", "random"}));
  query->add_option("--camera-policy", q_camera, "random or complementary")
      ->check(CLI::IsMember({"random", "complementary"}));
  query->add_option("--correlation", q_correlation, "on or off")->check(CLI::IsMember({"on", "off"}));
  query->add_option("--preprocessed", q_pre, "Starters per group processed at ingestion");
  query->add_option("--cache", q_cache, "Warm the search from a prior cache file")->check(CLI::ExistingFile);
  query->add_option("--save-cache", q_save_cache, "Write this query's cache");
  query->add_option("--stop", q_stop, "none, goal:X or budget:S");
  query->add_option("--top", q_top, "Cells per streamed snapshot");
  query->add_option("--out", q_out, "Result JSON; a text table goes to <out>.txt");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run the evaluation suite");
  std::string bench_out;
  bench_cmd->add_option("--out-dir", bench_out, "Report directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Print a bench report or query result as text");
  std::string report_in;
  report->add_option("--in", report_in, "report.json or a query result JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = seed;

    if (*synth) {
      WorldConfig w = cfg.world;
      if (cfg.seed) w.seed = *cfg.seed;
      if (calibrate) w.posture_strength = calibrate_posture_strength(w);
      const GeneratedWorld world = generate_world(w);
      save_dataset(synth_out, world.dataset);
      write_json(sidecar(synth_out, ".manifest.json"), generation_manifest(w, world));
      std::cerr << "wrote " << world.dataset.detections.size() << " detections to " << synth_out << "\n";
    } else if (*aug) {
      AugmentConfig a = cfg.augment;
      if (cfg.seed) a.seed = *cfg.seed;
      if (aug_target) a.target = ObjectId{*aug_target};
      if (aug_epochs) a.epochs = *aug_epochs;
      const Dataset base = load_dataset(aug_in);
      const Dataset out = augment(base, a);
      save_dataset(aug_out, out);
      write_json(sidecar(aug_out, ".manifest.json"), {{"generator", "clique-augment/1"},
                                                      {"base_dataset_hash", dataset_hash(base)},
                                                      {"augment", a},
                                                      {"dataset_hash", dataset_hash(out)},
                                                      {"detections", out.detections.size()}});
    } else if (*prof) {
      ProfileOptions o = cfg.profile;
      if (skip_calibration) o.skip_calibration = true;
      const Dataset ds = load_dataset(prof_in);
      write_json(prof_out, profile_to_json(build_profile(ds, o)));
    } else if (*query) {
      RunKnobs knobs = cfg.query;
      Variant variant = cfg.variant;
      if (cfg.seed) knobs.seed = *cfg.seed;
      if (!q_variant.empty()) variant = variant_from_string(q_variant);
      if (!q_starter.empty()) knobs.policies.starter = starter_policy_from_string(q_starter);
      if (!q_camera.empty()) knobs.policies.camera = camera_policy_from_string(q_camera);
      if (!q_correlation.empty()) knobs.policies.correlation = q_correlation == "on";
      if (q_pre >= 0) knobs.preprocessed_per_group = q_pre;

      auto repo = std::make_shared<const Repository>(load_dataset(q_dataset));
      const Profile profile = profile_from_json(read_json(q_profile));
      if (profile.dataset_hash != repo->hash)
        throw InvalidInput("profile was built for dataset " + profile.dataset_hash + ", not " + repo->hash);

      QueryCase q;
      if (q_target) {
        q = query_case_from_detection(repo, ObjectId{*q_target}, q_det_index, !q_keep_origin);
      } else if (!q_feature.empty()) {
        const json fj = read_json(q_feature);
        q.id = "feature";
        q.repo = repo;
        q.target = feature_from_json(fj.is_object() ? fj.at("feature") : fj);
        for (const auto& c : repo->dataset.cameras) q.scope.insert(c.id);
      } else {
        throw InvalidInput("query needs --target-object or --target-feature");
      }

      std::optional<ClipCache> warm;
      if (!q_cache.empty()) warm = cache_from_json(read_json(q_cache));

      SearchOptions options = variant_options(variant, profile, knobs);
      SearchState state = make_search(*repo, variant_spec(variant, q, profile, knobs), options);
      if (warm) warm_cache(state, *warm);
      const StopCondition stop = parse_stop(q_stop, q.truth);
      std::signal(SIGINT, on_sigint);

      run_stage1(state);
      for (const auto& snap : state.timeline()) {
        json line = {{"event", "snapshot"}, {"phase", "stage1"}, {"clock_s", snap.clock_s},
                     {"clips_processed", snap.clips_processed}};
        json top = json::array();
        for (std::size_t i = 0; i < std::min(q_top, snap.rank.size()); ++i) top.push_back(cell_json(*repo, snap.rank[i]));
        line["top"] = top;
        emit(line);
      }
      emit({{"event", "stage1"}, {"cost_s", state.stage1_cost()}, {"clips_processed", state.clips_processed()}});

      const QueryResult result = run(state, stop, [&](const StepEvent& ev) {
        if (ev.phase == Phase::Done) return;
        json cams = json::array();
        for (auto c : ev.cameras) cams.push_back(c.value);
        emit({{"event", "snapshot"},
              {"phase", to_string(ev.phase)},
              {"cell", cell_json(*repo, static_cast<std::uint32_t>(ev.cell))},
              {"cameras", cams},
              {"category", to_string(ev.category)},
              {"clock_s", ev.clock_s},
              {"clips_processed", state.clips_processed()},
              {"top", top_json(state, q_top)}});
      });
      json done = {{"event", "done"},
                   {"stop", to_string(result.stop)},
                   {"clips_processed", result.clips_processed},
                   {"clock_s", result.clock_s},
                   {"stage1_cost_s", result.stage1_cost_s}};
      if (!q.truth.empty()) done["recall_at_5"] = recall_at_k(result.rank, q.truth);
      emit(done);

      if (!q_out.empty()) {
        json r = done;
        r.erase("event");
        r["schema"] = "clique-result/1";
        r["dataset_hash"] = repo->hash;
        r["variant"] = to_string(variant);
        r["query_id"] = q.id;
        r["run"] = knobs;
        r["top"] = top_json(state, q_top);
        json rank = json::array();
        for (auto idx : result.rank) rank.push_back({repo->cells[idx].id.group.value, repo->cells[idx].id.window});
        r["rank"] = rank;
        json timeline = json::array();
        for (const auto& s : result.timeline) {
          json top = json::array();
          for (std::size_t i = 0; i < std::min(q_top, s.rank.size()); ++i) top.push_back(s.rank[i]);
          timeline.push_back({{"clock_s", s.clock_s}, {"clips_processed", s.clips_processed}, {"top", top}});
        }
        r["timeline"] = timeline;
        if (!q.truth.empty()) {
          json truth = json::array();
          for (auto t : q.truth) truth.push_back(t);
          r["true_cells"] = truth;
        }
        write_json(q_out, r);
        write_file(sidecar(q_out, ".txt"), result_text(r));
      }
      if (!q_save_cache.empty()) write_json(q_save_cache, cache_to_json(result.cache));
      return result.stop == StopReason::Cancelled ? 130 : 0;
    } else if (*bench_cmd) {
      BenchConfig b = cfg.bench;
      if (cfg.seed) b.world_seeds = {*cfg.seed};
      const BenchReport r = bench(b);
      write_bench_report(r, bench_out);
      std::cout << r.text_table();
    } else if (*report) {
      const json j = read_json(report_in);
      const std::string schema = j.value("schema", "");
      if (schema == "clique-bench/1")
        std::cout << report_text(j);
      else if (schema == "clique-result/1")
        std::cout << result_text(j);
      else
        throw InvalidInput("unrecognized report schema '" + schema + "'");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
