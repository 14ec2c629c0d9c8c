#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include "clique/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(CLIQUE_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("clique_cli_" + std::to_string(getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

const char* kConfig = R"({
  "world": {"n_geo_groups": 3, "cameras_per_group": 2, "duration_s": 60, "feature_dim": 8,
            "object_arrival_rate": 2.0, "seed": 5},
  "augment": {"epochs": 3},
  "profile": {"sample_fraction": 1.0}
})";

std::vector<json> lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l))
    if (!l.empty()) out.push_back(json::parse(l));
  return out;
}

}  // namespace

TEST_CASE("cli: synth, augment, profile and query") {
  TempDir d;
  clique::write_file(d / "cfg.json", kConfig);
  const std::string cfg = "--config " + (d / "cfg.json");

  REQUIRE(cli(cfg + " synth --out " + (d / "base.jsonl")).code == 0);
  CHECK(fs::exists(d / "base.jsonl.manifest.json"));
  CHECK_NOTHROW(clique::load_dataset(d / "base.jsonl"));
  REQUIRE(cli(cfg + " synth --out " + (d / "again.jsonl")).code == 0);
  CHECK(clique::read_file(d / "base.jsonl") == clique::read_file(d / "again.jsonl"));

  const auto base = clique::load_dataset(d / "base.jsonl");
  const int target = base.detections[base.detections.size() / 2].truth->value;
  REQUIRE(cli(cfg + " augment --dataset " + (d / "base.jsonl") + " --out " + (d / "aug.jsonl") +
              " --target-object " + std::to_string(target))
              .code == 0);

  REQUIRE(cli(cfg + " profile --skip-calibration --dataset " + (d / "aug.jsonl") + " --out " + (d / "p0.json")).code == 0);
  const auto p0 = clique::read_json(d / "p0.json");
  CHECK(p0.at("thresholds").at("d_short") == 0.73);
  CHECK(p0.at("thresholds").at("d_long") == 0.91);

  REQUIRE(cli(cfg + " profile --dataset " + (d / "aug.jsonl") + " --out " + (d / "p.json")).code == 0);
  REQUIRE(cli(cfg + " profile --dataset " + (d / "aug.jsonl") + " --out " + (d / "p2.json")).code == 0);
  CHECK(clique::read_file(d / "p.json") == clique::read_file(d / "p2.json"));

  const std::string q = "query --dataset " + (d / "aug.jsonl") + " --profile " + (d / "p.json") +
                        " --target-object " + std::to_string(target);
  const auto cold = cli(q + " --out " + (d / "res.json") + " --save-cache " + (d / "cache.json"));
  REQUIRE(cold.code == 0);
  const auto ls = lines(cold.out);
  REQUIRE(ls.size() > 2);
  CHECK(ls.back().at("event") == "done");
  CHECK(ls.back().at("stop") == "exhausted");
  const auto res = clique::read_json(d / "res.json");
  CHECK(ls.back().at("clips_processed") == res.at("clips_processed"));
  double prev = -1.0;
  for (const auto& l : ls) {
    if (!l.contains("clock_s")) continue;
    CHECK(l.at("clock_s").get<double>() >= prev);
    prev = l.at("clock_s").get<double>();
  }

  const auto warm = cli(q + " --cache " + (d / "cache.json"));
  REQUIRE(warm.code == 0);
  bool saw_stage1 = false;
  for (const auto& l : lines(warm.out))
    if (l.value("event", "") == "stage1") {
      saw_stage1 = true;
      CHECK(l.at("cost_s") == 0.0);
    }
  CHECK(saw_stage1);

  const auto goal = cli(q + " --stop goal:0.5");
  REQUIRE(goal.code == 0);
  CHECK(lines(goal.out).back().at("clock_s").get<double>() <= res.at("clock_s").get<double>());

  // the same query again writes the same result
  REQUIRE(cli(q + " --out " + (d / "res2.json")).code == 0);
  CHECK(clique::read_file(d / "res.json") == clique::read_file(d / "res2.json"));

  // profile of another dataset
  CHECK(cli("query --dataset " + (d / "base.jsonl") + " --profile " + (d / "p.json") + " --target-object " +
            std::to_string(target))
            .code != 0);
}

TEST_CASE("cli: bad input exits nonzero") {
  TempDir d;
  clique::write_file(d / "bad.json", "{\"world\": {\"n_geo_groups\": ");
  CHECK(cli("--config " + (d / "bad.json") + " synth --out " + (d / "x.jsonl")).code != 0);
  clique::write_file(d / "unknown.json", "{\"world\": {\"bogus\": 1}}");
  CHECK(cli("--config " + (d / "unknown.json") + " synth --out " + (d / "x.jsonl")).code != 0);
  clique::write_file(d / "neg.json", "{\"world\": {\"object_arrival_rate\": -1}}");
  CHECK(cli("--config " + (d / "neg.json") + " synth --out " + (d / "x.jsonl")).code != 0);
  CHECK_FALSE(fs::exists(d / "x.jsonl"));
  CHECK(cli("frobnicate").code != 0);
  CHECK(cli("profile --dataset " + (d / "missing.jsonl") + " --out " + (d / "p.json")).code != 0);
}
