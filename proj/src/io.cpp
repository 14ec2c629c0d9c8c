#include "clique/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace clique {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json feature_to_json(const Feature& f) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < f.size(); ++i) arr.push_back(f[i]);
  return arr;
}

Feature feature_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("feature must be an array");
  Feature f(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput("feature components must be numbers");
    f[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return f;
}

namespace {

json header_record(const Dataset& ds) {
  json cams = json::array();
  for (const auto& c : ds.cameras) {
    cams.push_back({{"camera_id", c.id.value},
                    {"geo_group_id", c.group.value},
                    {"fps", c.fps},
                    {"orientation_deg", c.posture.orientation_deg},
                    {"position", {c.posture.x, c.posture.y}}});
  }
  json groups = json::array();
  for (auto g : ds.geo_groups) groups.push_back(g.value);
  return {{"record", "header"},
          {"schema", kDatasetSchema},
          {"duration_s", ds.duration_s},
          {"window_s", ds.window_s},
          {"feature_dim", ds.feature_dim},
          {"seed", ds.meta.seed},
          {"config_hash", ds.meta.config_hash},
          {"geo_groups", groups},
          {"cameras", cams}};
}

json detection_record(const Detection& d) {
  json j = {{"record", "detection"},
            {"camera_id", d.camera.value},
            {"frame_index", d.frame_index},
            {"timestamp_s", d.timestamp_s},
            {"feature", feature_to_json(d.feature)}};
  if (d.truth) j["truth_object_id"] = d.truth->value;
  return j;
}

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw InvalidInput(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  out << header_record(ds).dump() << '\n';
  for (const auto& d : ds.detections) out << detection_record(d).dump() << '\n';
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto kind = required<std::string>(j, "record");
    if (kind == "header") {
      if (have_header) throw InvalidInput("duplicate header record");
      if (required<std::string>(j, "schema") != kDatasetSchema)
        throw InvalidInput("unsupported dataset schema");
      ds.duration_s = required<double>(j, "duration_s");
      ds.window_s = required<double>(j, "window_s");
      ds.feature_dim = required<int>(j, "feature_dim");
      ds.meta.seed = required<std::uint64_t>(j, "seed");
      ds.meta.config_hash = required<std::string>(j, "config_hash");
      for (const auto& g : required<json>(j, "geo_groups"))
        ds.geo_groups.emplace_back(g.get<std::int32_t>());
      for (const auto& c : required<json>(j, "cameras")) {
        Camera cam;
        cam.id = CameraId{required<std::int32_t>(c, "camera_id")};
        cam.group = GeoGroupId{required<std::int32_t>(c, "geo_group_id")};
        cam.fps = required<double>(c, "fps");
        const auto pos = required<std::vector<double>>(c, "position");
        if (pos.size() != 2) throw InvalidInput("position must have 2 components");
        cam.posture = Posture(required<double>(c, "orientation_deg"), pos[0], pos[1]);
        ds.cameras.push_back(cam);
      }
      have_header = true;
    } else if (kind == "detection") {
      if (!have_header) throw InvalidInput("detection before header");
      Detection d;
      d.camera = CameraId{required<std::int32_t>(j, "camera_id")};
      d.frame_index = required<std::int64_t>(j, "frame_index");
      d.timestamp_s = required<double>(j, "timestamp_s");
      d.feature = feature_from_json(required<json>(j, "feature"));
      if (auto it = j.find("truth_object_id"); it != j.end())
        d.truth = ObjectId{it->get<std::int32_t>()};
      ds.detections.push_back(std::move(d));
    } else {
      throw InvalidInput("unknown record kind '" + kind + "'");
    }
  }
  if (!have_header) throw InvalidInput("dataset has no header record");
  ds.validate();
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset(out, ds);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_dataset(in);
}

std::string dataset_hash(const Dataset& ds) {
  std::uint64_t h = fnv1a64(header_record(ds).dump());
  for (const auto& d : ds.detections) h = fnv1a64(detection_record(d).dump(), h);
  return hex64(h);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

}  // namespace clique
