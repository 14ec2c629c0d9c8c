#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "clique/core.hpp"

namespace clique {

inline constexpr std::string_view kDatasetSchema = "clique-dataset/1";

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

nlohmann::json feature_to_json(const Feature& f);
Feature feature_from_json(const nlohmann::json& j);

// Line-delimited dataset file: one header record, then one detection per line.
void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

// Content hash of the canonical serialization; the dataset identity used by
// every sidecar file.
std::string dataset_hash(const Dataset& ds);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

// Writes j as pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace clique
