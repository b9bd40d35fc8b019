#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fitted/class_spaces.hpp"

namespace fitted {

// Space/sequel config file:
//
//   {
//     "num_classes": 4,
//     "include_identity": true,
//     "sequels": [
//       [
//         [[0,3],[1,2]],
//         [[0,1],[2,3]]
//       ]
//     ]
//   }
//
// Each sequel is a list of spaces, each space a list of blocks, each block a
// list of class indices. `include_identity` defaults to true, and an optional
// `class_names` array names the classes. serialize_spec emits this exact
// layout, so parse -> serialize is byte-stable for files it wrote.
FittedEnsembleSpec parse_spec(const nlohmann::json& doc);
FittedEnsembleSpec parse_spec_text(const std::string& text);
FittedEnsembleSpec load_spec(const std::filesystem::path& path);
std::string serialize_spec(const FittedEnsembleSpec& spec);

// A single space: {"num_classes": n, "blocks": [[...], ...]}.
SuperclassSpace parse_space(const nlohmann::json& doc);
SuperclassSpace load_space(const std::filesystem::path& path);
std::string serialize_space(const SuperclassSpace& space);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace fitted
