#include "fitted/space_io.hpp"

#include <fstream>
#include <sstream>

#include "fitted/errors.hpp"

namespace fitted {

using nlohmann::json;

namespace {

std::vector<Block> parse_blocks(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": a space must be a list of blocks");
  std::vector<Block> blocks;
  for (const auto& jb : j) {
    if (!jb.is_array()) throw SchemaError(where + ": a block must be a list of class indices");
    Block b;
    for (const auto& jc : jb) {
      if (!jc.is_number_unsigned()) {
        throw SchemaError(where + ": class indices must be non-negative integers");
      }
      b.push_back(jc.get<ClassIndex>());
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::size_t require_num_classes(const json& doc) {
  if (!doc.is_object()) throw SchemaError("expected a JSON object at top level");
  if (!doc.contains("num_classes") || !doc["num_classes"].is_number_unsigned()) {
    throw SchemaError("missing non-negative integer `num_classes`");
  }
  return doc["num_classes"].get<std::size_t>();
}

void append_blocks(std::ostringstream& os, const SuperclassSpace& space) {
  os << '[';
  for (std::size_t b = 0; b < space.num_blocks(); ++b) {
    if (b) os << ',';
    os << '[';
    const auto& block = space.block(b);
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (i) os << ',';
      os << block[i];
    }
    os << ']';
  }
  os << ']';
}

}  // namespace

FittedEnsembleSpec parse_spec(const json& doc) {
  const std::size_t n = require_num_classes(doc);
  std::vector<std::string> names;
  if (doc.contains("class_names")) {
    if (!doc["class_names"].is_array()) throw SchemaError("`class_names` must be a list");
    for (const auto& jn : doc["class_names"]) {
      if (!jn.is_string()) throw SchemaError("`class_names` entries must be strings");
      names.push_back(jn.get<std::string>());
    }
  }
  bool include_identity = true;
  if (doc.contains("include_identity")) {
    if (!doc["include_identity"].is_boolean()) {
      throw SchemaError("`include_identity` must be true or false");
    }
    include_identity = doc["include_identity"].get<bool>();
  }
  if (!doc.contains("sequels") || !doc["sequels"].is_array()) {
    throw SchemaError("missing list `sequels`");
  }
  std::vector<Sequel> sequels;
  std::size_t si = 0;
  for (const auto& jseq : doc["sequels"]) {
    if (!jseq.is_array()) throw SchemaError("a sequel must be a list of spaces");
    std::vector<SuperclassSpace> spaces;
    std::size_t sj = 0;
    for (const auto& jspace : jseq) {
      const std::string where = "sequel " + std::to_string(si) + " space " + std::to_string(sj);
      spaces.emplace_back(parse_blocks(jspace, where), n);
      ++sj;
    }
    sequels.emplace_back(std::move(spaces));
    ++si;
  }
  return FittedEnsembleSpec(ClassSet(n, std::move(names)), std::move(sequels), include_identity);
}

FittedEnsembleSpec parse_spec_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  return parse_spec(doc);
}

FittedEnsembleSpec load_spec(const std::filesystem::path& path) {
  try {
    return parse_spec_text(read_text_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string serialize_spec(const FittedEnsembleSpec& spec) {
  std::ostringstream os;
  os << "{\n  \"num_classes\": " << spec.num_classes() << ",\n";
  if (!spec.class_set.names().empty()) {
    os << "  \"class_names\": " << json(spec.class_set.names()).dump() << ",\n";
  }
  os << "  \"include_identity\": " << (spec.include_identity ? "true" : "false") << ",\n";
  os << "  \"sequels\": [\n";
  for (std::size_t s = 0; s < spec.sequels.size(); ++s) {
    os << "    [\n";
    const auto& spaces = spec.sequels[s].spaces();
    for (std::size_t j = 0; j < spaces.size(); ++j) {
      os << "      ";
      append_blocks(os, spaces[j]);
      os << (j + 1 < spaces.size() ? ",\n" : "\n");
    }
    os << "    ]" << (s + 1 < spec.sequels.size() ? ",\n" : "\n");
  }
  os << "  ]\n}\n";
  return os.str();
}

SuperclassSpace parse_space(const json& doc) {
  const std::size_t n = require_num_classes(doc);
  if (!doc.contains("blocks")) throw SchemaError("missing list `blocks`");
  return SuperclassSpace(parse_blocks(doc["blocks"], "space"), n);
}

SuperclassSpace load_space(const std::filesystem::path& path) {
  try {
    return parse_space(load_json(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string serialize_space(const SuperclassSpace& space) {
  std::ostringstream os;
  os << "{\n  \"num_classes\": " << space.num_classes() << ",\n  \"blocks\": ";
  append_blocks(os, space);
  os << "\n}\n";
  return os.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path.string());
  out << text;
}

json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": malformed JSON: " + e.what());
  }
}

}  // namespace fitted
