// fitted: command-line front end for building superclass spaces, training
// fitted ensembles, and scoring them.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fitted/class_spaces.hpp"
#include "fitted/csv.hpp"
#include "fitted/errors.hpp"
#include "fitted/experiment.hpp"
#include "fitted/random.hpp"
#include "fitted/space_io.hpp"

namespace {

struct SpacesArgs {
  std::size_t n = 0;
  std::string scheme = "consecutive";
  std::vector<std::size_t> offsets;
  std::size_t stride = 2;
  std::size_t block_size = 2;
  std::uint64_t seed = 0;
  std::string uneven = "error";
  std::string blocks;
  std::size_t count = 1;
  std::string out;
  bool no_identity = false;
  bool resolving = false;
};

// "0,1;2,3" -> {{0,1},{2,3}}
std::vector<fitted::Block> parse_blocks(const std::string& text) {
  std::vector<fitted::Block> blocks;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    fitted::Block b;
    for (auto field : fitted::csv::split_fields(std::string_view(text).substr(start, end - start))) {
      std::size_t v = 0;
      if (!fitted::csv::parse_index(field, v)) {
        throw fitted::SchemaError("--blocks: `" + std::string(field) + "` is not a class index");
      }
      b.push_back(v);
    }
    blocks.push_back(std::move(b));
    start = end + 1;
  }
  return blocks;
}

std::string build_spaces(const SpacesArgs& a) {
  using namespace fitted;
  if (a.uneven != "error" && a.uneven != "allow") {
    throw ConfigError("--uneven must be `error` or `allow`");
  }
  const UnevenPolicy policy = a.uneven == "allow" ? UnevenPolicy::kAllow : UnevenPolicy::kError;
  const std::vector<std::size_t> offsets = a.offsets.empty() ? std::vector<std::size_t>{0} : a.offsets;
  std::vector<SuperclassSpace> spaces;
  if (a.scheme == "consecutive") {
    for (std::size_t o : offsets) spaces.push_back(gen_consecutive_pairs(a.n, o, policy));
  } else if (a.scheme == "strided") {
    for (std::size_t o : offsets) spaces.push_back(gen_strided_pairs(a.n, a.stride, o, policy));
  } else if (a.scheme == "random") {
    if (a.resolving) {
      spaces = gen_random_sequel(a.n, a.block_size, a.count, a.seed).spaces();
    } else {
      for (std::size_t i = 0; i < a.count; ++i) {
        spaces.push_back(gen_random_partition(a.n, a.block_size, derive_seed(a.seed, i)));
      }
    }
  } else if (a.scheme == "explicit") {
    if (a.blocks.empty()) throw ConfigError("--scheme explicit needs --blocks");
    spaces.push_back(explicit_space(parse_blocks(a.blocks), a.n));
  } else {
    throw ConfigError("unknown scheme `" + a.scheme + "`");
  }
  FittedEnsembleSpec spec(ClassSet(a.n), {Sequel(std::move(spaces))}, !a.no_identity);
  return serialize_spec(spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fitted ensembles: superclass spaces, probability rectification, OOD and SCL evaluation"};
  app.require_subcommand(1);

  SpacesArgs sa;
  auto* spaces = app.add_subcommand("spaces", "Generate a superclass-space file");
  spaces->add_option("--n", sa.n, "Number of classes")->required();
  spaces->add_option("--scheme", sa.scheme, "consecutive|strided|random|explicit")
      ->check(CLI::IsMember({"consecutive", "strided", "random", "explicit"}));
  spaces->add_option("--offset", sa.offsets, "Pairing offset; repeat for several spaces");
  spaces->add_option("--stride", sa.stride, "Partner distance for strided pairs");
  spaces->add_option("--block-size", sa.block_size, "Block size for random partitions");
  spaces->add_option("--seed", sa.seed, "Seed for random partitions");
  spaces->add_option("--count", sa.count, "Number of random spaces");
  spaces->add_option("--uneven", sa.uneven, "error|allow: how to treat an odd class count");
  spaces->add_option("--blocks", sa.blocks, "Explicit blocks, e.g. \"0,1;2;3,4\"");
  spaces->add_option("--out", sa.out, "Output file (default: stdout)");
  spaces->add_flag("--resolving", sa.resolving, "Redraw random spaces until they resolve every pair");
  spaces->add_flag("--no-identity", sa.no_identity, "Do not add the identity member");

  fitted::CommandOptions opts;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::string partitions_mode;
  std::string config, out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Experiment config file")->required();
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--seed", seed, "Override the master seed");
    sub->add_flag("--pretty", opts.pretty, "Print the tables to stdout");
  };
  auto* run = app.add_subcommand("run", "Train or ingest ensembles and write OOD reports");
  add_common(run);
  auto* scl = app.add_subcommand("scl", "Run separable concept learning experiments");
  add_common(scl);
  scl->add_option("--partitions", partitions_mode, "halves|sample")
      ->check(CLI::IsMember({"halves", "sample"}));
  scl->add_option("--count", count, "Number of sampled partitions");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config or spaces file without running");
  validate->add_option("config", validate_path, "Config or spaces file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*spaces) {
      const std::string text = [&] {
        try {
          return build_spaces(sa);
        } catch (const fitted::Error& e) {
          throw fitted::StageError("spaces", e.kind(), e.what());
        }
      }();
      if (sa.out.empty()) {
        std::cout << text;
      } else {
        fitted::write_text_file(sa.out, text);
      }
      return 0;
    }
    if (*validate) {
      for (const auto& w : fitted::command_validate(validate_path)) {
        std::cerr << "fitted: warning: " << w << '\n';
      }
      std::cout << "ok\n";
      return 0;
    }
    opts.config_path = config;
    opts.out_dir = out_dir;
    if (run->count("--seed") + scl->count("--seed") > 0) opts.seed = seed;
    if (!partitions_mode.empty()) opts.partitions_mode = partitions_mode;
    if (scl->count("--count") > 0) opts.partition_count = count;
    if (*run) fitted::command_run(opts, std::cout);
    if (*scl) fitted::command_scl(opts, std::cout);
    return 0;
  } catch (const fitted::StageError& e) {
    std::cerr << "fitted: " << e.what() << '\n';
  } catch (const fitted::Error& e) {
    std::cerr << "fitted: " << e.kind() << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "fitted: error: " << e.what() << '\n';
  }
  return 1;
}
