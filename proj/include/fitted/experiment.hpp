#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fitted/class_spaces.hpp"
#include "fitted/datasets.hpp"
#include "fitted/ood_metrics.hpp"
#include "fitted/rectifier.hpp"
#include "fitted/report.hpp"
#include "fitted/scl_eval.hpp"
#include "fitted/trainer.hpp"

namespace fitted {

// Seeds for every stage derive from the master seed as
// stage_seed(master, "<stage>"); see random.hpp. Stage names: "dataset",
// "split", "spaces", "train", "baseline", "ood-noise", "partitions",
// "scl-train".

struct CsvSource {
  std::filesystem::path train;
  std::optional<std::filesystem::path> test;
  std::optional<std::size_t> num_classes;
};

struct MemberFiles {
  std::filesystem::path space;
  std::filesystem::path test;
  std::vector<std::pair<std::string, std::filesystem::path>> ood;  // (dataset, matrix)
  std::optional<bool> identity;
};

// Externally produced prediction matrices: one list of members per fitted
// ensemble (averaged positionally), plus optional conventional-ensemble
// outputs and test labels.
struct PredictionSource {
  std::size_t num_classes = 0;
  std::optional<std::filesystem::path> labels;
  std::vector<std::vector<MemberFiles>> ensembles;
  std::vector<MemberFiles> baseline;
};

struct DataSource {
  std::optional<SyntheticSpec> synthetic;
  std::optional<CsvSource> csv;
  std::optional<PredictionSource> predictions;
};

struct NoiseSource {
  std::size_t count = 500;
  // The box is the training feature range widened by `margin` times its width.
  double margin = 0.0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataSource data;
  double test_fraction = 0.3;
  std::vector<ClassIndex> held_out_classes;
  std::optional<NoiseSource> noise;
  std::optional<FittedEnsembleSpec> spec;
  std::size_t ensembles = 1;
  std::size_t baseline_ensemble_size = 0;
  TrainConfig train;
  std::size_t histogram_bins = 20;
};

// Parses a run config; relative paths resolve against `base_dir`.
// Throws SchemaError / ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

// Synthetic-source defaults: two sequels (consecutive pairs at offsets 0 and
// 1, then a resolving pair of random pair partitions) plus the identity.
// Below four classes, the identity space alone.
FittedEnsembleSpec default_fitted_spec(std::size_t num_classes, std::uint64_t seed);

// One evaluation set's averaged member outputs.
struct EvaluationInputs {
  std::string name;
  std::vector<MemberPrediction> members;
  std::optional<Matrix> baseline;  // conventional-ensemble probabilities
};

struct PipelineOutputs {
  FittedEnsembleSpec spec;
  std::size_t num_classes = 0;
  std::vector<bool> member_is_identity;
  std::optional<std::vector<ClassIndex>> test_labels;
  EvaluationInputs test;
  std::vector<EvaluationInputs> ood;
};

// Trains (or ingests) everything a run needs and evaluates members on the
// test set and every OOD source.
PipelineOutputs run_pipeline(const RunConfig& config);

struct ModelScores {
  std::string model;
  Matrix test;
  std::vector<Matrix> ood;  // parallel to PipelineOutputs::ood
};

// Model variants: "sequels" (non-identity members rectified), "identity"
// (the identity member), "f-ensemble" (all members) and "ensemble" (the
// conventional baseline), each present only when its inputs exist.
std::vector<ModelScores> model_scores(const PipelineOutputs& outputs);

// Max score per row.
std::vector<double> confidences(const Matrix& scores);

struct RunReport {
  std::vector<report::NamedStats> stats;
  std::vector<report::DetectionCell> detection;
  nlohmann::json metrics;
  std::string tables;
  // (relative file name, contents)
  std::vector<std::pair<std::string, std::string>> histograms;
};

RunReport evaluate_run(const PipelineOutputs& outputs, std::size_t histogram_bins);

// SCL
struct SclConfig {
  std::uint64_t seed = 0;
  DataSource data;
  double test_fraction = 0.3;
  // Exactly one of: explicit partitions, "halves", or sampling.
  std::vector<SclPartition> partitions;
  bool halves = false;
  struct Sampling {
    std::size_t count = 1;
    std::size_t min_part_size = 2;
    std::size_t min_parts = 2;
  };
  std::optional<Sampling> sampling;
  std::vector<SclBuilderKind> builders{SclBuilderKind::kPlain, SclBuilderKind::kFitted};
  std::optional<FittedEnsembleSpec> part_spec;
  std::size_t ensemble_size = 1;
  std::size_t runs = 1;
  TrainConfig train;
};

SclConfig parse_scl_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

struct SclRunRecord {
  std::size_t run = 0;
  std::size_t partition_index = 0;
  SclBuilderKind builder = SclBuilderKind::kPlain;
  SclResult result;
};

struct SclOutputs {
  std::vector<SclPartition> partitions;
  std::vector<SclRunRecord> records;
};

SclOutputs run_scl(const SclConfig& config);

nlohmann::json scl_report_json(const SclOutputs& outputs);
// One row per partition with mean (std) SCL accuracy per builder.
std::string scl_table(const SclOutputs& outputs);

// Command entry points used by the CLI. Each writes its reports into
// `out_dir` plus manifest.json; the manifest's final line, `"generated_at"`,
// is the only non-reproducible byte range. Errors escape as StageError.
struct CommandOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  bool pretty = false;
  // scl overrides
  std::optional<std::string> partitions_mode;  // "halves" | "sample"
  std::optional<std::size_t> partition_count;
};

void command_run(const CommandOptions& options, std::ostream& out);
void command_scl(const CommandOptions& options, std::ostream& out);
// Returns warnings; throws on the first hard error.
std::vector<std::string> command_validate(const std::filesystem::path& config_path);

}  // namespace fitted
