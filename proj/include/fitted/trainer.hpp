#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

#include "fitted/labeled_dataset.hpp"
#include "fitted/matrix.hpp"

namespace fitted {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  // The rate is multiplied by lr_decay every lr_decay_period epochs; a period
  // of 0 disables decay.
  double lr_decay = 1.0;
  std::size_t lr_decay_period = 0;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  // 0 trains softmax regression; otherwise one ReLU hidden layer of this width.
  std::size_t hidden_width = 0;
  bool standardize = true;

  // Throws ConfigError.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& config);
// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& doc);

// One affine layer: weights are outputs x inputs.
struct Layer {
  Matrix weights;
  std::vector<double> bias;

  std::size_t inputs() const noexcept { return weights.cols(); }
  std::size_t outputs() const noexcept { return weights.rows(); }
  bool operator==(const Layer&) const = default;
};

// Per-feature affine map x -> (x - mean) / scale. Empty means identity.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
  bool operator==(const Standardizer&) const = default;
};

// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

// Forward pass of the raw network: ReLU between layers, no output activation.
Matrix network_logits(std::span<const Layer> layers, const Matrix& inputs);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<Layer> gradient;  // same shapes as the layers
};

// Mean cross-entropy of the network over (inputs, labels) and its gradient
// with respect to every weight and bias.
LossAndGradient network_loss_and_gradient(std::span<const Layer> layers, const Matrix& inputs,
                                          std::span<const std::size_t> labels);

// A trained (or zero-initialised) probabilistic classifier. Immutable.
class Classifier {
 public:
  Classifier(std::vector<Layer> layers, Standardizer standardizer, TrainConfig config);

  // All weights and biases zero; predicts the uniform distribution.
  static Classifier zeros(std::size_t input_dims, std::size_t hidden_width,
                          std::size_t num_outputs);

  std::size_t input_dims() const noexcept { return layers_.front().inputs(); }
  std::size_t num_outputs() const noexcept { return layers_.back().outputs(); }
  std::vector<std::size_t> layer_sizes() const;
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  const TrainConfig& config() const noexcept { return config_; }

  // M x num_outputs row-stochastic matrix. Throws DimensionMismatchError.
  Matrix predict_proba(const Matrix& features) const;

  bool operator==(const Classifier&) const = default;

 private:
  std::vector<Layer> layers_;
  Standardizer standardizer_;
  TrainConfig config_;
};

// Mini-batch SGD with momentum on mean cross-entropy. Output arity is
// data.num_classes(). Deterministic in (data, config).
// Throws ConfigError or DegenerateDataError (fewer than two distinct labels).
Classifier train(const LabeledDataset& data, const TrainConfig& config);

double mean_cross_entropy(const Classifier& model, const LabeledDataset& data);
double accuracy(const Classifier& model, const LabeledDataset& data);

nlohmann::json classifier_to_json(const Classifier& model);
Classifier classifier_from_json(const nlohmann::json& doc);
void save_classifier(const Classifier& model, const std::filesystem::path& path);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace fitted
