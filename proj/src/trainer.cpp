#include "fitted/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "fitted/errors.hpp"
#include "fitted/random.hpp"
#include "fitted/space_io.hpp"

namespace fitted {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train: learning_rate must be a positive number");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must be in [0,1)");
  if (!(lr_decay > 0.0) || !std::isfinite(lr_decay)) {
    throw ConfigError("train: lr_decay must be a positive number");
  }
}

json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"lr_decay", c.lr_decay},
              {"lr_decay_period", c.lr_decay_period},
              {"momentum", c.momentum},
              {"seed", c.seed},
              {"hidden_width", c.hidden_width},
              {"standardize", c.standardize}};
}

TrainConfig train_config_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("train config must be an object");
  static const std::set<std::string> known{"epochs",   "batch_size", "learning_rate",
                                           "lr_decay", "lr_decay_period", "momentum",
                                           "seed",     "hidden_width", "standardize"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw SchemaError("train config: unknown key `" + key + "`");
  }
  TrainConfig c;
  try {
    c.epochs = doc.value("epochs", c.epochs);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.lr_decay = doc.value("lr_decay", c.lr_decay);
    c.lr_decay_period = doc.value("lr_decay_period", c.lr_decay_period);
    c.momentum = doc.value("momentum", c.momentum);
    c.seed = doc.value("seed", c.seed);
    c.hidden_width = doc.value("hidden_width", c.hidden_width);
    c.standardize = doc.value("standardize", c.standardize);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Standardizer Standardizer::fit(const Matrix& features) {
  Standardizer s;
  const std::size_t d = features.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (features.rows() == 0) return s;
  const auto n = static_cast<double>(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += features(r, j);
  }
  for (double& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = features(r, j) - s.mean[j];
      var[j] += dev * dev;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (mean.empty()) return features;
  Matrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(r, j) = (out(r, j) - mean[j]) / scale[j];
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

namespace {

// a = W x + b for one row.
void affine(const Layer& layer, std::span<const double> x, std::span<double> out) {
  for (std::size_t o = 0; o < layer.outputs(); ++o) {
    double acc = layer.bias[o];
    auto w = layer.weights.row(o);
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
    out[o] = acc;
  }
}

// Per-layer activations for one input row: acts[0] = x, acts[l+1] = output of
// layer l (after ReLU for hidden layers, raw logits for the last).
std::vector<std::vector<double>> forward_row(std::span<const Layer> layers,
                                             std::span<const double> x) {
  std::vector<std::vector<double>> acts;
  acts.reserve(layers.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> out(layers[l].outputs());
    affine(layers[l], acts.back(), out);
    if (l + 1 < layers.size()) {
      for (double& v : out) v = std::max(v, 0.0);
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

double log_sum_exp(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - top);
  return top + std::log(sum);
}

std::vector<Layer> zeros_like(std::span<const Layer> layers) {
  std::vector<Layer> out;
  for (const auto& l : layers) {
    out.push_back(Layer{Matrix(l.outputs(), l.inputs()), std::vector<double>(l.outputs(), 0.0)});
  }
  return out;
}

void check_layers(std::span<const Layer> layers) {
  if (layers.empty()) throw ConfigError("classifier has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].outputs()) {
      throw ShapeMismatchError("layer " + std::to_string(l) + ": bias length mismatch");
    }
    if (l > 0 && layers[l].inputs() != layers[l - 1].outputs()) {
      throw ShapeMismatchError("layer " + std::to_string(l) + " expects " +
                               std::to_string(layers[l].inputs()) + " inputs, previous has " +
                               std::to_string(layers[l - 1].outputs()) + " outputs");
    }
  }
}

}  // namespace

Matrix network_logits(std::span<const Layer> layers, const Matrix& inputs) {
  Matrix out(inputs.rows(), layers.back().outputs());
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto acts = forward_row(layers, inputs.row(r));
    std::copy(acts.back().begin(), acts.back().end(), out.row(r).begin());
  }
  return out;
}

LossAndGradient network_loss_and_gradient(std::span<const Layer> layers, const Matrix& inputs,
                                          std::span<const std::size_t> labels) {
  LossAndGradient result{0.0, zeros_like(layers)};
  const std::size_t m = inputs.rows();
  if (m == 0) return result;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t r = 0; r < m; ++r) {
    const auto acts = forward_row(layers, inputs.row(r));
    const auto& logits = acts.back();
    result.loss += (log_sum_exp(logits) - logits[labels[r]]) * inv_m;

    // dL/dz at the output: softmax - onehot.
    std::vector<double> delta = softmax(logits);
    delta[labels[r]] -= 1.0;
    for (double& v : delta) v *= inv_m;

    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& in = acts[l];
      auto& grad = result.gradient[l];
      for (std::size_t o = 0; o < layers[l].outputs(); ++o) {
        grad.bias[o] += delta[o];
        auto g = grad.weights.row(o);
        for (std::size_t i = 0; i < in.size(); ++i) g[i] += delta[o] * in[i];
      }
      if (l == 0) break;
      std::vector<double> prev(layers[l].inputs(), 0.0);
      for (std::size_t o = 0; o < layers[l].outputs(); ++o) {
        auto w = layers[l].weights.row(o);
        for (std::size_t i = 0; i < prev.size(); ++i) prev[i] += w[i] * delta[o];
      }
      // ReLU derivative: active iff the post-activation is positive.
      for (std::size_t i = 0; i < prev.size(); ++i) {
        if (in[i] <= 0.0) prev[i] = 0.0;
      }
      delta = std::move(prev);
    }
  }
  return result;
}

Classifier::Classifier(std::vector<Layer> layers, Standardizer standardizer, TrainConfig config)
    : layers_(std::move(layers)), standardizer_(std::move(standardizer)), config_(config) {
  check_layers(layers_);
  if (!standardizer_.mean.empty() && (standardizer_.mean.size() != input_dims() ||
                                      standardizer_.scale.size() != input_dims())) {
    throw ShapeMismatchError("standardizer width does not match the input layer");
  }
}

Classifier Classifier::zeros(std::size_t input_dims, std::size_t hidden_width,
                             std::size_t num_outputs) {
  std::vector<Layer> layers;
  std::size_t in = input_dims;
  if (hidden_width > 0) {
    layers.push_back(Layer{Matrix(hidden_width, in), std::vector<double>(hidden_width, 0.0)});
    in = hidden_width;
  }
  layers.push_back(Layer{Matrix(num_outputs, in), std::vector<double>(num_outputs, 0.0)});
  TrainConfig config;
  config.hidden_width = hidden_width;
  config.standardize = false;
  return Classifier(std::move(layers), Standardizer{}, config);
}

std::vector<std::size_t> Classifier::layer_sizes() const {
  std::vector<std::size_t> sizes{input_dims()};
  for (const auto& l : layers_) sizes.push_back(l.outputs());
  return sizes;
}

Matrix Classifier::predict_proba(const Matrix& features) const {
  if (features.cols() != input_dims() && !(features.rows() == 0 && features.cols() == 0)) {
    throw DimensionMismatchError("classifier expects " + std::to_string(input_dims()) +
                                 " features, got " + std::to_string(features.cols()));
  }
  if (features.rows() == 0) return Matrix(0, num_outputs());
  Matrix logits = network_logits(layers_, standardizer_.apply(features));
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto p = softmax(logits.row(r));
    std::copy(p.begin(), p.end(), logits.row(r).begin());
  }
  return logits;
}

Classifier train(const LabeledDataset& data, const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw DegenerateDataError("train: empty dataset");
  const auto counts = data.class_counts();
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw DegenerateDataError("train: labels cover fewer than two distinct classes");
  }

  Standardizer standardizer;
  if (config.standardize) standardizer = Standardizer::fit(data.features());
  const Matrix inputs = standardizer.apply(data.features());

  Rng rng(config.seed);
  std::vector<std::size_t> sizes{data.dims()};
  if (config.hidden_width > 0) sizes.push_back(config.hidden_width);
  sizes.push_back(data.num_classes());
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double a = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> init(-a, a);
    Layer layer{Matrix(sizes[l + 1], sizes[l]), std::vector<double>(sizes[l + 1], 0.0)};
    for (double& w : layer.weights.values()) w = init(rng);
    layers.push_back(std::move(layer));
  }

  std::vector<Layer> velocity = zeros_like(layers);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = config.learning_rate;
    if (config.lr_decay_period > 0) {
      lr *= std::pow(config.lr_decay, static_cast<double>(epoch / config.lr_decay_period));
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> batch(order.data() + start, stop - start);
      const Matrix batch_inputs = inputs.select_rows(batch);
      std::vector<std::size_t> batch_labels;
      batch_labels.reserve(batch.size());
      for (std::size_t r : batch) batch_labels.push_back(data.labels()[r]);

      const auto step = network_loss_and_gradient(layers, batch_inputs, batch_labels);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto v = velocity[l].weights.values();
        auto g = step.gradient[l].weights.values();
        auto w = layers[l].weights.values();
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = config.momentum * v[i] - lr * g[i];
          w[i] += v[i];
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
          velocity[l].bias[i] = config.momentum * velocity[l].bias[i] - lr * step.gradient[l].bias[i];
          layers[l].bias[i] += velocity[l].bias[i];
        }
      }
    }
  }
  return Classifier(std::move(layers), std::move(standardizer), config);
}

double mean_cross_entropy(const Classifier& model, const LabeledDataset& data) {
  if (data.empty()) return 0.0;
  return network_loss_and_gradient(model.layers(), model.standardizer().apply(data.features()),
                                   data.labels())
      .loss;
}

double accuracy(const Classifier& model, const LabeledDataset& data) {
  if (data.empty()) return 0.0;
  const Matrix p = model.predict_proba(data.features());
  std::size_t correct = 0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto row = p.row(r);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == data.labels()[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

json classifier_to_json(const Classifier& model) {
  json layers = json::array();
  for (const auto& l : model.layers()) {
    layers.push_back(json{{"weights", std::vector<double>(l.weights.values().begin(),
                                                          l.weights.values().end())},
                          {"bias", l.bias}});
  }
  return json{{"layer_sizes", model.layer_sizes()},
              {"activation", "relu"},
              {"layers", std::move(layers)},
              {"standardizer",
               json{{"mean", model.standardizer().mean}, {"scale", model.standardizer().scale}}},
              {"train_config", to_json(model.config())}};
}

Classifier classifier_from_json(const json& doc) {
  try {
    const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto& jlayers = doc.at("layers");
    if (sizes.size() < 2 || jlayers.size() + 1 != sizes.size()) {
      throw SchemaError("model: layer_sizes and layers disagree");
    }
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < jlayers.size(); ++l) {
      auto w = jlayers[l].at("weights").get<std::vector<double>>();
      auto b = jlayers[l].at("bias").get<std::vector<double>>();
      layers.push_back(Layer{Matrix(sizes[l + 1], sizes[l], std::move(w)), std::move(b)});
    }
    Standardizer s{doc.at("standardizer").at("mean").get<std::vector<double>>(),
                   doc.at("standardizer").at("scale").get<std::vector<double>>()};
    return Classifier(std::move(layers), std::move(s),
                      train_config_from_json(doc.at("train_config")));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model: ") + e.what());
  } catch (const ShapeMismatchError& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
}

void save_classifier(const Classifier& model, const std::filesystem::path& path) {
  write_text_file(path, classifier_to_json(model).dump(2) + "\n");
}

Classifier load_classifier(const std::filesystem::path& path) {
  return classifier_from_json(load_json(path));
}

}  // namespace fitted
