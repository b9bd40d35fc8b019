#include "fitted/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <set>
#include <sstream>

#include "fitted/csv.hpp"
#include "fitted/errors.hpp"
#include "fitted/prediction_io.hpp"
#include "fitted/random.hpp"
#include "fitted/space_io.hpp"

namespace fitted {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class F>
auto with_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.kind(), e.what());
  } catch (const json::exception& e) {
    throw StageError(stage, "SchemaError", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, "IoError", e.what());
  }
}

fs::path resolve(const fs::path& base, const json& value, const std::string& key) {
  if (!value.is_string()) throw SchemaError("`" + key + "` must be a path string");
  fs::path p = value.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

template <class T>
T get_or(const json& doc, const std::string& key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError("`" + key + "` has the wrong type: " + e.what());
  }
}

std::uint64_t require_seed(const json& doc) {
  if (!doc.is_object()) throw SchemaError("config must be a JSON object");
  if (!doc.contains("seed") || !doc["seed"].is_number_unsigned()) {
    throw SchemaError("config needs a non-negative integer master `seed`");
  }
  return doc["seed"].get<std::uint64_t>();
}

SyntheticSpec parse_synthetic(const json& j) {
  SyntheticSpec s;
  s.num_classes = get_or(j, "num_classes", s.num_classes);
  s.dims = get_or(j, "dims", s.dims);
  s.per_class_count = get_or(j, "per_class_count", s.per_class_count);
  s.class_mean_scale = get_or(j, "class_mean_scale", s.class_mean_scale);
  s.noise_sigma = get_or(j, "noise_sigma", s.noise_sigma);
  s.validate();
  return s;
}

MemberFiles parse_member_files(const json& j, const fs::path& base, bool needs_space) {
  if (!j.is_object()) throw SchemaError("prediction member must be an object");
  MemberFiles m;
  if (needs_space) m.space = resolve(base, j.at("space"), "space");
  m.test = resolve(base, j.at("test"), "test");
  if (j.contains("ood")) {
    if (!j["ood"].is_object()) throw SchemaError("`ood` must map dataset names to matrices");
    for (const auto& [name, path] : j["ood"].items()) {
      m.ood.emplace_back(name, resolve(base, path, "ood." + name));
    }
  }
  if (j.contains("identity")) m.identity = get_or(j, "identity", false);
  return m;
}

PredictionSource parse_predictions(const json& j, const fs::path& base) {
  PredictionSource p;
  if (!j.contains("num_classes")) throw SchemaError("predictions need `num_classes`");
  p.num_classes = get_or<std::size_t>(j, "num_classes", 0);
  if (j.contains("labels")) p.labels = resolve(base, j["labels"], "labels");
  auto parse_list = [&](const json& list, bool needs_space) {
    if (!list.is_array() || list.empty()) throw SchemaError("member lists must be non-empty");
    std::vector<MemberFiles> out;
    for (const auto& m : list) out.push_back(parse_member_files(m, base, needs_space));
    return out;
  };
  if (j.contains("ensembles")) {
    if (!j["ensembles"].is_array()) throw SchemaError("`ensembles` must be a list");
    for (const auto& e : j["ensembles"]) p.ensembles.push_back(parse_list(e, true));
  } else if (j.contains("members")) {
    p.ensembles.push_back(parse_list(j["members"], true));
  } else {
    throw SchemaError("predictions need `members` or `ensembles`");
  }
  if (p.ensembles.empty()) throw SchemaError("predictions: no ensembles");
  if (j.contains("baseline")) p.baseline = parse_list(j["baseline"], false);
  return p;
}

DataSource parse_data_source(const json& doc, const fs::path& base, bool allow_predictions) {
  if (!doc.contains("dataset") || !doc["dataset"].is_object()) {
    throw SchemaError("config needs a `dataset` object");
  }
  const json& d = doc["dataset"];
  DataSource src;
  int sources = 0;
  if (d.contains("synthetic")) {
    src.synthetic = parse_synthetic(d["synthetic"]);
    ++sources;
  }
  if (d.contains("csv")) {
    CsvSource c;
    c.train = resolve(base, d["csv"].at("train"), "csv.train");
    if (d["csv"].contains("test")) c.test = resolve(base, d["csv"]["test"], "csv.test");
    if (d["csv"].contains("num_classes")) {
      c.num_classes = get_or<std::size_t>(d["csv"], "num_classes", 0);
    }
    src.csv = c;
    ++sources;
  }
  if (d.contains("predictions")) {
    if (!allow_predictions) throw ConfigError("this command cannot use prediction matrices");
    src.predictions = parse_predictions(d["predictions"], base);
    ++sources;
  }
  if (sources != 1) {
    throw SchemaError("`dataset` needs exactly one of `synthetic`, `csv`, `predictions`");
  }
  return src;
}

std::optional<FittedEnsembleSpec> parse_spec_ref(const json& doc, const std::string& key,
                                                 const fs::path& base) {
  if (!doc.contains(key)) return std::nullopt;
  if (doc[key].is_string()) return load_spec(resolve(base, doc[key], key));
  return parse_spec(doc[key]);
}

struct SplitData {
  LabeledDataset train;
  LabeledDataset test;
};

SplitData load_split_data(const DataSource& src, double test_fraction, std::uint64_t master) {
  if (src.synthetic) {
    SyntheticSpec spec = *src.synthetic;
    spec.seed = stage_seed(master, "dataset");
    auto [tr, te] = train_test_split(gen_gaussian_blobs(spec), test_fraction,
                                     stage_seed(master, "split"));
    return {std::move(tr), std::move(te)};
  }
  if (!src.csv) throw ConfigError("no labelled dataset source");
  const CsvSource& c = *src.csv;
  if (!c.test) {
    auto [tr, te] = train_test_split(load_csv_dataset(c.train, c.num_classes), test_fraction,
                                     stage_seed(master, "split"));
    return {std::move(tr), std::move(te)};
  }
  LabeledDataset tr = load_csv_dataset(c.train, c.num_classes);
  LabeledDataset te = load_csv_dataset(*c.test, c.num_classes);
  const std::size_t n = std::max(tr.num_classes(), te.num_classes());
  return {LabeledDataset(tr.features(), tr.labels(), n),
          LabeledDataset(te.features(), te.labels(), n)};
}

Matrix noise_in_box(const Matrix& reference, const NoiseSource& noise, std::uint64_t seed) {
  const std::size_t d = reference.cols();
  std::vector<double> lo(d, 0.0), hi(d, 1.0);
  if (reference.rows() > 0) {
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = hi[j] = reference(0, j);
      for (std::size_t r = 1; r < reference.rows(); ++r) {
        lo[j] = std::min(lo[j], reference(r, j));
        hi[j] = std::max(hi[j], reference(r, j));
      }
      const double width = hi[j] - lo[j];
      lo[j] -= noise.margin * width;
      hi[j] += noise.margin * width;
    }
  }
  Matrix out = gen_uniform_noise(noise.count, d, 0.0, 1.0, seed);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) out(r, j) = lo[j] + out(r, j) * (hi[j] - lo[j]);
  }
  return out;
}

std::vector<MemberPrediction> averaged_members(const std::vector<FittedEnsemble>& ensembles,
                                               const Matrix& features) {
  std::vector<std::vector<MemberPrediction>> per;
  per.reserve(ensembles.size());
  for (const auto& e : ensembles) per.push_back(e.member_predictions(features));
  return average_member_predictions(per);
}

std::optional<Matrix> averaged_baseline(const std::vector<Classifier>& baseline,
                                        const Matrix& features) {
  if (baseline.empty()) return std::nullopt;
  Matrix avg = baseline.front().predict_proba(features);
  for (std::size_t b = 1; b < baseline.size(); ++b) {
    const Matrix p = baseline[b].predict_proba(features);
    for (std::size_t i = 0; i < avg.values().size(); ++i) avg.values()[i] += p.values()[i];
  }
  for (double& v : avg.values()) v /= static_cast<double>(baseline.size());
  return avg;
}

PipelineOutputs train_pipeline(const RunConfig& config) {
  const std::uint64_t master = config.seed;
  SplitData data = with_stage("data", [&] {
    return load_split_data(config.data, config.test_fraction, master);
  });

  const std::size_t n_total = data.train.num_classes();
  const std::set<ClassIndex> held(config.held_out_classes.begin(), config.held_out_classes.end());
  std::set<ClassIndex> keep;
  with_stage("data", [&] {
    for (ClassIndex c : held) {
      if (c >= n_total) {
        throw UnknownClassError("held-out class " + std::to_string(c) + " not in a " +
                                std::to_string(n_total) + "-class dataset");
      }
    }
    for (ClassIndex c = 0; c < n_total; ++c) {
      if (!held.contains(c)) keep.insert(c);
    }
    if (keep.size() < 2) throw ConfigError("fewer than two in-distribution classes remain");
  });

  PipelineOutputs out{default_fitted_spec(2, 0), keep.size(), {}, {}, {}, {}};
  LabeledDataset train_in = data.train;
  LabeledDataset test_in = data.test;
  std::vector<std::pair<std::string, Matrix>> ood_sets;
  with_stage("data", [&] {
    if (!held.empty()) {
      train_in = split_by_classes(data.train, keep, true);
      test_in = split_by_classes(data.test, keep, true);
      Matrix held_rows = split_by_classes(data.test, held, false).features();
      if (held_rows.rows() == 0) throw EmptyInputError("held-out classes have no test rows");
      ood_sets.emplace_back("held_out", std::move(held_rows));
    }
    if (config.noise) {
      ood_sets.emplace_back("uniform_noise", noise_in_box(train_in.features(), *config.noise,
                                                          stage_seed(master, "ood-noise")));
    }
  });

  out.spec = with_stage("spaces", [&] {
    FittedEnsembleSpec spec = config.spec ? *config.spec
                                          : default_fitted_spec(keep.size(),
                                                                stage_seed(master, "spaces"));
    if (spec.num_classes() != keep.size()) {
      throw ShapeMismatchError("spaces cover " + std::to_string(spec.num_classes()) +
                               " classes but the data has " + std::to_string(keep.size()) +
                               " in-distribution classes");
    }
    return spec;
  });

  std::vector<FittedEnsemble> ensembles;
  std::vector<Classifier> baseline;
  with_stage("train", [&] {
    if (config.ensembles < 1) throw ConfigError("`ensembles` must be >= 1");
    for (std::size_t e = 0; e < config.ensembles; ++e) {
      TrainConfig c = config.train;
      c.seed = derive_seed(stage_seed(master, "train"), e);
      ensembles.push_back(build_fitted_ensemble(train_in, out.spec, c));
    }
    for (std::size_t b = 0; b < config.baseline_ensemble_size; ++b) {
      TrainConfig c = config.train;
      c.seed = derive_seed(stage_seed(master, "baseline"), b);
      baseline.push_back(train(train_in, c));
    }
  });

  with_stage("evaluate", [&] {
    for (const auto& m : ensembles.front().members()) out.member_is_identity.push_back(m.identity);
    out.test_labels = test_in.labels();
    out.test = {"test", averaged_members(ensembles, test_in.features()),
                averaged_baseline(baseline, test_in.features())};
    for (const auto& [name, x] : ood_sets) {
      out.ood.push_back({name, averaged_members(ensembles, x), averaged_baseline(baseline, x)});
    }
  });
  return out;
}

std::vector<ClassIndex> load_labels(const fs::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = csv::split_lines(text);
  if (lines.empty() || csv::split_fields(lines[0]).at(0) != "label") {
    throw SchemaError(path.string() + ": header must be `label`");
  }
  std::vector<ClassIndex> labels;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].find_first_not_of(" \t\r") == std::string_view::npos) continue;
    std::size_t y = 0;
    if (!csv::parse_index(csv::split_fields(lines[li])[0], y)) {
      throw ParseError(path.string(), li + 1, "label is not a non-negative integer");
    }
    labels.push_back(y);
  }
  return labels;
}

PipelineOutputs ingest_pipeline(const RunConfig& config) {
  const PredictionSource& src = *config.data.predictions;
  return with_stage("ingest", [&] {
    std::vector<std::string> ood_names;
    for (const auto& [name, path] : src.ensembles.front().front().ood) ood_names.push_back(name);

    auto check_ood = [&](const MemberFiles& m) {
      std::vector<std::string> names;
      for (const auto& [name, path] : m.ood) names.push_back(name);
      if (names != ood_names) {
        throw SchemaError(m.test.string() + ": OOD datasets differ from the first member's");
      }
    };

    // per_set[s][e] = ensemble e's members on evaluation set s (0 = test)
    std::vector<std::vector<std::vector<MemberPrediction>>> per_set(ood_names.size() + 1);
    std::vector<bool> is_identity;
    for (std::size_t e = 0; e < src.ensembles.size(); ++e) {
      for (auto& v : per_set) v.emplace_back();
      for (const auto& m : src.ensembles[e]) {
        check_ood(m);
        MemberPrediction test_pred = load_member_prediction(m.test, m.space);
        if (e == 0) is_identity.push_back(m.identity.value_or(test_pred.space.is_discrete()));
        per_set[0][e].push_back(std::move(test_pred));
        for (std::size_t s = 0; s < m.ood.size(); ++s) {
          per_set[s + 1][e].push_back(load_member_prediction(m.ood[s].second, m.space));
        }
      }
    }
    auto baseline_for = [&](std::size_t s) -> std::optional<Matrix> {
      if (src.baseline.empty()) return std::nullopt;
      std::optional<Matrix> avg;
      for (const auto& b : src.baseline) {
        check_ood(b);
        const fs::path& p = s == 0 ? b.test : b.ood[s - 1].second;
        Matrix m = load_prediction_csv(p).probabilities;
        if (m.cols() != src.num_classes) {
          throw ShapeMismatchError(p.string() + ": baseline has " + std::to_string(m.cols()) +
                                   " columns for " + std::to_string(src.num_classes) + " classes");
        }
        if (!avg) {
          avg = std::move(m);
        } else {
          if (m.rows() != avg->rows()) {
            throw ShapeMismatchError(p.string() + ": row count differs from other baselines");
          }
          for (std::size_t i = 0; i < m.values().size(); ++i) avg->values()[i] += m.values()[i];
        }
      }
      for (double& v : avg->values()) v /= static_cast<double>(src.baseline.size());
      return avg;
    };

    std::vector<SuperclassSpace> sequel_spaces;
    for (std::size_t i = 0; i < per_set[0][0].size(); ++i) {
      const auto& space = per_set[0][0][i].space;
      if (space.num_classes() != src.num_classes) {
        throw ShapeMismatchError(src.ensembles[0][i].space.string() + ": space covers " +
                                 std::to_string(space.num_classes()) + " classes, expected " +
                                 std::to_string(src.num_classes));
      }
      if (!is_identity[i]) sequel_spaces.push_back(space);
    }
    const bool has_identity = std::find(is_identity.begin(), is_identity.end(), true) !=
                              is_identity.end();
    PipelineOutputs out{
        sequel_spaces.empty()
            ? FittedEnsembleSpec(ClassSet(src.num_classes),
                                 {Sequel({identity_space(src.num_classes)})}, false)
            : FittedEnsembleSpec(ClassSet(src.num_classes), {Sequel(sequel_spaces)}, has_identity),
        src.num_classes, is_identity, std::nullopt, {}, {}};

    for (std::size_t s = 0; s < per_set.size(); ++s) {
      EvaluationInputs ev{s == 0 ? "test" : ood_names[s - 1],
                          average_member_predictions(per_set[s]), baseline_for(s)};
      const std::size_t rows = ev.members.front().probabilities.rows();
      for (std::size_t i = 0; i < ev.members.size(); ++i) {
        if (ev.members[i].probabilities.rows() != rows) {
          const auto& m = src.ensembles[0][i];
          throw ShapeMismatchError((s == 0 ? m.test : m.ood[s - 1].second).string() +
                                   ": row count differs from the first member");
        }
      }
      (s == 0 ? out.test : out.ood.emplace_back()) = std::move(ev);
    }
    if (src.labels) {
      out.test_labels = load_labels(*src.labels);
      if (out.test_labels->size() != out.test.members.front().probabilities.rows()) {
        throw ShapeMismatchError(src.labels->string() + ": label count differs from test rows");
      }
    }
    return out;
  });
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_outputs(const fs::path& out_dir, const std::string& command,
                   const std::string& config_text, std::uint64_t seed,
                   const std::vector<std::pair<std::string, std::string>>& files) {
  json hashes = json::object();
  for (const auto& [name, contents] : files) {
    write_text_file(out_dir / name, contents);
    hashes[name] = "fnv1a64:" + hex64(fnv1a(contents));
  }
  json manifest{{"command", command},
                {"config_hash", "fnv1a64:" + hex64(fnv1a(config_text))},
                {"seed", seed},
                {"files", hashes}};
  std::string text = manifest.dump(2);
  // Close with the timestamp on its own line so it is easy to mask.
  text.pop_back();
  while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) text.pop_back();
  text += ",\n  \"generated_at\": \"" + utc_now() + "\"\n}\n";
  write_text_file(out_dir / "manifest.json", text);
}

const char* builder_name(SclBuilderKind k) {
  return k == SclBuilderKind::kPlain ? "plain" : "fitted";
}

json partition_json(const SclPartition& p) { return json(p.parts()); }

}  // namespace

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  RunConfig c;
  c.seed = require_seed(doc);
  c.data = parse_data_source(doc, base_dir, true);
  c.test_fraction = get_or(doc, "test_fraction", c.test_fraction);
  c.held_out_classes = get_or(doc, "held_out_classes", c.held_out_classes);
  if (doc.contains("ood")) {
    const json& o = doc["ood"];
    if (o.contains("uniform_noise")) {
      NoiseSource n;
      n.count = get_or(o["uniform_noise"], "count", n.count);
      n.margin = get_or(o["uniform_noise"], "margin", n.margin);
      c.noise = n;
    }
  }
  c.spec = parse_spec_ref(doc, "spaces", base_dir);
  c.ensembles = get_or(doc, "ensembles", c.ensembles);
  c.baseline_ensemble_size = get_or(doc, "baseline_ensemble_size", c.baseline_ensemble_size);
  if (doc.contains("train")) c.train = train_config_from_json(doc["train"]);
  c.histogram_bins = get_or(doc, "histogram_bins", c.histogram_bins);
  if (c.histogram_bins < 1) throw ConfigError("`histogram_bins` must be >= 1");
  if (c.data.predictions && (c.noise || !c.held_out_classes.empty())) {
    throw ConfigError("prediction-matrix runs take OOD data from the matrices only");
  }
  return c;
}

FittedEnsembleSpec default_fitted_spec(std::size_t num_classes, std::uint64_t seed) {
  if (num_classes < 4) return default_part_spec(num_classes);
  std::vector<Sequel> sequels;
  sequels.emplace_back(std::vector<SuperclassSpace>{
      gen_consecutive_pairs(num_classes, 0, UnevenPolicy::kAllow),
      gen_consecutive_pairs(num_classes, 1, UnevenPolicy::kAllow)});
  sequels.push_back(gen_random_sequel(num_classes, 2, 2, seed));
  return FittedEnsembleSpec(ClassSet(num_classes), std::move(sequels), true);
}

PipelineOutputs run_pipeline(const RunConfig& config) {
  return config.data.predictions ? ingest_pipeline(config) : train_pipeline(config);
}

std::vector<ModelScores> model_scores(const PipelineOutputs& outputs) {
  const std::size_t n = outputs.num_classes;
  auto subset = [&](const EvaluationInputs& ev, bool identity) {
    std::vector<MemberPrediction> out;
    for (std::size_t i = 0; i < ev.members.size(); ++i) {
      if (outputs.member_is_identity[i] == identity) out.push_back(ev.members[i]);
    }
    return out;
  };
  const bool any_seq = std::find(outputs.member_is_identity.begin(),
                                 outputs.member_is_identity.end(),
                                 false) != outputs.member_is_identity.end();
  const bool any_id = std::find(outputs.member_is_identity.begin(),
                                outputs.member_is_identity.end(),
                                true) != outputs.member_is_identity.end();
  std::vector<ModelScores> models;
  auto add = [&](const std::string& name, auto&& score) {
    ModelScores m{name, score(outputs.test), {}};
    for (const auto& ev : outputs.ood) m.ood.push_back(score(ev));
    models.push_back(std::move(m));
  };
  if (any_seq) add("sequels", [&](const EvaluationInputs& ev) { return rectify(subset(ev, false), n); });
  if (any_id) add("identity", [&](const EvaluationInputs& ev) { return rectify(subset(ev, true), n); });
  add("f-ensemble", [&](const EvaluationInputs& ev) { return rectify(ev.members, n); });
  if (outputs.test.baseline) {
    add("ensemble", [&](const EvaluationInputs& ev) { return *ev.baseline; });
  }
  return models;
}

std::vector<double> confidences(const Matrix& scores) {
  std::vector<double> out;
  out.reserve(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) out.push_back(predict_row(scores.row(r)).confidence);
  return out;
}

RunReport evaluate_run(const PipelineOutputs& outputs, std::size_t histogram_bins) {
  RunReport rep;
  const auto models = model_scores(outputs);
  json stats_json = json::array();
  json detection_json = json::array();
  json hist_json = json::array();
  std::vector<std::string> model_names, ood_names;
  for (const auto& ev : outputs.ood) ood_names.push_back(ev.name);

  for (const auto& m : models) {
    model_names.push_back(m.model);
    const auto in_conf = confidences(m.test);
    const auto preds = predict(m.test);
    std::vector<ConfidenceSample> samples;
    for (std::size_t r = 0; r < preds.size(); ++r) {
      ConfidenceSample s{preds[r].confidence, true, std::nullopt};
      if (outputs.test_labels) s.correct = preds[r].label == (*outputs.test_labels)[r];
      samples.push_back(s);
    }
    ConfidenceStats stats = confidence_stats(samples);
    json sj = report::to_json(stats);
    sj["model"] = m.model;
    stats_json.push_back(std::move(sj));
    rep.stats.push_back({m.model, stats});

    const auto in_hist = confidence_histogram(in_conf, histogram_bins);
    if (outputs.ood.empty()) {
      const std::string file = "histograms/" + m.model + ".csv";
      rep.histograms.emplace_back(
          file, report::histogram_csv(in_hist, std::vector<std::size_t>(histogram_bins, 0)));
      hist_json.push_back(json{{"model", m.model}, {"ood_dataset", nullptr}, {"file", file}});
    }
    for (std::size_t s = 0; s < outputs.ood.size(); ++s) {
      const auto out_conf = confidences(m.ood[s]);
      report::DetectionCell cell{m.model, outputs.ood[s].name, detection_metrics(in_conf, out_conf)};
      detection_json.push_back(report::to_json(cell));
      rep.detection.push_back(cell);
      const std::string file = "histograms/" + m.model + "__" + outputs.ood[s].name + ".csv";
      rep.histograms.emplace_back(
          file, report::histogram_csv(in_hist, confidence_histogram(out_conf, histogram_bins)));
      hist_json.push_back(
          json{{"model", m.model}, {"ood_dataset", outputs.ood[s].name}, {"file", file}});
    }
  }

  json sizes = json::object();
  sizes["test"] = outputs.test.members.front().probabilities.rows();
  for (const auto& ev : outputs.ood) sizes[ev.name] = ev.members.front().probabilities.rows();
  rep.metrics = json{{"units", "percent"},
                     {"models", model_names},
                     {"set_sizes", sizes},
                     {"confidence_stats", stats_json},
                     {"detection", detection_json},
                     {"histograms", hist_json}};
  rep.tables = "## Confidence statistics (test)\n\n" + report::confidence_table(rep.stats);
  if (!ood_names.empty()) {
    rep.tables += "\n## OOD detection\n\n" +
                  report::detection_table(model_names, ood_names, rep.detection);
  }
  return rep;
}

SclConfig parse_scl_config(const json& doc, const fs::path& base_dir) {
  SclConfig c;
  c.seed = require_seed(doc);
  c.data = parse_data_source(doc, base_dir, false);
  c.test_fraction = get_or(doc, "test_fraction", c.test_fraction);
  if (!doc.contains("partitions")) throw SchemaError("SCL config needs `partitions`");
  const json& p = doc["partitions"];
  if (p.is_string()) {
    if (p.get<std::string>() != "halves") {
      throw SchemaError("`partitions` string must be \"halves\"");
    }
    c.halves = true;
  } else if (p.is_object() && p.contains("sample")) {
    SclConfig::Sampling s;
    s.count = get_or(p["sample"], "count", s.count);
    s.min_part_size = get_or(p["sample"], "min_part_size", s.min_part_size);
    s.min_parts = get_or(p["sample"], "min_parts", s.min_parts);
    c.sampling = s;
  } else if (p.is_array()) {
    // Class count is known only after loading data; keep the raw blocks and
    // validate in run_scl.
    for (const auto& jp : p) {
      std::vector<Block> parts = jp.get<std::vector<Block>>();
      std::size_t n = 0;
      for (const auto& b : parts) {
        for (ClassIndex x : b) n = std::max(n, x + 1);
      }
      c.partitions.emplace_back(std::move(parts), n);
    }
    if (c.partitions.empty()) throw SchemaError("`partitions` list is empty");
  } else {
    throw SchemaError("`partitions` must be \"halves\", a list, or {\"sample\": {...}}");
  }
  if (doc.contains("builders")) {
    c.builders.clear();
    for (const auto& b : doc["builders"]) {
      const std::string name = b.get<std::string>();
      if (name == "plain") {
        c.builders.push_back(SclBuilderKind::kPlain);
      } else if (name == "fitted") {
        c.builders.push_back(SclBuilderKind::kFitted);
      } else {
        throw SchemaError("unknown builder `" + name + "`");
      }
    }
    if (c.builders.empty()) throw SchemaError("`builders` is empty");
  }
  c.part_spec = parse_spec_ref(doc, "part_spaces", base_dir);
  c.ensemble_size = get_or(doc, "ensemble_size", c.ensemble_size);
  c.runs = get_or(doc, "runs", c.runs);
  if (c.runs < 1) throw ConfigError("`runs` must be >= 1");
  if (doc.contains("train")) c.train = train_config_from_json(doc["train"]);
  return c;
}

SclOutputs run_scl(const SclConfig& config) {
  const std::uint64_t master = config.seed;
  SplitData data = with_stage("data", [&] {
    return load_split_data(config.data, config.test_fraction, master);
  });
  const std::size_t n = data.train.num_classes();
  SclOutputs out;
  with_stage("partitions", [&] {
    if (config.halves) {
      out.partitions.push_back(halves_partition(n));
    } else if (config.sampling) {
      out.partitions = sample_partitions(n, config.sampling->count, config.sampling->min_part_size,
                                         stage_seed(master, "partitions"),
                                         config.sampling->min_parts);
    } else {
      for (const auto& p : config.partitions) {
        if (p.num_classes() != n) {
          throw CoverageError("partition covers " + std::to_string(p.num_classes()) +
                              " classes but the data has " + std::to_string(n));
        }
      }
      out.partitions = config.partitions;
    }
  });
  with_stage("scl", [&] {
    SclBuilder builder;
    builder.part_spec = config.part_spec;
    builder.ensemble_size = config.ensemble_size;
    for (std::size_t r = 0; r < config.runs; ++r) {
      const std::uint64_t run_seed = derive_seed(stage_seed(master, "scl-train"), r);
      for (std::size_t p = 0; p < out.partitions.size(); ++p) {
        TrainConfig tc = config.train;
        tc.seed = derive_seed(run_seed, p);
        for (SclBuilderKind kind : config.builders) {
          builder.kind = kind;
          out.records.push_back(
              {r, p, kind, run_scl_experiment(data.train, data.test, out.partitions[p], builder, tc)});
        }
      }
    }
  });
  return out;
}

json scl_report_json(const SclOutputs& outputs) {
  json partitions = json::array();
  for (const auto& p : outputs.partitions) partitions.push_back(partition_json(p));
  json results = json::array();
  for (const auto& rec : outputs.records) {
    json per_part = json::array();
    for (const auto& a : rec.result.per_part_accuracy) {
      per_part.push_back(a ? json(*a) : json(nullptr));
    }
    results.push_back(json{{"run", rec.run},
                           {"partition_index", rec.partition_index},
                           {"builder", builder_name(rec.builder)},
                           {"scl_accuracy", rec.result.scl_accuracy},
                           {"routed_accuracy_bound", rec.result.routed_accuracy_bound},
                           {"gap", rec.result.gap},
                           {"per_part_accuracy", per_part},
                           {"partition", partition_json(rec.result.partition)}});
  }
  json summary = json::array();
  for (std::size_t p = 0; p < outputs.partitions.size(); ++p) {
    for (SclBuilderKind kind : {SclBuilderKind::kPlain, SclBuilderKind::kFitted}) {
      std::vector<double> acc, bound, gap;
      for (const auto& rec : outputs.records) {
        if (rec.partition_index != p || rec.builder != kind) continue;
        acc.push_back(rec.result.scl_accuracy);
        bound.push_back(rec.result.routed_accuracy_bound);
        gap.push_back(rec.result.gap);
      }
      if (acc.empty()) continue;
      auto ms = [](const std::vector<double>& v) {
        const auto s = *mean_std(v);
        return json{{"mean", s.mean}, {"std", s.stddev}};
      };
      summary.push_back(json{{"partition_index", p},
                             {"builder", builder_name(kind)},
                             {"runs", acc.size()},
                             {"scl_accuracy", ms(acc)},
                             {"routed_accuracy_bound", ms(bound)},
                             {"gap", ms(gap)}});
    }
  }
  return json{{"partitions", partitions}, {"results", results}, {"summary", summary}};
}

std::string scl_table(const SclOutputs& outputs) {
  bool has[2] = {false, false};
  for (const auto& rec : outputs.records) has[rec.builder == SclBuilderKind::kFitted] = true;
  std::ostringstream os;
  os << "| partition";
  if (has[0]) os << " | plain (std)";
  if (has[1]) os << " | fitted ensembles (std)";
  os << " |\n|---" << (has[0] ? "|---" : "") << (has[1] ? "|---" : "") << "|\n";
  for (std::size_t p = 0; p < outputs.partitions.size(); ++p) {
    os << "| ";
    const auto& parts = outputs.partitions[p].parts();
    for (std::size_t k = 0; k < parts.size(); ++k) {
      os << (k ? " " : "") << '{';
      for (std::size_t i = 0; i < parts[k].size(); ++i) os << (i ? "," : "") << parts[k][i];
      os << '}';
    }
    for (SclBuilderKind kind : {SclBuilderKind::kPlain, SclBuilderKind::kFitted}) {
      if (!has[kind == SclBuilderKind::kFitted]) continue;
      std::vector<double> acc;
      for (const auto& rec : outputs.records) {
        if (rec.partition_index == p && rec.builder == kind) acc.push_back(rec.result.scl_accuracy);
      }
      const auto s = mean_std(acc);
      os << " | " << (s ? report::percent_text(s->mean) + " (" + report::percent_text(s->stddev) + ")"
                        : std::string("n/a"));
    }
    os << " |\n";
  }
  return os.str();
}

void command_run(const CommandOptions& options, std::ostream& out) {
  const std::string text = with_stage("config", [&] { return read_text_file(options.config_path); });
  RunConfig config = with_stage("config", [&] {
    json doc = json::parse(text);
    if (options.seed) doc["seed"] = *options.seed;
    return parse_run_config(doc, options.config_path.parent_path());
  });
  const PipelineOutputs outputs = run_pipeline(config);
  const RunReport rep = with_stage("evaluate", [&] { return evaluate_run(outputs, config.histogram_bins); });
  with_stage("write", [&] {
    std::vector<std::pair<std::string, std::string>> files{
        {"metrics.json", rep.metrics.dump(2) + "\n"}, {"tables.md", rep.tables}};
    files.emplace_back("spaces.json", serialize_spec(outputs.spec));
    files.insert(files.end(), rep.histograms.begin(), rep.histograms.end());
    write_outputs(options.out_dir, "run", text, config.seed, files);
  });
  if (options.pretty) out << rep.tables;
}

void command_scl(const CommandOptions& options, std::ostream& out) {
  const std::string text = with_stage("config", [&] { return read_text_file(options.config_path); });
  SclConfig config = with_stage("config", [&] {
    json doc = json::parse(text);
    if (options.seed) doc["seed"] = *options.seed;
    if (options.partitions_mode) {
      if (*options.partitions_mode == "halves") {
        doc["partitions"] = "halves";
      } else if (*options.partitions_mode == "sample") {
        json sample = doc.contains("partitions") && doc["partitions"].is_object() &&
                              doc["partitions"].contains("sample")
                          ? doc["partitions"]["sample"]
                          : json::object();
        if (options.partition_count) sample["count"] = *options.partition_count;
        doc["partitions"] = json{{"sample", sample}};
      } else {
        throw ConfigError("--partitions must be `halves` or `sample`");
      }
    }
    return parse_scl_config(doc, options.config_path.parent_path());
  });
  const SclOutputs outputs = run_scl(config);
  const std::string table = scl_table(outputs);
  with_stage("write", [&] {
    write_outputs(options.out_dir, "scl", text, config.seed,
                  {{"scl_report.json", scl_report_json(outputs).dump(2) + "\n"},
                   {"scl_table.md", table}});
  });
  if (options.pretty) out << table;
}

std::vector<std::string> command_validate(const fs::path& config_path) {
  std::vector<std::string> warnings;
  const json doc = with_stage("config", [&] { return load_json(config_path); });
  const fs::path base = config_path.parent_path();
  auto check_spec = [&](const FittedEnsembleSpec& spec, const std::string& what) {
    for (std::size_t s = 0; s < spec.sequels.size(); ++s) {
      if (!is_resolving(spec.sequels[s])) {
        warnings.push_back(what + ": sequel " + std::to_string(s) +
                           " does not resolve every pair of classes");
      }
    }
  };
  if (doc.contains("sequels")) {
    check_spec(with_stage("spaces", [&] { return parse_spec(doc); }), "spaces");
    return warnings;
  }
  if (doc.contains("partitions")) {
    const SclConfig c = with_stage("config", [&] { return parse_scl_config(doc, base); });
    with_stage("data", [&] { load_split_data(c.data, c.test_fraction, c.seed); });
    if (c.part_spec) check_spec(*c.part_spec, "part_spaces");
    return warnings;
  }
  const RunConfig c = with_stage("config", [&] { return parse_run_config(doc, base); });
  if (c.spec) check_spec(*c.spec, "spaces");
  if (c.data.predictions) {
    with_stage("ingest", [&] {
      for (const auto& ens : c.data.predictions->ensembles) {
        for (const auto& m : ens) {
          load_member_prediction(m.test, m.space);
          for (const auto& [name, path] : m.ood) load_member_prediction(path, m.space);
        }
      }
    });
  } else {
    const SplitData data = with_stage("data", [&] { return load_split_data(c.data, c.test_fraction, c.seed); });
    with_stage("data", [&] {
      for (ClassIndex h : c.held_out_classes) {
        if (h >= data.train.num_classes()) {
          throw UnknownClassError("held-out class " + std::to_string(h) + " not in the data");
        }
      }
      const std::size_t n_in = data.train.num_classes() -
                               std::set<ClassIndex>(c.held_out_classes.begin(),
                                                    c.held_out_classes.end()).size();
      if (c.spec && c.spec->num_classes() != n_in) {
        throw ShapeMismatchError("spaces cover " + std::to_string(c.spec->num_classes()) +
                                 " classes but the data has " + std::to_string(n_in) +
                                 " in-distribution classes");
      }
    });
  }
  return warnings;
}

}  // namespace fitted
