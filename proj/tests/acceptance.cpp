// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fitted/class_spaces.hpp"
#include "fitted/datasets.hpp"
#include "fitted/experiment.hpp"
#include "fitted/ood_metrics.hpp"
#include "fitted/random.hpp"
#include "fitted/rectifier.hpp"
#include "fitted/report.hpp"
#include "fitted/scl_eval.hpp"
#include "fitted/space_io.hpp"
#include "fitted/trainer.hpp"
#include "oracles.hpp"

using namespace fitted;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<MemberPrediction> random_members(std::mt19937_64& rng, std::size_t n) {
  std::gamma_distribution<double> g(0.5);
  const std::size_t count = 1 + rng() % 5;
  const std::size_t rows = 1 + rng() % 50;
  std::vector<MemberPrediction> out;
  for (std::size_t k = 0; k < count; ++k) {
    const auto space = gen_random_partition(n, 1 + rng() % n, rng());
    Matrix p(rows, space.num_blocks());
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0;
      for (auto& v : p.row(r)) sum += (v = g(rng));
      for (auto& v : p.row(r)) v = sum > 0 ? v / sum : 1.0 / static_cast<double>(p.cols());
    }
    out.push_back({space, p});
  }
  return out;
}

Outcome rectify_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240101);
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng() % 7;
    const auto members = random_members(rng, n);
    if (!(rectify(members, n) == oracle::rectify(members, n))) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 5.0,
          fmt("1000 instances, %.0f mismatches, %.3f s", static_cast<double>(mismatches), secs)};
}

Outcome worked_example() {
  constexpr ClassIndex A = 0, B = 1, C = 2, D = 3;
  try {
    validate_space({{A, D}, {B, C}}, 4);
    validate_space({{A, B}, {C, D}}, 4);
    const SuperclassSpace h0({{A, D}, {B, C}}, 4);
    const SuperclassSpace h1({{A, B}, {C, D}}, 4);
    const bool both = is_resolving(Sequel({h0, h1}));
    const bool alone = is_resolving(Sequel({h0}));
    return {both && !alone, std::string("pair resolving=") + (both ? "true" : "false") +
                                ", single space resolving=" + (alone ? "true" : "false")};
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
}

Outcome constraint_system() {
  const fs::path cfg = fs::path(FITTED_CONFIG_DIR) / "demo_run.json";
  const auto config = parse_run_config(load_json(cfg), cfg.parent_path());
  const auto out = run_pipeline(config);
  std::size_t checked = 0, violations = 0;
  std::vector<const EvaluationInputs*> sets{&out.test};
  for (const auto& ev : out.ood) sets.push_back(&ev);
  for (const auto* ev : sets) {
    const auto scores = rectify(ev->members, out.num_classes);
    std::optional<std::size_t> id;
    for (std::size_t i = 0; i < ev->members.size(); ++i) {
      if (out.member_is_identity[i]) id = i;
    }
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      for (std::size_t y = 0; y < out.num_classes; ++y) {
        for (const auto& m : ev->members) {
          ++checked;
          if (scores(r, y) > m.probabilities(r, m.space.block_of(y))) ++violations;
        }
      }
      if (id) {
        double id_max = 0;
        for (double v : ev->members[*id].probabilities.row(r)) id_max = std::max(id_max, v);
        ++checked;
        if (predict_row(scores.row(r)).confidence > id_max) ++violations;
      }
    }
  }
  return {violations == 0 && checked > 0,
          fmt("%.0f inequalities checked, %.0f violated", static_cast<double>(checked),
              static_cast<double>(violations))};
}

Outcome proposition_one() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  std::size_t violations = 0;
  double worst_gap = 0;
  for (int run = 0; run < 50; ++run) {
    SyntheticSpec s;
    s.num_classes = 6 + rng() % 5;
    s.dims = 2 + rng() % 4;
    s.per_class_count = 40;
    s.noise_sigma = 0.2 + 0.2 * std::uniform_real_distribution<double>(0, 1)(rng);
    s.seed = rng();
    const auto [tr, te] = train_test_split(gen_gaussian_blobs(s), 0.3, rng());
    const auto partition = sample_partitions(s.num_classes, 1, 2, rng()).front();
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.seed = rng();
    SclBuilder b;
    b.kind = run % 2 ? SclBuilderKind::kFitted : SclBuilderKind::kPlain;
    const auto r = run_scl_experiment(tr, te, partition, b, cfg);
    if (r.scl_accuracy > r.routed_accuracy_bound) ++violations;
    worst_gap = std::max(worst_gap, r.gap);
  }

  // With a single part the SCL model is the plain classifier.
  SyntheticSpec s;
  s.num_classes = 8;
  s.noise_sigma = 0.25;
  s.per_class_count = 50;
  s.seed = 4;
  const auto [tr, te] = train_test_split(gen_gaussian_blobs(s), 0.3, 9);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 123;
  Block all(8);
  for (std::size_t c = 0; c < 8; ++c) all[c] = c;
  const auto whole = run_scl_experiment(tr, te, SclPartition({all}, 8), SclBuilder{}, cfg);
  TrainConfig plain_cfg = cfg;
  plain_cfg.seed = derive_seed(derive_seed(cfg.seed, 0), 0);
  const double plain = accuracy(train(tr, plain_cfg), te);
  const double secs = seconds_since(t0);
  const bool ok = violations == 0 && whole.scl_accuracy == plain &&
                  whole.routed_accuracy_bound == plain && secs < 60.0;
  return {ok, fmt("50 runs, %.0f violations, max gap %.4f; ", static_cast<double>(violations),
                  worst_gap) +
                  fmt("single part %.4f vs plain %.4f; %.1f s", whole.scl_accuracy, plain, secs)};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(555);
  std::size_t mismatches = 0, asym = 0;
  for (int t = 0; t < 500; ++t) {
    auto draw = [&](std::size_t n) {
      std::vector<double> v(n);
      const int mode = t % 3;
      for (auto& x : v) {
        if (mode == 0) {
          x = std::uniform_real_distribution<double>(0, 1)(rng);
        } else {
          // Tie-heavy: few distinct levels.
          x = static_cast<double>(rng() % (mode == 1 ? 4 : 12)) / 11.0;
        }
      }
      return v;
    };
    const auto in = draw(1 + rng() % 200);
    const auto out = draw(1 + rng() % 200);
    mismatches += fpr_at_tpr(in, out) != oracle::fpr_at_tpr(in, out);
    mismatches += auroc(in, out) != oracle::auroc(in, out);
    mismatches += detection_error(in, out) != oracle::detection_error(in, out);
    asym += auroc(in, out) + auroc(out, in) != 1.0;
  }
  return {mismatches == 0 && asym == 0,
          fmt("500 pairs, %.0f oracle mismatches, %.0f asymmetric AUROC sums",
              static_cast<double>(mismatches), static_cast<double>(asym))};
}

Outcome gradient_check() {
  std::mt19937_64 rng(31337);
  std::normal_distribution<double> w(0.0, 0.7);
  std::uniform_real_distribution<double> f(-2, 2);
  double worst = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t d = 1 + rng() % 5, c = 2 + rng() % 4, m = 1 + rng() % 8;
    const std::size_t h = draw % 2 ? 0 : 2 + rng() % 6;
    Matrix x(m, d);
    std::vector<std::size_t> y(m);
    std::vector<Layer> layers;
    bool kink = true;
    while (kink) {
      for (double& v : x.values()) v = f(rng);
      for (auto& v : y) v = rng() % c;
      layers.clear();
      auto make = [&](std::size_t out, std::size_t in) {
        Layer l{Matrix(out, in), std::vector<double>(out)};
        for (double& v : l.weights.values()) v = w(rng);
        for (double& v : l.bias) v = w(rng);
        return l;
      };
      if (h) layers.push_back(make(h, d));
      layers.push_back(make(c, h ? h : d));
      kink = false;
      if (h) {
        const Matrix z = network_logits(std::span(layers).first(1), x);
        for (double v : z.values()) kink = kink || std::abs(v) < 1e-3;
      }
    }
    const auto a = network_loss_and_gradient(layers, x, y).gradient;
    const auto n = oracle::numeric_gradient(layers, x, y, 1e-5);
    auto rel = [](double p, double q) {
      return std::abs(p - q) / std::max({std::abs(p), std::abs(q), 1e-6});
    };
    for (std::size_t l = 0; l < a.size(); ++l) {
      for (std::size_t i = 0; i < a[l].weights.values().size(); ++i) {
        worst = std::max(worst, rel(a[l].weights.values()[i], n[l].weights.values()[i]));
      }
      for (std::size_t i = 0; i < a[l].bias.size(); ++i) worst = std::max(worst, rel(a[l].bias[i], n[l].bias[i]));
    }
  }
  return {worst < 1e-4, fmt("100 draws, max relative error %.3e", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string text = slurp(e.path());
    if (e.path().filename() == "manifest.json") text = text.substr(0, text.find("\"generated_at\""));
    files[fs::relative(e.path(), dir).string()] = text;
  }
  return files;
}

Outcome determinism() {
  const fs::path tmp = fs::temp_directory_path() / "fitted_acceptance";
  fs::remove_all(tmp);
  const std::vector<std::pair<std::string, std::string>> runs{
      {"run", "demo_run.json"}, {"run", "demo_predictions.json"}, {"scl", "demo_scl.json"}};
  std::size_t identical = 0, files = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::map<std::string, std::string> snaps[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path out = tmp / (std::to_string(i) + "_" + std::to_string(k));
      const std::string cmd = std::string("\"") + FITTED_CLI + "\" " + runs[i].first +
                              " --config \"" + FITTED_CONFIG_DIR + "/" + runs[i].second +
                              "\" --out \"" + out.string() + "\" >/dev/null";
      if (std::system(cmd.c_str()) != 0) return {false, "CLI failed: " + cmd};
      snaps[k] = snapshot(out);
    }
    files += snaps[0].size();
    identical += snaps[0] == snaps[1] && !snaps[0].empty();
  }
  fs::remove_all(tmp);
  return {identical == runs.size(),
          fmt("%.0f of %.0f repeated commands byte-identical (%.0f files)",
              static_cast<double>(identical), static_cast<double>(runs.size()),
              static_cast<double>(files))};
}

Outcome desk_scale_ood() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path cfg = fs::path(FITTED_CONFIG_DIR) / "demo_run.json";
  const nlohmann::json base = load_json(cfg);
  int auroc_wins = 0;
  bool conf_ok = true, acc_ok = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    nlohmann::json doc = base;
    doc["seed"] = seed;
    const auto out = run_pipeline(parse_run_config(doc, cfg.parent_path()));
    const auto models = model_scores(out);
    const ModelScores* fe = nullptr;
    const ModelScores* id = nullptr;
    for (const auto& m : models) {
      if (m.model == "f-ensemble") fe = &m;
      if (m.model == "identity") id = &m;
    }
    std::size_t held = 0;
    while (out.ood[held].name != "held_out") ++held;
    const auto plain_pred = predict(id->test);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < plain_pred.size(); ++r) correct += plain_pred[r].label == (*out.test_labels)[r];
    const double acc = static_cast<double>(correct) / static_cast<double>(plain_pred.size());
    const double fe_conf = mean_std(confidences(fe->ood[held]))->mean;
    const double id_conf = mean_std(confidences(id->ood[held]))->mean;
    const double fe_auc = auroc(confidences(fe->test), confidences(fe->ood[held]));
    const double id_auc = auroc(confidences(id->test), confidences(id->ood[held]));
    acc_ok = acc_ok && acc >= 0.85 && acc <= 0.95;
    conf_ok = conf_ok && fe_conf <= id_conf;
    auroc_wins += fe_auc >= id_auc;
    detail += fmt("[seed %.0f acc %.3f ", static_cast<double>(seed), acc) +
              fmt("conf %.3f<=%.3f ", fe_conf, id_conf) + fmt("auroc %.3f vs %.3f] ", fe_auc, id_auc);
  }
  const double secs = seconds_since(t0);
  const bool ok = acc_ok && conf_ok && auroc_wins >= 4 && secs < 120.0;
  return {ok, detail + fmt("auroc wins %.0f/5, %.1f s", auroc_wins, secs)};
}

Outcome table_layout() {
  const fs::path cfg = fs::path(FITTED_CONFIG_DIR) / "demo_predictions.json";
  const auto out = run_pipeline(parse_run_config(load_json(cfg), cfg.parent_path()));
  const auto rep = evaluate_run(out, 10);
  std::vector<std::string> first_cells;
  std::istringstream lines(rep.tables);
  for (std::string line; std::getline(lines, line);) {
    if (line.size() < 2 || line[0] != '|' || line.rfind("|---", 0) == 0) continue;
    first_cells.push_back(line.substr(2, line.find(" |", 2) - 2));
  }
  const std::vector<std::string> expected{"metric",
                                          "Avg. miss-prediction conf.",
                                          "Avg. correct prediction conf.",
                                          "Avg. total prediction conf.",
                                          "Classification Accuracy",
                                          "dataset & metric",
                                          "**FPR at 95% TPR**",
                                          "noise",
                                          "**Area under ROC curve**",
                                          "noise",
                                          "**Best detection error**",
                                          "noise"};
  std::string got;
  for (const auto& c : first_cells) got += "[" + c + "]";
  return {first_cells == expected, "row labels " + got};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, rectify_oracle}, {2, worked_example}, {3, constraint_system},
      {4, proposition_one}, {5, metric_oracles}, {6, gradient_check},
      {7, determinism},    {8, desk_scale_ood}, {9, table_layout}};
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
