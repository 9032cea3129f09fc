// smile: generate, corrupt, train, evaluate and probe incomplete multi-view data.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "smile/checkpoint.hpp"
#include "smile/dataset.hpp"
#include "smile/errors.hpp"
#include "smile/gradcheck.hpp"
#include "smile/random.hpp"
#include "smile/theorem_lab.hpp"
#include "smile/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Config files and flag values that fail validation are usage errors, not runtime failures.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Level { error = 0, info = 1, debug = 2 };
Level g_level = Level::info;

void log(Level level, const std::string& message) {
  if (level > g_level) return;
  static const char* names[] = {"error", "info", "debug"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)], message.c_str());
}

Level level_from_env() {
  const char* raw = std::getenv("SMILE_LOG");
  if (raw == nullptr || *raw == '\0') return Level::info;
  const std::string value(raw);
  if (value == "error") return Level::error;
  if (value == "info") return Level::info;
  if (value == "debug") return Level::debug;
  throw UsageError("SMILE_LOG must be one of error, info, debug (got '" + value + "')");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

/// True when the command should stop because `out` already holds results.
bool skip_existing(const fs::path& out, bool force) {
  if (!fs::exists(out)) return false;
  if (fs::is_directory(out) && fs::is_empty(out)) return false;
  if (force) {
    fs::remove_all(out);
    return false;
  }
  log(Level::info, out.string() + " exists; skipping (pass --force to overwrite)");
  return true;
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long value = std::stoll(item, &used);
      if (used != item.size() || value <= 0) throw std::invalid_argument(item);
      dims.push_back(static_cast<std::size_t>(value));
    } catch (const std::exception&) {
      throw UsageError("--views: '" + item + "' is not a positive integer");
    }
  }
  if (dims.empty()) throw UsageError("--views: need at least one dimension");
  return dims;
}

std::vector<double> parse_doubles(const std::string& flag, const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a number");
    }
  }
  return values;
}

/// Flag overrides for TrainConfig. Only flags given on the command line are applied.
struct TrainFlags {
  std::string config_path;
  std::size_t warmup_epochs = 0, max_epochs = 0, batch_size = 0, k_impute = 0, K = 0, checkpoint_every = 0,
              eval_every = 0;
  double lr = 0, lambda_sil = 0, lambda_ccl = 0, gamma = 0, tau_assign = 0, tau_ccl = 0;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON file with flat TrainConfig keys")->check(CLI::ExistingFile);
    options = {
        app->add_option("--warmup-epochs", warmup_epochs, "Epochs before the SIL term starts"),
        app->add_option("--max-epochs", max_epochs, "Total epochs"),
        app->add_option("--batch-size", batch_size, "Instances per batch"),
        app->add_option("--lr", lr, "Adam learning rate"),
        app->add_option("--lambda-sil", lambda_sil, "Weight of the SIL term"),
        app->add_option("--lambda-ccl", lambda_ccl, "Weight of the CCL term"),
        app->add_option("--gamma", gamma, "Weight of SIL-v inside SIL"),
        app->add_option("--tau-assign", tau_assign, "Soft assignment temperature"),
        app->add_option("--tau-ccl", tau_ccl, "Contrastive temperature"),
        app->add_option("--k-impute", k_impute, "Neighbours averaged per imputation"),
        app->add_option("--K", K, "Cluster count (default: from the dataset)"),
        app->add_option("--seed", seed, "Training seed"),
        app->add_option("--checkpoint-every", checkpoint_every, "Write a checkpoint every n epochs (0: only at the end)"),
        app->add_option("--eval-every", eval_every, "Score against ground truth every n epochs (0: never)"),
    };
  }

  smile::TrainConfig resolve() const {
    smile::TrainConfig c;
    if (!config_path.empty()) {
      try {
        c = smile::TrainConfig::from_json(read_file(config_path));
      } catch (const smile::ParseError& e) {
        throw UsageError(config_path + ": " + e.what());
      }
    }
    auto given = [&](std::size_t i) { return options[i]->count() > 0; };
    if (given(0)) c.warmup_epochs = warmup_epochs;
    if (given(1)) c.max_epochs = max_epochs;
    if (given(2)) c.batch_size = batch_size;
    if (given(3)) c.lr = lr;
    if (given(4)) c.lambda_sil = lambda_sil;
    if (given(5)) c.lambda_ccl = lambda_ccl;
    if (given(6)) c.gamma = gamma;
    if (given(7)) c.tau_assign = tau_assign;
    if (given(8)) c.tau_ccl = tau_ccl;
    if (given(9)) c.k_impute = k_impute;
    if (given(10)) c.K = K;
    if (given(11)) c.seed = seed;
    if (given(12)) c.checkpoint_every = checkpoint_every;
    if (given(13)) c.eval_every = eval_every;
    try {
      c.validate();
    } catch (const smile::ArgumentError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  smile::SyntheticSpec spec;
  std::string views = "20,20";
  double eta = 0.0, zeta = 0.0, rho = -1.0;
  std::uint64_t corrupt_seed = 0;
  CLI::Option* corrupt_seed_opt = nullptr;
  CLI::Option* rho_opt = nullptr;
  std::string out;
  bool force = false;
};

int run_generate(const GenerateArgs& a) {
  if (skip_existing(a.out, a.force)) return kExitOk;
  smile::SyntheticSpec spec = a.spec;
  spec.d_views = parse_dims(a.views);
  smile::CorruptionSpec corruption;
  corruption.eta = a.eta;
  corruption.zeta = a.zeta;
  if (a.rho_opt->count() > 0) corruption.rho = a.rho;
  corruption.seed = a.corrupt_seed_opt->count() > 0 ? a.corrupt_seed : smile::mix_seed(spec.seed, 1);
  smile::MultiViewDataset ds;
  try {
    ds = smile::corrupt(smile::make_synthetic(spec), corruption);
  } catch (const smile::ArgumentError& e) {
    throw UsageError(e.what());
  }
  smile::save_dataset(ds, a.out);
  const smile::Rates r = smile::rates(ds);
  log(Level::info, "wrote " + std::to_string(ds.size()) + " instances to " + a.out + " (eta=" + std::to_string(r.eta) +
                       ", zeta=" + std::to_string(r.zeta) + ")");
  return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  TrainFlags flags;
  std::string data, out, resume;
  bool force = false;
};

smile::MetricsReport final_report(const smile::Model& model, const smile::MultiViewDataset& ds,
                                  const smile::TrainConfig& config) {
  smile::MetricsReport report = smile::evaluate(model, ds, smile::eval_options(config)).report;
  report.config_hash = config.hash();
  return report;
}

int run_train(const TrainArgs& a) {
  const smile::TrainConfig config = a.flags.resolve();
  const smile::MultiViewDataset ds = smile::load_dataset(a.data, true);
  smile::TrainOptions options;
  // Resuming continues an existing run directory instead of skipping it.
  if (!a.resume.empty()) {
    options.resume = smile::load_checkpoint(a.resume, config.network_spec(ds.view_dims()));
  } else if (skip_existing(a.out, a.force)) {
    return kExitOk;
  }
  fs::create_directories(a.out);
  write_file(fs::path(a.out) / "config.json", ordered_json::parse(config.to_json()).dump(2));
  options.run_dir = fs::path(a.out);
  options.on_epoch = [&](const smile::EpochRecord& r) {
    const Level level = (r.epoch % 10 == 0 || r.epoch == config.max_epochs) ? Level::info : Level::debug;
    std::ostringstream msg;
    msg << "epoch " << r.epoch << " total=" << r.loss.total << " dar=" << r.loss.dar << " sil_s=" << r.loss.sil_s
        << " sil_v=" << r.loss.sil_v << " ccl=" << r.loss.ccl;
    if (r.metrics && r.metrics->acc) msg << " acc=" << *r.metrics->acc;
    log(level, msg.str());
  };
  const smile::TrainResult result = smile::train(ds, config, options);
  const smile::MetricsReport report = final_report(result.model, ds, config);
  write_file(fs::path(a.out) / "metrics.json", report.to_json());
  std::cout << report.to_json() << '\n';
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  TrainFlags flags;
  std::string data, checkpoint, out;
  std::size_t seeds = 0;
  std::size_t restarts = 10;
  CLI::Option* restarts_opt = nullptr;
  bool force = false;
};

ordered_json seed_summary(const std::vector<smile::MetricsReport>& reports) {
  ordered_json summary;
  summary["seeds"] = reports.size();
  const std::vector<std::pair<std::string, std::optional<double> smile::MetricsReport::*>> fields{
      {"acc", &smile::MetricsReport::acc}, {"nmi", &smile::MetricsReport::nmi}, {"ari", &smile::MetricsReport::ari},
      {"car", &smile::MetricsReport::car}, {"nrmse", &smile::MetricsReport::nrmse}};
  for (const auto& [name, field] : fields) {
    std::vector<double> values;
    for (const auto& r : reports) {
      if (r.*field) values.push_back(*(r.*field));
    }
    if (values.size() != reports.size() || values.empty()) continue;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double std_dev = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    summary[name] = {{"mean", mean}, {"std", std_dev}, {"values", values}};
  }
  summary["eta"] = reports.front().eta;
  summary["zeta"] = reports.front().zeta;
  summary["config_hash"] = reports.front().config_hash;
  return summary;
}

int run_eval(const EvalArgs& a) {
  if (a.seeds == 0 && a.checkpoint.empty()) throw UsageError("eval: pass --checkpoint, or --seeds N to train and score N runs");
  if (a.seeds > 0 && !a.checkpoint.empty()) throw UsageError("eval: --checkpoint and --seeds are exclusive");
  if (a.seeds > 0 && a.out.empty()) throw UsageError("eval --seeds needs --out for the per-seed run directories");
  smile::TrainConfig config = a.flags.resolve();
  if (a.restarts_opt->count() > 0) config.final_restarts = a.restarts;
  if (!a.out.empty() && skip_existing(a.out, a.force)) return kExitOk;
  const smile::MultiViewDataset ds = smile::load_dataset(a.data, true);

  if (a.seeds == 0) {
    const smile::Checkpoint ckpt = smile::load_checkpoint(a.checkpoint);
    const fs::path config_file = fs::path(a.checkpoint).parent_path() / "config.json";
    if (a.flags.config_path.empty() && fs::exists(config_file)) {
      const smile::TrainConfig saved = smile::TrainConfig::from_json(read_file(config_file));
      config.K = a.flags.options[10]->count() ? config.K : saved.K;
      config.k_impute = a.flags.options[9]->count() ? config.k_impute : saved.k_impute;
      config.seed = a.flags.options[11]->count() ? config.seed : saved.seed;
      config.final_restarts = a.restarts_opt->count() ? config.final_restarts : saved.final_restarts;
    }
    const smile::MetricsReport report = final_report(ckpt.model, ds, config);
    if (a.out.empty()) {
      std::cout << report.to_json() << '\n';
    } else {
      write_file(a.out, report.to_json());
      log(Level::info, "wrote " + a.out);
    }
    return kExitOk;
  }

  std::vector<smile::MetricsReport> reports;
  for (std::size_t s = 0; s < a.seeds; ++s) {
    smile::TrainConfig run = config;
    run.seed = config.seed + s;
    const fs::path dir = fs::path(a.out) / ("seed_" + std::to_string(run.seed));
    fs::create_directories(dir);
    write_file(dir / "config.json", ordered_json::parse(run.to_json()).dump(2));
    smile::TrainOptions options;
    options.run_dir = dir;
    log(Level::info, "training seed " + std::to_string(run.seed));
    const smile::TrainResult result = smile::train(ds, run, options);
    smile::MetricsReport report = final_report(result.model, ds, run);
    report.config_hash = config.hash();
    write_file(dir / "metrics.json", report.to_json());
    reports.push_back(report);
  }
  const std::string summary = seed_summary(reports).dump(2);
  write_file(fs::path(a.out) / "summary.json", summary);
  std::cout << summary << '\n';
  return kExitOk;
}

// --- verify -----------------------------------------------------------------

struct VerifyArgs {
  std::string scenario, labels;
  std::size_t n = 2000, k = 4, views = 2, seeds = 1;
  std::uint64_t seed = 0;
  double drop_rate = 0.5;
};

int run_verify(const VerifyArgs& a) {
  smile::Scenario scenario;
  try {
    scenario = smile::parse_scenario(a.scenario);
  } catch (const smile::ArgumentError& e) {
    throw UsageError(e.what());
  }
  std::vector<int> labels;
  if (!a.labels.empty()) {
    std::istringstream in(read_file(a.labels));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) labels.push_back(std::stoi(line));
    }
  } else {
    if (a.k < 2 || a.n < a.k) throw UsageError("verify: need n >= k >= 2");
    for (std::size_t i = 0; i < a.n; ++i) labels.push_back(static_cast<int>(i % a.k));
  }
  double worst = 0.0;
  for (std::size_t s = 0; s < a.seeds; ++s) {
    const double mi = smile::verify_semantic_invariance(labels, a.views, scenario, a.seed + s, a.drop_rate);
    log(Level::debug, "seed " + std::to_string(a.seed + s) + ": " + std::to_string(mi));
    worst = std::max(worst, mi);
  }
  ordered_json j;
  j["scenario"] = std::string(smile::scenario_name(scenario));
  j["seeds"] = a.seeds;
  j["mi"] = worst;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

// --- sweep ------------------------------------------------------------------

struct SweepArgs {
  TrainFlags flags;
  std::string data, lambdas = "0,0.01,0.04,0.16", out;
  bool force = false;
};

int run_sweep(const SweepArgs& a) {
  const smile::TrainConfig base = a.flags.resolve();
  const std::vector<double> lambdas = parse_doubles("--lambdas", a.lambdas);
  if (lambdas.size() < 3) throw UsageError("--lambdas: need at least 3 values");
  if (skip_existing(a.out, a.force)) return kExitOk;
  const smile::MultiViewDataset ds = smile::load_dataset(a.data, true);
  std::vector<smile::TrainConfig> configs;
  for (double l : lambdas) {
    smile::TrainConfig c = base;
    c.lambda_sil = l;
    configs.push_back(c);
  }
  const smile::SweepResult result = smile::invariance_sweep(ds, configs);
  write_file(a.out, result.to_csv());
  std::cout << result.summary_json() << '\n';
  return kExitOk;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  std::size_t seeds = 10;
  std::uint64_t seed = 0;
  smile::GradCheckOptions options;
  double threshold = 1e-5;
};

int run_gradcheck(const GradcheckArgs& a) {
  double worst = 0.0;
  std::printf("%-6s %-6s %8s %14s  %s\n", "seed", "term", "params", "max_rel_err", "worst_tensor");
  for (std::size_t s = 0; s < a.seeds; ++s) {
    for (const auto& e : smile::gradcheck(a.seed + s, a.options)) {
      std::printf("%-6llu %-6s %8zu %14.3e  %s\n", static_cast<unsigned long long>(e.seed), e.component.c_str(), e.params,
                  e.max_rel_error, e.worst_tensor.c_str());
      worst = std::max(worst, e.max_rel_error);
    }
  }
  const bool ok = worst < a.threshold;
  std::printf("max relative error %.3e (threshold %.0e): %s\n", worst, a.threshold, ok ? "ok" : "FAILED");
  return ok ? kExitOk : kExitRuntime;
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
  std::string run, out;
  bool force = false;
};

int run_report(const ReportArgs& a) {
  const fs::path history = fs::path(a.run) / "history.jsonl";
  if (!fs::exists(history)) throw UsageError(history.string() + " does not exist");
  if (!a.out.empty() && skip_existing(a.out, a.force)) return kExitOk;
  std::istringstream in(read_file(history));
  std::string line, csv = "epoch,total,dar,sil_s,sil_v,ccl,inertia,acc,nmi,ari,car,nrmse\n";
  std::size_t line_no = 0;
  auto cell = [](const ordered_json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::string();
    std::ostringstream ss;
    ss.precision(17);
    ss << j.at(key).get<double>();
    return ss.str();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json r;
    try {
      r = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      throw smile::ParseError(history.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const ordered_json metrics = r.contains("metrics") ? r.at("metrics") : ordered_json::object();
    csv += std::to_string(r.at("epoch").get<std::size_t>());
    for (const char* key : {"total", "dar", "sil_s", "sil_v", "ccl", "inertia"}) csv += ',' + cell(r, key);
    for (const char* key : {"acc", "nmi", "ari", "car", "nrmse"}) csv += ',' + cell(metrics, key);
    csv += '\n';
  }
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_file(a.out, csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SMILE incomplete multi-view clustering"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Create a synthetic dataset, optionally corrupted");
  generate->add_option("--n", gen.spec.n, "Instances")->capture_default_str();
  generate->add_option("--k", gen.spec.k, "Categories")->capture_default_str();
  generate->add_option("--latent", gen.spec.d_latent, "Latent dimension")->capture_default_str();
  generate->add_option("--views", gen.views, "Comma-separated view dimensions")->capture_default_str();
  generate->add_option("--noise", gen.spec.noise, "Additive noise std")->capture_default_str();
  generate->add_option("--separation", gen.spec.separation, "Per-coordinate std of cluster centers")->capture_default_str();
  generate->add_option("--spread", gen.spec.spread, "Per-coordinate std around a center")->capture_default_str();
  generate->add_option("--imbalance", gen.spec.imbalance, "Largest / smallest category size")->capture_default_str();
  generate->add_option("--map-correlation", gen.spec.map_correlation, "Correlation of the per-view maps")->capture_default_str();
  generate->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();
  generate->add_option("--eta", gen.eta, "Missing rate")->capture_default_str();
  generate->add_option("--zeta", gen.zeta, "Unaligned rate")->capture_default_str();
  gen.rho_opt = generate->add_option("--rho", gen.rho, "Unpaired rate; sets eta = zeta = rho / 2");
  gen.rho_opt->excludes(generate->get_option("--eta"))->excludes(generate->get_option("--zeta"));
  gen.corrupt_seed_opt = generate->add_option("--corrupt-seed", gen.corrupt_seed, "Corruption seed");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_flag("--force", gen.force, "Overwrite --out");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train on a dataset directory");
  train->add_option("--data", tr.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", tr.out, "Run directory")->required();
  train->add_option("--resume", tr.resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  train->add_flag("--force", tr.force, "Overwrite --out");
  tr.flags.attach(train);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint, or train and score several seeds");
  eval->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
  eval->add_option("--seeds", ev.seeds, "Train and score this many consecutive seeds");
  ev.restarts_opt = eval->add_option("--restarts", ev.restarts, "k-means restarts for the final clustering");
  eval->add_option("--out", ev.out, "Metrics file (checkpoint mode) or run directory (--seeds)");
  eval->add_flag("--force", ev.force, "Overwrite --out");
  ev.flags.attach(eval);

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Plug-in I(T;V) under a missingness scenario");
  verify->add_option("--scenario", ver.scenario, "complete, permuted, stratified or category-dependent")->required();
  verify->add_option("--labels", ver.labels, "labels.csv to use instead of balanced labels")->check(CLI::ExistingFile);
  verify->add_option("--n", ver.n, "Instances when no labels file is given")->capture_default_str();
  verify->add_option("--k", ver.k, "Categories when no labels file is given")->capture_default_str();
  verify->add_option("--views", ver.views, "Views")->capture_default_str();
  verify->add_option("--seed", ver.seed, "First seed")->capture_default_str();
  verify->add_option("--seeds", ver.seeds, "Seeds; the maximum value is reported")->capture_default_str();
  verify->add_option("--drop-rate", ver.drop_rate, "Missing rate for the stratified scenario")->capture_default_str();

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Train across lambda_sil values and rank-correlate with I(C;X|V)");
  sweep->add_option("--data", sw.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  sweep->add_option("--lambdas", sw.lambdas, "Comma-separated lambda_sil values")->capture_default_str();
  sweep->add_option("--out", sw.out, "CSV file")->required();
  sweep->add_flag("--force", sw.force, "Overwrite --out");
  sw.flags.attach(sweep);

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Reverse-mode vs. central differences on random batches");
  gradcheck->add_option("--seeds", gc.seeds, "Seeds")->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "First seed")->capture_default_str();
  gradcheck->add_option("--batch", gc.options.batch, "Instances per batch")->capture_default_str();
  gradcheck->add_option("--step", gc.options.h, "Finite difference step")->capture_default_str();
  gradcheck->add_option("--threshold", gc.threshold, "Failing relative error")->capture_default_str();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Per-epoch CSV from a run directory");
  report->add_option("--run", rep.run, "Run directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", rep.out, "CSV file (default: stdout)");
  report->add_flag("--force", rep.force, "Overwrite --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    g_level = level_from_env();
    if (*generate) return run_generate(gen);
    if (*train) return run_train(tr);
    if (*eval) return run_eval(ev);
    if (*verify) return run_verify(ver);
    if (*sweep) return run_sweep(sw);
    if (*gradcheck) return run_gradcheck(gc);
    if (*report) return run_report(rep);
  } catch (const UsageError& e) {
    log(Level::error, e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log(Level::error, e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
