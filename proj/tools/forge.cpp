// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

// forge: dataset generation, two-stage training, cascade inference and evaluation.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric divergence.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "swe/config.hpp"
#include "swe/dataset.hpp"
#include "swe/error.hpp"
#include "swe/nn/convert.hpp"
#include "swe/pipeline/cascade.hpp"
#include "swe/pipeline/report.hpp"
#include "swe/pipeline/train.hpp"
#include "swe/tensor_file.hpp"

namespace {

using namespace swe;
using namespace swe::pipeline;

const std::vector<std::string> kGenKeys{"preset", "n", "snr", "seed", "val_fraction", "test_fraction", "out"};
const std::vector<std::string> kInferKeys{"recon_ckpt", "denoiser_ckpt", "dataset", "sample", "out",
                                          "stride_a",   "stride_l",      "tukey_alpha"};
const std::vector<std::string> kEvalKeys{"recon_ckpt", "denoiser_ckpt", "dataset", "split", "out",
                                         "stride_a",   "stride_l",      "tukey_alpha"};
const std::vector<std::string> kReportKeys{"run"};

// Flags share the config key names; only flags actually given override the file.
struct Verb {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void bind(const std::vector<std::string>& keys) {
    for (const auto& k : keys) {
      if (options.count(k)) continue;
      options[k] = app->add_option("--" + k, values[k]);
    }
  }

  KeyValueConfig merged(const std::string& config_path) const {
    auto kv = config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_path);
    std::set<std::string> known;
    for (const auto* list : {&kGenKeys, &kInferKeys, &kEvalKeys, &kReportKeys}) known.insert(list->begin(), list->end());
    known.insert(TrainConfig::keys().begin(), TrainConfig::keys().end());
    for (const auto& [k, v] : kv.entries())
      if (!known.count(k)) throw ConfigError("unknown config key '" + k + "' in " + config_path);
    for (const auto& [k, opt] : options)
      if (opt->count()) kv.set(k, values.at(k));
    return kv;
  }
};

std::filesystem::path required_path(const KeyValueConfig& kv, const std::string& key) {
  const auto v = kv.get_string(key, "");
  if (v.empty()) throw ConfigError("missing required setting '" + key + "'");
  return v;
}

InferenceSettings inference_settings(const KeyValueConfig& kv) {
  InferenceSettings s;
  const auto sa = kv.get_int("stride_a", 0), sl = kv.get_int("stride_l", 0);
  if (sa < 0 || sl < 0) throw ConfigError("strides must be non-negative");
  s.stride_a = static_cast<std::size_t>(sa);
  s.stride_l = static_cast<std::size_t>(sl);
  s.tukey_alpha = kv.get_double("tukey_alpha", 0.5);
  s.device = device_from_env();
  return s;
}

void write_map(const std::filesystem::path& path, const Map2& m) {
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  write_tensor(path, dims, m.values());
}

int run_gen(const KeyValueConfig& kv) {
  GenerateOptions g;
  g.preset = kv.get_string("preset", g.preset);
  const auto n = kv.get_int("n", static_cast<long long>(g.n));
  if (n < 1) throw ConfigError("n must be at least 1");
  g.n = static_cast<std::size_t>(n);
  g.snr_db = kv.get_double("snr", std::numeric_limits<double>::infinity());
  const auto seed = kv.get_int("seed", 0);
  if (seed < 0) throw ConfigError("seed must be non-negative");
  g.seed = static_cast<std::uint64_t>(seed);
  g.val_fraction = kv.get_double("val_fraction", 0.0);
  g.test_fraction = kv.get_double("test_fraction", 0.0);
  const auto out = required_path(kv, "out");
  const auto ds = generate_dataset(g);
  write_dataset(ds, out);
  std::printf("wrote %zu samples (train %zu, val %zu, test %zu) to %s\n", ds.samples.size(),
              ds.indices(Split::kTrain).size(), ds.indices(Split::kVal).size(), ds.indices(Split::kTest).size(),
              out.c_str());
  return 0;
}

int run_train_recon(const KeyValueConfig& kv) {
  auto cfg = TrainConfig::from_config(kv, Stage::kRecon);
  if (cfg.out.empty()) throw ConfigError("missing required setting 'out'");
  const auto r = train_recon(cfg);
  std::printf("recon: best epoch %d, monitor loss %.6g, %zu steps, %.1f s\n", r.report.best_epoch,
              r.report.best_loss, r.report.step_losses.size(), r.report.wall_seconds);
  for (const auto& [split, m] : r.report.extra["metrics"].items())
    std::printf("  %-5s Y' MAE FG %.3f kPa, BG %.3f kPa\n", split.c_str(), m["MAE_FG"].get<double>(),
                m["MAE_BG"].get<double>());
  std::printf("checkpoint %s\n", r.checkpoint.c_str());
  return 0;
}

int run_train_denoiser(const KeyValueConfig& kv) {
  auto cfg = TrainConfig::from_config(kv, Stage::kDenoiser);
  if (cfg.out.empty()) throw ConfigError("missing required setting 'out'");
  const auto r = train_denoiser(cfg);
  std::printf("denoiser: best epoch %d, monitor loss %.6g, %zu steps, %.1f s\n", r.report.best_epoch,
              r.report.best_loss, r.report.step_losses.size(), r.report.wall_seconds);
  std::printf("  alpha1 %.4f alpha2 %.4f beta1 %.4f beta2 %.4g gamma %.4g mu %.4g\n", r.weights.alpha1,
              r.weights.alpha2, r.weights.beta1, r.weights.beta2, r.weights.gamma, r.weights.mu);
  std::vector<MetricRow> rows;
  for (const auto& e : r.train_evaluation) rows.push_back(e.y);
  const auto s = summarize(rows);
  for (const char* k : {"IoU", "SSIM", "MAE_FG", "MAE_BG"})
    if (s.count(k)) std::printf("  train %-6s mean %.4f\n", k, s.at(k).mean);
  std::printf("checkpoint %s\n", r.checkpoint.c_str());
  return 0;
}

int run_infer(const KeyValueConfig& kv) {
  const auto ds = read_dataset(required_path(kv, "dataset"));
  const auto out = required_path(kv, "out");
  const auto idx = kv.get_int("sample", 0);
  if (idx < 0 || static_cast<std::size_t>(idx) >= ds.samples.size())
    throw ConfigError("sample index out of range (dataset has " + std::to_string(ds.samples.size()) + ")");
  const auto s = inference_settings(kv);
  auto models = load_models(kv.get_string("recon_ckpt", ""), kv.get_string("denoiser_ckpt", ""));
  const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
  const auto r = run_cascade(models, sample, ds.layout, s);
  std::filesystem::create_directories(out);
  write_map(out / "y_prime.swed", r.y_prime_kpa);
  write_map(out / "y.swed", r.y_kpa);
  write_map(out / "m.swed", r.m);
  const auto truth = make_phantom(sample.spec);
  write_panel_pgm(out / "panel.pgm", {truth.modulus_kpa, r.y_prime_kpa, r.y_kpa, r.m}, true);
  const auto e = evaluate_maps(static_cast<std::size_t>(idx), r.y_prime_kpa, r.y_kpa, r.mask, truth);
  EvaluationReport rep;
  rep.split = to_string(sample.split);
  rep.untrained = r.untrained;
  rep.samples.push_back(e);
  rep.plots.push_back(out / "panel.pgm");
  std::ofstream(out / "metrics.json") << rep.to_json().dump(2) << "\n";
  std::cout << format_report(rep.to_json());
  if (r.untrained) std::fprintf(stderr, "warning: at least one network is untrained; outputs are placeholders\n");
  return 0;
}

int run_eval(const KeyValueConfig& kv) {
  const auto ds = read_dataset(required_path(kv, "dataset"));
  const auto out = required_path(kv, "out");
  const auto split = split_from_string(kv.get_string("split", "test"));
  const auto s = inference_settings(kv);
  auto models = load_models(required_path(kv, "recon_ckpt"), required_path(kv, "denoiser_ckpt"));
  const auto rep = evaluate(models, ds, split, s, out / "plots");
  std::filesystem::create_directories(out);
  const auto j = rep.to_json();
  std::ofstream(out / "report.json") << j.dump(2) << "\n";
  const auto table = format_report(j);
  std::ofstream(out / "report.txt") << table;
  std::cout << table;
  return 0;
}

void print_training(const nlohmann::json& j) {
  std::printf("%s run, fingerprint '%s'\n", j.value("stage", "?").c_str(), j.value("fingerprint", "?").c_str());
  std::printf("best epoch %d (monitor %s loss %.6g), wall %.1f s\n", j.value("best_epoch", 0),
              j.value("monitor", "?").c_str(), j.value("best_loss", 0.0), j.value("wall_seconds", 0.0));
  std::printf("%6s %8s %10s %12s %12s\n", "epoch", "steps", "lr", "train", "monitor");
  for (const auto& e : j["epochs"])
    std::printf("%6d %8lld %10.3g %12.6g %12.6g%s\n", e["epoch"].get<int>(), e["steps"].get<long long>(),
                e["lr"].get<double>(), e["train_loss"].get<double>(), e["monitor_loss"].get<double>(),
                e["checkpointed"].get<bool>() ? " *" : "");
  if (j["extra"].contains("evaluation"))
    for (const auto& [split, rep] : j["extra"]["evaluation"].items()) std::cout << "\n" << format_report(rep);
}

int run_report(const KeyValueConfig& kv) {
  const auto run = required_path(kv, "run");
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(run)) {
    for (const char* f : {"recon_report.json", "denoiser_report.json", "report.json", "metrics.json"})
      if (std::filesystem::exists(run / f)) files.push_back(run / f);
  } else {
    files.push_back(run);
  }
  if (files.empty()) throw ConfigError("no report files in " + run.string());
  for (const auto& f : files) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file_bytes(f));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(f.string() + " is not valid JSON: " + e.what());
    }
    std::printf("== %s\n", f.c_str());
    if (j.contains("epochs")) {
      print_training(j);
    } else {
      std::cout << format_report(j);
    }
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: shear-wave elastography reconstruction cascade"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value settings file; flags of the same name override it");

  std::map<std::string, Verb> verbs;
  auto add = [&](const std::string& name, const std::string& help, const std::vector<std::string>& keys) {
    auto& v = verbs[name];
    v.app = app.add_subcommand(name, help);
    v.bind(keys);
  };
  add("gen", "generate a synthetic phantom dataset", kGenKeys);
  add("train-recon", "train the reconstruction network", TrainConfig::keys());
  add("train-denoiser", "train the denoiser on cached or computed Y'", TrainConfig::keys());
  add("infer", "run the cascade on one dataset sample", kInferKeys);
  add("eval", "evaluate a split and write tables and plots", kEvalKeys);
  add("report", "print a saved report", kReportKeys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  torch::set_num_threads(1);
  try {
    for (auto& [name, v] : verbs) {
      if (!v.app->parsed()) continue;
      const auto kv = v.merged(config_path);
      if (name == "gen") return run_gen(kv);
      if (name == "train-recon") return run_train_recon(kv);
      if (name == "train-denoiser") return run_train_denoiser(kv);
      if (name == "infer") return run_infer(kv);
      if (name == "eval") return run_eval(kv);
      if (name == "report") return run_report(kv);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
