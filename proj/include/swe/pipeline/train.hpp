// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "swe/config.hpp"
#include "swe/dataset.hpp"
#include "swe/nn/denoise.hpp"
#include "swe/nn/losses.hpp"
#include "swe/nn/recon.hpp"
#include "swe/pipeline/report.hpp"

namespace swe::pipeline {

enum class Stage { kRecon, kDenoiser };

struct TrainConfig {
  Stage stage = Stage::kRecon;
  nn::ReconMode mode = nn::ReconMode::kPatch;
  int64_t batch = 0;     ///< 0: 8 for recon, 16 for the denoiser
  int64_t channels = 0;  ///< 0: 16 for recon, 64 for the denoiser
  double lr = 1e-3;
  double plateau_factor = 0.8;
  int plateau_patience = 5;
  int epochs = 150;
  int64_t max_steps = 0;  ///< 0: no cap
  std::uint64_t seed = 0;
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::filesystem::path yprime;      ///< denoiser: cached Y' directory
  std::filesystem::path recon_ckpt;  ///< denoiser: compute Y' with this network instead
  int64_t ap = 63;
  int64_t lp = 10;
  std::size_t stride_a = 0;
  std::size_t stride_l = 0;
  double tukey_alpha = 0.5;
  double kappa = 0.5;
  double beta2 = 50.0;
  double gamma = 10.0;
  double mu = 1.0;
  bool truth_corrupted = false;  ///< denoiser: train on noisy truth instead of Y'
  double corrupt_snr_db = 11.0;
  bool cache_yprime = true;
  bool verbose = false;

  int64_t effective_batch() const;
  int64_t effective_channels() const;
  void validate() const;
  nlohmann::json to_json() const;

  /// Reads the keys named like the fields above; other keys are ignored.
  static TrainConfig from_config(const KeyValueConfig& kv, Stage stage);
  static const std::vector<std::string>& keys();
};

/// Reduce-on-plateau: after an epoch whose metric fails to beat the best by a
/// relative 1e-4, a counter grows; once it exceeds `patience` the rate is
/// multiplied by `factor` and the counter resets.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(double lr, double factor = 0.8, int patience = 5, double threshold = 1e-4);
  double step(double metric);
  double lr() const { return lr_; }
  int bad_epochs() const { return bad_; }
  double best() const { return best_; }

 private:
  double lr_, factor_, threshold_, best_;
  int patience_, bad_ = 0;
};

/// Epoch order over several sources, each contributing `quota` items per epoch
/// (0: all of them). Items are (source, index) pairs, shuffled together.
class EpochSampler {
 public:
  struct Source {
    std::size_t size = 0;
    std::size_t quota = 0;
  };
  explicit EpochSampler(std::vector<Source> sources);
  std::vector<std::pair<std::size_t, std::size_t>> order(std::uint64_t seed, int epoch) const;

 private:
  std::vector<Source> sources_;
};

struct EpochRecord {
  int epoch = 0;
  int64_t steps = 0;  ///< cumulative
  double lr = 0.0;
  double train_loss = 0.0;
  double monitor_loss = 0.0;
  std::map<std::string, double> terms;
  bool checkpointed = false;
};

struct RunReport {
  std::string stage;
  std::string fingerprint;
  std::string monitor;  ///< "val" or "train"
  nlohmann::json config;
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  double wall_seconds = 0.0;
  int best_epoch = 0;
  double best_loss = 0.0;
  std::map<std::string, std::string> artifacts;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;
};

struct ReconTrainResult {
  nn::ReconNet model{nullptr};  ///< holds the best checkpointed weights
  RunReport report;
  std::filesystem::path checkpoint;
  std::vector<Map2> y_prime;  ///< per sample, kPa / 100, from the best weights
};

/// Writes recon.swec, recon_report.json and (when enabled) the Y' cache to cfg.out.
ReconTrainResult train_recon(const TrainConfig& cfg, const Dataset& ds);
ReconTrainResult train_recon(const TrainConfig& cfg);

struct DenoiserTrainResult {
  nn::DenoiserNet model{nullptr};
  RunReport report;
  std::filesystem::path checkpoint;
  nn::loss::LossWeights weights;
  std::vector<SampleEvaluation> train_evaluation;
};

/// y_prime: per-sample maps in kPa / 100, indexed like ds.samples.
DenoiserTrainResult train_denoiser(const TrainConfig& cfg, const Dataset& ds, const std::vector<Map2>& y_prime);
/// Loads the dataset and the Y' source named by cfg (cache or recon checkpoint).
DenoiserTrainResult train_denoiser(const TrainConfig& cfg);

}  // namespace swe::pipeline
