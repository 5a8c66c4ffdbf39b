// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/pipeline/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

#include "swe/error.hpp"
#include "swe/metrics.hpp"
#include "swe/nn/checkpoint.hpp"
#include "swe/nn/convert.hpp"
#include "swe/patchwork.hpp"
#include "swe/pipeline/cascade.hpp"

namespace swe::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void set_lr(torch::optim::Adam& opt, double lr) {
  for (auto& g : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(g.options()).lr(lr);
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

[[noreturn]] void diverged(const TrainConfig& cfg, torch::nn::Module& model, const std::string& stage, int epoch,
                           int64_t step, double lr, const std::vector<double>& losses) {
  std::filesystem::path snap;
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    snap = cfg.out / (stage + "_divergence.json");
    nlohmann::json j{{"stage", stage}, {"epoch", epoch}, {"step", step}, {"lr", lr}};
    const std::size_t keep = std::min<std::size_t>(losses.size(), 20);
    j["recent_losses"] = std::vector<double>(losses.end() - static_cast<std::ptrdiff_t>(keep), losses.end());
    std::ofstream(snap) << j.dump(2) << "\n";
    nn::save_checkpoint(model, stage + "-diverged", cfg.out / (stage + "_diverged.swec"));
  }
  throw NumericError(stage + " training diverged (non-finite loss) at epoch " + std::to_string(epoch) + ", step " +
                     std::to_string(step) + (snap.empty() ? std::string() : "; snapshot in " + snap.string()));
}

void log_epoch(const TrainConfig& cfg, const std::string& stage, const EpochRecord& e) {
  if (!cfg.verbose) return;
  std::fprintf(stderr, "[%s] epoch %d steps %lld lr %.3g train %.6g monitor %.6g%s\n", stage.c_str(), e.epoch,
               static_cast<long long>(e.steps), e.lr, e.train_loss, e.monitor_loss, e.checkpointed ? " *" : "");
}

Map2 scaled(const Map2& m, double k) {
  Map2 out = m;
  for (auto& v : out.values()) v = static_cast<float>(v * k);
  return out;
}

// ---- reconstruction stage ----

struct ReconData {
  std::vector<torch::Tensor> volumes;  // (T, A, L), padded for patch grids
  struct Item {
    std::size_t volume;
    int64_t a, l;
  };
  std::vector<Item> items;
  torch::Tensor targets;  // (N, 1, out_a, out_l)

  std::size_t size() const { return items.size(); }
};

ReconData build_recon_data(const nn::ReconConfig& rc, const Dataset& ds, const std::vector<std::size_t>& which,
                           const InferenceSettings& s) {
  ReconData d;
  std::vector<torch::Tensor> targets;
  const auto& layout = ds.layout;
  const PatchGrid grid = rc.mode == nn::ReconMode::kPatch ? recon_patch_grid(rc, layout, s) : PatchGrid{};
  for (std::size_t i : which) {
    const auto& sample = ds.samples[i];
    const auto truth = nn::to_tensor(make_phantom(sample.spec).modulus_kpa) / kReferenceKpa;
    for (std::size_t k = 0; k < sample.regions.size(); ++k) {
      const auto norm = min_max_normalize(sample.regions[k]);
      const auto off = static_cast<int64_t>(layout.lateral_offsets_px[k]);
      if (rc.mode == nn::ReconMode::kFull) {
        d.volumes.push_back(nn::to_tensor(norm.data));
        d.items.push_back({d.volumes.size() - 1, 0, 0});
        targets.push_back(truth.narrow(1, off, rc.l).unsqueeze(0));
        continue;
      }
      d.volumes.push_back(nn::to_tensor(pad_for_grid(norm.data, grid)));
      for (const auto& an : grid.anchors) {
        const auto fo = grid.footprint_origin(an);
        d.items.push_back({d.volumes.size() - 1, static_cast<int64_t>(an.a), static_cast<int64_t>(an.l)});
        targets.push_back(truth.narrow(0, static_cast<int64_t>(fo.a), rc.out_a())
                              .narrow(1, off + static_cast<int64_t>(fo.l), rc.out_l())
                              .unsqueeze(0));
      }
    }
  }
  if (!targets.empty()) d.targets = torch::stack(targets);
  return d;
}

std::pair<torch::Tensor, torch::Tensor> recon_batch(const ReconData& d, const nn::ReconConfig& rc,
                                                    const std::vector<std::size_t>& order, std::size_t start,
                                                    std::size_t end) {
  std::vector<torch::Tensor> xs;
  std::vector<int64_t> idx;
  for (std::size_t i = start; i < end; ++i) {
    const auto& it = d.items[order[i]];
    xs.push_back(d.volumes[it.volume].narrow(1, it.a, rc.a).narrow(2, it.l, rc.l));
    idx.push_back(static_cast<int64_t>(order[i]));
  }
  return {torch::stack(xs).unsqueeze(1), d.targets.index_select(0, torch::tensor(idx))};
}

double recon_eval_loss(nn::ReconNet& net, const ReconData& d, const nn::ReconConfig& rc, const torch::Device& dev) {
  torch::NoGradGuard ng;
  net->eval();
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double sum = 0.0;
  for (std::size_t s = 0; s < d.size(); s += 32) {
    const std::size_t e = std::min(d.size(), s + 32);
    auto [x, y] = recon_batch(d, rc, order, s, e);
    sum += nn::loss::recon_mae(net->forward(x.to(dev)), y.to(dev)).item<double>() * static_cast<double>(e - s);
  }
  return sum / static_cast<double>(d.size());
}

}  // namespace

int64_t TrainConfig::effective_batch() const {
  if (batch > 0) return batch;
  return stage == Stage::kRecon ? 8 : 16;
}

int64_t TrainConfig::effective_channels() const {
  if (channels > 0) return channels;
  return stage == Stage::kRecon ? 16 : 64;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ConfigError("plateau_factor must lie in (0, 1)");
  if (plateau_patience < 0) throw ConfigError("plateau_patience must be non-negative");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (max_steps < 0 || batch < 0 || channels < 0) throw ConfigError("max_steps, batch and channels must be non-negative");
  if (tukey_alpha < 0.0 || tukey_alpha > 1.0) throw ConfigError("tukey_alpha must lie in [0, 1]");
}

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> k{
      "mode",    "batch",     "channels",  "lr",          "plateau_factor", "plateau_patience", "epochs",
      "max_steps", "seed",    "dataset",   "out",         "yprime",         "recon_ckpt",       "ap",
      "lp",      "stride_a",  "stride_l",  "tukey_alpha", "kappa",          "beta2",            "gamma",
      "mu",      "truth_corrupted", "corrupt_snr_db", "cache_yprime", "verbose"};
  return k;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv, Stage stage) {
  TrainConfig c;
  c.stage = stage;
  c.mode = nn::recon_mode_from_string(kv.get_string("mode", "patch"));
  c.batch = kv.get_int("batch", 0);
  c.channels = kv.get_int("channels", 0);
  c.lr = kv.get_double("lr", c.lr);
  c.plateau_factor = kv.get_double("plateau_factor", c.plateau_factor);
  c.plateau_patience = static_cast<int>(kv.get_int("plateau_patience", c.plateau_patience));
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.max_steps = kv.get_int("max_steps", 0);
  const auto seed = kv.get_int("seed", 0);
  if (seed < 0) throw ConfigError("seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.dataset = kv.get_string("dataset", "");
  c.out = kv.get_string("out", "");
  c.yprime = kv.get_string("yprime", "");
  c.recon_ckpt = kv.get_string("recon_ckpt", "");
  c.ap = kv.get_int("ap", c.ap);
  c.lp = kv.get_int("lp", c.lp);
  const auto sa = kv.get_int("stride_a", 0), sl = kv.get_int("stride_l", 0);
  if (sa < 0 || sl < 0 || c.ap < 1 || c.lp < 1) throw ConfigError("patch sizes and strides must be non-negative");
  c.stride_a = static_cast<std::size_t>(sa);
  c.stride_l = static_cast<std::size_t>(sl);
  c.tukey_alpha = kv.get_double("tukey_alpha", c.tukey_alpha);
  c.kappa = kv.get_double("kappa", c.kappa);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.gamma = kv.get_double("gamma", c.gamma);
  c.mu = kv.get_double("mu", c.mu);
  c.truth_corrupted = kv.get_bool("truth_corrupted", false);
  c.corrupt_snr_db = kv.get_double("corrupt_snr_db", c.corrupt_snr_db);
  c.cache_yprime = kv.get_bool("cache_yprime", true);
  c.verbose = kv.get_bool("verbose", false);
  c.validate();
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"stage", stage == Stage::kRecon ? "recon" : "denoiser"},
          {"mode", nn::to_string(mode)},
          {"batch", effective_batch()},
          {"channels", effective_channels()},
          {"lr", lr},
          {"plateau_factor", plateau_factor},
          {"plateau_patience", plateau_patience},
          {"epochs", epochs},
          {"max_steps", max_steps},
          {"seed", seed},
          {"dataset", dataset.string()},
          {"ap", ap},
          {"lp", lp},
          {"stride_a", stride_a},
          {"stride_l", stride_l},
          {"tukey_alpha", tukey_alpha},
          {"kappa", kappa},
          {"beta2", beta2},
          {"gamma", gamma},
          {"mu", mu},
          {"truth_corrupted", truth_corrupted},
          {"corrupt_snr_db", corrupt_snr_db}};
}

PlateauScheduler::PlateauScheduler(double lr, double factor, int patience, double threshold)
    : lr_(lr), factor_(factor), threshold_(threshold), best_(std::numeric_limits<double>::infinity()),
      patience_(patience) {}

double PlateauScheduler::step(double metric) {
  if (metric < best_ * (1.0 - threshold_)) {
    best_ = metric;
    bad_ = 0;
  } else if (++bad_ > patience_) {
    lr_ *= factor_;
    bad_ = 0;
  }
  return lr_;
}

EpochSampler::EpochSampler(std::vector<Source> sources) : sources_(std::move(sources)) {}

std::vector<std::pair<std::size_t, std::size_t>> EpochSampler::order(std::uint64_t seed, int epoch) const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t s = 0; s < sources_.size(); ++s) {
    const auto& src = sources_[s];
    if (src.size == 0) continue;
    const std::size_t quota = src.quota == 0 ? src.size : src.quota;
    // walk a per-source permutation so quotas rotate through every item across epochs
    const std::size_t cycle = static_cast<std::size_t>(epoch) * quota / src.size;
    const auto perm = shuffled(src.size, mix(mix(seed, s), cycle));
    for (std::size_t q = 0; q < quota; ++q) {
      const std::size_t flat = static_cast<std::size_t>(epoch) * quota + q;
      const std::size_t c = flat / src.size;
      const auto& p = c == cycle ? perm : shuffled(src.size, mix(mix(seed, s), c));
      out.emplace_back(s, p[flat % src.size]);
    }
  }
  const auto mixer = shuffled(out.size(), mix(seed, 0x5eed0000ULL + static_cast<std::uint64_t>(epoch)));
  std::vector<std::pair<std::size_t, std::size_t>> res;
  res.reserve(out.size());
  for (auto i : mixer) res.push_back(out[i]);
  return res;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["stage"] = stage;
  j["fingerprint"] = fingerprint;
  j["monitor"] = monitor;
  j["config"] = config;
  j["wall_seconds"] = wall_seconds;
  j["best_epoch"] = best_epoch;
  j["best_loss"] = best_loss;
  j["step_losses"] = step_losses;
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"steps", e.steps},
                           {"lr", e.lr},
                           {"train_loss", e.train_loss},
                           {"monitor_loss", e.monitor_loss},
                           {"terms", e.terms},
                           {"checkpointed", e.checkpointed}});
  }
  j["artifacts"] = artifacts;
  j["extra"] = extra;
  return j;
}

void RunReport::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

ReconTrainResult train_recon(const TrainConfig& cfg, const Dataset& ds) {
  cfg.validate();
  if (cfg.out.empty()) throw ConfigError("train-recon needs an output directory (out)");
  const auto t0 = Clock::now();
  const auto device = device_from_env();
  nn::ReconConfig rc;
  rc.mode = cfg.mode;
  rc.t = static_cast<int64_t>(ds.layout.frames_t);
  rc.a = cfg.mode == nn::ReconMode::kFull ? static_cast<int64_t>(ds.layout.region_axial_px) : cfg.ap;
  rc.l = cfg.mode == nn::ReconMode::kFull ? static_cast<int64_t>(ds.layout.region_lateral_px) : cfg.lp;
  rc.base_channels = cfg.effective_channels();
  rc.tukey_alpha = cfg.tukey_alpha;
  rc.validate();
  check_layout(rc, ds.layout);
  InferenceSettings inf;
  inf.stride_a = cfg.stride_a;
  inf.stride_l = cfg.stride_l;
  inf.tukey_alpha = cfg.tukey_alpha;
  inf.device = device;

  const auto train_idx = ds.indices(Split::kTrain);
  const auto val_idx = ds.indices(Split::kVal);
  if (train_idx.empty()) throw DataError("the training split is empty");
  const auto train = build_recon_data(rc, ds, train_idx, inf);
  const auto val = build_recon_data(rc, ds, val_idx, inf);

  torch::manual_seed(cfg.seed);
  nn::ReconNet net(rc);
  net->to(device);
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(cfg.lr));
  PlateauScheduler sched(cfg.lr, cfg.plateau_factor, cfg.plateau_patience);

  ReconTrainResult res;
  auto& rep = res.report;
  rep.stage = "recon";
  rep.fingerprint = rc.fingerprint();
  rep.monitor = val.size() ? "val" : "train";
  rep.config = cfg.to_json();
  rep.extra["train_examples"] = train.size();
  rep.extra["val_examples"] = val.size();
  std::filesystem::create_directories(cfg.out);
  res.checkpoint = cfg.out / "recon.swec";

  const auto batch = static_cast<std::size_t>(cfg.effective_batch());
  double best = std::numeric_limits<double>::infinity();
  int64_t steps = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    net->train();
    const auto order = shuffled(train.size(), mix(cfg.seed, static_cast<std::uint64_t>(epoch)));
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < order.size(); s += batch) {
      const std::size_t e = std::min(order.size(), s + batch);
      auto [x, y] = recon_batch(train, rc, order, s, e);
      opt.zero_grad();
      auto loss = nn::loss::recon_mae(net->forward(x.to(device)), y.to(device));
      const double lv = loss.item<double>();
      rep.step_losses.push_back(lv);
      if (!std::isfinite(lv)) diverged(cfg, *net, "recon", epoch, steps, sched.lr(), rep.step_losses);
      loss.backward();
      opt.step();
      ++steps;
      sum += lv * static_cast<double>(e - s);
      seen += e - s;
      if (cfg.max_steps && steps >= cfg.max_steps) break;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = steps;
    rec.lr = sched.lr();
    rec.train_loss = sum / static_cast<double>(seen);
    rec.monitor_loss = recon_eval_loss(net, val.size() ? val : train, rc, device);
    if (!std::isfinite(rec.monitor_loss)) diverged(cfg, *net, "recon", epoch, steps, sched.lr(), rep.step_losses);
    rec.terms["mae"] = rec.train_loss;
    if (rec.monitor_loss < best) {
      best = rec.monitor_loss;
      rep.best_epoch = epoch;
      rep.best_loss = best;
      nn::save_checkpoint(*net, rep.fingerprint, res.checkpoint);
      rec.checkpointed = true;
    }
    set_lr(opt, sched.step(rec.monitor_loss));
    log_epoch(cfg, "recon", rec);
    rep.epochs.push_back(rec);
    if (cfg.max_steps && steps >= cfg.max_steps) break;
  }

  nn::load_checkpoint(*net, rep.fingerprint, res.checkpoint);
  res.model = net;
  nlohmann::json per_split = nlohmann::json::object();
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    res.y_prime.push_back(primary_reconstruction(net, ds.samples[i], ds.layout, inf));
    const auto truth = make_phantom(ds.samples[i].spec);
    const auto mae = metrics::region_mae(scaled(res.y_prime.back(), kReferenceKpa), truth.modulus_kpa, truth.mask);
    per_split[to_string(ds.samples[i].split)]["samples"].push_back(
        {{"index", i}, {"MAE_FG", mae.fg}, {"MAE_BG", mae.bg}});
  }
  for (auto& [split, j] : per_split.items()) {
    double fg = 0.0, bg = 0.0;
    for (const auto& s : j["samples"]) {
      fg += s["MAE_FG"].get<double>();
      bg += s["MAE_BG"].get<double>();
    }
    const auto n = static_cast<double>(j["samples"].size());
    j["MAE_FG"] = fg / n;
    j["MAE_BG"] = bg / n;
  }
  rep.extra["metrics"] = per_split;
  rep.artifacts["checkpoint"] = res.checkpoint.string();
  if (cfg.cache_yprime) {
    write_yprime_cache(cfg.out / "yprime", res.y_prime, rep.fingerprint);
    rep.artifacts["yprime"] = (cfg.out / "yprime").string();
  }
  rep.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  rep.artifacts["report"] = (cfg.out / "recon_report.json").string();
  rep.save(cfg.out / "recon_report.json");
  return res;
}

ReconTrainResult train_recon(const TrainConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("train-recon needs a dataset directory (dataset)");
  return train_recon(cfg, read_dataset(cfg.dataset));
}

namespace {

struct DenoiseData {
  std::vector<std::size_t> samples;
  torch::Tensor inputs, targets, masks;  // (N, 1, A, L)

  std::size_t size() const { return samples.size(); }
};

DenoiseData build_denoise_data(const Dataset& ds, const std::vector<std::size_t>& which,
                               const std::vector<Map2>& inputs) {
  DenoiseData d;
  std::vector<torch::Tensor> xs, ys, ms;
  for (std::size_t i : which) {
    const auto truth = make_phantom(ds.samples[i].spec);
    if (!inputs[i].same_shape(truth.modulus_kpa))
      throw DataError(DataError::Kind::kShape, "Y' for sample " + std::to_string(i) + " does not match the ROI shape");
    d.samples.push_back(i);
    xs.push_back(nn::to_tensor(inputs[i]).unsqueeze(0));
    ys.push_back(nn::to_tensor(truth.modulus_kpa).unsqueeze(0) / kReferenceKpa);
    ms.push_back(nn::to_tensor(truth.mask).unsqueeze(0));
  }
  if (!xs.empty()) {
    d.inputs = torch::stack(xs);
    d.targets = torch::stack(ys);
    d.masks = torch::stack(ms);
  }
  return d;
}

std::vector<Map2> corrupted_truth(const Dataset& ds, double snr_db, std::uint64_t seed) {
  std::vector<Map2> out;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    Map2 m = scaled(make_phantom(ds.samples[i].spec).modulus_kpa, 1.0 / kReferenceKpa);
    double rms = 0.0;
    for (float v : m.values()) rms += static_cast<double>(v) * v;
    rms = std::sqrt(rms / static_cast<double>(m.size()));
    if (std::isfinite(snr_db)) {
      std::mt19937_64 rng(mix(seed, 0xc0ffeeULL + i));
      std::normal_distribution<double> n(0.0, rms * std::pow(10.0, -snr_db / 20.0));
      for (auto& v : m.values()) v = static_cast<float>(v + n(rng));
    }
    out.push_back(std::move(m));
  }
  return out;
}

nn::loss::CompoundTerms denoise_eval(nn::DenoiserNet& net, const DenoiseData& d, const nn::loss::LossWeights& w,
                                     const torch::Device& dev) {
  torch::NoGradGuard ng;
  net->eval();
  const auto out = net->forward(d.inputs.to(dev));
  return nn::loss::compound_loss(out, d.targets.to(dev), d.masks.to(dev), w);
}

}  // namespace

DenoiserTrainResult train_denoiser(const TrainConfig& cfg, const Dataset& ds, const std::vector<Map2>& y_prime) {
  cfg.validate();
  if (cfg.out.empty()) throw ConfigError("train-denoiser needs an output directory (out)");
  if (y_prime.size() != ds.samples.size())
    throw DataError(DataError::Kind::kShape, "need one Y' map per dataset sample");
  const auto t0 = Clock::now();
  const auto device = device_from_env();
  const auto train_idx = ds.indices(Split::kTrain);
  const auto val_idx = ds.indices(Split::kVal);
  if (train_idx.empty()) throw DataError("the training split is empty");

  const auto ratio = background_foreground_ratio(ds, train_idx);
  const auto w = nn::loss::LossWeights::from_ratio(ratio, cfg.kappa, cfg.beta2, cfg.gamma, cfg.mu,
                                                   cfg.dataset.empty() ? ds.preset : cfg.dataset.string());
  const auto& inputs = y_prime;
  const auto train = build_denoise_data(ds, train_idx, inputs);
  const auto val = build_denoise_data(ds, val_idx, inputs);

  nn::DenoiserConfig dc;
  dc.base_channels = cfg.effective_channels();
  torch::manual_seed(cfg.seed);
  nn::DenoiserNet net(dc);
  net->to(device);
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(cfg.lr));
  PlateauScheduler sched(cfg.lr, cfg.plateau_factor, cfg.plateau_patience);

  DenoiserTrainResult res;
  res.weights = w;
  auto& rep = res.report;
  rep.stage = "denoiser";
  rep.fingerprint = dc.fingerprint();
  rep.monitor = val.size() ? "val" : "train";
  rep.config = cfg.to_json();
  rep.extra["loss_weights"] = {{"alpha1", w.alpha1}, {"alpha2", w.alpha2}, {"beta1", w.beta1},
                               {"beta2", w.beta2},   {"gamma", w.gamma},   {"mu", w.mu},
                               {"kappa", w.kappa},   {"ratio_source", w.ratio_source}};
  std::filesystem::create_directories(cfg.out);
  res.checkpoint = cfg.out / "denoiser.swec";

  const auto batch = static_cast<std::size_t>(cfg.effective_batch());
  double best = std::numeric_limits<double>::infinity();
  int64_t steps = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    net->train();
    const auto order = shuffled(train.size(), mix(cfg.seed, static_cast<std::uint64_t>(epoch)));
    double sum = 0.0;
    std::size_t seen = 0;
    std::map<std::string, double> terms;
    for (std::size_t s = 0; s < order.size(); s += batch) {
      const std::size_t e = std::min(order.size(), s + batch);
      std::vector<int64_t> pick(order.begin() + static_cast<std::ptrdiff_t>(s), order.begin() + static_cast<std::ptrdiff_t>(e));
      const auto ix = torch::tensor(pick);
      opt.zero_grad();
      const auto out = net->forward(train.inputs.index_select(0, ix).to(device));
      auto t = nn::loss::compound_loss(out, train.targets.index_select(0, ix).to(device),
                                       train.masks.index_select(0, ix).to(device), w);
      const double lv = t.total.item<double>();
      rep.step_losses.push_back(lv);
      if (!std::isfinite(lv)) diverged(cfg, *net, "denoiser", epoch, steps, sched.lr(), rep.step_losses);
      t.total.backward();
      opt.step();
      ++steps;
      for (const auto& [k, v] : t.breakdown()) terms[k] += v * static_cast<double>(e - s);
      sum += lv * static_cast<double>(e - s);
      seen += e - s;
      if (cfg.max_steps && steps >= cfg.max_steps) break;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = steps;
    rec.lr = sched.lr();
    rec.train_loss = sum / static_cast<double>(seen);
    for (auto& [k, v] : terms) rec.terms[k] = v / static_cast<double>(seen);
    rec.monitor_loss = denoise_eval(net, val.size() ? val : train, w, device).total.item<double>();
    if (!std::isfinite(rec.monitor_loss)) diverged(cfg, *net, "denoiser", epoch, steps, sched.lr(), rep.step_losses);
    if (rec.monitor_loss < best) {
      best = rec.monitor_loss;
      rep.best_epoch = epoch;
      rep.best_loss = best;
      nn::save_checkpoint(*net, rep.fingerprint, res.checkpoint);
      rec.checkpointed = true;
    }
    set_lr(opt, sched.step(rec.monitor_loss));
    log_epoch(cfg, "denoiser", rec);
    rep.epochs.push_back(rec);
    if (cfg.max_steps && steps >= cfg.max_steps) break;
  }

  nn::load_checkpoint(*net, rep.fingerprint, res.checkpoint);
  res.model = net;
  nlohmann::json evals = nlohmann::json::object();
  for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto idx = ds.indices(split);
    if (idx.empty()) continue;
    EvaluationReport er;
    er.split = to_string(split);
    for (std::size_t i : idx) {
      const auto truth = make_phantom(ds.samples[i].spec);
      const auto d = denoise_map(net, inputs[i], device);
      er.samples.push_back(evaluate_maps(i, scaled(inputs[i], kReferenceKpa), scaled(d.y, kReferenceKpa),
                                         metrics::binarize(d.m, 0.5f), truth));
    }
    if (split == Split::kTrain) res.train_evaluation = er.samples;
    evals[er.split] = er.to_json();
  }
  rep.extra["evaluation"] = evals;
  rep.artifacts["checkpoint"] = res.checkpoint.string();
  rep.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  rep.artifacts["report"] = (cfg.out / "denoiser_report.json").string();
  rep.save(cfg.out / "denoiser_report.json");
  return res;
}

DenoiserTrainResult train_denoiser(const TrainConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("train-denoiser needs a dataset directory (dataset)");
  const auto ds = read_dataset(cfg.dataset);
  if (cfg.truth_corrupted) return train_denoiser(cfg, ds, corrupted_truth(ds, cfg.corrupt_snr_db, cfg.seed));
  if (!cfg.yprime.empty()) return train_denoiser(cfg, ds, read_yprime_cache(cfg.yprime, ds.samples.size()));
  if (!cfg.recon_ckpt.empty()) {
    auto models = load_models(cfg.recon_ckpt, {});
    InferenceSettings inf;
    inf.stride_a = cfg.stride_a;
    inf.stride_l = cfg.stride_l;
    inf.tukey_alpha = cfg.tukey_alpha;
    inf.device = device_from_env();
    models.recon->to(inf.device);
    std::vector<Map2> yp;
    for (const auto& s : ds.samples) yp.push_back(primary_reconstruction(models.recon, s, ds.layout, inf));
    return train_denoiser(cfg, ds, yp);
  }
  throw ConfigError("train-denoiser needs a Y' source: set yprime (cache directory) or recon_ckpt");
}

}  // namespace swe::pipeline
