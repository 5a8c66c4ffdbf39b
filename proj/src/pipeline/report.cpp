// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/pipeline/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "swe/error.hpp"
#include "swe/metrics.hpp"

namespace swe::pipeline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename F>
double guarded(F&& f) {
  try {
    return f();
  } catch (const DataError&) {
    return kNaN;
  } catch (const NumericError&) {
    return kNaN;
  }
}

nlohmann::json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double from_json(const nlohmann::json& j) {
  if (j.is_null()) return kNaN;
  if (j.is_string()) return j.get<std::string>() == "-inf" ? -std::numeric_limits<double>::infinity()
                                                           : std::numeric_limits<double>::infinity();
  return j.get<double>();
}

nlohmann::json row_json(const MetricRow& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : r) j[k] = number(v);
  return j;
}

nlohmann::json summary_json(const std::map<std::string, Summary>& s) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : s)
    j[k] = {{"mean", number(v.mean)}, {"median", number(v.median)}, {"std", number(v.std)}, {"n", v.n}};
  return j;
}

std::string cell(double v) {
  char buf[32];
  if (std::isnan(v)) return "-";
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{"MAE_FG", "MAE_BG", "CNR", "PSNR", "PSNR_FG", "PSNR_BG",
                                             "SSIM",   "IoU",    "F1",  "HD",   "ASSD"};
  return cols;
}

MetricRow image_metrics(const Map2& est, const PhantomTruth& truth, const Mask2* pred) {
  const auto& gt = truth.modulus_kpa;
  const auto& mask = truth.mask;
  MetricRow r;
  const auto mae = [&] {
    try {
      return metrics::region_mae(est, gt, mask);
    } catch (const DataError&) {
      return metrics::RegionMae{kNaN, kNaN};
    }
  }();
  r["MAE_FG"] = mae.fg;
  r["MAE_BG"] = mae.bg;
  r["CNR"] = guarded([&] { return metrics::cnr(est, mask); });
  r["PSNR"] = guarded([&] { return metrics::psnr(gt, est); });
  r["PSNR_FG"] = guarded([&] { return metrics::psnr_masked(gt, est, mask, 1); });
  r["PSNR_BG"] = guarded([&] { return metrics::psnr_masked(gt, est, mask, 0); });
  r["SSIM"] = guarded([&] { return metrics::ssim(gt, est); });
  r["IoU"] = r["F1"] = r["HD"] = r["ASSD"] = kNaN;
  if (pred) {
    const auto o = metrics::iou_f1(*pred, mask);
    r["IoU"] = o.iou;
    r["F1"] = o.f1;
    try {
      const auto d = metrics::hd_assd(*pred, mask, 1.0 / truth.spec.axial_res, 1.0 / truth.spec.lateral_res);
      r["HD"] = d.hd;
      r["ASSD"] = d.assd;
    } catch (const DataError&) {
    }
  }
  return r;
}

double background_std(const Map2& image, const Mask2& truth_mask) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (truth_mask.values()[i]) continue;
    sum += image.values()[i];
    ++n;
  }
  if (n == 0) return kNaN;
  const double mean = sum / static_cast<double>(n);
  for (std::size_t i = 0; i < image.size(); ++i)
    if (!truth_mask.values()[i]) sq += (image.values()[i] - mean) * (image.values()[i] - mean);
  return std::sqrt(sq / static_cast<double>(n));
}

std::map<std::string, Summary> summarize(const std::vector<MetricRow>& rows) {
  std::map<std::string, std::vector<double>> cols;
  for (const auto& r : rows)
    for (const auto& [k, v] : r)
      if (!std::isnan(v)) cols[k].push_back(v);
  std::map<std::string, Summary> out;
  for (auto& [k, v] : cols) {
    Summary s;
    s.n = v.size();
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out[k] = s;
  }
  return out;
}

SampleEvaluation evaluate_maps(std::size_t index, const Map2& y_prime_kpa, const Map2& y_kpa, const Mask2& mask,
                               const PhantomTruth& truth) {
  SampleEvaluation e;
  e.index = index;
  e.y_prime = image_metrics(y_prime_kpa, truth, nullptr);
  e.y = image_metrics(y_kpa, truth, &mask);
  e.bg_std_y_prime = background_std(y_prime_kpa, truth.mask);
  e.bg_std_y = background_std(y_kpa, truth.mask);
  return e;
}

std::map<std::string, Summary> EvaluationReport::summary_y_prime() const {
  std::vector<MetricRow> rows;
  for (const auto& s : samples) rows.push_back(s.y_prime);
  return summarize(rows);
}

std::map<std::string, Summary> EvaluationReport::summary_y() const {
  std::vector<MetricRow> rows;
  for (const auto& s : samples) rows.push_back(s.y);
  return summarize(rows);
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json j;
  j["split"] = split;
  j["untrained"] = untrained;
  j["columns"] = metric_columns();
  j["samples"] = nlohmann::json::array();
  for (const auto& s : samples) {
    j["samples"].push_back({{"index", s.index},
                            {"y_prime", row_json(s.y_prime)},
                            {"y", row_json(s.y)},
                            {"bg_std_y_prime", number(s.bg_std_y_prime)},
                            {"bg_std_y", number(s.bg_std_y)}});
  }
  j["summary"] = {{"y_prime", summary_json(summary_y_prime())}, {"y", summary_json(summary_y())}};
  j["plots"] = nlohmann::json::array();
  for (const auto& p : plots) j["plots"].push_back(p.string());
  return j;
}

EvaluationReport evaluate(CascadeModels& models, const Dataset& ds, Split split, const InferenceSettings& s,
                          const std::filesystem::path& plot_dir) {
  const auto idx = ds.indices(split);
  if (idx.empty()) throw DataError("the " + to_string(split) + " split is empty");
  EvaluationReport rep;
  rep.split = to_string(split);
  if (!plot_dir.empty()) std::filesystem::create_directories(plot_dir);
  for (std::size_t i : idx) {
    const auto& sample = ds.samples[i];
    const auto truth = make_phantom(sample.spec);
    const auto r = run_cascade(models, sample, ds.layout, s);
    rep.untrained = rep.untrained || r.untrained;
    rep.samples.push_back(evaluate_maps(i, r.y_prime_kpa, r.y_kpa, r.mask, truth));
    if (!plot_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "sample_%05zu.pgm", i);
      write_panel_pgm(plot_dir / name, {truth.modulus_kpa, r.y_prime_kpa, r.y_kpa, r.m}, true);
      rep.plots.push_back(plot_dir / name);
    }
  }
  return rep;
}

std::string format_report(const nlohmann::json& report) {
  std::ostringstream os;
  const auto& cols = metric_columns();
  auto header = [&](const std::string& first) {
    os << std::left;
    os.width(10);
    os << first;
    for (const auto& c : cols) {
      os.width(10);
      os << c;
    }
    os << "\n";
  };
  auto line = [&](const std::string& label, const nlohmann::json& row, const char* field) {
    os.width(10);
    os << label;
    for (const auto& c : cols) {
      os.width(10);
      const auto& v = field ? (row.contains(c) ? row[c][field] : nlohmann::json()) : (row.contains(c) ? row[c] : nlohmann::json());
      os << cell(from_json(v));
    }
    os << "\n";
  };
  os << "split: " << report.value("split", "?");
  if (report.value("untrained", false)) os << "  (untrained networks: numbers are not meaningful)";
  os << "\n";
  for (const char* which : {"y_prime", "y"}) {
    os << "\n[" << (std::string(which) == "y" ? "Y" : "Y'") << "]\n";
    header("sample");
    for (const auto& s : report["samples"]) line(std::to_string(s["index"].get<std::size_t>()), s[which], nullptr);
    const auto& sum = report["summary"][which];
    line("mean", sum, "mean");
    line("median", sum, "median");
    line("std", sum, "std");
  }
  return os.str();
}

void write_panel_pgm(const std::filesystem::path& path, const std::vector<Map2>& panels, bool last_is_mask) {
  if (panels.empty()) throw ConfigError("no panels to draw");
  const std::size_t rows = panels.front().rows();
  constexpr std::size_t kGap = 2;
  std::size_t cols = 0;
  for (const auto& p : panels) {
    if (p.rows() != rows) throw DataError(DataError::Kind::kShape, "panels must share a height");
    cols += p.cols() + kGap;
  }
  cols -= kGap;
  float hi = 0.0f;
  for (std::size_t k = 0; k + (last_is_mask ? 1 : 0) < panels.size(); ++k)
    for (float v : panels[k].values())
      if (std::isfinite(v)) hi = std::max(hi, v);
  if (hi <= 0.0f) hi = 1.0f;
  std::string pix(rows * cols, '\xff');
  std::size_t c0 = 0;
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const float scale = (last_is_mask && k + 1 == panels.size()) ? 1.0f : hi;
    const auto& p = panels[k];
    for (std::size_t a = 0; a < rows; ++a)
      for (std::size_t l = 0; l < p.cols(); ++l) {
        const float v = std::clamp(p(a, l) / scale, 0.0f, 1.0f);
        pix[a * cols + c0 + l] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
      }
    c0 += p.cols() + kGap;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P5\n" << cols << " " << rows << "\n255\n";
  out.write(pix.data(), static_cast<std::streamsize>(pix.size()));
}

}  // namespace swe::pipeline
