// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swe/dataset.hpp"
#include "swe/phantom.hpp"
#include "swe/pipeline/cascade.hpp"

namespace swe::pipeline {

/// Report columns, in order.
const std::vector<std::string>& metric_columns();

using MetricRow = std::map<std::string, double>;

/// Metrics of a kPa map against the phantom truth. Mask metrics need a
/// predicted mask and are NaN without one; undefined values are NaN as well.
MetricRow image_metrics(const Map2& estimate_kpa, const PhantomTruth& truth, const Mask2* predicted_mask);

/// Population standard deviation over the truth background.
double background_std(const Map2& image, const Mask2& truth_mask);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  ///< sample standard deviation (0 for one value)
  std::size_t n = 0;
};

/// Column-wise summary; NaN entries are skipped.
std::map<std::string, Summary> summarize(const std::vector<MetricRow>& rows);

struct SampleEvaluation {
  std::size_t index = 0;
  MetricRow y_prime;
  MetricRow y;
  double bg_std_y_prime = 0.0;
  double bg_std_y = 0.0;
};

SampleEvaluation evaluate_maps(std::size_t index, const Map2& y_prime_kpa, const Map2& y_kpa, const Mask2& mask,
                               const PhantomTruth& truth);

struct EvaluationReport {
  std::string split;
  bool untrained = false;
  std::vector<SampleEvaluation> samples;
  std::vector<std::filesystem::path> plots;

  std::map<std::string, Summary> summary_y_prime() const;
  std::map<std::string, Summary> summary_y() const;
  nlohmann::json to_json() const;
};

/// Runs the cascade over one split. Throws DataError when the split is empty.
/// With a non-empty plot_dir, writes one truth | Y' | Y | M panel per sample.
EvaluationReport evaluate(CascadeModels& models, const Dataset& ds, Split split, const InferenceSettings& s,
                          const std::filesystem::path& plot_dir = {});

/// Plain-text table (per-sample rows then mean / median / std) from a report JSON.
std::string format_report(const nlohmann::json& report);

/// Binary PGM of maps placed side by side. Modulus panels share one grey scale;
/// the last panel is drawn on [0, 1] when `last_is_mask`.
void write_panel_pgm(const std::filesystem::path& path, const std::vector<Map2>& panels, bool last_is_mask);

}  // namespace swe::pipeline
