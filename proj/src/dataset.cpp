// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "swe/error.hpp"
#include "swe/tensor_file.hpp"

namespace swe {

using nlohmann::json;

namespace {

json snr_to_json(double snr) {
  if (std::isinf(snr)) return snr > 0 ? json("inf") : json("-inf");
  return json(snr);
}

double snr_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("manifest: bad snr value '" + s + "'");
  }
  return j.get<double>();
}

json spec_to_json(const PhantomSpec& s) {
  return json{{"roi_axial_mm", s.roi_axial_mm},
              {"roi_lateral_mm", s.roi_lateral_mm},
              {"axial_res", s.axial_res},
              {"lateral_res", s.lateral_res},
              {"center_axial_mm", s.center_axial_mm},
              {"center_lateral_mm", s.center_lateral_mm},
              {"inclusion_diameter_mm", s.inclusion_diameter_mm},
              {"e_inclusion_kpa", s.e_inclusion_kpa},
              {"e_background_kpa", s.e_background_kpa},
              {"density_kg_m3", s.density_kg_m3},
              {"seed", s.seed}};
}

PhantomSpec spec_from_json(const json& j) {
  PhantomSpec s;
  s.roi_axial_mm = j.at("roi_axial_mm");
  s.roi_lateral_mm = j.at("roi_lateral_mm");
  s.axial_res = j.at("axial_res");
  s.lateral_res = j.at("lateral_res");
  s.center_axial_mm = j.at("center_axial_mm");
  s.center_lateral_mm = j.at("center_lateral_mm");
  s.inclusion_diameter_mm = j.at("inclusion_diameter_mm");
  s.e_inclusion_kpa = j.at("e_inclusion_kpa");
  s.e_background_kpa = j.at("e_background_kpa");
  s.density_kg_m3 = j.at("density_kg_m3");
  s.seed = j.at("seed");
  return s;
}

json layout_to_json(const RegionLayout& l) {
  return json{{"id", l.id},
              {"r_regions", l.r_regions},
              {"region_axial_px", l.region_axial_px},
              {"region_lateral_px", l.region_lateral_px},
              {"lateral_offsets_px", l.lateral_offsets_px},
              {"full_lateral_px", l.full_lateral_px},
              {"frames_t", l.frames_t}};
}

RegionLayout layout_from_json(const json& j) {
  RegionLayout l;
  l.id = j.at("id");
  l.r_regions = j.at("r_regions");
  l.region_axial_px = j.at("region_axial_px");
  l.region_lateral_px = j.at("region_lateral_px");
  l.lateral_offsets_px = j.at("lateral_offsets_px").get<std::vector<std::size_t>>();
  l.full_lateral_px = j.at("full_lateral_px");
  l.frames_t = j.at("frames_t");
  return l;
}

json arf_to_json(const ArfConfig& a) {
  json j{{"a0_n_per_m3", a.a0_n_per_m3},         {"sigma_x_mm", a.sigma_x_mm},
         {"sigma_z_mm", a.sigma_z_mm},           {"push_duration_us", a.push_duration_us},
         {"prop_time_ms", a.prop_time_ms},       {"prf_hz", a.prf_hz},
         {"lateral_offset_mm", a.lateral_offset_mm}};
  j["focus_axial_mm"] = a.focus_axial_mm ? json(*a.focus_axial_mm) : json(nullptr);
  return j;
}

ArfConfig arf_from_json(const json& j) {
  ArfConfig a;
  a.a0_n_per_m3 = j.at("a0_n_per_m3");
  a.sigma_x_mm = j.at("sigma_x_mm");
  a.sigma_z_mm = j.at("sigma_z_mm");
  a.push_duration_us = j.at("push_duration_us");
  a.prop_time_ms = j.at("prop_time_ms");
  a.prf_hz = j.at("prf_hz");
  a.lateral_offset_mm = j.at("lateral_offset_mm");
  if (!j.at("focus_axial_mm").is_null()) a.focus_axial_mm = j.at("focus_axial_mm").get<double>();
  return a;
}

std::string sample_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu.swed", i);
  return buf;
}

// splitmix64 step, used to derive independent per-sample seeds.
std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + s + "'");
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].split == s) out.push_back(i);
  return out;
}

std::array<std::vector<int>, 3> make_stiffness_pools(std::uint64_t seed, int min_kpa, int max_kpa,
                                                     double val_fraction, double test_fraction) {
  if (max_kpa < min_kpa) throw ConfigError("stiffness pool: empty range");
  std::vector<int> values;
  for (int v = min_kpa; v <= max_kpa; ++v) values.push_back(v);
  std::mt19937_64 rng(mix_seed(seed ^ 0x5eedull));
  std::shuffle(values.begin(), values.end(), rng);
  const auto n = values.size();
  auto take = [n](double f) {
    return f > 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(f * n))) : 0;
  };
  const std::size_t n_val = take(val_fraction);
  const std::size_t n_test = take(test_fraction);
  if (n_val + n_test >= n) throw ConfigError("stiffness pool: validation/test fractions too large");
  std::array<std::vector<int>, 3> pools;
  pools[1].assign(values.begin(), values.begin() + n_val);
  pools[2].assign(values.begin() + n_val, values.begin() + n_val + n_test);
  pools[0].assign(values.begin() + n_val + n_test, values.end());
  return pools;
}

Dataset generate_dataset(const GenerateOptions& opts) {
  if (opts.n == 0) throw ConfigError("gen: --n must be positive");
  const Preset preset = preset_by_name(opts.preset);
  Dataset ds;
  ds.preset = preset.name;
  ds.layout = preset.layout;
  ds.arf = preset.arf;
  const auto pools = make_stiffness_pools(opts.seed, static_cast<int>(preset.e_inclusion_min_kpa),
                                          static_cast<int>(preset.e_inclusion_max_kpa),
                                          opts.val_fraction, opts.test_fraction);
  const auto n_val = static_cast<std::size_t>(std::lround(opts.val_fraction * opts.n));
  const auto n_test = static_cast<std::size_t>(std::lround(opts.test_fraction * opts.n));
  if (n_val + n_test > opts.n) throw ConfigError("gen: validation/test fractions exceed 1");
  for (std::size_t i = 0; i < opts.n; ++i) {
    DatasetSample sample;
    sample.seed = mix_seed(opts.seed * 1000003ull + i);
    sample.split = i < opts.n - n_val - n_test ? Split::kTrain
                   : i < opts.n - n_test       ? Split::kVal
                                               : Split::kTest;
    const auto& pool = pools[static_cast<std::size_t>(sample.split)];
    const int e_inc = pool[mix_seed(sample.seed) % pool.size()];
    sample.spec = sample_phantom_spec(preset, sample.seed, static_cast<double>(e_inc));
    sample.snr_db = opts.snr_db;
    const PhantomTruth truth = make_phantom(sample.spec);
    for (std::size_t k = 0; k < ds.layout.r_regions; ++k) {
      MotionVolume vol = simulate_region(truth, ds.layout, k, ds.arf);
      sample.regions.push_back(add_noise(vol, opts.snr_db, mix_seed(sample.seed + 17 * (k + 1))));
    }
    ds.samples.push_back(std::move(sample));
  }
  validate_splits(ds);
  return ds;
}

void validate_splits(const Dataset& ds) {
  std::map<double, Split> owner;
  for (const auto& s : ds.samples) {
    const auto [it, inserted] = owner.emplace(s.spec.e_inclusion_kpa, s.split);
    if (!inserted && it->second != s.split)
      throw DataError(DataError::Kind::kSplitOverlap,
                      "dataset: inclusion stiffness " + std::to_string(s.spec.e_inclusion_kpa) +
                          " kPa appears in both " + to_string(it->second) + " and " +
                          to_string(s.split));
  }
}

double background_foreground_ratio(const Dataset& ds, const std::vector<std::size_t>& which) {
  if (which.empty()) throw DataError("bg/fg ratio: no samples");
  double acc = 0.0;
  for (auto i : which) {
    const auto truth = make_phantom(ds.samples.at(i).spec);
    std::size_t fg = 0;
    for (auto v : truth.mask.values()) fg += v;
    if (fg == 0) throw DataError("bg/fg ratio: sample without inclusion pixels");
    acc += static_cast<double>(truth.mask.size() - fg) / static_cast<double>(fg);
  }
  return acc / static_cast<double>(which.size());
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  validate_splits(ds);
  std::filesystem::create_directories(dir);
  json manifest{{"format", "swe-dataset"},
                {"version", kManifestVersion},
                {"preset", ds.preset},
                {"layout", layout_to_json(ds.layout)},
                {"arf", arf_to_json(ds.arf)}};
  json samples = json::array();
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    if (s.regions.size() != ds.layout.r_regions)
      throw DataError(DataError::Kind::kShape, "write_dataset: sample has wrong region count");
    const auto [t, a, l] = s.regions.front().data.dims();
    std::vector<float> values;
    values.reserve(s.regions.size() * t * a * l);
    for (const auto& r : s.regions) {
      if (r.data.dims() != s.regions.front().data.dims())
        throw DataError(DataError::Kind::kShape, "write_dataset: ragged region volumes");
      values.insert(values.end(), r.data.values().begin(), r.data.values().end());
    }
    const std::uint32_t dims[4] = {static_cast<std::uint32_t>(s.regions.size()),
                                   static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(a),
                                   static_cast<std::uint32_t>(l)};
    const auto file = sample_file_name(i);
    write_tensor(dir / file, dims, values);
    json flags = json::array();
    for (const auto& r : s.regions) flags.push_back(r.arrival_truncated);
    samples.push_back({{"file", file},
                       {"seed", s.seed},
                       {"split", to_string(s.split)},
                       {"snr_db", snr_to_json(s.snr_db)},
                       {"arrival_truncated", flags},
                       {"spec", spec_to_json(s.spec)}});
  }
  manifest["samples"] = samples;
  write_file_bytes(dir / "manifest", manifest.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file_bytes(dir / "manifest"));
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "swe-dataset")
    throw DataError(DataError::Kind::kBadMagic, "manifest: not a swe-dataset manifest");
  if (manifest.value("version", 0u) != kManifestVersion)
    throw DataError(DataError::Kind::kVersionMismatch, "manifest: unsupported version");
  Dataset ds;
  try {
    ds.preset = manifest.at("preset");
    ds.layout = layout_from_json(manifest.at("layout"));
    ds.arf = arf_from_json(manifest.at("arf"));
    for (const auto& js : manifest.at("samples")) {
      DatasetSample s;
      s.seed = js.at("seed");
      s.split = split_from_string(js.at("split"));
      s.snr_db = snr_from_json(js.at("snr_db"));
      s.spec = spec_from_json(js.at("spec"));
      const auto flags = js.at("arrival_truncated").get<std::vector<bool>>();
      const TensorBlob blob = read_tensor(dir / js.at("file").get<std::string>());
      if (blob.dims.size() != 4 || blob.dims[0] != ds.layout.r_regions)
        throw DataError(DataError::Kind::kShape, "dataset: sample tensor has wrong shape");
      const std::size_t t = blob.dims[1], a = blob.dims[2], l = blob.dims[3];
      const std::size_t per = t * a * l;
      for (std::size_t k = 0; k < blob.dims[0]; ++k) {
        MotionVolume vol;
        vol.data = Grid3<float>(t, a, l);
        std::copy_n(blob.values.begin() + static_cast<std::ptrdiff_t>(k * per), per,
                    vol.data.values().begin());
        vol.region_index = k;
        vol.layout_id = ds.layout.id;
        vol.snr_db = s.snr_db;
        vol.arrival_truncated = k < flags.size() && flags[k];
        s.regions.push_back(std::move(vol));
      }
      ds.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  validate_splits(ds);
  return ds;
}

}  // namespace swe
