#pragma once

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lander/data/datum.hpp"

namespace lander::data {

struct DatasetManifest {
  std::string recipe;                 // how this set was produced
  std::vector<std::string> sources;   // provenance of merged/derived sets
  std::string params_id;              // PA / PB / mixed
  long count = 0;
  std::uint64_t seed = 0;
  std::string created_at;             // deterministic unless caller injects a clock

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
  bool operator==(const DatasetManifest&) const = default;
};

// Feature-wise standardization constants; std floored at 1e-8 so constant
// features normalize to zero.
struct NormalizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  static NormalizationStats fit(const Eigen::MatrixXd& features);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& standardized) const;
  nlohmann::json to_json() const;
  static NormalizationStats from_json(const nlohmann::json& j);
};

constexpr double kStdFloor = 1e-8;

// A set of datums, one per row.
struct Dataset {
  Eigen::MatrixXd features;  // count x kDatumLen
  DatasetManifest manifest;
  std::optional<NormalizationStats> stats;

  long count() const { return features.rows(); }
  void check() const;
  std::uint64_t content_hash() const;
};

Dataset dataset_from_trajectories(const std::vector<sim::Trajectory>& trajectories,
                                  DatasetManifest manifest);

// CSV with header f0..f902 (round-trip exact) plus a <path>.manifest.json
// sidecar. The .bin variant stores little-endian float32 for speed.
void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv(const std::string& path);
void save_dataset_bin(const Dataset& ds, const std::string& path);
Dataset load_dataset_bin(const std::string& path);

Dataset merge(const Dataset& a, const Dataset& b);
Dataset subsample(const Dataset& ds, long n, std::uint64_t seed);

}  // namespace lander::data
