#include "lander/data/dataset.hpp"

#include <charconv>
#include <fstream>

#include "lander/common/error.hpp"
#include "lander/common/hash.hpp"
#include "lander/common/io.hpp"
#include "lander/common/rng.hpp"

namespace lander::data {

nlohmann::json DatasetManifest::to_json() const {
  return {{"recipe", recipe},   {"sources", sources}, {"params_id", params_id},
          {"count", count},     {"seed", seed},       {"created_at", created_at}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.recipe = j.at("recipe").get<std::string>();
  m.sources = j.at("sources").get<std::vector<std::string>>();
  m.params_id = j.at("params_id").get<std::string>();
  m.count = j.at("count").get<long>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.created_at = j.at("created_at").get<std::string>();
  return m;
}

NormalizationStats NormalizationStats::fit(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) throw ShapeError("normalization: need >= 2 datums to fit");
  NormalizationStats s;
  const double n = static_cast<double>(features.rows());
  s.mean = features.colwise().sum().transpose() / n;
  Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.std = (centered.array().square().colwise().sum() / n).sqrt().transpose();
  s.std = s.std.cwiseMax(kStdFloor);
  return s;
}

Eigen::MatrixXd NormalizationStats::apply(const Eigen::MatrixXd& features) const {
  return (features.rowwise() - mean.transpose()).array().rowwise() /
         std.transpose().array();
}

Eigen::MatrixXd NormalizationStats::invert(const Eigen::MatrixXd& standardized) const {
  return (standardized.array().rowwise() * std.transpose().array()).matrix().rowwise() +
         mean.transpose();
}

nlohmann::json NormalizationStats::to_json() const {
  std::vector<double> m(mean.data(), mean.data() + mean.size());
  std::vector<double> s(std.data(), std.data() + std.size());
  return {{"mean", m}, {"std", s}};
}

NormalizationStats NormalizationStats::from_json(const nlohmann::json& j) {
  NormalizationStats s;
  auto m = j.at("mean").get<std::vector<double>>();
  auto sd = j.at("std").get<std::vector<double>>();
  s.mean = Eigen::Map<Eigen::VectorXd>(m.data(), static_cast<long>(m.size()));
  s.std = Eigen::Map<Eigen::VectorXd>(sd.data(), static_cast<long>(sd.size()));
  return s;
}

void Dataset::check() const {
  if (features.cols() != kDatumLen)
    throw ShapeError("dataset: datum length " + std::to_string(features.cols()) + " != " +
                     std::to_string(kDatumLen));
  if (manifest.count != features.rows()) throw ShapeError("dataset: manifest count mismatch");
  if (!features.allFinite()) throw ShapeError("dataset: non-finite features");
}

std::uint64_t Dataset::content_hash() const {
  return fnv1a64(features.data(), sizeof(double) * static_cast<std::size_t>(features.size()));
}

Dataset dataset_from_trajectories(const std::vector<sim::Trajectory>& trajectories,
                                  DatasetManifest manifest) {
  Dataset ds;
  ds.features.resize(static_cast<long>(trajectories.size()), kDatumLen);
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    ds.features.row(static_cast<long>(i)) = datum_from_trajectory(trajectories[i]).transpose();
  manifest.count = ds.features.rows();
  ds.manifest = std::move(manifest);
  ds.check();
  return ds;
}

namespace {

std::string manifest_path(const std::string& path) { return path + ".manifest.json"; }

void save_manifest(const Dataset& ds, const std::string& path) {
  nlohmann::json j = ds.manifest.to_json();
  if (ds.stats) j["normalization"] = ds.stats->to_json();
  write_json_file(manifest_path(path), j);
}

void load_manifest(Dataset& ds, const std::string& path) {
  nlohmann::json j = read_json_file(manifest_path(path));
  ds.manifest = DatasetManifest::from_json(j);
  if (j.contains("normalization")) ds.stats = NormalizationStats::from_json(j["normalization"]);
}

}  // namespace

void save_dataset_csv(const Dataset& ds, const std::string& path) {
  ds.check();
  std::string out;
  out.reserve(static_cast<std::size_t>(ds.features.size()) * 12);
  for (int j = 0; j < kDatumLen; ++j) {
    out += (j == 0 ? "f" : ",f");
    out += std::to_string(j);
  }
  out += "\n";
  for (long i = 0; i < ds.features.rows(); ++i) {
    for (long j = 0; j < kDatumLen; ++j) {
      if (j) out += ',';
      out += format_double(ds.features(i, j));
    }
    out += '\n';
  }
  write_text_file(path, out);
  save_manifest(ds, path);
}

Dataset load_dataset_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<double> values;
  long rows = 0;
  std::size_t pos = text.find('\n');  // skip header
  if (pos == std::string::npos) throw IoError("dataset csv has no rows: " + path);
  ++pos;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::size_t end = (eol == std::string::npos) ? text.size() : eol;
    if (end > pos) {
      std::size_t p = pos;
      while (p < end) {
        std::size_t comma = text.find(',', p);
        if (comma == std::string::npos || comma > end) comma = end;
        double v = 0.0;
        const auto res = std::from_chars(text.data() + p, text.data() + comma, v);
        if (res.ec != std::errc()) throw IoError("dataset csv parse error in " + path);
        values.push_back(v);
        p = comma + 1;
      }
      ++rows;
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  if (rows == 0 || values.size() != static_cast<std::size_t>(rows) * kDatumLen)
    throw IoError("dataset csv malformed: " + path);
  Dataset ds;
  ds.features.resize(rows, kDatumLen);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < kDatumLen; ++j)
      ds.features(i, j) = values[static_cast<std::size_t>(i) * kDatumLen + j];
  load_manifest(ds, path);
  ds.check();
  return ds;
}

void save_dataset_bin(const Dataset& ds, const std::string& path) {
  ds.check();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write: " + path);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(ds.features.rows()),
                                 static_cast<std::uint64_t>(ds.features.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<float> row(kDatumLen);
  for (long i = 0; i < ds.features.rows(); ++i) {
    for (long j = 0; j < kDatumLen; ++j) row[static_cast<std::size_t>(j)] = static_cast<float>(ds.features(i, j));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("short write: " + path);
  save_manifest(ds, path);
}

Dataset load_dataset_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::uint64_t dims[2] = {0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[1] != kDatumLen) throw IoError("dataset bin malformed: " + path);
  Dataset ds;
  ds.features.resize(static_cast<long>(dims[0]), kDatumLen);
  std::vector<float> row(kDatumLen);
  for (std::uint64_t i = 0; i < dims[0]; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw IoError("dataset bin truncated: " + path);
    for (long j = 0; j < kDatumLen; ++j)
      ds.features(static_cast<long>(i), j) = static_cast<double>(row[static_cast<std::size_t>(j)]);
  }
  load_manifest(ds, path);
  ds.check();
  return ds;
}

Dataset merge(const Dataset& a, const Dataset& b) {
  a.check();
  b.check();
  Dataset out;
  out.features.resize(a.count() + b.count(), kDatumLen);
  out.features.topRows(a.count()) = a.features;
  out.features.bottomRows(b.count()) = b.features;
  out.manifest.recipe = "merge";
  out.manifest.sources = a.manifest.sources;
  out.manifest.sources.push_back(a.manifest.recipe);
  for (const auto& s : b.manifest.sources) out.manifest.sources.push_back(s);
  out.manifest.sources.push_back(b.manifest.recipe);
  out.manifest.params_id =
      a.manifest.params_id == b.manifest.params_id ? a.manifest.params_id : "mixed";
  out.manifest.count = out.features.rows();
  out.manifest.seed = a.manifest.seed;
  return out;
}

Dataset subsample(const Dataset& ds, long n, std::uint64_t seed) {
  ds.check();
  if (n > ds.count()) throw ConfigError("subsample: n exceeds dataset size");
  // Fisher-Yates prefix over the index set, without replacement.
  std::vector<long> idx(static_cast<std::size_t>(ds.count()));
  for (long i = 0; i < ds.count(); ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (long i = 0; i < n; ++i) {
    const long j = i + static_cast<long>(rng.index(static_cast<std::uint64_t>(ds.count() - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Dataset out;
  out.features.resize(n, kDatumLen);
  for (long i = 0; i < n; ++i) out.features.row(i) = ds.features.row(idx[static_cast<std::size_t>(i)]);
  out.manifest = ds.manifest;
  out.manifest.recipe = ds.manifest.recipe + "/subsample-" + std::to_string(n);
  out.manifest.sources.push_back(ds.manifest.recipe);
  out.manifest.count = n;
  out.manifest.seed = seed;
  return out;
}

}  // namespace lander::data
