#include "lander/nn/checkpoint.hpp"

#include <fstream>

#include "lander/common/error.hpp"
#include "lander/common/io.hpp"

namespace lander::nn {

nlohmann::json spec_to_json(const NetworkSpec& spec) {
  return {{"widths", spec.widths},
          {"layer_norm", spec.layer_norm},
          {"head", spec.head == OutputHead::kGaussian ? "gaussian" : "plain"},
          {"gaussian_heads", spec.gaussian_heads}};
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.widths = j.at("widths").get<std::vector<int>>();
  spec.layer_norm = j.at("layer_norm").get<bool>();
  spec.head = j.at("head").get<std::string>() == "gaussian" ? OutputHead::kGaussian
                                                            : OutputHead::kPlain;
  spec.gaussian_heads = j.at("gaussian_heads").get<int>();
  spec.validate();
  return spec;
}

void CheckpointWriter::add(const std::string& name, const Eigen::MatrixXd& value) {
  entries_.push_back({name, value});
}

void CheckpointWriter::add(const std::string& name, const Eigen::VectorXd& value) {
  entries_.push_back({name, Eigen::MatrixXd(value)});
}

void CheckpointWriter::add_network(const std::string& prefix, const NetworkParams& params) {
  for (std::size_t i = 0; i < params.blocks().size(); ++i)
    entries_.push_back({prefix + "." + params.blocks()[i].name, params.block(static_cast<int>(i))});
  meta_["networks"][prefix] = spec_to_json(params.spec());
}

void CheckpointWriter::write(const std::string& path_prefix) const {
  nlohmann::json manifest;
  manifest["format"] = "landerlab-checkpoint-v1";
  manifest["seed"] = seed_;
  manifest["step"] = step_;
  manifest["meta"] = meta_;
  auto blocks = nlohmann::json::array();
  std::vector<float> data;
  for (const auto& e : entries_) {
    blocks.push_back({{"name", e.name},
                      {"rows", static_cast<int>(e.value.rows())},
                      {"cols", static_cast<int>(e.value.cols())}});
    // row-major order on disk
    for (long r = 0; r < e.value.rows(); ++r)
      for (long c = 0; c < e.value.cols(); ++c) data.push_back(static_cast<float>(e.value(r, c)));
  }
  manifest["blocks"] = blocks;
  write_json_file(path_prefix + ".json", manifest);
  std::ofstream bin(path_prefix + ".bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write " + path_prefix + ".bin");
  bin.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!bin) throw IoError("short write on " + path_prefix + ".bin");
}

CheckpointReader::CheckpointReader(const std::string& path_prefix) {
  nlohmann::json manifest = read_json_file(path_prefix + ".json");
  if (manifest.value("format", "") != "landerlab-checkpoint-v1")
    throw IoError("unrecognized checkpoint format in " + path_prefix + ".json");
  seed_ = manifest.at("seed").get<std::uint64_t>();
  step_ = manifest.at("step").get<long>();
  meta_ = manifest.at("meta");
  long offset = 0;
  for (const auto& b : manifest.at("blocks")) {
    Entry e;
    e.name = b.at("name").get<std::string>();
    e.rows = b.at("rows").get<int>();
    e.cols = b.at("cols").get<int>();
    e.offset = offset;
    offset += static_cast<long>(e.rows) * e.cols;
    entries_.push_back(e);
  }
  std::ifstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw IoError("cannot open " + path_prefix + ".bin");
  data_.resize(static_cast<std::size_t>(offset));
  bin.read(reinterpret_cast<char*>(data_.data()),
           static_cast<std::streamsize>(data_.size() * sizeof(float)));
  if (bin.gcount() != static_cast<std::streamsize>(data_.size() * sizeof(float)))
    throw IoError("checkpoint binary truncated: " + path_prefix + ".bin");
}

const CheckpointReader::Entry& CheckpointReader::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw IoError("checkpoint block not found: " + name);
}

bool CheckpointReader::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

Eigen::MatrixXd CheckpointReader::get(const std::string& name) const {
  const Entry& e = find(name);
  Eigen::MatrixXd m(e.rows, e.cols);
  long k = e.offset;
  for (int r = 0; r < e.rows; ++r)
    for (int c = 0; c < e.cols; ++c) m(r, c) = static_cast<double>(data_[k++]);
  return m;
}

Eigen::VectorXd CheckpointReader::get_vector(const std::string& name) const {
  Eigen::MatrixXd m = get(name);
  return Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
}

NetworkParams CheckpointReader::get_network(const std::string& prefix) const {
  NetworkSpec spec = spec_from_json(meta_.at("networks").at(prefix));
  NetworkParams params(spec);
  for (std::size_t i = 0; i < params.blocks().size(); ++i)
    params.block(static_cast<int>(i)) = get(prefix + "." + params.blocks()[i].name);
  return params;
}

}  // namespace lander::nn
