#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "lander/nn/network.hpp"

namespace lander::nn {

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

// Checkpoint = <prefix>.json manifest (block names/shapes, seed, step, free
// meta) + <prefix>.bin holding every block as little-endian float32, blocks
// in manifest order, each row-major.
class CheckpointWriter {
 public:
  void add(const std::string& name, const Eigen::MatrixXd& value);
  void add(const std::string& name, const Eigen::VectorXd& value);
  // Adds every parameter block of a network under "<prefix>.<block>" and
  // records its spec in the manifest.
  void add_network(const std::string& prefix, const NetworkParams& params);
  nlohmann::json& meta() { return meta_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void set_step(long step) { step_ = step; }
  void write(const std::string& path_prefix) const;

 private:
  struct Entry {
    std::string name;
    Eigen::MatrixXd value;
  };
  std::vector<Entry> entries_;
  nlohmann::json meta_ = nlohmann::json::object();
  std::uint64_t seed_ = 0;
  long step_ = 0;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path_prefix);
  Eigen::MatrixXd get(const std::string& name) const;
  Eigen::VectorXd get_vector(const std::string& name) const;
  NetworkParams get_network(const std::string& prefix) const;
  bool has(const std::string& name) const;
  const nlohmann::json& meta() const { return meta_; }
  std::uint64_t seed() const { return seed_; }
  long step() const { return step_; }

 private:
  struct Entry {
    std::string name;
    int rows = 0;
    int cols = 0;
    long offset = 0;  // in floats
  };
  const Entry& find(const std::string& name) const;
  std::vector<Entry> entries_;
  std::vector<float> data_;
  nlohmann::json meta_;
  std::uint64_t seed_ = 0;
  long step_ = 0;
};

}  // namespace lander::nn
