#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "segmn/encoder.hpp"

namespace segmn {

/// Everything needed to reproduce a run. Serialised as flat `key = value` lines.
struct ExperimentConfig {
  // model
  Variant variant = Variant::Dual;
  std::size_t spm_layers = 1;
  std::size_t hidden = 64;
  std::size_t layers = 3;
  std::size_t key_dim = 64;
  std::size_t attention_dim = 64;
  std::vector<std::size_t> conv_channels{16, 16};
  std::size_t pool_window = 1;

  // optimisation
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 128;
  std::size_t epochs = 200;
  std::size_t pairs_per_epoch = 0;  ///< 0 = every train pair each epoch
  std::size_t eval_every = 1;       ///< 0 = never validate during training
  bool include_self_pairs = false;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  ///< evaluation workers; 0 = hardware concurrency

  // data
  std::string dataset;

  // GraphSim-style baseline
  bool baseline = false;
  std::set<std::size_t> spm_positions;

  /// Throws std::invalid_argument on unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace segmn
