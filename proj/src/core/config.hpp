#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/loader.hpp"
#include "core/loss.hpp"
#include "core/masking.hpp"
#include "core/model.hpp"
#include "core/optim.hpp"
#include "core/probe.hpp"

namespace usjepa {

// Full run description. Defaults follow the published training recipe at
// paper scale; the shipped desk config overrides sizes for CPU-scale runs.
struct RunConfig {
  // run
  std::string out_dir = "runs/out";
  std::uint64_t seed = 7;
  int workers = 1;

  // data
  std::string manifest_path;
  long n_t = 50000;
  double holdout_fraction = 0.05;
  PreprocessConfig preprocess;  // input_size 224 by default

  // model
  StackConfig stack;
  std::string teacher_source = "random";  // random | snapshot:PATH | checkpoint:PATH

  // masking
  MaskSamplingConfig masking;

  // optimization
  OptimizerConfig optim;
  int batch_size = 128;
  LossConfig loss;
  bool cache_teacher = true;

  // downstream probing
  ProbeConfig probe;
  int probe_seeds = 5;
  std::string backbone = "random";  // checkpoint:PATH | random
  std::string train_manifest, val_manifest, test_manifest;
  std::string task_name = "task";

  // few-shot
  std::vector<double> fractions = {0.01, 0.05, 0.10, 0.50, 1.0};

  // corruption sweep
  std::vector<std::string> corruption_kinds = {"blur", "contrast", "speckle"};
  std::vector<int> severities = {1, 2, 3};
  bool gallery = false;
  int gallery_frames = 4;

  // synthetic corpus
  int synth_classes = 3;
  long synth_count = 2000;
  int synth_size = 64;
  double synth_val_fraction = 0.1;
  double synth_test_fraction = 0.2;

  // mask visualization
  int viz_frames = 8;

  // Canonical JSON of the effective config (after overrides); hashing input.
  std::string canonical_json() const;
  std::uint64_t hash() const;
};

RunConfig parse_config_json(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);

// CLI-style override, e.g. ("run.seed", "9"), ("model.teacher", "snapshot:x").
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace usjepa
