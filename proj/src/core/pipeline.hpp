#pragma once

#include <string>

#include "json.hpp"

#include "core/config.hpp"

namespace usjepa {

// Batch entry points behind the CLI subcommands. Each writes its artifacts
// under cfg.out_dir and returns a JSON summary of what happened.
nlohmann::json run_synth_data(const RunConfig& cfg);
nlohmann::json run_preprocess(const RunConfig& cfg);
nlohmann::json run_pretrain(const RunConfig& cfg);
nlohmann::json run_probe(const RunConfig& cfg);
nlohmann::json run_fewshot(const RunConfig& cfg);
nlohmann::json run_corrupt_sweep(const RunConfig& cfg);
nlohmann::json run_mask_viz(const RunConfig& cfg);
nlohmann::json run_report(const RunConfig& cfg);

nlohmann::json run_mode(const RunConfig& cfg, const std::string& mode);

// Backbone encoder for evaluation: "random" or "checkpoint:PATH".
ViTEncoder<float> build_probe_backbone(const RunConfig& cfg, std::string* backbone_id);

}  // namespace usjepa
