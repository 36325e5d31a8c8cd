// Command-line front end; talks to the pipeline exclusively through the
// usjepa C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "usjepa.h"

namespace {

struct CommonArgs {
  std::string config;
  std::string seed, out, workers, teacher, teacher_mode, usrc, loss;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config, "JSON run config");
  if (config_required) opt->required();
  cmd->add_option("--seed", args.seed, "override run.seed");
  cmd->add_option("--out", args.out, "override run.out (output directory)");
  cmd->add_option("--workers", args.workers, "worker threads (1 = bit-deterministic)");
  cmd->add_option("--teacher", args.teacher, "random | snapshot:PATH | checkpoint:PATH");
  cmd->add_option("--teacher-mode", args.teacher_mode, "static | ema");
  cmd->add_option("--usrc", args.usrc, "on | off (region-conditioned masking)");
  cmd->add_option("--loss", args.loss, "smooth_l1 | l1");
}

int fail(usj_run* run, usj_status status, const char* stage) {
  std::fprintf(stderr, "usjepa: %s failed: %s\n", stage,
               run ? usj_run_last_error(run) : "invalid arguments");
  if (run) usj_run_close(run);
  return status == USJ_ERR_CONFIG ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"US-JEPA pretraining and evaluation pipeline"};
  app.require_subcommand(1);

  const std::vector<std::string> modes = {"synth-data", "preprocess", "pretrain",   "probe",
                                          "fewshot",    "corrupt-sweep", "mask-viz", "report"};
  const std::vector<std::string> descriptions = {
      "generate the synthetic corpus + manifests",
      "run the intake pipeline over a manifest",
      "masked latent pretraining",
      "linear probe on frozen features",
      "few-shot label-fraction scaling",
      "corruption robustness sweep",
      "render context/target mask overlays",
      "aggregate report CSVs into a summary table"};

  std::vector<CommonArgs> args(modes.size());
  std::string classes, count, backbone, manifest;
  for (size_t i = 0; i < modes.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(modes[i], descriptions[i]);
    add_common(cmd, args[i]);
    if (modes[i] == "synth-data") {
      cmd->add_option("--classes", classes, "override synth.classes");
      cmd->add_option("--count", count, "override synth.count");
    }
    if (modes[i] == "probe" || modes[i] == "fewshot" || modes[i] == "corrupt-sweep")
      cmd->add_option("--backbone", backbone, "random | checkpoint:PATH");
    if (modes[i] == "preprocess" || modes[i] == "pretrain" || modes[i] == "mask-viz")
      cmd->add_option("--manifest", manifest, "override data.manifest");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string mode = app.get_subcommands().front()->get_name();
  size_t idx = 0;
  while (modes[idx] != mode) ++idx;
  const CommonArgs& a = args[idx];

  usj_run* run = nullptr;
  usj_status status = usj_run_open(a.config.c_str(), &run);
  if (status != USJ_OK) {
    std::fprintf(stderr, "usjepa: cannot load config '%s'\n", a.config.c_str());
    return 2;
  }

  const std::pair<const char*, const std::string*> overrides[] = {
      {"run.seed", &a.seed},         {"run.out", &a.out},
      {"run.workers", &a.workers},   {"model.teacher", &a.teacher},
      {"model.teacher_mode", &a.teacher_mode}, {"masking.usrc", &a.usrc},
      {"loss.kind", &a.loss},        {"synth.classes", &classes},
      {"synth.count", &count},       {"probe.backbone", &backbone},
      {"data.manifest", &manifest}};
  for (const auto& [key, value] : overrides) {
    if (value->empty()) continue;
    status = usj_run_set(run, key, value->c_str());
    if (status != USJ_OK) return fail(run, status, "override");
  }

  status = usj_run_execute(run, mode.c_str());
  if (status != USJ_OK) return fail(run, status, mode.c_str());

  std::printf("%s\n", usj_run_summary(run));
  usj_run_close(run);
  return 0;
}
