#include "core/config.hpp"

#include <fstream>
#include <set>

#include "core/corruption.hpp"

namespace usjepa {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw ConfigError("config: " + what); }

void check_known_keys(const json& j, const std::string& section,
                      const std::set<std::string>& known) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) bad(section + ": unknown key '" + key + "'");
}

template <class U>
U get_or(const json& j, const std::string& key, U fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<U>();
  } catch (const json::exception&) {
    bad("key '" + key + "' has the wrong type");
  }
}

std::pair<double, double> get_range(const json& j, const std::string& key, double lo, double hi) {
  if (!j.contains(key)) return {lo, hi};
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    bad("key '" + key + "' must be a [min, max] pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

void parse_run(const json& j, RunConfig& cfg) {
  check_known_keys(j, "run", {"out", "seed", "workers"});
  cfg.out_dir = get_or<std::string>(j, "out", cfg.out_dir);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.workers = get_or<int>(j, "workers", cfg.workers);
  if (cfg.workers < 1) bad("run.workers must be >= 1");
}

void parse_preprocess(const json& j, PreprocessConfig& p) {
  check_known_keys(j, "data.preprocess",
                   {"enabled", "percentile_lo", "percentile_hi", "artifact_area_limit",
                    "artifact_chroma_threshold", "min_region_pixels", "region_threshold",
                    "region_close_radius"});
  p.enabled = get_or<bool>(j, "enabled", p.enabled);
  p.percentile_lo = get_or<double>(j, "percentile_lo", p.percentile_lo);
  p.percentile_hi = get_or<double>(j, "percentile_hi", p.percentile_hi);
  p.artifact_area_limit = get_or<double>(j, "artifact_area_limit", p.artifact_area_limit);
  p.artifact_chroma_threshold =
      get_or<float>(j, "artifact_chroma_threshold", p.artifact_chroma_threshold);
  p.min_region_pixels = get_or<std::size_t>(j, "min_region_pixels", p.min_region_pixels);
  p.region_params.threshold = get_or<float>(j, "region_threshold", p.region_params.threshold);
  p.region_params.close_radius = get_or<int>(j, "region_close_radius", p.region_params.close_radius);
  if (!(p.percentile_lo < p.percentile_hi)) bad("data.preprocess: percentile_lo must be < percentile_hi");
}

void parse_data(const json& j, RunConfig& cfg) {
  check_known_keys(j, "data", {"manifest", "nt", "holdout_fraction", "input_size", "preprocess"});
  cfg.manifest_path = get_or<std::string>(j, "manifest", cfg.manifest_path);
  cfg.n_t = get_or<long>(j, "nt", cfg.n_t);
  cfg.holdout_fraction = get_or<double>(j, "holdout_fraction", cfg.holdout_fraction);
  cfg.preprocess.input_size = get_or<int>(j, "input_size", cfg.preprocess.input_size);
  if (j.contains("preprocess")) parse_preprocess(j.at("preprocess"), cfg.preprocess);
  if (cfg.n_t < 1) bad("data.nt must be >= 1");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0))
    bad("data.holdout_fraction must be in (0,1)");
}

void parse_model(const json& j, RunConfig& cfg) {
  check_known_keys(j, "model",
                   {"patch_size", "embed_dim", "depth", "heads", "mlp_ratio", "predictor_dim",
                    "predictor_depth", "predictor_heads", "target_dim", "teacher_depth",
                    "teacher_heads", "teacher_mode", "teacher", "ema_momentum"});
  auto& s = cfg.stack.student;
  s.patch_size = get_or<int>(j, "patch_size", s.patch_size);
  s.embed_dim = get_or<int>(j, "embed_dim", s.embed_dim);
  s.depth = get_or<int>(j, "depth", s.depth);
  s.heads = get_or<int>(j, "heads", s.heads);
  s.mlp_ratio = get_or<int>(j, "mlp_ratio", s.mlp_ratio);

  auto& p = cfg.stack.predictor;
  p.embed_dim = get_or<int>(j, "predictor_dim", p.embed_dim);
  p.depth = get_or<int>(j, "predictor_depth", p.depth);
  p.heads = get_or<int>(j, "predictor_heads", p.heads);
  p.target_dim = get_or<int>(j, "target_dim", p.target_dim);
  p.mlp_ratio = s.mlp_ratio;

  auto& t = cfg.stack.teacher;
  t.patch_size = s.patch_size;
  t.embed_dim = p.target_dim;
  t.depth = get_or<int>(j, "teacher_depth", s.depth);
  t.heads = get_or<int>(j, "teacher_heads", s.heads);
  t.mlp_ratio = s.mlp_ratio;

  const std::string mode = get_or<std::string>(j, "teacher_mode", "static");
  if (mode == "static") cfg.stack.teacher_mode = TeacherMode::kStatic;
  else if (mode == "ema") cfg.stack.teacher_mode = TeacherMode::kEma;
  else bad("model.teacher_mode must be 'static' or 'ema'");
  cfg.teacher_source = get_or<std::string>(j, "teacher", cfg.teacher_source);
  std::tie(cfg.stack.ema_momentum_start, cfg.stack.ema_momentum_final) =
      get_range(j, "ema_momentum", cfg.stack.ema_momentum_start, cfg.stack.ema_momentum_final);

  try {
    cfg.stack.validate();
  } catch (const std::exception& e) {
    bad(std::string("model: ") + e.what());
  }
}

void parse_masking(const json& j, RunConfig& cfg) {
  check_known_keys(j, "masking",
                   {"usrc", "context_count", "context_scale", "target_count", "target_scale",
                    "aspect_ratio", "min_patches", "max_attempts"});
  cfg.masking.usrc = get_or<bool>(j, "usrc", cfg.masking.usrc);
  const int context_count = get_or<int>(j, "context_count", 1);
  if (context_count != 1) bad("masking.context_count: only a single context block is supported");
  std::tie(cfg.masking.context.scale_min, cfg.masking.context.scale_max) =
      get_range(j, "context_scale", cfg.masking.context.scale_min, cfg.masking.context.scale_max);
  cfg.masking.targets.count = get_or<int>(j, "target_count", cfg.masking.targets.count);
  std::tie(cfg.masking.targets.scale_min, cfg.masking.targets.scale_max) =
      get_range(j, "target_scale", cfg.masking.targets.scale_min, cfg.masking.targets.scale_max);
  auto [amin, amax] = get_range(j, "aspect_ratio", cfg.masking.targets.aspect_min,
                                cfg.masking.targets.aspect_max);
  cfg.masking.targets.aspect_min = cfg.masking.context.aspect_min = amin;
  cfg.masking.targets.aspect_max = cfg.masking.context.aspect_max = amax;
  const int tau = get_or<int>(j, "min_patches", cfg.masking.targets.tau);
  cfg.masking.targets.tau = cfg.masking.context.tau = tau;
  const int attempts = get_or<int>(j, "max_attempts", cfg.masking.targets.max_attempts);
  cfg.masking.targets.max_attempts = cfg.masking.context.max_attempts = attempts;
  try {
    cfg.masking.context.validate();
    cfg.masking.targets.validate();
  } catch (const std::exception& e) {
    bad(std::string("masking: ") + e.what());
  }
}

void parse_optim(const json& j, RunConfig& cfg) {
  check_known_keys(j, "optim",
                   {"epochs", "warmup_epochs", "base_lr", "start_lr", "final_lr", "weight_decay",
                    "final_weight_decay", "betas", "epsilon", "batch_size", "cache_teacher"});
  auto& o = cfg.optim;
  o.total_epochs = get_or<int>(j, "epochs", o.total_epochs);
  o.warmup_epochs = get_or<int>(j, "warmup_epochs", o.warmup_epochs);
  o.base_lr = get_or<double>(j, "base_lr", o.base_lr);
  o.start_lr = get_or<double>(j, "start_lr", o.start_lr);
  o.final_lr = get_or<double>(j, "final_lr", o.final_lr);
  o.wd_start = get_or<double>(j, "weight_decay", o.wd_start);
  o.wd_final = get_or<double>(j, "final_weight_decay", o.wd_final);
  std::tie(o.beta1, o.beta2) = get_range(j, "betas", o.beta1, o.beta2);
  o.epsilon = get_or<double>(j, "epsilon", o.epsilon);
  cfg.batch_size = get_or<int>(j, "batch_size", cfg.batch_size);
  cfg.cache_teacher = get_or<bool>(j, "cache_teacher", cfg.cache_teacher);
  if (cfg.batch_size < 1) bad("optim.batch_size must be >= 1");
  try {
    o.validate();
  } catch (const std::exception& e) {
    bad(std::string("optim: ") + e.what());
  }
}

void parse_loss(const json& j, RunConfig& cfg) {
  check_known_keys(j, "loss", {"kind", "beta"});
  const std::string kind = get_or<std::string>(j, "kind", to_string(cfg.loss.kind));
  try {
    cfg.loss.kind = loss_kind_from_string(kind);
  } catch (const std::exception& e) {
    bad(e.what());
  }
  cfg.loss.beta = get_or<double>(j, "beta", cfg.loss.beta);
  if (!(cfg.loss.beta > 0.0)) bad("loss.beta must be positive");
}

void parse_probe(const json& j, RunConfig& cfg) {
  check_known_keys(j, "probe",
                   {"lr", "weight_decay", "batch_size", "max_epochs", "patience", "seeds",
                    "backbone", "train_manifest", "val_manifest", "test_manifest", "task"});
  cfg.probe.lr = get_or<double>(j, "lr", cfg.probe.lr);
  cfg.probe.weight_decay = get_or<double>(j, "weight_decay", cfg.probe.weight_decay);
  cfg.probe.batch_size = get_or<int>(j, "batch_size", cfg.probe.batch_size);
  cfg.probe.max_epochs = get_or<int>(j, "max_epochs", cfg.probe.max_epochs);
  cfg.probe.patience = get_or<int>(j, "patience", cfg.probe.patience);
  cfg.probe_seeds = get_or<int>(j, "seeds", cfg.probe_seeds);
  cfg.backbone = get_or<std::string>(j, "backbone", cfg.backbone);
  cfg.train_manifest = get_or<std::string>(j, "train_manifest", cfg.train_manifest);
  cfg.val_manifest = get_or<std::string>(j, "val_manifest", cfg.val_manifest);
  cfg.test_manifest = get_or<std::string>(j, "test_manifest", cfg.test_manifest);
  cfg.task_name = get_or<std::string>(j, "task", cfg.task_name);
  if (cfg.probe_seeds < 1) bad("probe.seeds must be >= 1");
  if (cfg.probe.batch_size < 1 || cfg.probe.max_epochs < 1 || cfg.probe.patience < 1)
    bad("probe: batch_size, max_epochs and patience must be >= 1");
}

void parse_fewshot(const json& j, RunConfig& cfg) {
  check_known_keys(j, "fewshot", {"fractions"});
  if (j.contains("fractions")) {
    cfg.fractions.clear();
    for (const auto& v : j.at("fractions")) {
      if (!v.is_number()) bad("fewshot.fractions must be numbers");
      cfg.fractions.push_back(v.get<double>());
    }
    for (double f : cfg.fractions)
      if (!(f > 0.0 && f <= 1.0)) bad("fewshot.fractions must lie in (0,1]");
  }
}

void parse_corruption(const json& j, RunConfig& cfg) {
  check_known_keys(j, "corruption", {"kinds", "severities", "gallery", "gallery_frames"});
  if (j.contains("kinds")) {
    cfg.corruption_kinds.clear();
    for (const auto& v : j.at("kinds")) cfg.corruption_kinds.push_back(v.get<std::string>());
  }
  for (const auto& k : cfg.corruption_kinds) {
    try {
      corruption_kind_from_string(k);
    } catch (const std::exception& e) {
      bad(e.what());
    }
  }
  if (j.contains("severities")) {
    cfg.severities.clear();
    for (const auto& v : j.at("severities")) cfg.severities.push_back(v.get<int>());
  }
  for (int s : cfg.severities)
    if (s < 1 || s > 3) bad("corruption.severities must lie in {1,2,3}");
  cfg.gallery = get_or<bool>(j, "gallery", cfg.gallery);
  cfg.gallery_frames = get_or<int>(j, "gallery_frames", cfg.gallery_frames);
}

void parse_synth(const json& j, RunConfig& cfg) {
  check_known_keys(j, "synth", {"classes", "count", "size", "val_fraction", "test_fraction"});
  cfg.synth_classes = get_or<int>(j, "classes", cfg.synth_classes);
  cfg.synth_count = get_or<long>(j, "count", cfg.synth_count);
  cfg.synth_size = get_or<int>(j, "size", cfg.synth_size);
  cfg.synth_val_fraction = get_or<double>(j, "val_fraction", cfg.synth_val_fraction);
  cfg.synth_test_fraction = get_or<double>(j, "test_fraction", cfg.synth_test_fraction);
  if (cfg.synth_classes < 2 || cfg.synth_classes > 3)
    bad("synth.classes must be 2 or 3 (disk, ring, twin-disk shapes)");
  if (cfg.synth_count < cfg.synth_classes) bad("synth.count too small");
  if (cfg.synth_size < 16) bad("synth.size must be >= 16");
  if (!(cfg.synth_val_fraction > 0.0 && cfg.synth_test_fraction > 0.0 &&
        cfg.synth_val_fraction + cfg.synth_test_fraction < 1.0))
    bad("synth: val/test fractions must be positive and sum below 1");
}

void parse_viz(const json& j, RunConfig& cfg) {
  check_known_keys(j, "viz", {"frames"});
  cfg.viz_frames = get_or<int>(j, "frames", cfg.viz_frames);
  if (cfg.viz_frames < 1) bad("viz.frames must be >= 1");
}

}  // namespace

RunConfig parse_config_json(const json& j) {
  if (!j.is_object()) bad("top level must be an object");
  check_known_keys(j, "config",
                   {"run", "data", "model", "masking", "optim", "loss", "probe", "fewshot",
                    "corruption", "synth", "viz"});
  RunConfig cfg;
  if (j.contains("run")) parse_run(j.at("run"), cfg);
  if (j.contains("data")) parse_data(j.at("data"), cfg);
  if (j.contains("model")) parse_model(j.at("model"), cfg);
  if (j.contains("masking")) parse_masking(j.at("masking"), cfg);
  if (j.contains("optim")) parse_optim(j.at("optim"), cfg);
  if (j.contains("loss")) parse_loss(j.at("loss"), cfg);
  if (j.contains("probe")) parse_probe(j.at("probe"), cfg);
  if (j.contains("fewshot")) parse_fewshot(j.at("fewshot"), cfg);
  if (j.contains("corruption")) parse_corruption(j.at("corruption"), cfg);
  if (j.contains("synth")) parse_synth(j.at("synth"), cfg);
  if (j.contains("viz")) parse_viz(j.at("viz"), cfg);
  if (!j.contains("model")) {
    // Still resolve derived teacher fields for default-constructed models.
    cfg.stack.teacher.patch_size = cfg.stack.student.patch_size;
    cfg.stack.teacher.embed_dim = cfg.stack.predictor.target_dim;
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);  // allow comments
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config_json(j);
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "run.seed") cfg.seed = std::stoull(value);
    else if (key == "run.out") cfg.out_dir = value;
    else if (key == "run.workers") cfg.workers = std::max(1, std::stoi(value));
    else if (key == "data.manifest") cfg.manifest_path = value;
    else if (key == "model.teacher") cfg.teacher_source = value;
    else if (key == "model.teacher_mode") {
      if (value == "static") cfg.stack.teacher_mode = TeacherMode::kStatic;
      else if (value == "ema") cfg.stack.teacher_mode = TeacherMode::kEma;
      else bad("model.teacher_mode must be 'static' or 'ema'");
    } else if (key == "masking.usrc") {
      if (value == "on" || value == "true") cfg.masking.usrc = true;
      else if (value == "off" || value == "false") cfg.masking.usrc = false;
      else bad("masking.usrc must be on/off");
    } else if (key == "loss.kind") cfg.loss.kind = loss_kind_from_string(value);
    else if (key == "probe.backbone") cfg.backbone = value;
    else if (key == "synth.classes") cfg.synth_classes = std::stoi(value);
    else if (key == "synth.count") cfg.synth_count = std::stol(value);
    else bad("unknown override key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    bad("override " + key + "=" + value + ": " + e.what());
  }
}

std::string RunConfig::canonical_json() const {
  json j;
  j["run"] = {{"out", out_dir}, {"seed", seed}, {"workers", workers}};
  j["data"] = {{"manifest", manifest_path},
               {"nt", n_t},
               {"holdout_fraction", holdout_fraction},
               {"input_size", preprocess.input_size},
               {"preprocess",
                {{"enabled", preprocess.enabled},
                 {"percentile_lo", preprocess.percentile_lo},
                 {"percentile_hi", preprocess.percentile_hi},
                 {"artifact_area_limit", preprocess.artifact_area_limit},
                 {"artifact_chroma_threshold", preprocess.artifact_chroma_threshold},
                 {"min_region_pixels", preprocess.min_region_pixels},
                 {"region_threshold", preprocess.region_params.threshold},
                 {"region_close_radius", preprocess.region_params.close_radius}}}};
  j["model"] = {{"patch_size", stack.student.patch_size},
                {"embed_dim", stack.student.embed_dim},
                {"depth", stack.student.depth},
                {"heads", stack.student.heads},
                {"mlp_ratio", stack.student.mlp_ratio},
                {"predictor_dim", stack.predictor.embed_dim},
                {"predictor_depth", stack.predictor.depth},
                {"predictor_heads", stack.predictor.heads},
                {"target_dim", stack.predictor.target_dim},
                {"teacher_depth", stack.teacher.depth},
                {"teacher_heads", stack.teacher.heads},
                {"teacher_mode", stack.teacher_mode == TeacherMode::kStatic ? "static" : "ema"},
                {"teacher", teacher_source},
                {"ema_momentum", {stack.ema_momentum_start, stack.ema_momentum_final}}};
  j["masking"] = {{"usrc", masking.usrc},
                  {"context_count", 1},
                  {"context_scale", {masking.context.scale_min, masking.context.scale_max}},
                  {"target_count", masking.targets.count},
                  {"target_scale", {masking.targets.scale_min, masking.targets.scale_max}},
                  {"aspect_ratio", {masking.targets.aspect_min, masking.targets.aspect_max}},
                  {"min_patches", masking.targets.tau},
                  {"max_attempts", masking.targets.max_attempts}};
  j["optim"] = {{"epochs", optim.total_epochs},
                {"warmup_epochs", optim.warmup_epochs},
                {"base_lr", optim.base_lr},
                {"start_lr", optim.start_lr},
                {"final_lr", optim.final_lr},
                {"weight_decay", optim.wd_start},
                {"final_weight_decay", optim.wd_final},
                {"betas", {optim.beta1, optim.beta2}},
                {"epsilon", optim.epsilon},
                {"batch_size", batch_size},
                {"cache_teacher", cache_teacher}};
  j["loss"] = {{"kind", to_string(loss.kind)}, {"beta", loss.beta}};
  j["probe"] = {{"lr", probe.lr},
                {"weight_decay", probe.weight_decay},
                {"batch_size", probe.batch_size},
                {"max_epochs", probe.max_epochs},
                {"patience", probe.patience},
                {"seeds", probe_seeds},
                {"backbone", backbone},
                {"train_manifest", train_manifest},
                {"val_manifest", val_manifest},
                {"test_manifest", test_manifest},
                {"task", task_name}};
  j["fewshot"] = {{"fractions", fractions}};
  j["corruption"] = {{"kinds", corruption_kinds},
                     {"severities", severities},
                     {"gallery", gallery},
                     {"gallery_frames", gallery_frames}};
  j["synth"] = {{"classes", synth_classes},
                {"count", synth_count},
                {"size", synth_size},
                {"val_fraction", synth_val_fraction},
                {"test_fraction", synth_test_fraction}};
  j["viz"] = {{"frames", viz_frames}};
  return j.dump();
}

std::uint64_t RunConfig::hash() const {
  const std::string s = canonical_json();
  return fnv1a64(s.data(), s.size());
}

}  // namespace usjepa
