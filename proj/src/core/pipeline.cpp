#include "core/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "core/checkpoint.hpp"
#include "core/corruption.hpp"
#include "core/evalsuite.hpp"
#include "core/features.hpp"
#include "core/image_io.hpp"
#include "core/probe.hpp"
#include "core/sampler.hpp"
#include "core/synth.hpp"
#include "core/trainer.hpp"

namespace usjepa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir);
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

DatasetManifest load_required_manifest(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError("config: " + what + " manifest path is empty");
  if (!fs::exists(path)) throw ConfigError("config: " + what + " manifest not found: " + path);
  return load_manifest(path);
}

std::string zero_pad(long v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*ld", width, v);
  return buf;
}

}  // namespace

// ---- synth-data ----

json run_synth_data(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  ensure_dir((fs::path(cfg.out_dir) / "frames").string());
  ensure_dir((fs::path(cfg.out_dir) / "masks").string());

  const SynthConfig synth_cfg{cfg.synth_size, cfg.synth_classes};
  DatasetManifest manifest;
  manifest.n_t = cfg.n_t;
  manifest.seed = cfg.seed;
  manifest.root = cfg.out_dir;
  DatasetEntry entry{"synth", {}};
  entry.records.resize(static_cast<size_t>(cfg.synth_count));

  parallel_for(cfg.synth_count, cfg.workers, [&](long i) {
    const int label = static_cast<int>(i % cfg.synth_classes);
    const SynthSample sample = synth_frame(label, derive_seed(cfg.seed, "synth", i), synth_cfg);
    const std::string frame_rel = "frames/f_" + zero_pad(i, 6) + ".pgm";
    const std::string mask_rel = "masks/m_" + zero_pad(i, 6) + ".pbm";
    save_pgm((fs::path(cfg.out_dir) / frame_rel).string(), sample.frame);
    save_pbm((fs::path(cfg.out_dir) / mask_rel).string(), sample.region);
    entry.records[static_cast<size_t>(i)] = {"synth", frame_rel, label, mask_rel};
  });
  manifest.entries.push_back(std::move(entry));
  save_manifest((fs::path(cfg.out_dir) / "manifest.tsv").string(), manifest);

  // Stratified downstream splits for the labeled task.
  std::vector<std::vector<long>> per_class(static_cast<size_t>(cfg.synth_classes));
  for (long i = 0; i < cfg.synth_count; ++i)
    per_class[static_cast<size_t>(i % cfg.synth_classes)].push_back(i);
  std::vector<int> split(static_cast<size_t>(cfg.synth_count), 0);  // 0 train, 1 val, 2 test
  for (size_t k = 0; k < per_class.size(); ++k) {
    auto& idx = per_class[k];
    Rng rng(derive_seed(cfg.seed, "synth-split", k));
    for (long i = static_cast<long>(idx.size()) - 1; i > 0; --i)
      std::swap(idx[static_cast<size_t>(i)], idx[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
    const long n = static_cast<long>(idx.size());
    const long n_test = std::lround(cfg.synth_test_fraction * static_cast<double>(n));
    const long n_val = std::lround(cfg.synth_val_fraction * static_cast<double>(n));
    for (long i = 0; i < n; ++i)
      split[static_cast<size_t>(idx[static_cast<size_t>(i)])] = i < n_test ? 2 : (i < n_test + n_val ? 1 : 0);
  }
  const char* names[3] = {"downstream_train.tsv", "downstream_val.tsv", "downstream_test.tsv"};
  long counts[3] = {0, 0, 0};
  for (int s = 0; s < 3; ++s) {
    DatasetManifest part = manifest;
    part.entries[0].records.clear();
    for (long i = 0; i < cfg.synth_count; ++i)
      if (split[static_cast<size_t>(i)] == s)
        part.entries[0].records.push_back(manifest.entries[0].records[static_cast<size_t>(i)]);
    counts[s] = part.entries[0].size();
    save_manifest((fs::path(cfg.out_dir) / names[s]).string(), part);
  }

  json summary;
  summary["mode"] = "synth-data";
  summary["frames"] = cfg.synth_count;
  summary["classes"] = cfg.synth_classes;
  summary["size"] = cfg.synth_size;
  summary["manifest"] = (fs::path(cfg.out_dir) / "manifest.tsv").string();
  summary["downstream"] = {{"train", counts[0]}, {"val", counts[1]}, {"test", counts[2]}};
  return summary;
}

// ---- preprocess ----

json run_preprocess(const RunConfig& cfg) {
  const DatasetManifest manifest = load_required_manifest(cfg.manifest_path, "data");
  ensure_dir(cfg.out_dir);
  ensure_dir((fs::path(cfg.out_dir) / "frames").string());
  ensure_dir((fs::path(cfg.out_dir) / "masks").string());

  PreprocessStats stats;
  std::vector<std::pair<int, long>> refs;
  for (size_t d = 0; d < manifest.entries.size(); ++d)
    for (long i = 0; i < manifest.entries[d].size(); ++i)
      refs.emplace_back(static_cast<int>(d), i);

  DatasetManifest out = manifest;
  out.root = cfg.out_dir;
  std::vector<FrameRecord> new_records(refs.size());
  parallel_for(static_cast<long>(refs.size()), cfg.workers, [&](long i) {
    const auto [d, idx] = refs[static_cast<size_t>(i)];
    const FrameRecord& rec = manifest.record(d, idx);
    const LoadedFrame lf = load_and_preprocess(manifest, rec, cfg.preprocess, &stats);
    FrameRecord nr = rec;
    nr.path = "frames/p_" + zero_pad(i, 6) + ".pgm";
    nr.mask_path = "masks/p_" + zero_pad(i, 6) + ".pbm";
    save_pgm((fs::path(cfg.out_dir) / nr.path).string(), lf.frame);
    save_pbm((fs::path(cfg.out_dir) / nr.mask_path).string(), lf.region);
    new_records[static_cast<size_t>(i)] = std::move(nr);
  });
  for (auto& e : out.entries) e.records.clear();
  for (size_t i = 0; i < refs.size(); ++i)
    out.entries[static_cast<size_t>(refs[i].first)].records.push_back(new_records[i]);
  save_manifest((fs::path(cfg.out_dir) / "manifest.tsv").string(), out);

  json summary;
  summary["mode"] = "preprocess";
  summary["frames"] = refs.size();
  summary["inpainted"] = stats.inpainted.load();
  summary["inpaint_skipped_large"] = stats.inpaint_skipped_large.load();
  summary["rescale_skipped_small"] = stats.rescale_skipped_small.load();
  summary["manifest"] = (fs::path(cfg.out_dir) / "manifest.tsv").string();
  return summary;
}

// ---- pretrain ----

namespace {

// Resolves the teacher weight source; returns a provenance note.
std::string apply_teacher_source(ModelStack<float>& stack, const RunConfig& cfg) {
  const std::string& src = cfg.teacher_source;
  if (src == "random") return "random init (seed stream 'teacher')";
  const auto colon = src.find(':');
  const std::string kind = src.substr(0, colon == std::string::npos ? src.size() : colon);
  const std::string path = colon == std::string::npos ? "" : src.substr(colon + 1);
  if (path.empty()) throw ConfigError("config: teacher source '" + src + "' needs a path");
  if (!fs::exists(path)) throw ConfigError("config: teacher checkpoint not found: " + path);
  const CheckpointFile file = load_checkpoint(path);
  if (kind == "snapshot") {
    load_encoder_params(file, "student", stack.teacher());
    return "snapshot of student from " + path;
  }
  if (kind == "checkpoint") {
    for (const char* prefix : {"teacher", "encoder", "student"}) {
      try {
        load_encoder_params(file, prefix, stack.teacher());
        return std::string("entries '") + prefix + ".*' from " + path;
      } catch (const std::exception&) {
      }
    }
    throw ConfigError("config: no matching encoder entries in " + path);
  }
  throw ConfigError("config: teacher source must be random|snapshot:PATH|checkpoint:PATH");
}

void write_model_card(const RunConfig& cfg, const ModelStack<float>& stack,
                      const std::string& teacher_note, const TrainReport& report) {
  std::ofstream card(fs::path(cfg.out_dir) / "model_card.txt");
  card << "us-jepa model card\n";
  card << "config_hash: " << hex64(cfg.hash()) << "\n";
  card << "seed: " << cfg.seed << "\n";
  card << "teacher: " << teacher_note << "\n";
  card << "teacher_hash: " << hex64(stack.teacher_hash()) << "\n";
  card << "teacher_mode: "
       << (cfg.stack.teacher_mode == TeacherMode::kStatic ? "static" : "ema") << "\n";
  card << "usrc: " << (cfg.masking.usrc ? "on" : "off") << "\n";
  card << "loss: " << to_string(cfg.loss.kind) << " (beta " << cfg.loss.beta << ")\n";
  card << "student: patch " << cfg.stack.student.patch_size << ", dim "
       << cfg.stack.student.embed_dim << ", depth " << cfg.stack.student.depth << ", heads "
       << cfg.stack.student.heads << "\n";
  card << "predictor: dim " << cfg.stack.predictor.embed_dim << ", depth "
       << cfg.stack.predictor.depth << ", target_dim " << cfg.stack.predictor.target_dim << "\n";
  card << "epochs: " << cfg.optim.total_epochs << ", batch: " << cfg.batch_size << "\n";
  card << "best_epoch: " << report.best_epoch << ", best_val_loss: " << report.best_val << "\n";
}

}  // namespace

json run_pretrain(const RunConfig& cfg) {
  DatasetManifest manifest = load_required_manifest(cfg.manifest_path, "data");
  manifest.n_t = cfg.n_t;
  ensure_dir(cfg.out_dir);

  int too_small = 0;
  auto [train_m, val_m] = holdout_split(manifest, cfg.holdout_fraction, cfg.seed, &too_small);
  if (val_m.total_records() == 0)
    throw ConfigError("config: holdout produced an empty validation set");

  ModelStack<float> stack(cfg.stack);
  stack.init(cfg.seed);
  const std::string teacher_note = apply_teacher_source(stack, cfg);
  if (cfg.stack.teacher_mode == TeacherMode::kEma && cfg.teacher_source == "random")
    stack.copy_student_to_teacher();
  const std::uint64_t teacher_hash_before = stack.teacher_hash();

  TrainerOptions opts;
  opts.optim = cfg.optim;
  opts.loss = cfg.loss;
  opts.masking = cfg.masking;
  opts.batch_size = cfg.batch_size;
  opts.workers = cfg.workers;
  opts.seed = cfg.seed;
  opts.out_dir = cfg.out_dir;
  opts.cache_teacher = cfg.cache_teacher;
  opts.config_hash = cfg.hash();
  json extra;
  extra["seed"] = cfg.seed;
  extra["teacher"] = cfg.teacher_source;
  extra["usrc"] = cfg.masking.usrc;
  extra["loss"] = to_string(cfg.loss.kind);
  opts.extra_meta = extra.dump();

  PreprocessStats stats;
  Trainer<float> trainer(stack, opts);
  const TrainReport report = trainer.run(train_m, val_m, make_loader(cfg.preprocess, &stats));
  write_model_card(cfg, stack, teacher_note, report);

  json summary;
  summary["mode"] = "pretrain";
  summary["train_records"] = train_m.total_records();
  summary["val_records"] = val_m.total_records();
  summary["holdout_too_small_datasets"] = too_small;
  summary["val_epoch0"] = report.val_epoch0;
  summary["best_val"] = report.best_val;
  summary["best_epoch"] = report.best_epoch;
  summary["final_val"] = report.final_val;
  summary["mask_fallbacks"] = report.fallback_masks;
  summary["rejected_frames"] = report.rejected_frames;
  summary["teacher_static_unchanged"] =
      cfg.stack.teacher_mode != TeacherMode::kStatic || stack.teacher_hash() == teacher_hash_before;
  summary["best_checkpoint"] = report.best_checkpoint;
  summary["config_hash"] = hex64(cfg.hash());
  return summary;
}

// ---- probing / few-shot / corruption ----

ViTEncoder<float> build_probe_backbone(const RunConfig& cfg, std::string* backbone_id) {
  ViTEncoder<float> encoder(cfg.stack.student);
  if (cfg.backbone == "random") {
    encoder.init(derive_seed(cfg.seed, "probe-backbone"));
    if (backbone_id) *backbone_id = "random";
    return encoder;
  }
  const auto colon = cfg.backbone.find(':');
  if (colon == std::string::npos || cfg.backbone.substr(0, colon) != "checkpoint")
    throw ConfigError("config: probe.backbone must be 'random' or 'checkpoint:PATH'");
  const std::string path = cfg.backbone.substr(colon + 1);
  if (!fs::exists(path)) throw ConfigError("config: backbone checkpoint not found: " + path);
  load_encoder_params(load_checkpoint(path), "student", encoder);
  if (backbone_id) *backbone_id = fs::path(path).filename().string();
  return encoder;
}

namespace {

struct EvalData {
  ViTEncoder<float> backbone;
  std::string backbone_id;
  DatasetManifest train_m, val_m, test_m;
  FeatureTable train_f, val_f, test_f;
  ProbeConfig probe_cfg;
};

EvalData build_eval_data(const RunConfig& cfg) {
  EvalData data;
  data.probe_cfg = cfg.probe;
  data.backbone = build_probe_backbone(cfg, &data.backbone_id);
  data.train_m = load_required_manifest(cfg.train_manifest, "probe.train");
  data.val_m = load_required_manifest(cfg.val_manifest, "probe.val");
  data.test_m = load_required_manifest(cfg.test_manifest, "probe.test");

  const FrameLoader loader = make_loader(cfg.preprocess);
  data.train_f = extract_features(data.backbone, data.train_m, loader, cfg.workers, "train");
  data.val_f = extract_features(data.backbone, data.val_m, loader, cfg.workers, "val");
  data.test_f = extract_features(data.backbone, data.test_m, loader, cfg.workers, "test");

  int max_label = -1;
  for (const auto* t : {&data.train_f, &data.val_f, &data.test_f})
    for (int y : t->labels) {
      if (y < 0) throw ConfigError("config: probing requires labeled manifests");
      max_label = std::max(max_label, y);
    }
  data.probe_cfg.num_classes = max_label + 1;
  data.train_f.backbone_id = data.val_f.backbone_id = data.test_f.backbone_id = data.backbone_id;
  return data;
}

std::vector<std::int64_t> all_indices(const FeatureTable& t) {
  std::vector<std::int64_t> idx(static_cast<size_t>(t.rows));
  for (std::int64_t i = 0; i < t.rows; ++i) idx[static_cast<size_t>(i)] = i;
  return idx;
}

json rows_summary_json(const std::vector<ReportRow>& rows) {
  json out = json::array();
  for (const auto& l : summarize(rows)) {
    out.push_back({{"task", l.task},
                   {"backbone", l.backbone},
                   {"fraction", l.fraction},
                   {"corruption", l.corruption},
                   {"severity", l.severity},
                   {"mean", l.mean},
                   {"std", l.stddev},
                   {"seeds", l.seeds}});
  }
  return out;
}

void write_reports(const RunConfig& cfg, const std::string& stem,
                   const std::vector<ReportRow>& rows) {
  write_report_csv((fs::path(cfg.out_dir) / (stem + "_report.csv")).string(), rows);
  std::ofstream md(fs::path(cfg.out_dir) / (stem + "_summary.md"));
  md << summary_markdown(summarize(rows));
}

}  // namespace

json run_probe(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  EvalData data = build_eval_data(cfg);
  const std::uint64_t hash_before = encoder_hash(data.backbone);

  std::vector<ReportRow> rows;
  const auto train_idx = all_indices(data.train_f);
  for (int k = 0; k < cfg.probe_seeds; ++k) {
    const std::uint64_t probe_seed = derive_seed(cfg.seed, "probe-seed", static_cast<std::uint64_t>(k));
    const LinearProbe probe = train_probe(data.train_f, train_idx, data.val_f, data.probe_cfg, probe_seed);
    const double f1 = macro_f1(probe.predict(data.test_f), data.test_f.labels, data.probe_cfg.num_classes);
    rows.push_back({cfg.task_name, data.backbone_id, k, 1.0, "none", 0, f1});
  }
  write_reports(cfg, "probe", rows);

  json summary;
  summary["mode"] = "probe";
  summary["task"] = cfg.task_name;
  summary["backbone"] = data.backbone_id;
  summary["classes"] = data.probe_cfg.num_classes;
  summary["results"] = rows_summary_json(rows);
  summary["backbone_unchanged"] = encoder_hash(data.backbone) == hash_before;
  return summary;
}

json run_fewshot(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  EvalData data = build_eval_data(cfg);

  std::vector<ReportRow> rows;
  std::vector<double> skipped;
  for (double fraction : cfg.fractions) {
    for (int k = 0; k < cfg.probe_seeds; ++k) {
      const std::uint64_t probe_seed =
          derive_seed(cfg.seed, "probe-seed", static_cast<std::uint64_t>(k));
      Rng sub_rng(derive_seed(probe_seed, "subsample"));
      std::vector<std::int64_t> idx;
      try {
        idx = stratified_indices(data.train_f.labels, data.probe_cfg.num_classes, fraction, sub_rng);
      } catch (const std::invalid_argument&) {
        skipped.push_back(fraction);
        break;  // class unrepresentable at this fraction
      }
      const LinearProbe probe = train_probe(data.train_f, idx, data.val_f, data.probe_cfg, probe_seed);
      const double f1 =
          macro_f1(probe.predict(data.test_f), data.test_f.labels, data.probe_cfg.num_classes);
      rows.push_back({cfg.task_name, data.backbone_id, k, fraction, "none", 0, f1});
    }
  }
  write_reports(cfg, "fewshot", rows);

  json summary;
  summary["mode"] = "fewshot";
  summary["task"] = cfg.task_name;
  summary["backbone"] = data.backbone_id;
  summary["skipped_fractions"] = skipped;
  summary["results"] = rows_summary_json(rows);
  return summary;
}

namespace {

void write_gallery(const RunConfig& cfg, const EvalData& data) {
  const FrameLoader loader = make_loader(cfg.preprocess);
  std::vector<std::pair<int, long>> refs;
  for (size_t d = 0; d < data.test_m.entries.size(); ++d)
    for (long r = 0; r < data.test_m.entries[d].size(); ++r)
      if (refs.size() < static_cast<size_t>(cfg.gallery_frames))
        refs.emplace_back(static_cast<int>(d), r);
  const long n = static_cast<long>(refs.size());
  long written = 0;
  for (long i = 0; i < n; ++i) {
    const FrameRecord& rec = data.test_m.record(refs[static_cast<size_t>(i)].first,
                                                refs[static_cast<size_t>(i)].second);
    const LoadedFrame lf = loader(data.test_m, rec);
    const int H = lf.frame.height, W = lf.frame.width;
    const int kinds = static_cast<int>(cfg.corruption_kinds.size());
    const int cols = 4;  // severity 0..3
    const int sep = 2;
    const int GH = kinds * H + (kinds - 1) * sep;
    const int GW = cols * W + (cols - 1) * sep;
    std::vector<float> rgb(static_cast<size_t>(GH) * GW * 3, 1.0f);
    for (int kr = 0; kr < kinds; ++kr) {
      const CorruptionKind kind = corruption_kind_from_string(cfg.corruption_kinds[static_cast<size_t>(kr)]);
      for (int eps = 0; eps < cols; ++eps) {
        CorruptionSpec spec{kind, eps, derive_seed(cfg.seed, "gallery", static_cast<std::uint64_t>(i))};
        const Frame tile = eps == 0 ? lf.frame : apply_corruption(lf.frame, lf.region, spec);
        const int r0 = kr * (H + sep), c0 = eps * (W + sep);
        for (int r = 0; r < H; ++r)
          for (int c = 0; c < W; ++c) {
            const float v = tile.at(r, c);
            const size_t off = (static_cast<size_t>(r0 + r) * GW + c0 + c) * 3;
            rgb[off] = rgb[off + 1] = rgb[off + 2] = v;
          }
      }
    }
    save_ppm((fs::path(cfg.out_dir) / ("gallery_" + zero_pad(i, 2) + ".ppm")).string(), GH, GW, rgb);
    ++written;
  }
  std::cerr << "[corrupt-sweep] wrote " << written << " gallery grids\n";
}

}  // namespace

json run_corrupt_sweep(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  EvalData data = build_eval_data(cfg);
  const FrameLoader loader = make_loader(cfg.preprocess);

  // Probes are trained once per seed on full, uncorrupted training features.
  std::vector<LinearProbe> probes;
  const auto train_idx = all_indices(data.train_f);
  for (int k = 0; k < cfg.probe_seeds; ++k) {
    const std::uint64_t probe_seed = derive_seed(cfg.seed, "probe-seed", static_cast<std::uint64_t>(k));
    probes.push_back(train_probe(data.train_f, train_idx, data.val_f, data.probe_cfg, probe_seed));
  }

  std::vector<ReportRow> rows;
  for (const std::string& kind_name : cfg.corruption_kinds) {
    const CorruptionKind kind = corruption_kind_from_string(kind_name);
    for (int eps = 0; eps <= 3; ++eps) {
      if (eps > 0 && std::find(cfg.severities.begin(), cfg.severities.end(), eps) == cfg.severities.end())
        continue;
      FeatureTable features;
      if (eps == 0) {
        features = data.test_f;
      } else {
        FrameTransform transform = [&](const Frame& f, const RegionMask& region, long index) {
          CorruptionSpec spec{kind, eps, derive_seed(cfg.seed, "corrupt", static_cast<std::uint64_t>(index))};
          return apply_corruption(f, region, spec);
        };
        features = extract_features(data.backbone, data.test_m, loader, cfg.workers, "test", &transform);
      }
      for (int k = 0; k < cfg.probe_seeds; ++k) {
        const double f1 = macro_f1(probes[static_cast<size_t>(k)].predict(features),
                                   features.labels, data.probe_cfg.num_classes);
        rows.push_back({cfg.task_name, data.backbone_id, k, 1.0, kind_name, eps, f1});
      }
    }
  }
  write_reports(cfg, "robustness", rows);
  if (cfg.gallery) write_gallery(cfg, data);

  json summary;
  summary["mode"] = "corrupt-sweep";
  summary["task"] = cfg.task_name;
  summary["backbone"] = data.backbone_id;
  summary["results"] = rows_summary_json(rows);
  return summary;
}

// ---- mask visualization ----

json run_mask_viz(const RunConfig& cfg) {
  const DatasetManifest manifest = load_required_manifest(cfg.manifest_path, "data");
  ensure_dir(cfg.out_dir);
  const FrameLoader loader = make_loader(cfg.preprocess);

  std::vector<std::pair<int, long>> refs;
  for (size_t d = 0; d < manifest.entries.size() && refs.size() < static_cast<size_t>(cfg.viz_frames); ++d)
    for (long i = 0; i < manifest.entries[d].size() && refs.size() < static_cast<size_t>(cfg.viz_frames); ++i)
      refs.emplace_back(static_cast<int>(d), i);

  long written = 0, rejected = 0;
  for (size_t i = 0; i < refs.size(); ++i) {
    const LoadedFrame lf = loader(manifest, manifest.record(refs[i].first, refs[i].second));
    const PatchGrid grid = PatchGrid::make(lf.frame.height, lf.frame.width, cfg.stack.student.patch_size);
    Rng rng(derive_seed(cfg.seed, "mask-viz", i));
    auto masks = sample_mask_set(grid, lf.region.bits.empty() ? nullptr : &lf.region, cfg.masking, rng);
    if (!masks) {
      ++rejected;
      continue;
    }
    const int H = lf.frame.height, W = lf.frame.width;
    std::vector<float> rgb(static_cast<size_t>(H) * W * 3);
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        const float v = lf.frame.at(r, c);
        const size_t off = (static_cast<size_t>(r) * W + c) * 3;
        rgb[off] = rgb[off + 1] = rgb[off + 2] = v;
      }
    auto tint = [&](const std::vector<int>& patches, float tr, float tg, float tb) {
      for (int idx : patches) {
        const int r0 = grid.patch_row(idx) * grid.patch_size;
        const int c0 = grid.patch_col(idx) * grid.patch_size;
        for (int r = r0; r < r0 + grid.patch_size; ++r)
          for (int c = c0; c < c0 + grid.patch_size; ++c) {
            const size_t off = (static_cast<size_t>(r) * W + c) * 3;
            rgb[off] = 0.55f * rgb[off] + 0.45f * tr;
            rgb[off + 1] = 0.55f * rgb[off + 1] + 0.45f * tg;
            rgb[off + 2] = 0.55f * rgb[off + 2] + 0.45f * tb;
          }
      }
    };
    tint(masks->context, 0.1f, 0.9f, 0.1f);  // context: green
    for (const auto& t : masks->targets) tint(t, 0.9f, 0.1f, 0.1f);  // targets: red
    save_ppm((fs::path(cfg.out_dir) / ("maskviz_" + zero_pad(static_cast<long>(i), 3) + ".ppm")).string(),
             H, W, rgb);
    ++written;
  }

  json summary;
  summary["mode"] = "mask-viz";
  summary["written"] = written;
  summary["rejected"] = rejected;
  return summary;
}

// ---- report ----

json run_report(const RunConfig& cfg) {
  if (!fs::exists(cfg.out_dir)) throw ConfigError("config: run directory not found: " + cfg.out_dir);
  std::vector<ReportRow> rows;
  std::vector<std::string> sources;
  for (const auto& entry : fs::directory_iterator(cfg.out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 11 && name.ends_with("_report.csv")) {
      auto part = read_report_csv(entry.path().string());
      rows.insert(rows.end(), part.begin(), part.end());
      sources.push_back(name);
    }
  }
  std::sort(sources.begin(), sources.end());
  if (rows.empty()) throw ConfigError("config: no *_report.csv files under " + cfg.out_dir);

  const std::string markdown = summary_markdown(summarize(rows));
  std::ofstream md(fs::path(cfg.out_dir) / "report.md");
  md << markdown;

  json summary;
  summary["mode"] = "report";
  summary["sources"] = sources;
  summary["rows"] = rows.size();
  summary["markdown"] = markdown;
  summary["results"] = rows_summary_json(rows);
  return summary;
}

json run_mode(const RunConfig& cfg, const std::string& mode) {
  if (mode == "synth-data") return run_synth_data(cfg);
  if (mode == "preprocess") return run_preprocess(cfg);
  if (mode == "pretrain") return run_pretrain(cfg);
  if (mode == "probe") return run_probe(cfg);
  if (mode == "fewshot") return run_fewshot(cfg);
  if (mode == "corrupt-sweep") return run_corrupt_sweep(cfg);
  if (mode == "mask-viz") return run_mask_viz(cfg);
  if (mode == "report") return run_report(cfg);
  throw ConfigError("config: unknown mode '" + mode + "'");
}

}  // namespace usjepa
