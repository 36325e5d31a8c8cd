#include "core/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace usjepa {

namespace fs = std::filesystem;

template <class T>
Trainer<T>::Trainer(ModelStack<T>& stack, TrainerOptions opts) : stack_(stack), opts_(std::move(opts)) {
  opts_.optim.validate();
  opts_.loss.validate();
  std::vector<Parameter<T>*> params;
  for (auto& np : stack_.trainable_params()) params.push_back(np.param);
  optimizer_ = std::make_unique<AdamW<T>>(std::move(params), opts_.optim);
}

template <class T>
Tensor<T> Trainer<T>::teacher_targets(const TrainSample<T>& sample) const {
  if (sample.teacher) return *sample.teacher;
  return stack_.encode_target(sample.frame);
}

template <class T>
double Trainer<T>::train_step(const std::vector<TrainSample<T>>& batch, double lr, double wd,
                              double ema_momentum) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  optimizer_->zero_grad();
  const T inv_batch = T(1) / static_cast<T>(batch.size());
  double loss_sum = 0.0;

  for (const auto& sample : batch) {
    const PatchGrid grid = stack_.student().grid_for(sample.frame);
    const Tensor<T> s_y = teacher_targets(sample);

    Tape<T> tape;
    Var<T> context = stack_.encode_context(tape, sample.frame, grid, sample.masks.context);
    std::vector<Var<T>> predictions;
    std::vector<Tensor<T>> targets;
    predictions.reserve(sample.masks.targets.size());
    targets.reserve(sample.masks.targets.size());
    for (const auto& mi : sample.masks.targets) {
      Var<T> pred = stack_.predict(tape, context, grid, sample.masks.context, mi);
      predictions.push_back(stack_.adapt(tape, pred));
      targets.push_back(ModelStack<T>::select(s_y, mi));
    }
    Var<T> loss = us_jepa_loss(predictions, targets, opts_.loss);
    const double value = static_cast<double>(loss.value().item());
    if (!std::isfinite(value))
      throw std::runtime_error("train_step: non-finite loss (" + std::to_string(value) + ")");
    loss_sum += value;
    tape.backward(loss, inv_batch);
  }

  if (!optimizer_->step(lr, wd))
    throw std::runtime_error("train_step: non-finite parameter after optimizer step");
  if (stack_.config().teacher_mode == TeacherMode::kEma) stack_.ema_update(ema_momentum);
  return loss_sum / static_cast<double>(batch.size());
}

template <class T>
double Trainer<T>::validate(const std::vector<TrainSample<T>>& val_samples) {
  if (val_samples.empty()) throw std::invalid_argument("validate: empty validation set");
  double total = 0.0;
  for (const auto& sample : val_samples) {
    const PatchGrid grid = stack_.student().grid_for(sample.frame);
    const Tensor<T> s_y = teacher_targets(sample);
    Tape<T> tape;
    Var<T> context = stack_.encode_context(tape, sample.frame, grid, sample.masks.context);
    std::vector<Var<T>> predictions;
    std::vector<Tensor<T>> targets;
    for (const auto& mi : sample.masks.targets) {
      Var<T> pred = stack_.predict(tape, context, grid, sample.masks.context, mi);
      predictions.push_back(stack_.adapt(tape, pred));
      targets.push_back(ModelStack<T>::select(s_y, mi));
    }
    total += static_cast<double>(us_jepa_loss(predictions, targets, opts_.loss).value().item());
  }
  return total / static_cast<double>(val_samples.size());
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_best_copy(const fs::path& epoch_file, const fs::path& best_link) {
  std::error_code ec;
  fs::remove(best_link, ec);
  fs::create_symlink(epoch_file.filename(), best_link, ec);
  if (ec) fs::copy_file(epoch_file, best_link, fs::copy_options::overwrite_existing);
}

}  // namespace

template <class T>
TrainReport Trainer<T>::run(const DatasetManifest& train_manifest,
                            const DatasetManifest& val_manifest, const FrameLoader& loader) {
  TrainReport report;
  WeightedSampler sampler(train_manifest, opts_.seed);
  const long steps_per_epoch = std::max<long>(1, sampler.epoch_length() / opts_.batch_size);
  const int total_epochs = opts_.optim.total_epochs;

  std::ofstream metrics;
  if (!opts_.out_dir.empty()) {
    fs::create_directories(opts_.out_dir);
    metrics.open(fs::path(opts_.out_dir) / "metrics.log");
    if (!metrics) throw std::runtime_error("trainer: cannot open metrics log");
  }

  // Teacher embedding cache; valid for the static mode, where the teacher is
  // constant for the whole run.
  const bool static_teacher = stack_.config().teacher_mode == TeacherMode::kStatic;
  const bool use_cache = opts_.cache_teacher && static_teacher;
  std::unordered_map<std::uint64_t, std::shared_ptr<Tensor<T>>> teacher_cache;
  std::mutex cache_mx;

  auto teacher_for = [&](const Frame& frame, int dataset, long index) -> std::shared_ptr<Tensor<T>> {
    if (!use_cache) return nullptr;  // computed per step (EMA teacher changes)
    const std::uint64_t key = (static_cast<std::uint64_t>(dataset) << 40) ^
                              static_cast<std::uint64_t>(index);
    {
      std::lock_guard<std::mutex> lock(cache_mx);
      auto it = teacher_cache.find(key);
      if (it != teacher_cache.end()) return it->second;
    }
    auto value = std::make_shared<Tensor<T>>(stack_.encode_target(frame));
    std::lock_guard<std::mutex> lock(cache_mx);
    return teacher_cache.emplace(key, std::move(value)).first->second;
  };

  // Validation set: fixed frames and fixed masks, drawn once at split time so
  // the validation loss is a deterministic function of the weights.
  std::vector<TrainSample<T>> val_samples;
  {
    std::vector<std::pair<int, long>> refs;
    for (size_t d = 0; d < val_manifest.entries.size(); ++d)
      for (long i = 0; i < val_manifest.entries[d].size(); ++i)
        refs.emplace_back(static_cast<int>(d), i);
    val_samples.resize(refs.size());
    std::atomic<long> rejected{0};
    parallel_for(static_cast<long>(refs.size()), opts_.workers, [&](long i) {
      const auto [d, idx] = refs[static_cast<size_t>(i)];
      const LoadedFrame lf = loader(val_manifest, val_manifest.record(d, idx));
      Rng rng(derive_seed(opts_.seed, "val-mask", static_cast<std::uint64_t>(i)));
      auto masks = sample_mask_set(stack_.student().grid_for(lf.frame),
                                   lf.region.bits.empty() ? nullptr : &lf.region, opts_.masking, rng);
      if (!masks) {
        rejected.fetch_add(1);
        return;
      }
      val_samples[static_cast<size_t>(i)] =
          TrainSample<T>{lf.frame, std::move(*masks), nullptr};
    });
    if (rejected.load() > 0) {
      std::erase_if(val_samples, [](const TrainSample<T>& s) { return s.frame.pixels.empty(); });
      report.rejected_frames += rejected.load();
    }
    if (val_samples.empty()) throw std::runtime_error("trainer: validation set is empty");
    if (use_cache)
      parallel_for(static_cast<long>(val_samples.size()), opts_.workers, [&](long i) {
        auto& s = val_samples[static_cast<size_t>(i)];
        s.teacher = std::make_shared<Tensor<T>>(stack_.encode_target(s.frame));
      });
  }

  report.val_epoch0 = validate(val_samples);
  report.best_val = report.val_epoch0;
  if (metrics) metrics << "{\"epoch\":-1,\"val_loss\":" << format_double(report.val_epoch0) << "}\n";

  long fallback_total = 0;
  std::uint64_t draw_counter = 0;

  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    for (long step = 0; step < steps_per_epoch; ++step) {
      const double fraction =
          (epoch + static_cast<double>(step) / static_cast<double>(steps_per_epoch)) / total_epochs;
      const double lr = lr_at(opts_.optim, fraction);
      const double wd = wd_at(opts_.optim, fraction);
      const double momentum = stack_.ema_momentum_at(fraction);

      // Record draws and mask seeds are fixed serially so worker count never
      // changes the data order.
      std::vector<RecordRef> refs(static_cast<size_t>(opts_.batch_size));
      std::vector<std::uint64_t> mask_seeds(refs.size());
      for (auto& r : refs) r = sampler.next_ref();
      for (auto& s : mask_seeds) s = derive_seed(opts_.seed, "train-mask", draw_counter++);

      std::vector<LoadedFrame> loaded(refs.size());
      parallel_for(static_cast<long>(refs.size()), opts_.workers, [&](long i) {
        const auto& ref = refs[static_cast<size_t>(i)];
        loaded[static_cast<size_t>(i)] =
            loader(train_manifest, train_manifest.record(ref.dataset, ref.index));
      });

      std::vector<TrainSample<T>> batch(refs.size());
      for (size_t i = 0; i < refs.size(); ++i) {
        for (;;) {
          Rng rng(mask_seeds[i]);
          const LoadedFrame& lf = loaded[i];
          auto masks = sample_mask_set(stack_.student().grid_for(lf.frame),
                                       lf.region.bits.empty() ? nullptr : &lf.region,
                                       opts_.masking, rng);
          if (masks) {
            fallback_total += masks->fallbacks;
            batch[i] = TrainSample<T>{lf.frame, std::move(*masks), nullptr};
            batch[i].teacher = teacher_for(lf.frame, refs[i].dataset, refs[i].index);
            break;
          }
          ++report.rejected_frames;
          if (report.rejected_frames > 100L * opts_.batch_size * std::max(1L, steps_per_epoch))
            throw std::runtime_error("trainer: mask sampling rejects nearly every frame");
          refs[i] = sampler.next_ref();
          mask_seeds[i] = derive_seed(opts_.seed, "train-mask", draw_counter++);
          loaded[i] = loader(train_manifest, train_manifest.record(refs[i].dataset, refs[i].index));
        }
      }

      if (use_cache)
        parallel_for(static_cast<long>(batch.size()), opts_.workers, [&](long i) {
          auto& s = batch[static_cast<size_t>(i)];
          if (!s.teacher) s.teacher = std::make_shared<Tensor<T>>(stack_.encode_target(s.frame));
        });

      const double loss = train_step(batch, lr, wd, momentum);
      report.step_losses.push_back(loss);
      if (metrics)
        metrics << "{\"epoch\":" << epoch << ",\"step\":" << step << ",\"loss\":"
                << format_double(loss) << ",\"lr\":" << format_double(lr) << ",\"wd\":"
                << format_double(wd) << ",\"mask_fallbacks\":" << fallback_total << "}\n";
    }

    // EMA teacher changes every step: drop stale cached validation targets.
    if (!static_teacher)
      for (auto& s : val_samples) s.teacher = nullptr;
    const double val = validate(val_samples);
    report.epoch_val.push_back(val);
    if (metrics) metrics << "{\"epoch\":" << epoch << ",\"val_loss\":" << format_double(val) << "}\n";

    std::string epoch_file;
    if (!opts_.out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_epoch_%03d.usjc", epoch);
      epoch_file = (fs::path(opts_.out_dir) / name).string();
      CheckpointMeta meta;
      meta.config_hash = opts_.config_hash;
      meta.epoch = epoch;
      meta.val_loss = val;
      meta.extra_json = opts_.extra_meta;
      save_checkpoint(epoch_file, meta, stack_.named_params());
    }
    if (val < report.best_val || report.best_epoch < 0) {
      report.best_val = val;
      report.best_epoch = epoch;
      if (!epoch_file.empty()) {
        const fs::path best = fs::path(opts_.out_dir) / "checkpoint_best.usjc";
        write_best_copy(epoch_file, best);
        report.best_checkpoint = best.string();
      }
    }
    report.final_val = val;
  }

  report.fallback_masks = fallback_total;
  return report;
}

template class Trainer<float>;
template class Trainer<double>;

}  // namespace usjepa
