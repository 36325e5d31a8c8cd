#include "core/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "core/autograd.hpp"
#include "core/optim.hpp"
#include "core/rng.hpp"

namespace usjepa {

namespace {

Tensorf gather_rows(const FeatureTable& features, const std::vector<std::int64_t>& indices) {
  Tensorf out({static_cast<std::int64_t>(indices.size()), features.dim});
  for (size_t i = 0; i < indices.size(); ++i)
    std::copy(features.row(indices[i]), features.row(indices[i]) + features.dim,
              out.data() + static_cast<std::int64_t>(i) * features.dim);
  return out;
}

std::vector<int> gather_labels(const FeatureTable& features, const std::vector<std::int64_t>& indices) {
  std::vector<int> out(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) out[i] = features.labels[static_cast<size_t>(indices[i])];
  return out;
}

Tensorf logits_for(const Tensorf& x, const Tensorf& w, const Tensorf& b) {
  Tensorf out = matmul(x, w);
  for (std::int64_t r = 0; r < out.rows(); ++r)
    for (std::int64_t c = 0; c < out.cols(); ++c) out.at(r, c) += b[c];
  return out;
}

double ce_loss(const Tensorf& logits, const std::vector<int>& labels) {
  double acc = 0.0;
  const auto K = logits.cols();
  for (std::int64_t r = 0; r < logits.rows(); ++r) {
    const float* row = logits.data() + r * K;
    float mx = row[0];
    for (std::int64_t c = 1; c < K; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::int64_t c = 0; c < K; ++c) sum += std::exp(static_cast<double>(row[c] - mx));
    acc += std::log(sum) + mx - row[labels[static_cast<size_t>(r)]];
  }
  return acc / static_cast<double>(logits.rows());
}

}  // namespace

std::vector<int> LinearProbe::predict(const FeatureTable& features) const {
  Tensorf all({features.rows, features.dim});
  std::copy(features.data.begin(), features.data.end(), all.data());
  const Tensorf lg = logits_for(all, w, b);
  std::vector<int> out(static_cast<size_t>(features.rows));
  for (std::int64_t r = 0; r < lg.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (lg.at(r, c) > lg.at(r, best)) best = c;
    out[static_cast<size_t>(r)] = best;
  }
  return out;
}

double LinearProbe::mean_loss(const FeatureTable& features,
                              const std::vector<std::int64_t>& indices) const {
  return ce_loss(logits_for(gather_rows(features, indices), w, b), gather_labels(features, indices));
}

LinearProbe train_probe(const FeatureTable& train, const std::vector<std::int64_t>& train_indices,
                        const FeatureTable& val, const ProbeConfig& cfg, std::uint64_t seed) {
  if (cfg.num_classes < 2) throw std::invalid_argument("train_probe: need at least two classes");
  if (train_indices.empty()) throw std::invalid_argument("train_probe: empty training selection");

  std::set<int> present;
  for (auto i : train_indices) {
    const int y = train.labels[static_cast<size_t>(i)];
    if (y < 0 || y >= cfg.num_classes)
      throw std::invalid_argument("train_probe: label out of range");
    present.insert(y);
  }
  if (static_cast<int>(present.size()) != cfg.num_classes)
    throw std::invalid_argument("train_probe: class absent from training labels");

  const std::int64_t D = train.dim;
  const int K = cfg.num_classes;
  Parameter<float> w(Tensorf({D, K}), true, true);
  Parameter<float> b(Tensorf({K}), true, false);
  Rng init_rng(derive_seed(seed, "probe-init"));
  for (std::int64_t i = 0; i < w.value.size(); ++i)
    w.value[i] = static_cast<float>(trunc_normal_double(init_rng, 0.02));

  OptimizerConfig ocfg;
  ocfg.base_lr = cfg.lr;
  AdamW<float> opt({&w, &b}, ocfg);
  Rng order_rng(derive_seed(seed, "probe-order"));

  std::vector<std::int64_t> val_indices(static_cast<size_t>(val.rows));
  std::iota(val_indices.begin(), val_indices.end(), 0);

  LinearProbe probe;
  probe.num_classes = K;
  probe.w = w.value;
  probe.b = b.value;
  probe.best_val_loss = std::numeric_limits<double>::infinity();

  std::vector<std::int64_t> order(train_indices);
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    constexpr double kPi = 3.14159265358979323846;
    const double lr = 0.5 * cfg.lr * (1.0 + std::cos(kPi * epoch / cfg.max_epochs));

    for (std::int64_t i = static_cast<std::int64_t>(order.size()) - 1; i > 0; --i)
      std::swap(order[static_cast<size_t>(i)],
                order[uniform_index(order_rng, static_cast<std::uint64_t>(i + 1))]);

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      const std::vector<std::int64_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                            order.begin() + static_cast<std::ptrdiff_t>(end));
      Tape<float> tape;
      Var<float> logits = linear(tape.constant(gather_rows(train, batch)), tape.leaf(w), tape.leaf(b));
      Var<float> loss = cross_entropy_mean(logits, gather_labels(train, batch));
      opt.zero_grad();
      tape.backward(loss);
      opt.step(lr, cfg.weight_decay);
    }

    Tensorf val_logits = logits_for(gather_rows(val, val_indices), w.value, b.value);
    const double val_loss = ce_loss(val_logits, gather_labels(val, val_indices));
    if (val_loss < probe.best_val_loss) {
      probe.best_val_loss = val_loss;
      probe.best_epoch = epoch;
      probe.w = w.value;
      probe.b = b.value;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return probe;
}

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels,
                int num_classes) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("macro_f1: prediction/label count mismatch");
  if (num_classes < 1) throw std::invalid_argument("macro_f1: need at least one class");
  std::vector<long> tp(static_cast<size_t>(num_classes), 0), fp(tp), fn(tp);
  for (size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if (y < 0 || y >= num_classes || p < 0 || p >= num_classes)
      throw std::invalid_argument("macro_f1: value out of class range");
    if (p == y) ++tp[static_cast<size_t>(y)];
    else {
      ++fp[static_cast<size_t>(p)];
      ++fn[static_cast<size_t>(y)];
    }
  }
  double total = 0.0;
  for (int k = 0; k < num_classes; ++k) {
    const double denom = 2.0 * tp[k] + fp[k] + fn[k];
    total += denom > 0.0 ? 2.0 * tp[k] / denom : 0.0;
  }
  return total / num_classes;
}

}  // namespace usjepa
