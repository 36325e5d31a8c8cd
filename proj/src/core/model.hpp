#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/autograd.hpp"
#include "core/frame.hpp"
#include "core/masking.hpp"
#include "core/rng.hpp"

namespace usjepa {

struct EncoderConfig {
  int patch_size = 16;
  int embed_dim = 768;
  int depth = 12;
  int heads = 12;
  int mlp_ratio = 4;

  void validate() const;
};

struct PredictorConfig {
  int embed_dim = 384;
  int depth = 12;
  int heads = 6;
  int target_dim = 768;
  int mlp_ratio = 4;

  void validate() const;
};

enum class TeacherMode { kStatic, kEma };

// Fixed 2-D sinusoidal position table rows for the given patch indices.
template <class T>
Tensor<T> sincos_position_rows(const PatchGrid& grid, const std::vector<int>& indices, int dim);

// Extracts the pixel rows of the listed patches as an [n, patch^2] matrix.
template <class T>
Tensor<T> patchify(const Frame& frame, const PatchGrid& grid, const std::vector<int>& indices);

template <class T>
struct NamedParam {
  std::string name;
  Parameter<T>* param;
};

template <class T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(int dim, int heads, int mlp_ratio);
  Var<T> forward(Tape<T>& tape, Var<T> x) const;
  void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);
  void init(Rng& rng);

 private:
  int dim_ = 0, heads_ = 0, hidden_ = 0;
  Parameter<T> ln1_g_, ln1_b_, wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
  Parameter<T> ln2_g_, ln2_b_, w1_, b1_, w2_, b2_;
};

// Pre-norm ViT without a class token. Position information is injected as a
// fixed sinusoidal table before the blocks.
template <class T>
class ViTEncoder {
 public:
  ViTEncoder() = default;
  explicit ViTEncoder(const EncoderConfig& cfg);

  // One embedding row per listed patch, in the given order.
  Var<T> forward(Tape<T>& tape, const Frame& frame, const PatchGrid& grid,
                 const std::vector<int>& indices) const;

  // Inference over all patches on a private tape; returns the value matrix.
  Tensor<T> encode_all(const Frame& frame, const PatchGrid& grid) const;

  void init(std::uint64_t seed);
  void set_trainable(bool trainable);
  void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);
  const EncoderConfig& config() const { return cfg_; }
  PatchGrid grid_for(const Frame& frame) const {
    return PatchGrid::make(frame.height, frame.width, cfg_.patch_size);
  }

 private:
  EncoderConfig cfg_;
  Parameter<T> embed_w_, embed_b_, ln_g_, ln_b_;
  std::vector<TransformerBlock<T>> blocks_;
};

// Narrow transformer conditioned on mask tokens; includes the linear adapter
// into the teacher's feature space.
template <class T>
class Predictor {
 public:
  Predictor() = default;
  Predictor(int input_dim, const PredictorConfig& cfg);

  // One row per target position, at predictor width (pre-adapter).
  Var<T> predict(Tape<T>& tape, Var<T> context, const PatchGrid& grid,
                 const std::vector<int>& context_indices,
                 const std::vector<int>& target_indices) const;
  Var<T> adapt(Tape<T>& tape, Var<T> predicted) const;

  void init(std::uint64_t seed);
  void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);
  Parameter<T>& mask_token() { return mask_token_; }
  const PredictorConfig& config() const { return cfg_; }

 private:
  int input_dim_ = 0;
  PredictorConfig cfg_;
  Parameter<T> in_w_, in_b_, mask_token_, ln_g_, ln_b_, adapter_w_, adapter_b_;
  std::vector<TransformerBlock<T>> blocks_;
};

struct StackConfig {
  EncoderConfig student;
  EncoderConfig teacher;   // embed_dim doubles as the target dimension
  PredictorConfig predictor;
  TeacherMode teacher_mode = TeacherMode::kStatic;
  double ema_momentum_start = 0.996;
  double ema_momentum_final = 1.0;

  void validate() const;
};

// Student context encoder, frozen (or EMA) teacher, predictor with adapter.
template <class T>
class ModelStack {
 public:
  explicit ModelStack(const StackConfig& cfg);

  Var<T> encode_context(Tape<T>& tape, const Frame& frame, const PatchGrid& grid,
                        const std::vector<int>& context) const;
  // Teacher pass over the full frame; gradients never reach it.
  Tensor<T> encode_target(const Frame& frame) const;
  static Tensor<T> select(const Tensor<T>& all_patches, const std::vector<int>& indices);

  Var<T> predict(Tape<T>& tape, Var<T> context, const PatchGrid& grid,
                 const std::vector<int>& context_indices,
                 const std::vector<int>& target_indices) const;
  Var<T> adapt(Tape<T>& tape, Var<T> predicted) const;

  // teacher <- m * teacher + (1 - m) * student, elementwise.
  void ema_update(double momentum);
  double ema_momentum_at(double epoch_fraction) const;

  std::uint64_t teacher_hash() const;
  void copy_student_to_teacher();

  std::vector<NamedParam<T>> named_params();       // student + predictor + teacher
  std::vector<NamedParam<T>> trainable_params();   // student + predictor only
  void init(std::uint64_t seed);

  ViTEncoder<T>& student() { return student_; }
  ViTEncoder<T>& teacher() { return teacher_; }
  const ViTEncoder<T>& student() const { return student_; }
  const ViTEncoder<T>& teacher() const { return teacher_; }
  Predictor<T>& predictor() { return predictor_; }
  const StackConfig& config() const { return cfg_; }

 private:
  StackConfig cfg_;
  ViTEncoder<T> student_, teacher_;
  Predictor<T> predictor_;
};

std::uint64_t fnv1a64(const void* data, size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

template <class T>
std::uint64_t encoder_hash(const ViTEncoder<T>& encoder);

}  // namespace usjepa
