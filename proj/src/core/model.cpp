#include "core/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace usjepa {

void EncoderConfig::validate() const {
  if (patch_size <= 0 || embed_dim <= 0 || depth <= 0 || heads <= 0 || mlp_ratio <= 0)
    throw std::invalid_argument("encoder config: non-positive field");
  if (embed_dim % heads != 0)
    throw std::invalid_argument("encoder config: embed_dim must be divisible by heads");
  if (embed_dim % 4 != 0)
    throw std::invalid_argument("encoder config: embed_dim must be divisible by 4");
}

void PredictorConfig::validate() const {
  if (embed_dim <= 0 || depth <= 0 || heads <= 0 || target_dim <= 0 || mlp_ratio <= 0)
    throw std::invalid_argument("predictor config: non-positive field");
  if (embed_dim % heads != 0)
    throw std::invalid_argument("predictor config: embed_dim must be divisible by heads");
  if (embed_dim % 4 != 0)
    throw std::invalid_argument("predictor config: embed_dim must be divisible by 4");
}

void StackConfig::validate() const {
  student.validate();
  teacher.validate();
  predictor.validate();
  if (student.patch_size != teacher.patch_size)
    throw std::invalid_argument("stack config: student/teacher patch size differ");
  if (predictor.target_dim != teacher.embed_dim)
    throw std::invalid_argument("stack config: predictor target_dim must equal teacher embed_dim");
  if (teacher_mode == TeacherMode::kEma) {
    if (student.embed_dim != teacher.embed_dim || student.depth != teacher.depth ||
        student.heads != teacher.heads)
      throw std::invalid_argument("stack config: EMA teacher must mirror the student architecture");
  }
  if (!(ema_momentum_start >= 0.0 && ema_momentum_start <= ema_momentum_final &&
        ema_momentum_final <= 1.0))
    throw std::invalid_argument("stack config: bad EMA momentum schedule");
}

template <class T>
Tensor<T> sincos_position_rows(const PatchGrid& grid, const std::vector<int>& indices, int dim) {
  if (dim % 4 != 0) throw std::invalid_argument("position embedding: dim must be divisible by 4");
  const int quarter = dim / 4;
  Tensor<T> out({static_cast<std::int64_t>(indices.size()), dim});
  for (size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= grid.count()) throw std::invalid_argument("position embedding: index out of grid");
    const double r = grid.patch_row(idx);
    const double c = grid.patch_col(idx);
    T* row = out.data() + static_cast<std::int64_t>(i) * dim;
    for (int k = 0; k < quarter; ++k) {
      const double omega = std::pow(10000.0, -static_cast<double>(k) / quarter);
      row[k] = static_cast<T>(std::sin(r * omega));
      row[quarter + k] = static_cast<T>(std::cos(r * omega));
      row[2 * quarter + k] = static_cast<T>(std::sin(c * omega));
      row[3 * quarter + k] = static_cast<T>(std::cos(c * omega));
    }
  }
  return out;
}

template <class T>
Tensor<T> patchify(const Frame& frame, const PatchGrid& grid, const std::vector<int>& indices) {
  if (frame.height != grid.frame_h || frame.width != grid.frame_w)
    throw std::invalid_argument("patchify: frame dims differ from grid");
  const int p = grid.patch_size;
  Tensor<T> out({static_cast<std::int64_t>(indices.size()), static_cast<std::int64_t>(p) * p});
  for (size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    const int r0 = grid.patch_row(idx) * p;
    const int c0 = grid.patch_col(idx) * p;
    T* row = out.data() + static_cast<std::int64_t>(i) * p * p;
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) row[r * p + c] = static_cast<T>(frame.at(r0 + r, c0 + c));
  }
  return out;
}

namespace {

template <class T>
Parameter<T> make_weight(std::vector<std::int64_t> shape) {
  return Parameter<T>(Tensor<T>(std::move(shape)), true, true);
}

template <class T>
Parameter<T> make_bias(std::vector<std::int64_t> shape, T init = T(0)) {
  Parameter<T> p(Tensor<T>(std::move(shape)), true, false);
  p.value.fill(init);
  return p;
}

template <class T>
void init_trunc_normal(Parameter<T>& p, Rng& rng, double stddev = 0.02) {
  for (std::int64_t i = 0; i < p.value.size(); ++i)
    p.value[i] = static_cast<T>(trunc_normal_double(rng, stddev));
}

}  // namespace

// ---- TransformerBlock ----

template <class T>
TransformerBlock<T>::TransformerBlock(int dim, int heads, int mlp_ratio)
    : dim_(dim), heads_(heads), hidden_(dim * mlp_ratio) {
  ln1_g_ = make_bias<T>({dim}, T(1));
  ln1_b_ = make_bias<T>({dim});
  wq_ = make_weight<T>({dim, dim});
  bq_ = make_bias<T>({dim});
  wk_ = make_weight<T>({dim, dim});
  bk_ = make_bias<T>({dim});
  wv_ = make_weight<T>({dim, dim});
  bv_ = make_bias<T>({dim});
  wo_ = make_weight<T>({dim, dim});
  bo_ = make_bias<T>({dim});
  ln2_g_ = make_bias<T>({dim}, T(1));
  ln2_b_ = make_bias<T>({dim});
  w1_ = make_weight<T>({dim, hidden_});
  b1_ = make_bias<T>({hidden_});
  w2_ = make_weight<T>({hidden_, dim});
  b2_ = make_bias<T>({dim});
}

template <class T>
void TransformerBlock<T>::init(Rng& rng) {
  init_trunc_normal(wq_, rng);
  init_trunc_normal(wk_, rng);
  init_trunc_normal(wv_, rng);
  init_trunc_normal(wo_, rng);
  init_trunc_normal(w1_, rng);
  init_trunc_normal(w2_, rng);
}

template <class T>
void TransformerBlock<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
  out.push_back({prefix + ".ln1.g", &ln1_g_});
  out.push_back({prefix + ".ln1.b", &ln1_b_});
  out.push_back({prefix + ".attn.wq", &wq_});
  out.push_back({prefix + ".attn.bq", &bq_});
  out.push_back({prefix + ".attn.wk", &wk_});
  out.push_back({prefix + ".attn.bk", &bk_});
  out.push_back({prefix + ".attn.wv", &wv_});
  out.push_back({prefix + ".attn.bv", &bv_});
  out.push_back({prefix + ".attn.wo", &wo_});
  out.push_back({prefix + ".attn.bo", &bo_});
  out.push_back({prefix + ".ln2.g", &ln2_g_});
  out.push_back({prefix + ".ln2.b", &ln2_b_});
  out.push_back({prefix + ".mlp.w1", &w1_});
  out.push_back({prefix + ".mlp.b1", &b1_});
  out.push_back({prefix + ".mlp.w2", &w2_});
  out.push_back({prefix + ".mlp.b2", &b2_});
}

template <class T>
Var<T> TransformerBlock<T>::forward(Tape<T>& tape, Var<T> x) const {
  auto& self = const_cast<TransformerBlock<T>&>(*this);
  const int dh = dim_ / heads_;
  const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  Var<T> h = layer_norm(x, tape.leaf(self.ln1_g_), tape.leaf(self.ln1_b_));
  Var<T> q = linear(h, tape.leaf(self.wq_), tape.leaf(self.bq_));
  Var<T> k = linear(h, tape.leaf(self.wk_), tape.leaf(self.bk_));
  Var<T> v = linear(h, tape.leaf(self.wv_), tape.leaf(self.bv_));

  std::vector<Var<T>> head_outputs;
  head_outputs.reserve(static_cast<size_t>(heads_));
  for (int hd = 0; hd < heads_; ++hd) {
    Var<T> qh = slice_cols(q, hd * dh, (hd + 1) * dh);
    Var<T> kh = slice_cols(k, hd * dh, (hd + 1) * dh);
    Var<T> vh = slice_cols(v, hd * dh, (hd + 1) * dh);
    Var<T> scores = scale(matmul(qh, kh, false, true), inv_sqrt_dh);
    Var<T> attn = softmax_rows(scores);
    head_outputs.push_back(matmul(attn, vh));
  }
  Var<T> attn_out = linear(concat_cols(head_outputs), tape.leaf(self.wo_), tape.leaf(self.bo_));
  x = add(x, attn_out);

  Var<T> h2 = layer_norm(x, tape.leaf(self.ln2_g_), tape.leaf(self.ln2_b_));
  Var<T> mlp = linear(gelu(linear(h2, tape.leaf(self.w1_), tape.leaf(self.b1_))),
                      tape.leaf(self.w2_), tape.leaf(self.b2_));
  return add(x, mlp);
}

// ---- ViTEncoder ----

template <class T>
ViTEncoder<T>::ViTEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  const int pp = cfg.patch_size * cfg.patch_size;
  embed_w_ = make_weight<T>({pp, cfg.embed_dim});
  embed_b_ = make_bias<T>({cfg.embed_dim});
  ln_g_ = make_bias<T>({cfg.embed_dim}, T(1));
  ln_b_ = make_bias<T>({cfg.embed_dim});
  blocks_.reserve(static_cast<size_t>(cfg.depth));
  for (int i = 0; i < cfg.depth; ++i) blocks_.emplace_back(cfg.embed_dim, cfg.heads, cfg.mlp_ratio);
}

template <class T>
void ViTEncoder<T>::init(std::uint64_t seed) {
  Rng rng(seed);
  init_trunc_normal(embed_w_, rng);
  for (auto& b : blocks_) b.init(rng);
}

template <class T>
void ViTEncoder<T>::set_trainable(bool trainable) {
  std::vector<NamedParam<T>> all;
  collect("", all);
  for (auto& np : all) np.param->trainable = trainable;
}

template <class T>
void ViTEncoder<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
  const std::string p = prefix.empty() ? "" : prefix + ".";
  out.push_back({p + "embed.w", &embed_w_});
  out.push_back({p + "embed.b", &embed_b_});
  for (size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(p + "block" + std::to_string(i), out);
  out.push_back({p + "ln.g", &ln_g_});
  out.push_back({p + "ln.b", &ln_b_});
}

template <class T>
Var<T> ViTEncoder<T>::forward(Tape<T>& tape, const Frame& frame, const PatchGrid& grid,
                              const std::vector<int>& indices) const {
  if (indices.empty()) throw std::invalid_argument("encoder: empty patch set");
  if (grid.patch_size != cfg_.patch_size)
    throw std::invalid_argument("encoder: grid patch size mismatch");
  auto& self = const_cast<ViTEncoder<T>&>(*this);
  Var<T> x = tape.constant(patchify<T>(frame, grid, indices));
  x = linear(x, tape.leaf(self.embed_w_), tape.leaf(self.embed_b_));
  x = add(x, tape.constant(sincos_position_rows<T>(grid, indices, cfg_.embed_dim)));
  for (const auto& b : blocks_) x = b.forward(tape, x);
  return layer_norm(x, tape.leaf(self.ln_g_), tape.leaf(self.ln_b_));
}

template <class T>
Tensor<T> ViTEncoder<T>::encode_all(const Frame& frame, const PatchGrid& grid) const {
  std::vector<int> all(static_cast<size_t>(grid.count()));
  for (int i = 0; i < grid.count(); ++i) all[static_cast<size_t>(i)] = i;
  Tape<T> tape;
  return forward(tape, frame, grid, all).value();
}

// ---- Predictor ----

template <class T>
Predictor<T>::Predictor(int input_dim, const PredictorConfig& cfg) : input_dim_(input_dim), cfg_(cfg) {
  cfg.validate();
  in_w_ = make_weight<T>({input_dim, cfg.embed_dim});
  in_b_ = make_bias<T>({cfg.embed_dim});
  mask_token_ = Parameter<T>(Tensor<T>({cfg.embed_dim}), true, false);
  ln_g_ = make_bias<T>({cfg.embed_dim}, T(1));
  ln_b_ = make_bias<T>({cfg.embed_dim});
  adapter_w_ = make_weight<T>({cfg.embed_dim, cfg.target_dim});
  adapter_b_ = make_bias<T>({cfg.target_dim});
  blocks_.reserve(static_cast<size_t>(cfg.depth));
  for (int i = 0; i < cfg.depth; ++i) blocks_.emplace_back(cfg.embed_dim, cfg.heads, cfg.mlp_ratio);
}

template <class T>
void Predictor<T>::init(std::uint64_t seed) {
  Rng rng(seed);
  init_trunc_normal(in_w_, rng);
  init_trunc_normal(mask_token_, rng);
  for (auto& b : blocks_) b.init(rng);
  init_trunc_normal(adapter_w_, rng);
}

template <class T>
void Predictor<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
  const std::string p = prefix.empty() ? "" : prefix + ".";
  out.push_back({p + "in.w", &in_w_});
  out.push_back({p + "in.b", &in_b_});
  out.push_back({p + "mask_token", &mask_token_});
  for (size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(p + "block" + std::to_string(i), out);
  out.push_back({p + "ln.g", &ln_g_});
  out.push_back({p + "ln.b", &ln_b_});
  out.push_back({p + "adapter.w", &adapter_w_});
  out.push_back({p + "adapter.b", &adapter_b_});
}

template <class T>
Var<T> Predictor<T>::predict(Tape<T>& tape, Var<T> context, const PatchGrid& grid,
                             const std::vector<int>& context_indices,
                             const std::vector<int>& target_indices) const {
  if (target_indices.empty()) throw std::invalid_argument("predictor: empty target positions");
  if (context.value().cols() != input_dim_)
    throw std::invalid_argument("predictor: context width mismatch");
  auto& self = const_cast<Predictor<T>&>(*this);
  const auto n_ctx = static_cast<std::int64_t>(context_indices.size());
  const auto n_tgt = static_cast<std::int64_t>(target_indices.size());

  Var<T> zc = linear(context, tape.leaf(self.in_w_), tape.leaf(self.in_b_));
  zc = add(zc, tape.constant(sincos_position_rows<T>(grid, context_indices, cfg_.embed_dim)));

  Var<T> zm = broadcast_row(tape.leaf(self.mask_token_), n_tgt);
  zm = add(zm, tape.constant(sincos_position_rows<T>(grid, target_indices, cfg_.embed_dim)));

  Var<T> z = concat_rows<T>({zc, zm});
  for (const auto& b : blocks_) z = b.forward(tape, z);
  z = layer_norm(z, tape.leaf(self.ln_g_), tape.leaf(self.ln_b_));
  return slice_rows(z, n_ctx, n_ctx + n_tgt);
}

template <class T>
Var<T> Predictor<T>::adapt(Tape<T>& tape, Var<T> predicted) const {
  if (predicted.value().cols() != cfg_.embed_dim)
    throw std::invalid_argument("adapter: input width mismatch");
  auto& self = const_cast<Predictor<T>&>(*this);
  return linear(predicted, tape.leaf(self.adapter_w_), tape.leaf(self.adapter_b_));
}

// ---- ModelStack ----

template <class T>
ModelStack<T>::ModelStack(const StackConfig& cfg)
    : cfg_(cfg),
      student_(cfg.student),
      teacher_(cfg.teacher),
      predictor_(cfg.student.embed_dim, cfg.predictor) {
  cfg.validate();
  teacher_.set_trainable(false);
}

template <class T>
void ModelStack<T>::init(std::uint64_t seed) {
  student_.init(derive_seed(seed, "student"));
  predictor_.init(derive_seed(seed, "predictor"));
  teacher_.init(derive_seed(seed, "teacher"));
  teacher_.set_trainable(false);
}

template <class T>
Var<T> ModelStack<T>::encode_context(Tape<T>& tape, const Frame& frame, const PatchGrid& grid,
                                     const std::vector<int>& context) const {
  return student_.forward(tape, frame, grid, context);
}

template <class T>
Tensor<T> ModelStack<T>::encode_target(const Frame& frame) const {
  return teacher_.encode_all(frame, teacher_.grid_for(frame));
}

template <class T>
Tensor<T> ModelStack<T>::select(const Tensor<T>& all_patches, const std::vector<int>& indices) {
  const std::int64_t d = all_patches.cols();
  Tensor<T> out({static_cast<std::int64_t>(indices.size()), d});
  for (size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= all_patches.rows())
      throw std::invalid_argument("select: patch index out of range");
    std::copy(all_patches.data() + static_cast<std::int64_t>(idx) * d,
              all_patches.data() + static_cast<std::int64_t>(idx + 1) * d,
              out.data() + static_cast<std::int64_t>(i) * d);
  }
  return out;
}

template <class T>
Var<T> ModelStack<T>::predict(Tape<T>& tape, Var<T> context, const PatchGrid& grid,
                              const std::vector<int>& context_indices,
                              const std::vector<int>& target_indices) const {
  return predictor_.predict(tape, context, grid, context_indices, target_indices);
}

template <class T>
Var<T> ModelStack<T>::adapt(Tape<T>& tape, Var<T> predicted) const {
  return predictor_.adapt(tape, predicted);
}

template <class T>
void ModelStack<T>::ema_update(double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0))
    throw std::invalid_argument("ema_update: momentum out of [0,1]");
  std::vector<NamedParam<T>> s, t;
  student_.collect("", s);
  teacher_.collect("", t);
  if (s.size() != t.size()) throw std::invalid_argument("ema_update: parameter lists differ");
  for (size_t i = 0; i < s.size(); ++i) {
    Parameter<T>* sp = s[i].param;
    Parameter<T>* tp = t[i].param;
    if (!sp->value.same_shape(tp->value))
      throw std::invalid_argument("ema_update: shape mismatch at " + s[i].name);
    const T m = static_cast<T>(momentum);
    for (std::int64_t k = 0; k < sp->value.size(); ++k)
      tp->value[k] = m * tp->value[k] + (T(1) - m) * sp->value[k];
  }
}

template <class T>
double ModelStack<T>::ema_momentum_at(double epoch_fraction) const {
  return cfg_.ema_momentum_start +
         (cfg_.ema_momentum_final - cfg_.ema_momentum_start) * epoch_fraction;
}

template <class T>
std::uint64_t ModelStack<T>::teacher_hash() const {
  std::vector<NamedParam<T>> named;
  const_cast<ViTEncoder<T>&>(teacher_).collect("teacher", named);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& np : named)
    h = fnv1a64(np.param->value.data(), static_cast<size_t>(np.param->value.size()) * sizeof(T), h);
  return h;
}

template <class T>
void ModelStack<T>::copy_student_to_teacher() {
  ema_update(0.0);
}

template <class T>
std::vector<NamedParam<T>> ModelStack<T>::named_params() {
  std::vector<NamedParam<T>> out;
  student_.collect("student", out);
  predictor_.collect("predictor", out);
  teacher_.collect("teacher", out);
  return out;
}

template <class T>
std::vector<NamedParam<T>> ModelStack<T>::trainable_params() {
  std::vector<NamedParam<T>> out;
  student_.collect("student", out);
  predictor_.collect("predictor", out);
  return out;
}

std::uint64_t fnv1a64(const void* data, size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

template <class T>
std::uint64_t encoder_hash(const ViTEncoder<T>& encoder) {
  std::vector<NamedParam<T>> named;
  const_cast<ViTEncoder<T>&>(encoder).collect("", named);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& np : named)
    h = fnv1a64(np.param->value.data(), static_cast<size_t>(np.param->value.size()) * sizeof(T), h);
  return h;
}

template std::uint64_t encoder_hash<float>(const ViTEncoder<float>&);
template std::uint64_t encoder_hash<double>(const ViTEncoder<double>&);

template Tensor<float> sincos_position_rows<float>(const PatchGrid&, const std::vector<int>&, int);
template Tensor<double> sincos_position_rows<double>(const PatchGrid&, const std::vector<int>&, int);
template Tensor<float> patchify<float>(const Frame&, const PatchGrid&, const std::vector<int>&);
template Tensor<double> patchify<double>(const Frame&, const PatchGrid&, const std::vector<int>&);
template class TransformerBlock<float>;
template class TransformerBlock<double>;
template class ViTEncoder<float>;
template class ViTEncoder<double>;
template class Predictor<float>;
template class Predictor<double>;
template class ModelStack<float>;
template class ModelStack<double>;

}  // namespace usjepa
