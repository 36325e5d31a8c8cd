#include "core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "core/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace usjepa {

namespace {

template <class U>
void write_pod(std::ofstream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <class U>
U read_pod(std::ifstream& in, const std::string& path) {
  U v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!in) throw IoError("checkpoint: truncated file " + path);
  return v;
}

template <class T>
constexpr int dtype_of() {
  return sizeof(T) == 4 ? 0 : 1;
}

}  // namespace

const CheckpointEntry* CheckpointFile::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

template <class T>
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const std::vector<NamedParam<T>>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write("USJC", 4);
  write_pod<std::uint32_t>(out, 1);

  nlohmann::json j;
  j["config_hash"] = meta.config_hash;
  j["epoch"] = meta.epoch;
  j["val_loss"] = meta.val_loss;
  j["extra"] = nlohmann::json::parse(meta.extra_json);
  const std::string meta_str = j.dump();
  write_pod<std::uint64_t>(out, meta_str.size());
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& np : params) {
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(np.name.size()));
    out.write(np.name.data(), static_cast<std::streamsize>(np.name.size()));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>()));
    const auto& shape = np.param->value.shape();
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(np.param->value.data()),
              static_cast<std::streamsize>(np.param->value.size() * sizeof(T)));
  }
  if (!out) throw IoError("checkpoint: write failed " + path);
}

CheckpointFile load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "USJC", 4) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");

  CheckpointFile file;
  const auto meta_len = read_pod<std::uint64_t>(in, path);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw IoError("checkpoint: truncated metadata in " + path);
  const auto j = nlohmann::json::parse(meta_str);
  file.meta.config_hash = j.value("config_hash", 0ull);
  file.meta.epoch = j.value("epoch", -1);
  file.meta.val_loss = j.value("val_loss", 0.0);
  file.meta.extra_json = j.value("extra", nlohmann::json::object()).dump();

  const auto n = read_pod<std::uint32_t>(in, path);
  file.entries.resize(n);
  for (auto& e : file.entries) {
    const auto name_len = read_pod<std::uint16_t>(in, path);
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    e.dtype = read_pod<std::uint8_t>(in, path);
    const auto ndim = read_pod<std::uint8_t>(in, path);
    std::int64_t count = 1;
    e.shape.resize(ndim);
    for (auto& d : e.shape) {
      d = read_pod<std::uint32_t>(in, path);
      count *= d;
    }
    const size_t value_size = e.dtype == 0 ? 4 : 8;
    e.raw.resize(static_cast<size_t>(count) * value_size);
    in.read(reinterpret_cast<char*>(e.raw.data()), static_cast<std::streamsize>(e.raw.size()));
    if (!in) throw IoError("checkpoint: truncated entry " + e.name + " in " + path);
  }
  return file;
}

namespace {

template <class T>
void copy_entry_into(const CheckpointEntry& e, Parameter<T>& p) {
  if (e.shape != p.value.shape())
    throw std::runtime_error("checkpoint: shape mismatch for " + e.name);
  if (e.dtype == 0) {
    const auto* src = reinterpret_cast<const float*>(e.raw.data());
    for (std::int64_t i = 0; i < p.value.size(); ++i) p.value[i] = static_cast<T>(src[i]);
  } else {
    const auto* src = reinterpret_cast<const double*>(e.raw.data());
    for (std::int64_t i = 0; i < p.value.size(); ++i) p.value[i] = static_cast<T>(src[i]);
  }
}

}  // namespace

template <class T>
void load_params(const CheckpointFile& file, const std::vector<NamedParam<T>>& params) {
  for (const auto& np : params) {
    const CheckpointEntry* e = file.find(np.name);
    if (!e) throw std::runtime_error("checkpoint: missing entry " + np.name);
    copy_entry_into(*e, *np.param);
  }
}

template <class T>
void load_encoder_params(const CheckpointFile& file, const std::string& prefix,
                         ViTEncoder<T>& encoder) {
  std::vector<NamedParam<T>> named;
  encoder.collect(prefix, named);
  load_params(file, named);
}

template void save_checkpoint<float>(const std::string&, const CheckpointMeta&,
                                     const std::vector<NamedParam<float>>&);
template void save_checkpoint<double>(const std::string&, const CheckpointMeta&,
                                      const std::vector<NamedParam<double>>&);
template void load_params<float>(const CheckpointFile&, const std::vector<NamedParam<float>>&);
template void load_params<double>(const CheckpointFile&, const std::vector<NamedParam<double>>&);
template void load_encoder_params<float>(const CheckpointFile&, const std::string&, ViTEncoder<float>&);
template void load_encoder_params<double>(const CheckpointFile&, const std::string&, ViTEncoder<double>&);

}  // namespace usjepa
