#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace usjepa {

// Archive layout (all integers little-endian):
//   "USJC" | u32 version=1 | u64 meta_len | meta (JSON, UTF-8)
//   u32 n_entries, then per entry:
//     u16 name_len | name | u8 dtype (0=f32, 1=f64) | u8 ndim | u32 dims[ndim] | raw values
struct CheckpointMeta {
  std::uint64_t config_hash = 0;
  int epoch = -1;
  double val_loss = 0.0;
  std::string extra_json = "{}";  // free-form metadata (teacher provenance, seeds, ...)
};

struct CheckpointEntry {
  std::string name;
  int dtype = 0;  // 0=f32, 1=f64
  std::vector<std::int64_t> shape;
  std::vector<unsigned char> raw;
};

struct CheckpointFile {
  CheckpointMeta meta;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& name) const;
};

template <class T>
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const std::vector<NamedParam<T>>& params);

CheckpointFile load_checkpoint(const std::string& path);

// Copies matching entries into the given parameters; every parameter must be
// present with the right shape. Entry dtype may differ from T (converted).
template <class T>
void load_params(const CheckpointFile& file, const std::vector<NamedParam<T>>& params);

// Loads an encoder from entries under `prefix.` (e.g. "student"), converting
// dtype as needed. Throws when any parameter is missing.
template <class T>
void load_encoder_params(const CheckpointFile& file, const std::string& prefix,
                         ViTEncoder<T>& encoder);

}  // namespace usjepa
