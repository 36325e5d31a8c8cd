#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace usjepa {

struct FrameRecord {
  std::string dataset_id;
  std::string path;       // relative to the manifest's directory
  int label = -1;         // -1 when absent
  std::string mask_path;  // empty when absent
};

struct DatasetEntry {
  std::string dataset_id;
  std::vector<FrameRecord> records;
  long size() const { return static_cast<long>(records.size()); }
};

// Multi-dataset manifest. The header carries the sampling threshold and the
// seed the manifest was generated with.
struct DatasetManifest {
  std::vector<DatasetEntry> entries;
  long n_t = 50000;
  std::uint64_t seed = 0;
  std::string root;  // directory of the manifest file; "" for in-memory manifests

  size_t total_records() const;
  std::vector<long> sizes() const;
  const FrameRecord& record(int dataset, long index) const {
    return entries[static_cast<size_t>(dataset)].records[static_cast<size_t>(index)];
  }
  std::string resolve(const FrameRecord& rec) const;
  std::string resolve_mask(const FrameRecord& rec) const;
  void validate() const;  // unique non-empty ids, every dataset non-empty
};

// Line-delimited text format:
//   #usjepa-manifest v1
//   #nt <threshold>
//   #seed <seed>
//   dataset_id<TAB>path<TAB>label-or-dash<TAB>mask-path-or-dash
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& manifest);

// Proportional per-dataset split into (train, val). Datasets too small to
// contribute a validation record go wholly to train; `too_small` (if given)
// counts them. Deterministic under seed; record order stays canonical.
std::pair<DatasetManifest, DatasetManifest> holdout_split(const DatasetManifest& manifest,
                                                          double fraction, std::uint64_t seed,
                                                          int* too_small = nullptr);

}  // namespace usjepa
