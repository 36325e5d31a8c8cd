#include "core/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace usjepa {

size_t DatasetManifest::total_records() const {
  size_t n = 0;
  for (const auto& e : entries) n += e.records.size();
  return n;
}

std::vector<long> DatasetManifest::sizes() const {
  std::vector<long> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.size());
  return out;
}

std::string DatasetManifest::resolve(const FrameRecord& rec) const {
  if (root.empty()) return rec.path;
  return (std::filesystem::path(root) / rec.path).string();
}

std::string DatasetManifest::resolve_mask(const FrameRecord& rec) const {
  if (rec.mask_path.empty()) return {};
  if (root.empty()) return rec.mask_path;
  return (std::filesystem::path(root) / rec.mask_path).string();
}

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.dataset_id.empty()) throw std::runtime_error("manifest: empty dataset id");
    if (e.records.empty())
      throw std::runtime_error("manifest: dataset '" + e.dataset_id + "' has no records");
    if (!ids.insert(e.dataset_id).second)
      throw std::runtime_error("manifest: duplicate dataset id '" + e.dataset_id + "'");
  }
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest: cannot open " + path);
  DatasetManifest m;
  m.root = std::filesystem::path(path).parent_path().string();

  std::string line;
  bool saw_magic = false;
  size_t line_no = 0;
  std::vector<std::string> order;
  std::unordered_map<std::string, size_t> index;
  index.reserve(8);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "usjepa-manifest") saw_magic = true;
      else if (key == "nt") hs >> m.n_t;
      else if (key == "seed") hs >> m.seed;
      continue;
    }
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, '\t')) cols.push_back(cell);
    if (cols.size() < 2)
      throw std::runtime_error("manifest: " + path + ":" + std::to_string(line_no) +
                               ": expected at least dataset_id<TAB>path");
    FrameRecord rec;
    rec.dataset_id = cols[0];
    rec.path = cols[1];
    if (cols.size() > 2 && cols[2] != "-" && !cols[2].empty()) rec.label = std::stoi(cols[2]);
    if (cols.size() > 3 && cols[3] != "-" && !cols[3].empty()) rec.mask_path = cols[3];

    auto it = index.find(rec.dataset_id);
    if (it == index.end()) {
      index.emplace(rec.dataset_id, m.entries.size());
      m.entries.push_back({rec.dataset_id, {}});
      it = index.find(rec.dataset_id);
    }
    m.entries[it->second].records.push_back(std::move(rec));
  }
  if (!saw_magic) throw std::runtime_error("manifest: " + path + ": missing #usjepa-manifest header");
  m.validate();
  return m;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("manifest: cannot write " + path);
  out << "#usjepa-manifest v1\n";
  out << "#nt " << manifest.n_t << "\n";
  out << "#seed " << manifest.seed << "\n";
  for (const auto& e : manifest.entries)
    for (const auto& r : e.records) {
      out << e.dataset_id << '\t' << r.path << '\t';
      if (r.label >= 0) out << r.label; else out << '-';
      out << '\t';
      if (!r.mask_path.empty()) out << r.mask_path; else out << '-';
      out << '\n';
    }
  if (!out) throw IoError("manifest: write failed " + path);
}

std::pair<DatasetManifest, DatasetManifest> holdout_split(const DatasetManifest& manifest,
                                                          double fraction, std::uint64_t seed,
                                                          int* too_small) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("holdout_split: fraction must be in (0,1)");
  DatasetManifest train = manifest, val = manifest;
  train.entries.clear();
  val.entries.clear();
  if (too_small) *too_small = 0;

  for (size_t d = 0; d < manifest.entries.size(); ++d) {
    const auto& entry = manifest.entries[d];
    const long n = entry.size();
    long n_val = std::lround(fraction * static_cast<double>(n));
    n_val = std::min(n_val, n - 1);
    if (n < 2 || n_val < 1) {
      if (too_small) ++*too_small;
      train.entries.push_back(entry);
      continue;
    }
    std::vector<long> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, "holdout", d));
    for (long i = n - 1; i > 0; --i)
      std::swap(idx[static_cast<size_t>(i)],
                idx[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
    std::vector<long> val_idx(idx.begin(), idx.begin() + n_val);
    std::vector<long> train_idx(idx.begin() + n_val, idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    DatasetEntry te{entry.dataset_id, {}}, ve{entry.dataset_id, {}};
    for (long i : train_idx) te.records.push_back(entry.records[static_cast<size_t>(i)]);
    for (long i : val_idx) ve.records.push_back(entry.records[static_cast<size_t>(i)]);
    train.entries.push_back(std::move(te));
    val.entries.push_back(std::move(ve));
  }
  return {train, val};
}

}  // namespace usjepa
