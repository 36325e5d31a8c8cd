#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/probe.hpp"
#include "core/rng.hpp"

namespace usjepa {

// One probe evaluation outcome; fraction 1 and corruption "none"/severity 0
// denote the standard uncorrupted probe.
struct ReportRow {
  std::string task;
  std::string backbone;
  int seed = 0;
  double fraction = 1.0;
  std::string corruption = "none";
  int severity = 0;
  double macro_f1 = 0.0;
};

// Stratified subsample of `labels`: per class k it keeps round(f * n_k)
// indices (at least 1), drawn without replacement, returned ascending so a
// fraction of 1 reproduces the full index list exactly.
std::vector<std::int64_t> stratified_indices(const std::vector<int>& labels, int num_classes,
                                             double fraction, Rng& rng);

struct SummaryLine {
  std::string task;
  std::string backbone;
  double fraction = 1.0;
  std::string corruption;
  int severity = 0;
  double mean = 0.0;
  double stddev = 0.0;
  int seeds = 0;
};

std::vector<SummaryLine> summarize(const std::vector<ReportRow>& rows);

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(const std::string& path);

// Markdown table of mean +/- std per (task, backbone, fraction, corruption).
std::string summary_markdown(const std::vector<SummaryLine>& lines);

}  // namespace usjepa
