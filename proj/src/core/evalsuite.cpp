#include "core/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace usjepa {

std::vector<std::int64_t> stratified_indices(const std::vector<int>& labels, int num_classes,
                                             double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("stratified_indices: fraction out of (0,1]");
  std::vector<std::vector<std::int64_t>> per_class(static_cast<size_t>(num_classes));
  for (size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("stratified_indices: label out of range");
    per_class[static_cast<size_t>(y)].push_back(static_cast<std::int64_t>(i));
  }
  std::vector<std::int64_t> out;
  for (auto& cls : per_class) {
    if (cls.empty())
      throw std::invalid_argument("stratified_indices: class with no samples");
    const auto n = static_cast<std::int64_t>(cls.size());
    std::int64_t take = std::llround(fraction * static_cast<double>(n));
    take = std::clamp<std::int64_t>(take, 1, n);
    for (std::int64_t i = n - 1; i > 0; --i)
      std::swap(cls[static_cast<size_t>(i)], cls[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
    out.insert(out.end(), cls.begin(), cls.begin() + take);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SummaryLine> summarize(const std::vector<ReportRow>& rows) {
  std::map<std::tuple<std::string, std::string, double, std::string, int>, std::vector<double>> groups;
  for (const auto& r : rows)
    groups[{r.task, r.backbone, r.fraction, r.corruption, r.severity}].push_back(r.macro_f1);

  std::vector<SummaryLine> out;
  for (const auto& [key, values] : groups) {
    SummaryLine line;
    std::tie(line.task, line.backbone, line.fraction, line.corruption, line.severity) = key;
    line.seeds = static_cast<int>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    line.mean = mean;
    line.stddev = values.size() > 1 ? std::sqrt(var / (values.size() - 1)) : 0.0;
    out.push_back(line);
  }
  return out;
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << "task,backbone,seed,fraction,corruption,severity,macro_f1\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.10g", r.fraction);
    out << r.task << ',' << r.backbone << ',' << r.seed << ',' << buf << ',' << r.corruption << ','
        << r.severity << ',';
    std::snprintf(buf, sizeof(buf), "%.10g", r.macro_f1);
    out << buf << '\n';
  }
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("report: empty csv " + path);
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    ReportRow r;
    std::getline(ls, r.task, ',');
    std::getline(ls, r.backbone, ',');
    std::getline(ls, cell, ',');
    r.seed = std::stoi(cell);
    std::getline(ls, cell, ',');
    r.fraction = std::stod(cell);
    std::getline(ls, r.corruption, ',');
    std::getline(ls, cell, ',');
    r.severity = std::stoi(cell);
    std::getline(ls, cell, ',');
    r.macro_f1 = std::stod(cell);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summary_markdown(const std::vector<SummaryLine>& lines) {
  std::ostringstream os;
  os << "| task | backbone | fraction | corruption | severity | macro-F1 (mean ± std, n seeds) |\n";
  os << "|---|---|---|---|---|---|\n";
  char buf[96];
  for (const auto& l : lines) {
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f (n=%d)", l.mean, l.stddev, l.seeds);
    os << "| " << l.task << " | " << l.backbone << " | " << l.fraction << " | " << l.corruption
       << " | " << l.severity << " | " << buf << " |\n";
  }
  return os.str();
}

}  // namespace usjepa
