#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "guardfl/linalg.hpp"

namespace guardfl {

// One row per round. asr/acc/ds are percentages.
struct RoundReport {
  int round = 0;
  double asr = 0.0;
  double acc = 0.0;
  double ds = 0.0;
  std::vector<int> detected_malicious;
  std::vector<int> detected_benign;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double median_update_norm = 0.0;
  double norm_bound = 0.0;
  double grad_norm_sq = 0.0;
  // Defense diagnostics (guardfl rounds only).
  int num_clusters = 0;
  std::vector<int> cluster_sizes;
  Vec cluster_probs;
  bool degenerate = false;

  bool operator==(const RoundReport&) const = default;
};

// Append-only JSON-lines writer, one object per round.
class ReportWriter {
 public:
  explicit ReportWriter(const std::string& path);
  void append(const RoundReport& report);

 private:
  std::ofstream out_;
};

std::string report_to_json(const RoundReport& report);
std::vector<RoundReport> load_jsonl(const std::string& path);

// Fixed-column CSV: round, asr, acc, ds, detected_tp, detected_fp,
// detected_fn, median_update_norm.
void write_summary_csv(const std::string& path, const std::vector<RoundReport>& reports);

}  // namespace guardfl
