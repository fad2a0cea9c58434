#include "guardfl/report.hpp"

#include <cstdio>

#include "guardfl/errors.hpp"
#include "json.hpp"

namespace guardfl {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

ReportWriter::ReportWriter(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw ConfigError("ReportWriter: cannot open " + path);
}

void ReportWriter::append(const RoundReport& report) {
  out_ << report_to_json(report) << '\n';
  out_.flush();
}

std::string report_to_json(const RoundReport& report) {
  nlohmann::json j;
  j["round"] = report.round;
  j["asr"] = report.asr;
  j["acc"] = report.acc;
  j["ds"] = report.ds;
  j["detected_malicious"] = report.detected_malicious;
  j["detected_benign"] = report.detected_benign;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["median_update_norm"] = report.median_update_norm;
  j["norm_bound"] = report.norm_bound;
  j["grad_norm_sq"] = report.grad_norm_sq;
  j["num_clusters"] = report.num_clusters;
  j["cluster_sizes"] = report.cluster_sizes;
  j["cluster_probs"] = report.cluster_probs;
  j["degenerate"] = report.degenerate;
  return j.dump();
}

std::vector<RoundReport> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_jsonl: cannot open " + path);
  std::vector<RoundReport> reports;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    RoundReport r;
    r.round = j.at("round").get<int>();
    r.asr = j.at("asr").get<double>();
    r.acc = j.at("acc").get<double>();
    r.ds = j.at("ds").get<double>();
    r.detected_malicious = j.at("detected_malicious").get<std::vector<int>>();
    r.detected_benign = j.at("detected_benign").get<std::vector<int>>();
    r.tp = j.at("tp").get<long>();
    r.fp = j.at("fp").get<long>();
    r.fn = j.at("fn").get<long>();
    r.median_update_norm = j.at("median_update_norm").get<double>();
    r.norm_bound = j.at("norm_bound").get<double>();
    r.grad_norm_sq = j.at("grad_norm_sq").get<double>();
    r.num_clusters = j.at("num_clusters").get<int>();
    r.cluster_sizes = j.at("cluster_sizes").get<std::vector<int>>();
    r.cluster_probs = j.at("cluster_probs").get<Vec>();
    r.degenerate = j.at("degenerate").get<bool>();
    reports.push_back(std::move(r));
  }
  return reports;
}

void write_summary_csv(const std::string& path, const std::vector<RoundReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("write_summary_csv: cannot open " + path);
  out << "round,asr,acc,ds,detected_tp,detected_fp,detected_fn,median_update_norm\n";
  for (const RoundReport& r : reports) {
    out << r.round << ',' << format_double(r.asr) << ',' << format_double(r.acc) << ','
        << format_double(r.ds) << ',' << r.tp << ',' << r.fp << ',' << r.fn << ','
        << format_double(r.median_update_norm) << '\n';
  }
}

}  // namespace guardfl
