#include "maskbot/metrics.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "maskbot/error.hpp"

namespace maskbot {
namespace {

void put_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
  } else if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out += buf;
  }
}

double parse_number(const std::string& s, int line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(line, "bad number '" + s + "'");
  return v;
}

bool parse_flag(const std::string& s, int line) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw ParseError(line, "bad flag '" + s + "'");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

void write_metrics_csv(std::ostream& out, const MetricsLog& log) {
  std::string text(kMetricsHeader);
  text += '\n';
  for (const auto& r : log.rows) {
    for (double v : {r.t, r.alignment_error_deg, r.standoff_error_mm, r.onface_mean_mm,
                     r.onface_max_mm, r.est_distance_m, r.true_distance_m}) {
      put_number(text, v);
      text += ',';
    }
    for (int i = 0; i < kNumJoints; ++i) {
      put_number(text, r.q[i]);
      text += ',';
    }
    text += r.detection_valid ? '1' : '0';
    text += ',';
    text += r.predictor_on ? '1' : '0';
    text += '\n';
  }
  out << text;
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_metrics_csv(out, log);
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

MetricsLog read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw ParseError(1, "missing or unexpected metrics header");
  }
  MetricsLog log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 15) {
      throw ParseError(line_no, "expected 15 columns, got " + std::to_string(cells.size()));
    }
    MetricsRow r;
    r.t = parse_number(cells[0], line_no);
    r.alignment_error_deg = parse_number(cells[1], line_no);
    r.standoff_error_mm = parse_number(cells[2], line_no);
    r.onface_mean_mm = parse_number(cells[3], line_no);
    r.onface_max_mm = parse_number(cells[4], line_no);
    r.est_distance_m = parse_number(cells[5], line_no);
    r.true_distance_m = parse_number(cells[6], line_no);
    for (int i = 0; i < kNumJoints; ++i) r.q[i] = parse_number(cells[7 + static_cast<std::size_t>(i)], line_no);
    r.detection_valid = parse_flag(cells[13], line_no);
    r.predictor_on = parse_flag(cells[14], line_no);
    log.rows.push_back(r);
  }
  return log;
}

MetricsLog read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_metrics_csv(in);
}

MetricsSummary summarize(const MetricsLog& log) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  MetricsSummary s;
  s.ticks = log.rows.size();
  std::vector<double> onface, alignment;
  double worst = kNaN;
  for (const auto& r : log.rows) {
    if (r.detection_valid) ++s.valid_detections;
    if (std::isfinite(r.onface_mean_mm)) onface.push_back(r.onface_mean_mm);
    if (std::isfinite(r.onface_max_mm)) worst = std::isnan(worst) ? r.onface_max_mm : std::max(worst, r.onface_max_mm);
    if (std::isfinite(r.alignment_error_deg)) alignment.push_back(r.alignment_error_deg);
  }
  s.onface_samples = onface.size();
  s.onface_mean_mm = mean_of(onface);
  s.onface_max_mm = worst;
  if (onface.empty()) {
    s.onface_p95_mm = kNaN;
  } else {
    std::vector<double> sorted = onface;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
    s.onface_p95_mm = sorted[std::max<std::size_t>(rank, 1) - 1];
  }
  s.alignment_mean_deg = mean_of(alignment);
  s.final_alignment_deg = log.rows.empty() ? kNaN : log.rows.back().alignment_error_deg;
  s.final_standoff_error_mm = log.rows.empty() ? kNaN : log.rows.back().standoff_error_mm;
  return s;
}

}  // namespace maskbot
