#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "maskbot/kinematics.hpp"

namespace maskbot {

/// One control tick. `t` and `q` are taken at the start of the tick; the
/// alignment, standoff and on-face errors are measured when that tick's
/// projector frame is emitted. NaN marks a quantity that was not available.
struct MetricsRow {
  double t = 0.0;
  double alignment_error_deg = 0.0;
  double standoff_error_mm = 0.0;
  double onface_mean_mm = 0.0;
  double onface_max_mm = 0.0;
  double est_distance_m = 0.0;
  double true_distance_m = 0.0;
  JointVector q = JointVector::Zero();
  bool detection_valid = false;
  bool predictor_on = false;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
};

inline constexpr std::string_view kMetricsHeader =
    "t,alignment_error_deg,standoff_error_mm,onface_mean_mm,onface_max_mm,est_distance_m,"
    "true_distance_m,q1,q2,q3,q4,q5,q6,detection_valid,predictor_on";

/// Header line then one row per tick; numbers printed with 9 significant
/// digits (`nan`, `inf`, `-inf` for non-finite), flags as 0/1, '\n' endings.
void write_metrics_csv(std::ostream& out, const MetricsLog& log);
void write_metrics_csv(const std::filesystem::path& path, const MetricsLog& log);

/// Inverse of write_metrics_csv. Throws ParseError.
MetricsLog read_metrics_csv(std::istream& in);
MetricsLog read_metrics_csv(const std::filesystem::path& path);

struct MetricsSummary {
  std::size_t ticks = 0;
  std::size_t valid_detections = 0;
  std::size_t onface_samples = 0;  ///< rows with a finite on-face error
  double onface_mean_mm = 0.0;     ///< mean of per-row means
  double onface_p95_mm = 0.0;      ///< nearest-rank 95th percentile of per-row means
  double onface_max_mm = 0.0;
  double alignment_mean_deg = 0.0;
  double final_alignment_deg = 0.0;
  double final_standoff_error_mm = 0.0;
};

/// Aggregates over the finite values only; all-NaN columns give NaN.
MetricsSummary summarize(const MetricsLog& log);

}  // namespace maskbot
