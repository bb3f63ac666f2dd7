#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sfflab/analysis.hpp"
#include "sfflab/ensemble.hpp"

namespace sfflab {

using MetadataList = std::vector<std::pair<std::string, std::string>>;

// In-memory form of a curve CSV: '# key = value' preamble, header row, then
// one data row per grid time.
struct CurveFileData {
  MetadataList metadata;
  std::vector<double> t;
  std::vector<double> f_mean;
  std::vector<double> f_stderr;
  std::vector<int> n_ok;

  std::string lookup(const std::string& key) const;  // "" when absent
  SffCurve to_curve() const;
};

/** Shortest decimal that round-trips a double (17 significant digits). */
std::string format_full(double v);

/** Write body to path via a temp file and rename, so failures leave either
    the old file or nothing. */
void write_text_atomic(const std::string& path, const std::string& body);

std::string curve_csv_text(const SffCurve& curve, const MetadataList& extra = {});
void write_curve_csv(const std::string& path, const SffCurve& curve,
                     const MetadataList& extra = {});

/** Parse a curve CSV. Throws CsvParseError with the offending line number. */
CurveFileData read_curve_csv(const std::string& path);

struct TrajectoryRow {
  double t = 0.0;
  double fidelity = 0.0;
  double purity = 0.0;
  double trace_drift = 0.0;
};

std::string trajectory_csv_text(const MetadataList& metadata,
                                const std::vector<TrajectoryRow>& rows);
void write_trajectory_csv(const std::string& path, const MetadataList& metadata,
                          const std::vector<TrajectoryRow>& rows);

// One row per swept value: value, metrics columns, semicolon-joined warnings.
std::string sweep_csv_text(const MetadataList& metadata, const SweepResult& result);
void write_sweep_csv(const std::string& path, const MetadataList& metadata,
                     const SweepResult& result);

struct MetricsRow {
  double value = 0.0;
  RampMetrics metrics;
  std::string error;
};

/** Parse a sweep/metrics CSV back into rows (used by the plot subcommand). */
std::vector<MetricsRow> read_metrics_csv(const std::string& path,
                                         MetadataList* metadata = nullptr);

enum class CsvKind { Curve, Metrics };

/** Classify a CSV by its data header. Throws CsvParseError on anything else. */
CsvKind detect_csv_kind(const std::string& path);

}  // namespace sfflab
