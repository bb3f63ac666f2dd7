#include "sfflab/csvio.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sfflab/errors.hpp"

namespace sfflab {

namespace {

const char* kCurveHeader = "t,f_mean,f_stderr,n_ok";
const char* kSweepHeader = "parameter,t_d,f_d,t_p,f_p,ratio,warnings";
const char* kTrajectoryHeader = "t,fidelity,purity,trace_drift";

void preamble(std::ostringstream& out, const MetadataList& metadata) {
  for (const auto& [k, v] : metadata) out << "# " << k << " = " << v << "\n";
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string strip(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& file, int line, const std::string& field) {
  const std::string f = strip(field);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(f.c_str(), &end);
  if (f.empty() || end != f.c_str() + f.size())
    throw CsvParseError(file, line, "bad numeric field '" + field + "'");
  return v;
}

int parse_int(const std::string& file, int line, const std::string& field) {
  const std::string f = strip(field);
  char* end = nullptr;
  const long v = std::strtol(f.c_str(), &end, 10);
  if (f.empty() || end != f.c_str() + f.size())
    throw CsvParseError(file, line, "bad integer field '" + field + "'");
  return static_cast<int>(v);
}

// '# key = value' -> (key, value); plain comments yield an empty key.
std::pair<std::string, std::string> parse_meta(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) return {"", ""};
  return {strip(line.substr(1, eq - 1)), strip(line.substr(eq + 1))};
}

std::string sanitize_cell(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot open " + tmp + " for writing");
    out << body;
    out.flush();
    if (!out) throw ResourceError("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ResourceError("cannot move " + tmp + " into place: " +
                        std::strerror(errno));
  }
}

std::string CurveFileData::lookup(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return "";
}

SffCurve CurveFileData::to_curve() const {
  SffCurve c;
  c.t = t;
  c.mean = f_mean;
  c.stderr_ = f_stderr;
  c.metadata = metadata;
  const int ok = n_ok.empty() ? 0 : n_ok.front();
  const std::string total = lookup("realizations");
  c.n_realizations = total.empty() ? ok : std::atoi(total.c_str());
  c.n_failed = c.n_realizations - ok;
  const std::string ref = lookup("plateau-ref");
  if (!ref.empty()) c.plateau_ref = std::atof(ref.c_str());
  return c;
}

std::string curve_csv_text(const SffCurve& curve, const MetadataList& extra) {
  std::ostringstream out;
  preamble(out, extra);
  preamble(out, curve.metadata);
  out << kCurveHeader << "\n";
  const int ok = curve.n_realizations - curve.n_failed;
  for (std::size_t i = 0; i < curve.t.size(); ++i)
    out << format_full(curve.t[i]) << ',' << format_full(curve.mean[i]) << ','
        << format_full(curve.stderr_[i]) << ',' << ok << "\n";
  return out.str();
}

void write_curve_csv(const std::string& path, const SffCurve& curve,
                     const MetadataList& extra) {
  write_text_atomic(path, curve_csv_text(curve, extra));
}

CurveFileData read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  CurveFileData data;
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = strip(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      auto [k, v] = parse_meta(s);
      if (!k.empty()) data.metadata.emplace_back(k, v);
      continue;
    }
    if (!saw_header) {
      if (s != kCurveHeader)
        throw CsvParseError(path, lineno,
                            "expected header '" + std::string(kCurveHeader) + "'");
      saw_header = true;
      continue;
    }
    const auto fields = split(s, ',');
    if (fields.size() != 4)
      throw CsvParseError(path, lineno, "expected 4 fields, got " +
                                            std::to_string(fields.size()));
    data.t.push_back(parse_double(path, lineno, fields[0]));
    data.f_mean.push_back(parse_double(path, lineno, fields[1]));
    data.f_stderr.push_back(parse_double(path, lineno, fields[2]));
    data.n_ok.push_back(parse_int(path, lineno, fields[3]));
  }
  if (!saw_header) throw CsvParseError(path, lineno, "missing data header");
  if (data.t.empty()) throw CsvParseError(path, lineno, "no data rows");
  return data;
}

std::string trajectory_csv_text(const MetadataList& metadata,
                                const std::vector<TrajectoryRow>& rows) {
  std::ostringstream out;
  preamble(out, metadata);
  out << kTrajectoryHeader << "\n";
  for (const auto& r : rows)
    out << format_full(r.t) << ',' << format_full(r.fidelity) << ','
        << format_full(r.purity) << ',' << format_full(r.trace_drift) << "\n";
  return out.str();
}

void write_trajectory_csv(const std::string& path, const MetadataList& metadata,
                          const std::vector<TrajectoryRow>& rows) {
  write_text_atomic(path, trajectory_csv_text(metadata, rows));
}

std::string sweep_csv_text(const MetadataList& metadata, const SweepResult& result) {
  std::ostringstream out;
  preamble(out, metadata);
  out << kSweepHeader << "\n";
  for (const auto& e : result.entries) {
    out << format_full(e.value) << ',';
    if (e.metrics) {
      const RampMetrics& m = *e.metrics;
      out << format_full(m.t_d) << ',' << format_full(m.f_d) << ','
          << format_full(m.t_p) << ',' << format_full(m.f_p) << ','
          << format_full(m.ratio) << ',';
      std::string joined;
      for (const auto& w : m.warnings) {
        if (!joined.empty()) joined += ';';
        joined += w;
      }
      out << joined << "\n";
    } else {
      out << "nan,nan,nan,nan,nan,error:" << sanitize_cell(e.error) << "\n";
    }
  }
  return out.str();
}

void write_sweep_csv(const std::string& path, const MetadataList& metadata,
                     const SweepResult& result) {
  write_text_atomic(path, sweep_csv_text(metadata, result));
}

CsvKind detect_csv_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    if (s == kCurveHeader) return CsvKind::Curve;
    if (s == kSweepHeader) return CsvKind::Metrics;
    throw CsvParseError(path, lineno, "unrecognized data header '" + s + "'");
  }
  throw CsvParseError(path, lineno, "no data header found");
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path,
                                         MetadataList* metadata) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::vector<MetricsRow> rows;
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = strip(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      auto [k, v] = parse_meta(s);
      if (metadata && !k.empty()) metadata->emplace_back(k, v);
      continue;
    }
    if (!saw_header) {
      if (s != kSweepHeader)
        throw CsvParseError(path, lineno,
                            "expected header '" + std::string(kSweepHeader) + "'");
      saw_header = true;
      continue;
    }
    const auto fields = split(s, ',');
    if (fields.size() != 7)
      throw CsvParseError(path, lineno, "expected 7 fields, got " +
                                            std::to_string(fields.size()));
    MetricsRow row;
    row.value = parse_double(path, lineno, fields[0]);
    const std::string tag = strip(fields[6]);
    if (tag.rfind("error:", 0) == 0) {
      row.error = tag.substr(6);
    } else {
      row.metrics.t_d = parse_double(path, lineno, fields[1]);
      row.metrics.f_d = parse_double(path, lineno, fields[2]);
      row.metrics.t_p = parse_double(path, lineno, fields[3]);
      row.metrics.f_p = parse_double(path, lineno, fields[4]);
      row.metrics.ratio = parse_double(path, lineno, fields[5]);
      for (const auto& w : split(tag, ';'))
        if (!w.empty()) row.metrics.warnings.push_back(w);
    }
    rows.push_back(std::move(row));
  }
  if (!saw_header) throw CsvParseError(path, lineno, "missing data header");
  return rows;
}

}  // namespace sfflab
