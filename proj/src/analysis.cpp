#include "sfflab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sfflab/errors.hpp"

namespace sfflab {

namespace {

constexpr double kValueFloor = 1e-300;  // keeps log() finite on dead-zero bins

void check_curve(const SffCurve& c) {
  if (c.t.empty() || c.t.size() != c.mean.size())
    throw std::invalid_argument("curve needs aligned, nonempty t and mean columns");
  for (std::size_t i = 1; i < c.t.size(); ++i)
    if (c.t[i] <= c.t[i - 1])
      throw std::invalid_argument("curve times must be strictly increasing");
}

std::string format_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

bool RampMetrics::has_warning(const std::string& w) const {
  return std::find(warnings.begin(), warnings.end(), w) != warnings.end();
}

SffCurve smooth_curve(const SffCurve& curve, double window_decades) {
  check_curve(curve);
  if (window_decades < 0) throw std::invalid_argument("window must be >= 0");
  SffCurve out = curve;
  out.metadata.emplace_back("smooth-window-decades", format_short(window_decades));
  if (window_decades == 0) return out;

  const std::size_t n = curve.t.size();
  // Slack so grid points born multiplicatively still count as inside when
  // they sit exactly on the window edge.
  const double half = (window_decades / 2) * (1.0 + 1e-9);
  std::vector<double> logt(n), logf(n);
  for (std::size_t i = 0; i < n; ++i) {
    logt[i] = curve.t[i] > 0 ? std::log10(curve.t[i]) : 0.0;
    logf[i] = std::log(std::max(curve.mean[i], kValueFloor));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (curve.t[i] <= 0) continue;  // no log-time neighborhood at t = 0
    double acc = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (curve.t[j] <= 0) continue;
      if (std::abs(logt[j] - logt[i]) <= half) {
        acc += logf[j];
        ++count;
      }
    }
    out.mean[i] = std::exp(acc / count);
  }
  return out;
}

DipResult find_dip(const SffCurve& curve, double search_from) {
  check_curve(curve);
  std::size_t first = curve.t.size();
  for (std::size_t i = 0; i < curve.t.size(); ++i)
    if (curve.t[i] >= search_from) {
      first = i;
      break;
    }
  if (first == curve.t.size())
    throw std::invalid_argument("search_from lies beyond the grid");

  DipResult dip;
  dip.index = first;
  for (std::size_t i = first + 1; i < curve.t.size(); ++i)
    if (curve.mean[i] < curve.mean[dip.index]) dip.index = i;
  dip.t_d = curve.t[dip.index];
  dip.f_d = curve.mean[dip.index];
  dip.at_boundary = dip.index == first || dip.index + 1 == curve.t.size();
  return dip;
}

double find_plateau_time(const SffCurve& curve, double f_p, double epsilon,
                         double t_after) {
  check_curve(curve);
  if (!(f_p > 0)) throw std::invalid_argument("plateau reference must be > 0");
  if (!(epsilon > 0 && epsilon < 1))
    throw std::invalid_argument("band epsilon must lie in (0, 1)");
  const double lo = f_p * (1 - epsilon), hi = f_p * (1 + epsilon);

  const std::size_t n = curve.t.size();
  std::size_t suffix = n;  // first index of the longest all-in-band suffix
  for (std::size_t i = n; i-- > 0;) {
    if (curve.mean[i] < lo || curve.mean[i] > hi) break;
    suffix = i;
  }
  if (suffix == n)
    throw NotSaturatedError("curve never settles into the plateau band [" +
                            format_short(lo) + ", " + format_short(hi) + "]");

  std::size_t after = n;
  for (std::size_t i = 0; i < n; ++i)
    if (curve.t[i] > t_after) {
      after = i;
      break;
    }
  if (after == n)
    throw NotSaturatedError("no grid point after t = " + format_short(t_after));
  return curve.t[std::max(suffix, after)];
}

double tail_average(const SffCurve& curve, double tail_decades) {
  check_curve(curve);
  if (!(tail_decades > 0)) throw std::invalid_argument("tail span must be > 0");
  const double cutoff = curve.t.back() / std::pow(10.0, tail_decades);
  double acc = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < curve.t.size(); ++i)
    if (curve.t[i] >= cutoff) {
      acc += curve.mean[i];
      ++count;
    }
  return acc / count;  // cutoff < t.back() so at least one point qualifies
}

RampMetrics ramp_metrics(const SffCurve& curve, const PlateauRefSpec& ref,
                         const AnalysisOptions& opt) {
  const SffCurve smoothed = smooth_curve(curve, opt.smooth_window_decades);
  const DipResult dip = find_dip(smoothed, opt.search_from);

  RampMetrics m;
  m.t_d = dip.t_d;
  m.f_d = dip.f_d;
  m.smooth_window_decades = opt.smooth_window_decades;
  m.band_epsilon = opt.band_epsilon;
  if (dip.at_boundary) m.warnings.push_back("boundary_dip");

  if (const auto* tail = std::get_if<FromTail>(&ref)) {
    m.f_p = tail_average(curve, tail->tail_decades);
    m.plateau_source = "tail";
  } else if (const auto* formula = std::get_if<FromFormula>(&ref)) {
    m.f_p = plateau_value(formula->clusters, formula->beta, formula->mode);
    m.plateau_source = "formula";
  } else {
    m.f_p = std::get<FromValue>(ref).f_p;
    m.plateau_source = "stored";
  }
  if (m.f_d > m.f_p) m.warnings.push_back("no_ramp");

  m.t_p = find_plateau_time(smoothed, m.f_p, opt.band_epsilon, m.t_d);
  m.ratio = m.t_p / m.t_d;
  return m;
}

const char* sweep_parameter_name(SweepParameter p) {
  return p == SweepParameter::Gamma ? "gamma" : "delta";
}

std::optional<std::size_t> SweepResult::best_index() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!e.metrics || !e.metrics->clean()) continue;
    if (!best || e.metrics->ratio > entries[*best].metrics->ratio) best = i;
  }
  return best;
}

namespace {

EnsembleSpec specialize(const EnsembleSpec& tmpl, SweepParameter p, double v) {
  EnsembleSpec spec = tmpl;
  if (p == SweepParameter::Gamma) {
    if (v < 0) throw std::invalid_argument("swept gamma must be >= 0");
    spec.gamma = v;
    if (auto* fe = std::get_if<FilteredEvaluator>(&spec.evaluator)) {
      if (auto* pf = std::get_if<PowerFilter>(&fe->filter))
        pf->gamma = v;
      else
        std::get<NamedFilter>(fe->filter).gamma = v;
    }
  } else {
    auto* fe = std::get_if<FilteredEvaluator>(&spec.evaluator);
    auto* pf = fe ? std::get_if<PowerFilter>(&fe->filter) : nullptr;
    if (!pf)
      throw std::invalid_argument("delta sweeps need a power-filter evaluator");
    if (v < 0) throw std::invalid_argument("swept delta must be >= 0");
    pf->delta = v;
  }
  return spec;
}

}  // namespace

SweepResult sweep(const EnsembleSpec& spec_template, SweepParameter parameter,
                  const std::vector<double>& values, const AnalysisOptions& opt,
                  int workers) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (parameter == SweepParameter::Delta)
    specialize(spec_template, parameter, values.front());  // fail fast on shape

  SweepResult result;
  result.parameter = parameter;
  result.entries.reserve(values.size());
  for (double v : values) {
    SweepEntry entry;
    entry.value = v;
    try {
      const EnsembleSpec spec = specialize(spec_template, parameter, v);
      entry.curve = run_ensemble(spec, workers);
      entry.metrics = ramp_metrics(entry.curve, FromTail{opt.tail_decades}, opt);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    result.entries.push_back(std::move(entry));
  }
  return result;
}

}  // namespace sfflab
