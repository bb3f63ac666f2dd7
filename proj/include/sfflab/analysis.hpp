#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sfflab/ensemble.hpp"

namespace sfflab {

// Knobs for dip/ramp/plateau extraction. The extraction method is not unique;
// every knob is echoed into RampMetrics so results stay comparable.
struct AnalysisOptions {
  double smooth_window_decades = 0.5;
  double band_epsilon = 0.1;   // plateau band is [f_p(1-eps), f_p(1+eps)]
  double tail_decades = 1.0;   // span of the tail average (from_tail reference)
  double search_from = 0.0;    // dip search starts at the first t >= this
};

// Plateau reference: average the measured tail, evaluate the saturation
// formula on a measured degeneracy structure, or reuse a stored value (a
// curve file's recorded reference, say).
struct FromTail {
  double tail_decades = 1.0;
};
struct FromFormula {
  DegeneracyClusters clusters;
  double beta = 0.0;
  PlateauMode mode = PlateauMode::Unitary;
};
struct FromValue {
  double f_p = 0.0;
};
using PlateauRefSpec = std::variant<FromTail, FromFormula, FromValue>;

struct RampMetrics {
  double t_d = 0.0;  // dip time
  double f_d = 0.0;  // dip value (smoothed)
  double t_p = 0.0;  // plateau time
  double f_p = 0.0;  // plateau reference used
  double ratio = 0.0;  // t_p / t_d
  double smooth_window_decades = 0.0;
  double band_epsilon = 0.0;
  std::string plateau_source;          // "tail" or "formula"
  std::vector<std::string> warnings;   // "boundary_dip", "no_ramp"

  bool has_warning(const std::string& w) const;
  bool clean() const { return warnings.empty(); }
};

struct DipResult {
  double t_d = 0.0;
  double f_d = 0.0;
  std::size_t index = 0;
  bool at_boundary = false;  // argmin sits at an end of the searched range
};

/** Centered moving geometric mean over grid points within +-window/2 decades
    of each point in log-time. Window 0 returns the curve unchanged; endpoints
    use truncated windows; a t = 0 entry is copied through untouched. */
SffCurve smooth_curve(const SffCurve& curve, double window_decades);

/** Global minimum of curve.mean over t >= search_from, ties toward earliest. */
DipResult find_dip(const SffCurve& curve, double search_from = 0.0);

/** Earliest grid time after t_after whose suffix stays inside the plateau
    band around f_p. Throws NotSaturatedError if the curve never settles. */
double find_plateau_time(const SffCurve& curve, double f_p, double epsilon,
                         double t_after);

/** Mean of curve.mean over the trailing tail_decades of the grid. */
double tail_average(const SffCurve& curve, double tail_decades);

/** Smoothing + dip + plateau reference + band entry, with method metadata. */
RampMetrics ramp_metrics(const SffCurve& curve, const PlateauRefSpec& ref,
                         const AnalysisOptions& opt = {});

enum class SweepParameter { Gamma, Delta };

struct SweepEntry {
  double value = 0.0;
  SffCurve curve;
  std::optional<RampMetrics> metrics;  // empty when extraction failed
  std::string error;                   // failure reason, empty on success
};

struct SweepResult {
  SweepParameter parameter = SweepParameter::Gamma;
  std::vector<SweepEntry> entries;

  /** Index of the largest ratio among warning-free entries, if any. Entries
      with warnings or errors never win (an unresolved dip cannot place). */
  std::optional<std::size_t> best_index() const;
};

/** One ensemble run per swept value, all sharing the template's master seed so
    every value sees the same disorder realizations. Gamma sweeps retarget the
    ensemble rate (and any filter rate with it); delta sweeps require a power
    filter evaluator. Per-value failures are recorded and the sweep continues. */
SweepResult sweep(const EnsembleSpec& spec_template, SweepParameter parameter,
                  const std::vector<double>& values, const AnalysisOptions& opt = {},
                  int workers = 0);

const char* sweep_parameter_name(SweepParameter p);

}  // namespace sfflab
