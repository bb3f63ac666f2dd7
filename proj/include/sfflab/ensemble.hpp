#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sfflab/dynamics.hpp"
#include "sfflab/hamiltonians.hpp"
#include "sfflab/sff.hpp"

namespace sfflab {

// Logarithmic time grid, points_per_decade per factor 10, endpoints included.
struct TimeGrid {
  double t_min = 1e-1;
  double t_max = 1e6;
  int points_per_decade = 16;
  bool include_zero = false;

  std::vector<double> times() const;
  void validate() const;
};

struct SykModel {
  SykParams params;
};
struct GoeModel {
  GoeParams params;
};
// H0 and X drawn from independent sub-streams of the realization seed.
struct GoeWithXModel {
  GoeParams params;
};
using ModelSpec = std::variant<SykModel, GoeModel, GoeWithXModel>;

enum class XSource { Goe, H0 };

struct UnitaryEvaluator {};
struct BglEvaluator {};
struct DephasingJumpsEvaluator {
  int max_dim = 2048;
};
struct FilteredEvaluator {
  FilterSpec filter = PowerFilter{};
};
struct OdeEvaluator {
  XSource x_source = XSource::Goe;
  OdeConfig cfg = {.dt = 0.05};
};
using EvaluatorSpec = std::variant<UnitaryEvaluator, BglEvaluator,
                                   DephasingJumpsEvaluator, FilteredEvaluator,
                                   OdeEvaluator>;

// Request an ensemble-averaged saturation reference alongside the curve
// (per-realization plateau_value over measured clusters, then averaged).
struct PlateauRefRequest {
  PlateauMode mode = PlateauMode::Unitary;
  double cluster_tol = 1e-10;
};

struct EnsembleSpec {
  ModelSpec model = SykModel{};
  int n_realizations = 50;
  std::uint64_t master_seed = 0;
  EvaluatorSpec evaluator = BglEvaluator{};
  double beta = 0.0;
  double gamma = 0.0;
  TimeGrid grid;
  std::optional<PlateauRefRequest> plateau_ref;

  void validate() const;
};

struct SffCurve {
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> stderr_;  // sample stddev / sqrt(n_ok)
  int n_realizations = 0;
  int n_failed = 0;
  double plateau_ref = 0.0;  // 0 unless requested
  std::vector<std::pair<std::string, std::string>> metadata;
};

/** Instance of the model for one realization seed (goe_with_x reserves
    sub-stream 0 for H0, leaving 1 for the gain/loss generator). */
HamiltonianInstance realize_model(const ModelSpec& model, std::uint64_t seed);

/** Disorder-averaged fidelity curve. Deterministic for fixed spec regardless
    of worker count: per-realization seeds come from derive_seed and the
    reduction runs in realization-index order. workers = 0 picks the
    SFFLAB_WORKERS env var or hardware concurrency. */
SffCurve run_ensemble(const EnsembleSpec& spec, int workers = 0);

/** Mean and sample-stderr reduction in row order (exposed for tests). */
std::pair<std::vector<double>, std::vector<double>> reduce_curves(
    const std::vector<std::vector<double>>& rows);

int default_worker_count();

}  // namespace sfflab
