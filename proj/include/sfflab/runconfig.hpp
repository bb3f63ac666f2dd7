#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfflab/analysis.hpp"
#include "sfflab/ensemble.hpp"

namespace sfflab {

// Everything one job needs, flat so that command-line flags, config-file keys
// and output-file metadata are all the same namespace. Defaults here are the
// resolved defaults echoed by --print-config.
struct RunConfig {
  std::string subcommand;

  std::string model = "syk";  // syk | goe | goe_with_x
  int majoranas = 12;
  double j_scale = 1.0;
  int dim = 50;
  double scale = 1.0;

  std::string evaluator = "bgl";  // unitary | bgl | dephasing_jumps | filtered | ode
  std::string filter = "power";   // power | lorentz | sech
  double delta = 2.0;
  int max_dim = 2048;
  std::string x_source = "auto";  // auto | goe | h0
  double dt = 0.05;
  int renorm_every = 1;

  double beta = 0.0;
  double gamma = 0.0;

  double tmin = 0.1;
  double tmax = 1e6;
  int points_per_decade = 16;
  bool include_zero = false;

  int realizations = 50;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: SFFLAB_WORKERS or hardware concurrency

  std::string plateau_mode = "none";  // none | unitary | bgl_asymptotic
  double cluster_tol = 1e-10;

  double smooth_window = 0.5;
  double band_epsilon = 0.1;
  double tail_decades = 1.0;
  double search_from = 0.0;
  std::string plateau_source = "tail";  // analyze: tail | stored

  std::string sweep_param = "gamma";  // gamma | delta
  std::string values;                 // comma-separated list
  std::string curve_prefix;           // per-value curve dump (optional)

  std::string input;                // analyze input file
  std::vector<std::string> inputs;  // plot input files
  std::string kind = "auto";        // plot: auto | curves | metrics
  std::string title;

  std::string out;
  bool print_config = false;
  std::string config_file;
};

/** Range/choice validation plus the documented rewrite: a power filter at
    delta = 2 is the gain/loss evaluator and is normalized to evaluator=bgl. */
void normalize_config(RunConfig& cfg);

/** Model/evaluator/grid assembly for the sff and sweep subcommands. */
EnsembleSpec resolve_ensemble_spec(const RunConfig& cfg);

AnalysisOptions resolve_analysis_options(const RunConfig& cfg);

/** "a,b,c" -> numbers; rejects empties and trailing separators. */
std::vector<double> parse_value_list(const std::string& csv);

/** Parse argv (plus any --config file, with flags taking precedence), run the
    selected job, and map failures onto exit codes: 0 ok, 2 usage, 3 numeric,
    4 resource limits. Partial outputs are removed on failure. */
int run_cli(int argc, const char* const* argv);

}  // namespace sfflab
