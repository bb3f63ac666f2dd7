#include "sfflab/runconfig.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <iostream>
#include <map>
#include <stdexcept>

#include <CLI11.hpp>

#include "sfflab/csvio.hpp"
#include "sfflab/dynamics.hpp"
#include "sfflab/errors.hpp"
#include "sfflab/spectral.hpp"
#include "sfflab/svgplot.hpp"
#include "sfflab/version.hpp"

namespace sfflab {

namespace {

// ---- value formatting and parsing for config keys ----

std::string shortest(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::invalid_argument(key + ": bad number '" + v + "'");
  return x;
}

long long to_ll(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  char* end = nullptr;
  const long long x = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::invalid_argument(key + ": bad integer '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  char* end = nullptr;
  const unsigned long long x = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::invalid_argument(key + ": bad unsigned integer '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument(key + ": bad boolean '" + v + "'");
}

// ---- option registry: one namespace for flags, config keys, metadata ----

struct Binding {
  std::string key;
  CLI::Option* opt = nullptr;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

struct Registry {
  std::vector<Binding> entries;

  const Binding* find(const std::string& key) const {
    for (const auto& b : entries)
      if (b.key == key) return &b;
    return nullptr;
  }
};

std::string key_of(const std::string& flag) {
  return flag.rfind("--", 0) == 0 ? flag.substr(2) : flag;
}

CLI::Option* bind_value(CLI::App* cmd, Registry& reg, const std::string& flag,
                  double& field, const std::string& help) {
  CLI::Option* opt = cmd->add_option(flag, field, help)->capture_default_str();
  const std::string key = key_of(flag);
  reg.entries.push_back({key, opt,
                         [key, &field](const std::string& v) { field = to_double(key, v); },
                         [&field] { return shortest(field); }});
  return opt;
}

CLI::Option* bind_value(CLI::App* cmd, Registry& reg, const std::string& flag, int& field,
                  const std::string& help) {
  CLI::Option* opt = cmd->add_option(flag, field, help)->capture_default_str();
  const std::string key = key_of(flag);
  reg.entries.push_back({key, opt,
                         [key, &field](const std::string& v) {
                           field = static_cast<int>(to_ll(key, v));
                         },
                         [&field] { return std::to_string(field); }});
  return opt;
}

CLI::Option* bind_value(CLI::App* cmd, Registry& reg, const std::string& flag,
                  std::uint64_t& field, const std::string& help) {
  CLI::Option* opt = cmd->add_option(flag, field, help)->capture_default_str();
  const std::string key = key_of(flag);
  reg.entries.push_back({key, opt,
                         [key, &field](const std::string& v) { field = to_u64(key, v); },
                         [&field] { return std::to_string(field); }});
  return opt;
}

CLI::Option* bind_value(CLI::App* cmd, Registry& reg, const std::string& flag,
                  std::string& field, const std::string& help) {
  CLI::Option* opt = cmd->add_option(flag, field, help)->capture_default_str();
  const std::string key = key_of(flag);
  reg.entries.push_back({key, opt,
                         [&field](const std::string& v) { field = trim(v); },
                         [&field] { return field; }});
  return opt;
}

CLI::Option* bind_flag(CLI::App* cmd, Registry& reg, const std::string& flag,
                       bool& field, const std::string& help) {
  CLI::Option* opt = cmd->add_flag(flag, field, help);
  const std::string key = key_of(flag);
  reg.entries.push_back({key, opt,
                         [key, &field](const std::string& v) { field = to_bool(key, v); },
                         [&field] { return field ? std::string("true") : std::string("false"); }});
  return opt;
}

CLI::Option* bind_list(CLI::App* cmd, Registry& reg, const std::string& flag,
                       std::vector<std::string>& field, const std::string& help) {
  CLI::Option* opt = cmd->add_option(flag, field, help);
  const std::string key = key_of(flag);
  reg.entries.push_back({key, opt,
                         [&field](const std::string& v) {
                           field.clear();
                           std::string::size_type start = 0;
                           for (;;) {
                             const auto pos = v.find(',', start);
                             const std::string item = trim(v.substr(start, pos - start));
                             if (!item.empty()) field.push_back(item);
                             if (pos == std::string::npos) break;
                             start = pos + 1;
                           }
                         },
                         [&field] {
                           std::string joined;
                           for (const auto& s : field) {
                             if (!joined.empty()) joined += ',';
                             joined += s;
                           }
                           return joined;
                         }});
  return opt;
}

// ---- per-subcommand option groups ----

void add_model_options(CLI::App* cmd, RunConfig& cfg, Registry& reg) {
  bind_value(cmd, reg, "--model", cfg.model, "system: syk, goe, or goe_with_x");
  bind_value(cmd, reg, "--majoranas", cfg.majoranas, "Majorana count for syk (even, >= 4)");
  bind_value(cmd, reg, "--j-scale", cfg.j_scale, "syk coupling strength J");
  bind_value(cmd, reg, "--dim", cfg.dim, "matrix dimension for goe models");
  bind_value(cmd, reg, "--scale", cfg.scale, "goe bandwidth parameter");
}

void add_evaluator_options(CLI::App* cmd, RunConfig& cfg, Registry& reg) {
  bind_value(cmd, reg, "--evaluator", cfg.evaluator,
       "unitary, bgl, dephasing_jumps, filtered, or ode (filtered with the "
       "power filter at delta 2 is normalized to bgl)");
  bind_value(cmd, reg, "--filter", cfg.filter, "filtered evaluator shape: power, lorentz, sech");
  bind_value(cmd, reg, "--delta", cfg.delta, "power filter exponent |E|^delta");
  bind_value(cmd, reg, "--max-dim", cfg.max_dim, "dimension cap for the dephasing pair sum");
  bind_value(cmd, reg, "--x-source", cfg.x_source, "generator for the nonlinear route: auto, goe (independent draw), h0");
  bind_value(cmd, reg, "--dt", cfg.dt, "integrator step bound");
  bind_value(cmd, reg, "--renorm-every", cfg.renorm_every, "trace renormalization cadence");
}

void add_physics_options(CLI::App* cmd, RunConfig& cfg, Registry& reg) {
  bind_value(cmd, reg, "--beta", cfg.beta, "inverse temperature of the reference state");
  bind_value(cmd, reg, "--gamma", cfg.gamma, "gain/loss (or dephasing) rate");
}

void add_grid_options(CLI::App* cmd, RunConfig& cfg, Registry& reg) {
  bind_value(cmd, reg, "--tmin", cfg.tmin, "first grid time");
  bind_value(cmd, reg, "--tmax", cfg.tmax, "last grid time");
  bind_value(cmd, reg, "--points-per-decade", cfg.points_per_decade, "log grid density");
  bind_flag(cmd, reg, "--include-zero", cfg.include_zero, "prepend t = 0");
}

void add_ensemble_options(CLI::App* cmd, RunConfig& cfg, Registry& reg) {
  bind_value(cmd, reg, "--realizations", cfg.realizations, "disorder realizations");
  bind_value(cmd, reg, "--seed", cfg.seed, "master seed (realization seeds derive from it)");
  bind_value(cmd, reg, "--workers", cfg.workers, "worker threads (0: SFFLAB_WORKERS or autodetect)");
  bind_value(cmd, reg, "--plateau-mode", cfg.plateau_mode,
       "record a saturation reference: none, unitary, or bgl_asymptotic");
  bind_value(cmd, reg, "--cluster-tol", cfg.cluster_tol,
       "relative tolerance for degeneracy clustering");
}

void add_analysis_options(CLI::App* cmd, RunConfig& cfg, Registry& reg) {
  bind_value(cmd, reg, "--smooth-window", cfg.smooth_window, "smoothing window, decades");
  bind_value(cmd, reg, "--band-epsilon", cfg.band_epsilon, "plateau band half-width");
  bind_value(cmd, reg, "--tail-decades", cfg.tail_decades, "tail-average span, decades");
  bind_value(cmd, reg, "--search-from", cfg.search_from, "dip search start time");
}

// --config and --print-config stay out of the registry: they steer parsing
// itself and make no sense inside a config file or an output preamble.
void add_io_options(CLI::App* cmd, RunConfig& cfg, Registry& reg) {
  bind_value(cmd, reg, "--out", cfg.out, "output file path");
  cmd->add_option("--config", cfg.config_file,
                  "flat key=value file; command-line flags take precedence");
  cmd->add_flag("--print-config", cfg.print_config,
                "print the resolved configuration and exit");
}

// ---- config file merge (flags override file values) ----

void apply_config_file(const std::string& path, const std::string& active,
                       const Registry& reg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    const std::string where = path + ":" + std::to_string(lineno);
    if (eq == std::string::npos)
      throw std::invalid_argument(where + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key == "subcommand") {
      if (value != active)
        throw std::invalid_argument(where + ": config is for subcommand '" + value +
                                    "', but '" + active + "' was invoked");
      continue;
    }
    // informational output-metadata keys; accepted so a curve preamble can be
    // replayed as a config, but they configure nothing
    if (key == "version" || key == "plateau-ref" || key == "failed-realizations")
      continue;
    const Binding* b = reg.find(key);
    if (!b) throw std::invalid_argument(where + ": unknown config key '" + key + "'");
    if (b->opt->count() > 0) continue;
    try {
      b->set(value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
  }
}

MetadataList make_echo(const RunConfig& cfg, const Registry& reg, bool runtime_keys) {
  MetadataList m;
  m.emplace_back("subcommand", cfg.subcommand);
  m.emplace_back("version", kVersion);
  for (const Binding& b : reg.entries) {
    if (!runtime_keys && b.key == "workers") continue;
    m.emplace_back(b.key, b.get());
  }
  return m;
}

void override_value(MetadataList& m, const std::string& key, const std::string& v) {
  for (auto& [k, val] : m)
    if (k == key) {
      val = v;
      return;
    }
  m.emplace_back(key, v);
}

// ---- job execution ----

struct OutputTracker {
  std::vector<std::string> written;

  void add(const std::string& p) { written.push_back(p); }
  void discard_all() {
    for (const auto& p : written) std::remove(p.c_str());
  }
};

MetadataList measured_metadata(const SffCurve& curve) {
  MetadataList kept;
  for (const auto& [k, v] : curve.metadata)
    if (k == "plateau-ref" || k == "failed-realizations") kept.emplace_back(k, v);
  return kept;
}

std::string joined_warnings(const RampMetrics& m) {
  if (m.warnings.empty()) return "none";
  std::string s;
  for (const auto& w : m.warnings) {
    if (!s.empty()) s += ';';
    s += w;
  }
  return s;
}

void run_sff(const RunConfig& cfg, const MetadataList& echo, OutputTracker& outs) {
  const EnsembleSpec spec = resolve_ensemble_spec(cfg);
  SffCurve curve = run_ensemble(spec, cfg.workers);
  const int failed = curve.n_failed;
  curve.metadata = measured_metadata(curve);
  write_curve_csv(cfg.out, curve, echo);
  outs.add(cfg.out);
  std::cout << "wrote " << cfg.out << ": " << curve.t.size() << " grid points, "
            << curve.n_realizations << " realizations";
  if (failed > 0) std::cout << " (" << failed << " failed)";
  std::cout << "\n";
  if (spec.plateau_ref)
    std::cout << "saturation reference (" << cfg.plateau_mode
              << ") = " << shortest(curve.plateau_ref) << "\n";
}

void run_sweep(const RunConfig& cfg, const MetadataList& echo, OutputTracker& outs) {
  const EnsembleSpec spec = resolve_ensemble_spec(cfg);
  const std::vector<double> values = parse_value_list(cfg.values);
  const SweepParameter param =
      cfg.sweep_param == "gamma" ? SweepParameter::Gamma : SweepParameter::Delta;
  const AnalysisOptions opts = resolve_analysis_options(cfg);

  const SweepResult result = sweep(spec, param, values, opts, cfg.workers);

  int failures = 0;
  for (const auto& e : result.entries) {
    std::cout << cfg.sweep_param << " = " << shortest(e.value) << ": ";
    if (e.metrics) {
      std::cout << "ratio = " << shortest(e.metrics->ratio)
                << " (t_d = " << shortest(e.metrics->t_d)
                << ", t_p = " << shortest(e.metrics->t_p)
                << ", warnings: " << joined_warnings(*e.metrics) << ")\n";
    } else {
      ++failures;
      std::cout << "failed: " << e.error << "\n";
    }
  }
  if (failures == static_cast<int>(result.entries.size()))
    throw NumericError("every swept value failed; first failure: " +
                       result.entries.front().error);
  if (const auto best = result.best_index())
    std::cout << "best " << cfg.sweep_param << " = "
              << shortest(result.entries[*best].value)
              << " (ratio = " << shortest(result.entries[*best].metrics->ratio) << ")\n";

  if (!cfg.curve_prefix.empty()) {
    for (const auto& e : result.entries) {
      if (e.curve.t.empty()) continue;
      SffCurve curve = e.curve;
      MetadataList curve_echo = echo;
      override_value(curve_echo, cfg.sweep_param, shortest(e.value));
      curve.metadata = measured_metadata(curve);
      char tag[40];
      std::snprintf(tag, sizeof tag, "%g", e.value);
      const std::string path = cfg.curve_prefix + cfg.sweep_param + "_" + tag + ".csv";
      write_curve_csv(path, curve, curve_echo);
      outs.add(path);
    }
  }
  write_sweep_csv(cfg.out, echo, result);
  outs.add(cfg.out);
  std::cout << "wrote " << cfg.out << "\n";
}

void run_evolve(const RunConfig& cfg, const MetadataList& echo, OutputTracker& outs) {
  const EnsembleSpec model_holder = resolve_ensemble_spec(cfg);  // model validation
  if (cfg.x_source == "goe" && cfg.model != "goe_with_x")
    throw std::invalid_argument("x-source goe needs --model goe_with_x");

  const std::uint64_t seed0 = derive_seed(cfg.seed, 0);
  const HamiltonianInstance h0 = realize_model(model_holder.model, seed0);
  const EigenSystem es = diagonalize_full(h0);
  const StateVector psi = coherent_gibbs(es.spectrum, cfg.beta);

  Eigen::MatrixXcd x_energy;
  if (cfg.x_source == "goe") {
    GoeParams xp = std::get<GoeWithXModel>(model_holder.model).params;
    xp.seed = substream_seed(seed0, 1);
    x_energy = es.vectors.adjoint() * build_goe_hamiltonian(xp).matrix * es.vectors;
  } else {
    x_energy = Eigen::MatrixXcd::Zero(es.spectrum.dim(), es.spectrum.dim());
    for (Eigen::Index n = 0; n < es.spectrum.dim(); ++n)
      x_energy(n, n) = es.spectrum.energies[n];
  }

  const TimeGrid grid{cfg.tmin, cfg.tmax, cfg.points_per_decade, cfg.include_zero};
  const std::vector<double> times = grid.times();
  if (times.back() / cfg.dt > 5e7)
    throw ResourceError("trajectory needs more than 5e7 steps; raise --dt or lower --tmax");

  DensityMatrix rho0{psi.amplitudes * psi.amplitudes.adjoint()};
  OdeConfig ocfg;
  ocfg.dt = cfg.dt;
  ocfg.renormalize_every = cfg.renorm_every;
  const MatrixTrajectory traj =
      integrate_bgl_ode(rho0, es.spectrum, x_energy, cfg.gamma, times, ocfg);

  std::vector<TrajectoryRow> rows(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const DensityMatrix rho{traj.states[i]};
    rows[i] = {times[i], fidelity(psi, rho), purity(rho), traj.trace_drift[i]};
  }
  write_trajectory_csv(cfg.out, echo, rows);
  outs.add(cfg.out);
  std::cout << "wrote " << cfg.out << ": " << rows.size()
            << " points, max trace drift " << shortest(traj.max_drift) << "\n";
}

void run_analyze(const RunConfig& cfg, const MetadataList& echo, OutputTracker& outs) {
  const CurveFileData file = read_curve_csv(cfg.input);
  const SffCurve curve = file.to_curve();
  const AnalysisOptions opts = resolve_analysis_options(cfg);

  PlateauRefSpec ref = FromTail{cfg.tail_decades};
  if (cfg.plateau_source == "stored") {
    const std::string stored = file.lookup("plateau-ref");
    if (stored.empty())
      throw std::invalid_argument(cfg.input + " has no stored plateau-ref to reuse");
    ref = FromValue{to_double("plateau-ref", stored)};
  }
  const RampMetrics m = ramp_metrics(curve, ref, opts);

  std::cout << "t_d = " << shortest(m.t_d) << "\n"
            << "f_d = " << shortest(m.f_d) << "\n"
            << "t_p = " << shortest(m.t_p) << "\n"
            << "f_p = " << shortest(m.f_p) << " (" << m.plateau_source << ")\n"
            << "ratio = " << shortest(m.ratio) << "\n"
            << "warnings = " << joined_warnings(m) << "\n";

  if (!cfg.out.empty()) {
    SweepResult single;
    single.parameter = SweepParameter::Gamma;
    SweepEntry entry;
    const std::string g = file.lookup("gamma");
    entry.value = g.empty() ? 0.0 : to_double("gamma", g);
    entry.metrics = m;
    single.entries.push_back(std::move(entry));
    write_sweep_csv(cfg.out, echo, single);
    outs.add(cfg.out);
    std::cout << "wrote " << cfg.out << "\n";
  }
}

std::string pretty_number(const std::string& v) {
  if (v.empty()) return v;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) return v;
  return shortest(x);
}

std::string curve_label(const CurveFileData& d) {
  std::string label = "beta=" + pretty_number(d.lookup("beta")) +
                      ", gamma=" + pretty_number(d.lookup("gamma"));
  const std::string evaluator = d.lookup("evaluator");
  if (evaluator == "filtered") {
    label += ", " + d.lookup("filter");
    if (d.lookup("filter") == "power")
      label += " delta=" + pretty_number(d.lookup("delta"));
  } else if (!evaluator.empty() && evaluator != "bgl" && evaluator != "unitary") {
    label += ", " + evaluator;
  }
  return label;
}

std::string basename_of(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

void run_plot(const RunConfig& cfg, const MetadataList&, OutputTracker& outs) {
  std::string kind = cfg.kind;
  if (kind == "auto") {
    const CsvKind first = detect_csv_kind(cfg.inputs.front());
    for (const auto& p : cfg.inputs)
      if (detect_csv_kind(p) != first)
        throw std::invalid_argument("inputs mix curve and metrics files; pass --kind");
    kind = first == CsvKind::Curve ? "curves" : "metrics";
  }

  std::vector<PlotSeries> series;
  PlotOptions opt;
  opt.title = cfg.title;
  if (kind == "curves") {
    for (const auto& p : cfg.inputs) {
      const CurveFileData d = read_curve_csv(p);
      series.push_back({curve_label(d), d.t, d.f_mean});
    }
  } else {
    opt.scatter = true;
    opt.log_y = false;
    opt.y_label = "t_p/t_d";
    for (const auto& p : cfg.inputs) {
      MetadataList meta;
      const std::vector<MetricsRow> rows = read_metrics_csv(p, &meta);
      PlotSeries s;
      s.label = basename_of(p);
      for (const auto& r : rows) {
        if (!r.error.empty()) continue;
        s.x.push_back(r.value);
        s.y.push_back(r.metrics.ratio);
      }
      for (const auto& [k, v] : meta)
        if (k == "parameter") opt.x_label = v;
      series.push_back(std::move(s));
    }
  }
  write_text_atomic(cfg.out, render_svg(series, opt));
  outs.add(cfg.out);
  std::cout << "wrote " << cfg.out << "\n";
}

void check_member(const std::string& value, std::initializer_list<const char*> allowed,
                  const std::string& flag) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string msg = flag + " must be one of {";
  bool first = true;
  for (const char* a : allowed) {
    if (!first) msg += ", ";
    msg += a;
    first = false;
  }
  throw std::invalid_argument(msg + "}, got '" + value + "'");
}

}  // namespace

void normalize_config(RunConfig& cfg) {
  check_member(cfg.model, {"syk", "goe", "goe_with_x"}, "--model");
  check_member(cfg.evaluator, {"unitary", "bgl", "dephasing_jumps", "filtered", "ode"},
               "--evaluator");
  check_member(cfg.filter, {"power", "lorentz", "sech"}, "--filter");
  check_member(cfg.x_source, {"auto", "goe", "h0"}, "--x-source");
  if (cfg.x_source == "auto") cfg.x_source = cfg.model == "goe_with_x" ? "goe" : "h0";
  check_member(cfg.plateau_mode, {"none", "unitary", "bgl_asymptotic"}, "--plateau-mode");
  check_member(cfg.sweep_param, {"gamma", "delta"}, "--parameter");
  check_member(cfg.kind, {"auto", "curves", "metrics"}, "--kind");
  check_member(cfg.plateau_source, {"tail", "stored"}, "--plateau-source");

  if (cfg.model == "syk") {
    if (cfg.majoranas < 4 || cfg.majoranas % 2 != 0)
      throw std::invalid_argument("--majoranas must be an even count >= 4");
    if (!(cfg.j_scale > 0)) throw std::invalid_argument("--j-scale must be > 0");
  } else {
    if (cfg.dim < 2) throw std::invalid_argument("--dim must be >= 2");
    if (!(cfg.scale > 0)) throw std::invalid_argument("--scale must be > 0");
  }
  if (cfg.gamma < 0) throw std::invalid_argument("--gamma must be >= 0");
  if (cfg.delta < 0) throw std::invalid_argument("--delta must be >= 0");
  if (!(cfg.dt > 0)) throw std::invalid_argument("--dt must be > 0");
  if (cfg.renorm_every < 1) throw std::invalid_argument("--renorm-every must be >= 1");
  if (cfg.max_dim < 1) throw std::invalid_argument("--max-dim must be >= 1");
  if (cfg.realizations < 1) throw std::invalid_argument("--realizations must be >= 1");
  if (cfg.workers < 0) throw std::invalid_argument("--workers must be >= 0");
  if (!(cfg.cluster_tol > 0)) throw std::invalid_argument("--cluster-tol must be > 0");
  if (cfg.smooth_window < 0) throw std::invalid_argument("--smooth-window must be >= 0");
  if (!(cfg.band_epsilon > 0 && cfg.band_epsilon < 1))
    throw std::invalid_argument("--band-epsilon must lie in (0, 1)");
  if (!(cfg.tail_decades > 0)) throw std::invalid_argument("--tail-decades must be > 0");
  if (cfg.search_from < 0) throw std::invalid_argument("--search-from must be >= 0");
  TimeGrid{cfg.tmin, cfg.tmax, cfg.points_per_decade, cfg.include_zero}.validate();

  // documented identity: the delta = 2 power filter is the gain/loss job
  // (skipped when delta itself is being swept, so the template keeps its shape)
  const bool delta_swept = cfg.subcommand == "sweep" && cfg.sweep_param == "delta";
  if (!delta_swept && cfg.evaluator == "filtered" && cfg.filter == "power" &&
      cfg.delta == 2.0)
    cfg.evaluator = "bgl";
}

EnsembleSpec resolve_ensemble_spec(const RunConfig& raw) {
  RunConfig cfg = raw;
  normalize_config(cfg);

  EnsembleSpec spec;
  if (cfg.model == "syk") {
    spec.model = SykModel{{cfg.majoranas, cfg.j_scale, 0}};
  } else if (cfg.model == "goe") {
    spec.model = GoeModel{{cfg.dim, 0, cfg.scale}};
  } else {
    spec.model = GoeWithXModel{{cfg.dim, 0, cfg.scale}};
  }

  if (cfg.evaluator == "unitary") {
    spec.evaluator = UnitaryEvaluator{};
  } else if (cfg.evaluator == "bgl") {
    spec.evaluator = BglEvaluator{};
  } else if (cfg.evaluator == "dephasing_jumps") {
    spec.evaluator = DephasingJumpsEvaluator{cfg.max_dim};
  } else if (cfg.evaluator == "filtered") {
    FilteredEvaluator fe;
    if (cfg.filter == "power")
      fe.filter = PowerFilter{cfg.gamma, cfg.delta};
    else
      fe.filter = NamedFilter{cfg.filter, cfg.gamma};
    spec.evaluator = fe;
  } else {
    OdeEvaluator ode;
    ode.x_source = cfg.x_source == "goe" ? XSource::Goe : XSource::H0;
    ode.cfg.dt = cfg.dt;
    ode.cfg.renormalize_every = cfg.renorm_every;
    spec.evaluator = ode;
  }

  spec.n_realizations = cfg.realizations;
  spec.master_seed = cfg.seed;
  spec.beta = cfg.beta;
  spec.gamma = cfg.gamma;
  spec.grid = TimeGrid{cfg.tmin, cfg.tmax, cfg.points_per_decade, cfg.include_zero};
  if (cfg.plateau_mode != "none")
    spec.plateau_ref = PlateauRefRequest{cfg.plateau_mode == "unitary"
                                             ? PlateauMode::Unitary
                                             : PlateauMode::BglAsymptotic,
                                         cfg.cluster_tol};
  spec.validate();
  return spec;
}

AnalysisOptions resolve_analysis_options(const RunConfig& cfg) {
  AnalysisOptions opt;
  opt.smooth_window_decades = cfg.smooth_window;
  opt.band_epsilon = cfg.band_epsilon;
  opt.tail_decades = cfg.tail_decades;
  opt.search_from = cfg.search_from;
  return opt;
}

std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> values;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = csv.find(',', start);
    values.push_back(to_double("--values", csv.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return values;
}

int run_cli(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"fidelity-based spectral form factor laboratory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::map<const CLI::App*, Registry> registries;
  std::map<const CLI::App*,
           std::function<void(const RunConfig&, const MetadataList&, OutputTracker&)>>
      runners;

  {
    CLI::App* sff = app.add_subcommand("sff", "disorder-averaged fidelity curve");
    Registry& reg = registries[sff];
    add_model_options(sff, cfg, reg);
    add_evaluator_options(sff, cfg, reg);
    add_physics_options(sff, cfg, reg);
    add_grid_options(sff, cfg, reg);
    add_ensemble_options(sff, cfg, reg);
    add_io_options(sff, cfg, reg);
    runners[sff] = run_sff;
  }
  {
    CLI::App* sw = app.add_subcommand("sweep", "ramp metrics across gamma or delta");
    Registry& reg = registries[sw];
    add_model_options(sw, cfg, reg);
    add_evaluator_options(sw, cfg, reg);
    add_physics_options(sw, cfg, reg);
    add_grid_options(sw, cfg, reg);
    add_ensemble_options(sw, cfg, reg);
    bind_value(sw, reg, "--parameter", cfg.sweep_param, "swept parameter: gamma or delta");
    bind_value(sw, reg, "--values", cfg.values, "comma-separated list of swept values");
    bind_value(sw, reg, "--curve-prefix", cfg.curve_prefix,
         "also write each value's curve to <prefix><parameter>_<value>.csv");
    add_analysis_options(sw, cfg, reg);
    add_io_options(sw, cfg, reg);
    runners[sw] = run_sweep;
  }
  {
    CLI::App* ev = app.add_subcommand("evolve", "single conditioned trajectory");
    Registry& reg = registries[ev];
    add_model_options(ev, cfg, reg);
    add_physics_options(ev, cfg, reg);
    bind_value(ev, reg, "--x-source", cfg.x_source, "generator for the nonlinear route: auto, goe (independent draw), h0");
    bind_value(ev, reg, "--dt", cfg.dt, "integrator step bound");
    bind_value(ev, reg, "--renorm-every", cfg.renorm_every, "trace renormalization cadence");
    add_grid_options(ev, cfg, reg);
    bind_value(ev, reg, "--seed", cfg.seed, "master seed");
    add_io_options(ev, cfg, reg);
    runners[ev] = run_evolve;
  }
  {
    CLI::App* an = app.add_subcommand("analyze", "dip/ramp/plateau metrics of a curve file");
    Registry& reg = registries[an];
    bind_value(an, reg, "input", cfg.input, "curve CSV to analyze");
    add_analysis_options(an, cfg, reg);
    bind_value(an, reg, "--plateau-source", cfg.plateau_source,
         "plateau reference: tail average or the file's stored value");
    add_io_options(an, cfg, reg);
    runners[an] = run_analyze;
  }
  {
    CLI::App* pl = app.add_subcommand("plot", "render curve or metrics CSVs to SVG");
    Registry& reg = registries[pl];
    bind_list(pl, reg, "inputs", cfg.inputs, "CSV files to plot");
    bind_value(pl, reg, "--kind", cfg.kind, "input kind: auto, curves, or metrics");
    bind_value(pl, reg, "--title", cfg.title, "panel title");
    add_io_options(pl, cfg, reg);
    runners[pl] = run_plot;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* active = app.get_subcommands().front();
  cfg.subcommand = active->get_name();
  const Registry& reg = registries[active];

  try {
    if (!cfg.config_file.empty())
      apply_config_file(cfg.config_file, cfg.subcommand, reg);
    normalize_config(cfg);

    if (cfg.print_config) {
      for (const auto& [k, v] : make_echo(cfg, reg, true))
        std::cout << k << " = " << v << "\n";
      return 0;
    }

    if (cfg.subcommand != "analyze" && cfg.out.empty())
      throw std::invalid_argument("--out is required");
    if (cfg.subcommand == "sweep" && cfg.values.empty())
      throw std::invalid_argument("--values is required");
    if (cfg.subcommand == "analyze" && cfg.input.empty())
      throw std::invalid_argument("an input curve file is required");
    if (cfg.subcommand == "plot" && cfg.inputs.empty())
      throw std::invalid_argument("at least one input file is required");

    OutputTracker outs;
    try {
      runners[active](cfg, make_echo(cfg, reg, false), outs);
    } catch (...) {
      outs.discard_all();
      throw;
    }
    return 0;
  } catch (const ResourceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const CsvParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace sfflab
