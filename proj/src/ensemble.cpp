#include "sfflab/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "sfflab/errors.hpp"

namespace sfflab {

void TimeGrid::validate() const {
  if (!(t_min > 0)) throw std::invalid_argument("t_min must be > 0");
  if (!(t_max > t_min)) throw std::invalid_argument("t_max must exceed t_min");
  if (points_per_decade < 1)
    throw std::invalid_argument("points_per_decade must be >= 1");
}

std::vector<double> TimeGrid::times() const {
  validate();
  std::vector<double> t;
  if (include_zero) t.push_back(0.0);
  const double decades = std::log10(t_max / t_min);
  const long n = static_cast<long>(std::ceil(decades * points_per_decade - 1e-9));
  for (long k = 0; k <= n; ++k) {
    double v = t_min * std::pow(10.0, double(k) / points_per_decade);
    if (v > t_max) v = t_max;
    t.push_back(v);
  }
  if (t.back() < t_max) t.push_back(t_max);
  return t;
}

void EnsembleSpec::validate() const {
  grid.validate();
  if (n_realizations < 1) throw std::invalid_argument("need at least one realization");
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  if (std::holds_alternative<FilteredEvaluator>(evaluator)) {
    const auto& f = std::get<FilteredEvaluator>(evaluator).filter;
    if (std::holds_alternative<TableFilter>(f))
      throw std::invalid_argument(
          "table filters cannot align across disorder realizations; use the "
          "power or named families in ensembles");
    const double fg = std::holds_alternative<PowerFilter>(f)
                          ? std::get<PowerFilter>(f).gamma
                          : std::get<NamedFilter>(f).gamma;
    if (fg != gamma)
      throw std::invalid_argument("filter gamma disagrees with ensemble gamma");
  }
  if (std::holds_alternative<OdeEvaluator>(evaluator)) {
    const auto& ode = std::get<OdeEvaluator>(evaluator);
    if (ode.x_source == XSource::Goe && !std::holds_alternative<GoeWithXModel>(model))
      throw std::invalid_argument(
          "x_source=goe needs the goe_with_x model (independent X sub-stream)");
  }
}

int default_worker_count() {
  if (const char* env = std::getenv("SFFLAB_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

HamiltonianInstance realize_model(const ModelSpec& model, std::uint64_t seed) {
  if (const auto* syk = std::get_if<SykModel>(&model)) {
    SykParams p = syk->params;
    p.seed = seed;
    return build_syk_hamiltonian(p);
  }
  const GoeParams& base = std::holds_alternative<GoeModel>(model)
                              ? std::get<GoeModel>(model).params
                              : std::get<GoeWithXModel>(model).params;
  GoeParams p = base;
  // goe_with_x draws H0 from sub-stream 0 so X (sub-stream 1) is independent
  p.seed = std::holds_alternative<GoeWithXModel>(model) ? substream_seed(seed, 0) : seed;
  return build_goe_hamiltonian(p);
}

namespace {

std::vector<double> evaluate_closed_form(const EnsembleSpec& spec, const Spectrum& s,
                                         const std::vector<double>& times) {
  std::vector<double> f(times.size());
  if (std::holds_alternative<UnitaryEvaluator>(spec.evaluator)) {
    for (std::size_t i = 0; i < times.size(); ++i)
      f[i] = sff_unitary(s, spec.beta, times[i]);
  } else if (std::holds_alternative<BglEvaluator>(spec.evaluator)) {
    for (std::size_t i = 0; i < times.size(); ++i)
      f[i] = sff_bgl(s, spec.beta, spec.gamma, times[i]);
  } else if (const auto* dj = std::get_if<DephasingJumpsEvaluator>(&spec.evaluator)) {
    for (std::size_t i = 0; i < times.size(); ++i)
      f[i] = sff_dephasing_jumps(s, spec.beta, spec.gamma, times[i], dj->max_dim);
  } else {
    const auto& filt = std::get<FilteredEvaluator>(spec.evaluator).filter;
    for (std::size_t i = 0; i < times.size(); ++i)
      f[i] = sff_filtered(s, spec.beta, filt, times[i]);
  }
  return f;
}

struct RealizationResult {
  std::vector<double> f;
  double plateau = 0.0;
};

RealizationResult evaluate_one(const EnsembleSpec& spec,
                               const std::vector<double>& times, int index) {
  const std::uint64_t seed = derive_seed(spec.master_seed, index);
  const HamiltonianInstance h0 = realize_model(spec.model, seed);
  RealizationResult res;

  if (const auto* ode = std::get_if<OdeEvaluator>(&spec.evaluator)) {
    const EigenSystem es = diagonalize_full(h0);
    Eigen::MatrixXcd x_energy;
    if (ode->x_source == XSource::Goe) {
      GoeParams xp = std::get<GoeWithXModel>(spec.model).params;
      xp.seed = substream_seed(seed, 1);
      const HamiltonianInstance x = build_goe_hamiltonian(xp);
      x_energy = es.vectors.adjoint() * x.matrix * es.vectors;
    } else {
      x_energy = Eigen::MatrixXcd::Zero(es.spectrum.dim(), es.spectrum.dim());
      for (Eigen::Index n = 0; n < es.spectrum.dim(); ++n)
        x_energy(n, n) = es.spectrum.energies[n];
    }
    const StateVector psi = coherent_gibbs(es.spectrum, spec.beta);
    const VectorTrajectory traj =
        integrate_bgl_pure(psi, es.spectrum, x_energy, spec.gamma, times, ode->cfg);
    res.f.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      const std::complex<double> overlap = psi.amplitudes.dot(traj.states[i]);
      res.f[i] = std::norm(overlap);
    }
    if (spec.plateau_ref) {
      const DegeneracyClusters c =
          cluster_degeneracies(es.spectrum, spec.plateau_ref->cluster_tol);
      res.plateau = plateau_value(c, spec.beta, spec.plateau_ref->mode);
    }
    return res;
  }

  const Spectrum s = diagonalize(h0);
  res.f = evaluate_closed_form(spec, s, times);
  if (spec.plateau_ref) {
    const DegeneracyClusters c = cluster_degeneracies(s, spec.plateau_ref->cluster_tol);
    res.plateau = plateau_value(c, spec.beta, spec.plateau_ref->mode);
  }
  return res;
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_metadata(SffCurve& curve, const EnsembleSpec& spec) {
  auto add = [&](const std::string& k, const std::string& v) {
    curve.metadata.emplace_back(k, v);
  };
  if (const auto* syk = std::get_if<SykModel>(&spec.model)) {
    add("model", "syk");
    add("majoranas", std::to_string(syk->params.n_majorana));
    add("j-scale", format_g(syk->params.j_scale));
  } else {
    const bool with_x = std::holds_alternative<GoeWithXModel>(spec.model);
    add("model", with_x ? "goe_with_x" : "goe");
    const GoeParams& p = with_x ? std::get<GoeWithXModel>(spec.model).params
                                : std::get<GoeModel>(spec.model).params;
    add("dim", std::to_string(p.dim));
    add("scale", format_g(p.scale));
  }
  if (std::holds_alternative<UnitaryEvaluator>(spec.evaluator)) {
    add("evaluator", "unitary");
  } else if (std::holds_alternative<BglEvaluator>(spec.evaluator)) {
    add("evaluator", "bgl");
  } else if (const auto* dj = std::get_if<DephasingJumpsEvaluator>(&spec.evaluator)) {
    add("evaluator", "dephasing_jumps");
    add("max-dim", std::to_string(dj->max_dim));
  } else if (const auto* fe = std::get_if<FilteredEvaluator>(&spec.evaluator)) {
    add("evaluator", "filtered");
    if (const auto* pf = std::get_if<PowerFilter>(&fe->filter)) {
      add("filter", "power");
      add("delta", format_g(pf->delta));
    } else {
      add("filter", std::get<NamedFilter>(fe->filter).name);
    }
  } else {
    const auto& ode = std::get<OdeEvaluator>(spec.evaluator);
    add("evaluator", "ode");
    add("x-source", ode.x_source == XSource::Goe ? "goe" : "h0");
    add("dt", format_g(ode.cfg.dt));
    add("renorm-every", std::to_string(ode.cfg.renormalize_every));
  }
  add("beta", format_g(spec.beta));
  add("gamma", format_g(spec.gamma));
  add("tmin", format_g(spec.grid.t_min));
  add("tmax", format_g(spec.grid.t_max));
  add("points-per-decade", std::to_string(spec.grid.points_per_decade));
  add("include-zero", spec.grid.include_zero ? "true" : "false");
  add("realizations", std::to_string(spec.n_realizations));
  add("seed", std::to_string(spec.master_seed));
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> reduce_curves(
    const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("nothing to reduce");
  const std::size_t width = rows[0].size();
  std::vector<double> mean(width, 0.0), se(width, 0.0);
  const double n = static_cast<double>(rows.size());
  for (const auto& row : rows)
    for (std::size_t j = 0; j < width; ++j) mean[j] += row[j];
  for (std::size_t j = 0; j < width; ++j) mean[j] /= n;
  if (rows.size() > 1) {
    for (const auto& row : rows)
      for (std::size_t j = 0; j < width; ++j) {
        const double d = row[j] - mean[j];
        se[j] += d * d;
      }
    for (std::size_t j = 0; j < width; ++j)
      se[j] = std::sqrt(se[j] / (n - 1.0) / n);
  }
  return {std::move(mean), std::move(se)};
}

SffCurve run_ensemble(const EnsembleSpec& spec, int workers) {
  spec.validate();
  const std::vector<double> times = spec.grid.times();
  const int n = spec.n_realizations;
  const int w = std::min(workers > 0 ? workers : default_worker_count(), n);

  // fixed per-index slots keep the reduction independent of scheduling
  std::vector<std::optional<RealizationResult>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        slots[i] = evaluate_one(spec, times, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (w <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int i = 0; i < w; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  double plateau_sum = 0.0;
  std::exception_ptr first_error;
  for (int i = 0; i < n; ++i) {
    if (slots[i]) {
      rows.push_back(std::move(slots[i]->f));
      plateau_sum += slots[i]->plateau;
    } else if (!first_error) {
      first_error = errors[i];
    }
  }
  if (rows.empty()) {
    // Keep the original error category so callers can still map it to an
    // exit code; only the message gains the ensemble context.
    const std::string prefix =
        "all " + std::to_string(n) + " realizations failed; first error: ";
    try {
      std::rethrow_exception(first_error);
    } catch (const ResourceError& e) {
      throw ResourceError(prefix + e.what());
    } catch (const std::exception& e) {
      throw NumericError(prefix + e.what());
    }
  }

  SffCurve curve;
  curve.t = times;
  auto [mean, se] = reduce_curves(rows);
  curve.mean = std::move(mean);
  curve.stderr_ = std::move(se);
  curve.n_realizations = n;
  curve.n_failed = n - static_cast<int>(rows.size());
  append_metadata(curve, spec);
  if (spec.plateau_ref) {
    curve.plateau_ref = plateau_sum / rows.size();
    curve.metadata.emplace_back(
        "plateau-mode",
        spec.plateau_ref->mode == PlateauMode::Unitary ? "unitary" : "bgl_asymptotic");
    curve.metadata.emplace_back("plateau-ref", format_g(curve.plateau_ref));
  }
  curve.metadata.emplace_back("failed-realizations", std::to_string(curve.n_failed));
  return curve;
}

}  // namespace sfflab
