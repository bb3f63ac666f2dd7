#include "sfflab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sfflab/errors.hpp"

namespace sfflab {

namespace {

void check_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw std::invalid_argument("empty time grid");
  if (t_grid.front() < 0) throw std::invalid_argument("time grid must start at t >= 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (t_grid[i] <= t_grid[i - 1])
      throw std::invalid_argument("time grid must be strictly increasing");
}

void check_cfg(const OdeConfig& cfg) {
  if (cfg.dt <= 0) throw std::invalid_argument("dt must be > 0");
  if (cfg.renormalize_every < 1)
    throw std::invalid_argument("renormalize_every must be >= 1");
}

}  // namespace

WFunction WFunction::power(double delta) {
  if (delta < 0) throw std::invalid_argument("weight exponent must be >= 0");
  WFunction w;
  w.kind_ = PowerWeight{delta};
  return w;
}

WFunction WFunction::table(std::vector<double> values) {
  for (double v : values)
    if (v < 0) throw std::invalid_argument("|w(E)|^2 values must be >= 0");
  WFunction w;
  w.kind_ = TableWeight{std::move(values)};
  return w;
}

std::vector<double> WFunction::weights(const Spectrum& s) const {
  const std::size_t d = s.energies.size();
  std::vector<double> out(d);
  if (std::holds_alternative<IdentityWeight>(kind_)) {
    for (std::size_t n = 0; n < d; ++n) out[n] = s.energies[n] * s.energies[n];
  } else if (const auto* p = std::get_if<PowerWeight>(&kind_)) {
    for (std::size_t n = 0; n < d; ++n) out[n] = std::pow(std::abs(s.energies[n]), p->delta);
  } else {
    const auto& tw = std::get<TableWeight>(kind_);
    if (tw.values.size() != d)
      throw std::invalid_argument("weight table not aligned with spectrum");
    out = tw.values;
  }
  return out;
}

StateVector coherent_gibbs(const Spectrum& s, double beta) {
  if (s.energies.empty()) throw std::invalid_argument("empty spectrum");
  const Eigen::Index d = s.dim();
  double shift = -beta * s.energies[0];
  for (double e : s.energies) shift = std::max(shift, -beta * e);
  StateVector psi;
  psi.amplitudes.resize(d);
  for (Eigen::Index n = 0; n < d; ++n)
    psi.amplitudes(n) = std::exp(0.5 * (-beta * s.energies[n] - shift));
  psi.amplitudes /= psi.amplitudes.norm();
  return psi;
}

DensityMatrix evolve_bgl_closed(const DensityMatrix& rho0, const Spectrum& s,
                                double gamma, double t, const WFunction& w) {
  const Eigen::Index d = s.dim();
  if (rho0.rho.rows() != d || rho0.rho.cols() != d)
    throw std::invalid_argument("state dimension does not match spectrum");
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  const std::vector<double> wt = w.weights(s);

  // common exponent shift keeps the normalization sum representable
  double shift = -2.0 * gamma * t * wt[0];
  for (Eigen::Index n = 0; n < d; ++n)
    shift = std::max(shift, -2.0 * gamma * t * wt[n]);
  double norm = 0.0;
  for (Eigen::Index n = 0; n < d; ++n)
    norm += rho0.rho(n, n).real() * std::exp(-2.0 * gamma * t * wt[n] - shift);
  if (!(norm > 1e-300))
    throw DegenerateEvolutionError(
        "conditioned evolution normalization underflowed; all populated levels "
        "are filtered out at this gamma*t");

  DensityMatrix out;
  out.rho.resize(d, d);
  for (Eigen::Index n = 0; n < d; ++n)
    for (Eigen::Index m = 0; m < d; ++m) {
      const double de = s.energies[n] - s.energies[m];
      const double decay = std::exp(-gamma * t * (wt[n] + wt[m]) - shift);
      const std::complex<double> phase(std::cos(-de * t), std::sin(-de * t));
      out.rho(n, m) = rho0.rho(n, m) * phase * decay / norm;
    }
  // analytic trace is exactly 1; divide out the residual rounding
  out.rho /= out.rho.trace().real();
  return out;
}

namespace {

// Shared RK4 march over consecutive grid times. Each interval [t_i, t_{i+1}]
// is split into ceil(len/dt) equal steps so every output lands exactly on its
// grid time while no step exceeds dt.
template <typename State, typename Deriv, typename Renorm, typename Drift>
void rk4_march(State& y, const std::vector<double>& t_grid, const OdeConfig& cfg,
               Deriv deriv, Renorm renorm, Drift drift,
               std::vector<double>& drift_out, double& max_drift) {
  max_drift = 0.0;
  long step_count = 0;
  double recorded_drift = 0.0;
  State k1, k2, k3, k4, tmp;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double len = t_grid[i] - t_grid[i - 1];
    const long nsub = std::max(1L, static_cast<long>(std::ceil(len / cfg.dt - 1e-12)));
    const double h = len / nsub;
    for (long sub = 0; sub < nsub; ++sub) {
      deriv(y, k1);
      tmp = y + (0.5 * h) * k1;
      deriv(tmp, k2);
      tmp = y + (0.5 * h) * k2;
      deriv(tmp, k3);
      tmp = y + h * k3;
      deriv(tmp, k4);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      ++step_count;
      const double dev = drift(y);
      recorded_drift = dev;
      max_drift = std::max(max_drift, dev);
      if (dev > cfg.max_step_drift)
        throw IntegrationFailureError(
            "trace drift " + std::to_string(dev) +
            " exceeded the per-step budget; reduce dt");
      if (step_count % cfg.renormalize_every == 0) renorm(y);
    }
    drift_out.push_back(recorded_drift);
  }
}

}  // namespace

MatrixTrajectory integrate_bgl_ode(const DensityMatrix& rho0, const Spectrum& s,
                                   const Eigen::MatrixXcd& x_energy, double gamma,
                                   const std::vector<double>& t_grid,
                                   const OdeConfig& cfg) {
  check_grid(t_grid);
  check_cfg(cfg);
  const Eigen::Index d = s.dim();
  if (rho0.rho.rows() != d || x_energy.rows() != d || x_energy.cols() != d)
    throw std::invalid_argument("dimension mismatch");
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");

  const Eigen::MatrixXcd a = gamma * (x_energy * x_energy);  // gamma X^2, Hermitian
  Eigen::VectorXd energies(d);
  for (Eigen::Index n = 0; n < d; ++n) energies(n) = s.energies[n];

  MatrixTrajectory traj;
  traj.t = t_grid;
  traj.states.reserve(t_grid.size());

  Eigen::MatrixXcd rho = rho0.rho;
  Eigen::MatrixXcd arho(d, d);
  auto deriv = [&](const Eigen::MatrixXcd& r, Eigen::MatrixXcd& out) {
    arho.noalias() = a * r;
    out = -arho;
    out.noalias() -= r * a;
    const double pump = 2.0 * arho.trace().real();  // 2 gamma Tr[X^2 rho]
    out += pump * r;
    // -i [diag(E), rho]
    const std::complex<double> mi(0, -1);
    for (Eigen::Index nn = 0; nn < r.rows(); ++nn)
      for (Eigen::Index mm = 0; mm < r.cols(); ++mm)
        out(nn, mm) += mi * (energies(nn) - energies(mm)) * r(nn, mm);
  };
  auto renorm = [](Eigen::MatrixXcd& r) { r /= r.trace().real(); };
  auto drift = [](const Eigen::MatrixXcd& r) { return std::abs(r.trace().real() - 1.0); };

  double prev_t = 0.0;
  for (double t : t_grid) {
    if (t > prev_t) {
      std::vector<double> seg = {prev_t, t};
      std::vector<double> drifts;
      double seg_max = 0.0;
      rk4_march(rho, seg, cfg, deriv, renorm, drift, drifts, seg_max);
      traj.max_drift = std::max(traj.max_drift, seg_max);
      traj.trace_drift.push_back(drifts.back());
    } else {
      traj.trace_drift.push_back(0.0);
    }
    traj.states.push_back(rho);
    prev_t = t;
  }
  return traj;
}

MatrixTrajectory integrate_bgl_ode(const Eigen::MatrixXcd& rho0_computational,
                                   const HamiltonianInstance& h,
                                   const Eigen::MatrixXcd& x_computational,
                                   double gamma, const std::vector<double>& t_grid,
                                   const OdeConfig& cfg) {
  const EigenSystem es = diagonalize_full(h);
  const Eigen::MatrixXcd& v = es.vectors;
  DensityMatrix rho0{v.adjoint() * rho0_computational * v};
  const Eigen::MatrixXcd x_energy = v.adjoint() * x_computational * v;
  return integrate_bgl_ode(rho0, es.spectrum, x_energy, gamma, t_grid, cfg);
}

VectorTrajectory integrate_bgl_pure(const StateVector& psi0, const Spectrum& s,
                                    const Eigen::MatrixXcd& x_energy, double gamma,
                                    const std::vector<double>& t_grid,
                                    const OdeConfig& cfg) {
  check_grid(t_grid);
  check_cfg(cfg);
  const Eigen::Index d = s.dim();
  if (psi0.amplitudes.size() != d || x_energy.rows() != d)
    throw std::invalid_argument("dimension mismatch");
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");

  const Eigen::MatrixXcd a = gamma * (x_energy * x_energy);
  Eigen::VectorXcd mie(d);  // -i E_n
  for (Eigen::Index n = 0; n < d; ++n) mie(n) = std::complex<double>(0, -s.energies[n]);

  Eigen::VectorXcd aphi(d);
  auto deriv = [&](const Eigen::VectorXcd& p, Eigen::VectorXcd& out) {
    aphi.noalias() = a * p;
    const double expect = p.dot(aphi).real();  // <phi| gamma X^2 |phi>, norm ~ 1
    out = mie.cwiseProduct(p) - aphi + expect * p;
  };
  auto renorm = [](Eigen::VectorXcd& p) { p /= p.norm(); };
  auto drift = [](const Eigen::VectorXcd& p) { return std::abs(p.squaredNorm() - 1.0); };

  VectorTrajectory traj;
  traj.t = t_grid;
  Eigen::VectorXcd phi = psi0.amplitudes;
  double prev_t = 0.0;
  for (double t : t_grid) {
    if (t > prev_t) {
      std::vector<double> seg = {prev_t, t};
      std::vector<double> drifts;
      double seg_max = 0.0;
      rk4_march(phi, seg, cfg, deriv, renorm, drift, drifts, seg_max);
      traj.max_drift = std::max(traj.max_drift, seg_max);
      traj.norm_drift.push_back(drifts.back());
    } else {
      traj.norm_drift.push_back(0.0);
    }
    traj.states.push_back(phi);
    prev_t = t;
  }
  return traj;
}

double fidelity(const StateVector& psi, const DensityMatrix& rho) {
  if (psi.amplitudes.size() != rho.rho.rows())
    throw std::invalid_argument("dimension mismatch");
  const std::complex<double> v =
      (psi.amplitudes.adjoint() * rho.rho * psi.amplitudes)(0, 0);
  if (std::abs(v.imag()) > 1e-12)
    throw NumericError("fidelity has imaginary residue " + std::to_string(v.imag()));
  return std::clamp(v.real(), 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  // Tr[rho^2] = sum |rho_nm|^2 for Hermitian rho
  return rho.rho.squaredNorm();
}

double mean_energy(const DensityMatrix& rho, const Spectrum& s) {
  if (rho.rho.rows() != s.dim()) throw std::invalid_argument("dimension mismatch");
  double e = 0.0;
  for (Eigen::Index n = 0; n < rho.rho.rows(); ++n)
    e += rho.rho(n, n).real() * s.energies[n];
  return e;
}

}  // namespace sfflab
