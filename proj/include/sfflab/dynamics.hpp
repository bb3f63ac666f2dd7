#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sfflab/spectral.hpp"

namespace sfflab {

// States are expressed in the eigenbasis of H0 throughout this module; the
// ensemble layer performs the one-time rotation of any non-commuting X.
struct StateVector {
  Eigen::VectorXcd amplitudes;
};

struct DensityMatrix {
  Eigen::MatrixXcd rho;
};

// |w(E)|^2, the spectral weight of the gain/loss generator K = sqrt(2) w(H0).
// Heff = H0 - i gamma |w(H0)|^2; the identity map w(E) = E reproduces
// Heff = H0 - i gamma H0^2.
struct IdentityWeight {};
struct PowerWeight {
  double delta = 2.0;  // |w(E)|^2 = |E|^delta
};
struct TableWeight {
  std::vector<double> values;  // |w(E_n)|^2, aligned with a Spectrum
};

class WFunction {
 public:
  WFunction() : kind_(IdentityWeight{}) {}
  static WFunction identity() { return WFunction(); }
  static WFunction power(double delta);
  static WFunction table(std::vector<double> values);

  /** |w(E_n)|^2 for every eigenvalue of s. */
  std::vector<double> weights(const Spectrum& s) const;

 private:
  std::variant<IdentityWeight, PowerWeight, TableWeight> kind_;
};

struct OdeConfig {
  double dt = 0.01;            // fixed step bound; intervals subdivide evenly
  int renormalize_every = 1;   // trace renormalization cadence, in steps
  double max_step_drift = 1e-3;  // per-step |tr rho - 1| abort threshold
};

struct MatrixTrajectory {
  std::vector<double> t;
  std::vector<Eigen::MatrixXcd> states;   // energy basis
  std::vector<double> trace_drift;        // |tr - 1| just before renormalization
  double max_drift = 0.0;
};

struct VectorTrajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXcd> states;
  std::vector<double> norm_drift;
  double max_drift = 0.0;
};

/** Normalized Gibbs superposition c_n = e^{-beta E_n/2} / sqrt(Z0(beta)). */
StateVector coherent_gibbs(const Spectrum& s, double beta);

/** Closed-form conditioned evolution for [X, H0] = 0:
    rho_nm(t) = rho_nm(0) e^{-i(E_n-E_m)t - g t (W_n+W_m)} / normalization,
    W_n = |w(E_n)|^2. Throws DegenerateEvolutionError if the normalization
    underflows. */
DensityMatrix evolve_bgl_closed(const DensityMatrix& rho0, const Spectrum& s,
                                double gamma, double t, const WFunction& w);

/** Fixed-step RK4 for the conditioned flow
    d rho = -i(Heff rho - rho Heff^dag) + 2 gamma Tr[X^2 rho] rho,
    Heff = H0 - i gamma X^2, with H0 diagonal (energies) and X given in the
    same basis. States are recorded at t_grid (ascending, t_grid[0] >= 0). */
MatrixTrajectory integrate_bgl_ode(const DensityMatrix& rho0, const Spectrum& s,
                                   const Eigen::MatrixXcd& x_energy, double gamma,
                                   const std::vector<double>& t_grid,
                                   const OdeConfig& cfg = {});

/** Convenience overload: diagonalizes h, rotates x and rho0 from the
    computational basis into the eigenbasis. */
MatrixTrajectory integrate_bgl_ode(const Eigen::MatrixXcd& rho0_computational,
                                   const HamiltonianInstance& h,
                                   const Eigen::MatrixXcd& x_computational,
                                   double gamma, const std::vector<double>& t_grid,
                                   const OdeConfig& cfg = {});

/** Pure-state reduction of the same flow (norm-preserving nonlinearity):
    d phi = (-i diag(E) - gamma X^2 + gamma <X^2>) phi dt. Exactly equivalent
    to the matrix equation for rho = |phi><phi|; O(d^2) per stage. */
VectorTrajectory integrate_bgl_pure(const StateVector& psi0, const Spectrum& s,
                                    const Eigen::MatrixXcd& x_energy, double gamma,
                                    const std::vector<double>& t_grid,
                                    const OdeConfig& cfg = {});

/** <psi|rho|psi>, asserted real within 1e-12 and clamped to [0,1]. */
double fidelity(const StateVector& psi, const DensityMatrix& rho);

/** Tr[rho^2]. */
double purity(const DensityMatrix& rho);

/** Tr[rho H0] in the energy basis. */
double mean_energy(const DensityMatrix& rho, const Spectrum& s);

}  // namespace sfflab
