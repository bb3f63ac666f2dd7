#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sfflab/spectral.hpp"

namespace sfflab {

// Spectral filter g(E) >= 0 applied inside the fidelity:
//   F_t = |sum_n e^{-(b+it)E_n} g(E_n)|^2 / (Z0(b) sum_j e^{-b E_j} g(E_j)^2).
// The power family g = exp(-gamma t |E|^delta) couples to time; delta = 2 is
// the balanced gain/loss filter and delta = 0 cancels out entirely.
struct PowerFilter {
  double gamma = 0.0;  // >= 0
  double delta = 2.0;  // >= 0
};

// Named time-coupled shapes with a leading Gaussian expansion in gamma t E^2.
struct NamedFilter {
  std::string name;    // "lorentz": 1/(1 + gamma t |E|^2), "sech": sech(gamma t |E|^2)
  double gamma = 0.0;
};

// Fixed non-negative values aligned with a Spectrum (index order).
struct TableFilter {
  std::vector<double> values;
};

using FilterSpec = std::variant<PowerFilter, NamedFilter, TableFilter>;

/** log g(E_n) at time t; -inf encodes g = 0. Validates the filter and throws
    DegenerateFilterError if it vanishes on the whole spectrum. */
std::vector<double> filter_log_values(const FilterSpec& f, const Spectrum& s, double t);

/** |Z0(b+it)|^2 / Z0(b)^2. */
double sff_unitary(const Spectrum& s, double beta, double t);

/** Balanced gain/loss fidelity:
    |sum e^{-(b+it)E - g t E^2}|^2 / (Z0(b) sum e^{-b E - 2 t g E^2}). */
double sff_bgl(const Spectrum& s, double beta, double gamma, double t);

/** Energy dephasing with jumps retained (O(d^2) pair sum):
    sum_{nm} e^{-b(E_n+E_m)} cos((E_n-E_m)t) e^{-g t (E_n-E_m)^2} / Z0(b)^2. */
double sff_dephasing_jumps(const Spectrum& s, double beta, double gamma, double t,
                           int max_dim = 2048);

/** Generic filtered fidelity (see FilterSpec). */
double sff_filtered(const Spectrum& s, double beta, const FilterSpec& filter, double t);

enum class PlateauMode { Unitary, BglAsymptotic };

// Long-time saturation value from the degeneracy structure.
//   Unitary:       sum_n N_n^2 e^{-2 b E_n} / Z0(b)^2   (sum over levels)
//   BglAsymptotic: N_* e^{-b E_*} / Z0(b), * = level closest to E = 0
double plateau_value(const DegeneracyClusters& clusters, double beta, PlateauMode mode);

/** Finite-t saturation estimate for curve overlays:
    sum N^2 e^{-2bE - 2gtE^2} / (Z0(b) sum N e^{-bE - 2gtE^2}). */
double plateau_finite_t(const DegeneracyClusters& clusters, double beta, double gamma,
                        double t);

/** Kernel route to the BGL fidelity: Gaussian smearing of Z0(b+is) around s = t,
    evaluated with Gauss-Hermite quadrature at a fixed node count. */
double sff_via_kernel(const Spectrum& s, double beta, double gamma, double t, int nodes);

struct KernelResult {
  double value = 0.0;
  int nodes_used = 0;
  bool converged = false;
};

/** Node-doubling wrapper: doubles the quadrature order until successive values
    differ by < tol (or max_nodes is hit; converged=false then). */
KernelResult sff_via_kernel_adaptive(const Spectrum& s, double beta, double gamma,
                                     double t, int start_nodes = 64,
                                     int max_nodes = 4096, double tol = 1e-8);

struct GaussHermite {
  std::vector<double> nodes;    // roots of H_m, ascending
  std::vector<double> weights;  // sum = sqrt(pi)
};

/** Gauss-Hermite rule for weight e^{-x^2} (Golub-Welsch nodes, stable weights). */
const GaussHermite& gauss_hermite(int m);

}  // namespace sfflab
