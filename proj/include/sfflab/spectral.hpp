#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "sfflab/hamiltonians.hpp"

namespace sfflab {

struct Spectrum {
  std::vector<double> energies;  // ascending
  Provenance provenance;

  int dim() const { return static_cast<int>(energies.size()); }
  double width() const { return energies.empty() ? 0.0 : energies.back() - energies.front(); }
};

struct EigenSystem {
  Spectrum spectrum;
  Eigen::MatrixXcd vectors;  // columns ordered like spectrum.energies
};

// Runs of near-equal eigenvalues merged into levels.
struct DegeneracyClusters {
  std::vector<double> energies;       // cluster representatives, ascending
  std::vector<int> multiplicities;    // same length
  double tolerance = 0.0;             // relative tolerance used

  int levels() const { return static_cast<int>(energies.size()); }
};

/** Eigenvalues of a Hermitian instance (ascending). Throws on non-Hermitian input. */
Spectrum diagonalize(const HamiltonianInstance& h, double hermiticity_tol = 1e-12);

/** Eigenvalues and eigenvectors. */
EigenSystem diagonalize_full(const HamiltonianInstance& h, double hermiticity_tol = 1e-12);

/** Z0(z) = sum_n exp(-z E_n) for complex z, stabilized by an energy shift. */
std::complex<double> partition_function(const Spectrum& s, std::complex<double> z);

/** log Z0(z); safe when Z0 itself would overflow. */
std::complex<double> log_partition_function(const Spectrum& s, std::complex<double> z);

/** Greedy clustering: adjacent eigenvalues within tol*width join one level. */
DegeneracyClusters cluster_degeneracies(const Spectrum& s, double tol = 1e-10);

}  // namespace sfflab
