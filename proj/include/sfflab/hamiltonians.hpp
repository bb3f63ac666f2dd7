#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfflab/rng.hpp"

namespace sfflab {

struct Provenance {
  std::string model;   // "syk", "goe", ...
  std::string params;  // human-readable parameter echo
  std::uint64_t seed = 0;
};

struct HamiltonianInstance {
  Eigen::MatrixXcd matrix;  // Hermitian
  Provenance provenance;
};

struct SykParams {
  int n_majorana = 12;     // even, >= 4; Hilbert space dim = 2^(n/2)
  double j_scale = 1.0;    // J in var(J_klmn) = 3! J^2 / (2N)^3
  std::uint64_t seed = 0;
};

struct GoeParams {
  int dim = 50;
  std::uint64_t seed = 0;
  double scale = 1.0;  // sigma = scale/sqrt(dim); spectral support ~ [-2 scale, 2 scale]
};

struct MajoranaSet {
  int n_majorana = 0;
  std::vector<Eigen::MatrixXcd> operators;  // chi_1 .. chi_n, {chi_k,chi_l} = delta_kl
};

// Antisymmetric couplings J_{klmn}, stored once per ordered quadruple
// k<l<m<n (1-based), in the lexicographic order they were drawn.
class SykCouplings {
 public:
  SykCouplings(int n_majorana, std::vector<double> ordered_values);

  int n_majorana() const { return n_majorana_; }
  std::size_t count() const { return values_.size(); }

  /** Coupling for an ordered quadruple k<l<m<n (1-based). */
  double ordered(int k, int l, int m, int n) const;

  /** Fully antisymmetric accessor: any index order, 0 on repeated indices. */
  double value(int k, int l, int m, int n) const;

  const std::vector<double>& raw() const { return values_; }

 private:
  int n_majorana_;
  std::vector<double> values_;
};

/** Dense Jordan-Wigner Majorana operators; memory-guarded (ResourceError). */
MajoranaSet build_majorana_set(int n_majorana,
                               std::size_t memory_budget_bytes = std::size_t(2) << 30);

/** Draw all C(n,4) couplings ~ N(0, 3! J^2/(2N)^3), lexicographic quadruple order. */
SykCouplings sample_syk_couplings(const SykParams& params, RngStream& rng);

/** H = (1/4) sum_{k<l<m<n} J_klmn chi_k chi_l chi_m chi_n, assembled symbolically. */
HamiltonianInstance build_syk_hamiltonian(const SykParams& params,
                                          const SykCouplings& couplings);

/** Convenience: sample couplings from params.seed and build. */
HamiltonianInstance build_syk_hamiltonian(const SykParams& params);

/** Real symmetric Gaussian matrix: off-diag var sigma^2, diag var 2 sigma^2. */
HamiltonianInstance build_goe_hamiltonian(const GoeParams& params, RngStream& rng);
HamiltonianInstance build_goe_hamiltonian(const GoeParams& params);

// Deterministic core used by build_goe_hamiltonian and by tests that stub the
// Gaussian source: consumes one normal per upper-triangle entry in row-major
// order (diagonal included).
Eigen::MatrixXd goe_from_normals(const GoeParams& params, std::span<const double> normals);

}  // namespace sfflab
