#pragma once

#include <bit>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace sfflab {

// Symbolic n-qubit Pauli string  i^phase * X^x * Z^z  (Z part acts first).
// Qubit j lives on bit j; the computational basis index is the bit pattern.
// Products of strings stay O(1), so quartic Majorana terms can be assembled
// without any dense matrix multiplies.
struct PauliString {
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  int phase = 0;  // power of i, mod 4

  friend PauliString operator*(const PauliString& a, const PauliString& b) {
    PauliString p;
    p.x = a.x ^ b.x;
    p.z = a.z ^ b.z;
    // moving Z^{a.z} through X^{b.x} picks up (-1) per shared bit
    p.phase = (a.phase + b.phase + 2 * std::popcount(a.z & b.x)) & 3;
    return p;
  }
};

inline std::complex<double> phase_factor(int quarter) {
  static const std::complex<double> table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[quarter & 3];
}

/** H += coeff * i^phase * X^x Z^z over an n_qubit register (one entry per column). */
inline void accumulate_pauli(Eigen::MatrixXcd& h, const PauliString& p,
                             std::complex<double> coeff, int n_qubits) {
  const std::uint64_t dim = 1ull << n_qubits;
  const std::complex<double> amp = coeff * phase_factor(p.phase);
  for (std::uint64_t col = 0; col < dim; ++col) {
    const std::uint64_t row = col ^ p.x;
    const double sign = (std::popcount(p.z & col) & 1) ? -1.0 : 1.0;
    h(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += amp * sign;
  }
}

inline Eigen::MatrixXcd pauli_to_dense(const PauliString& p, int n_qubits,
                                       std::complex<double> coeff = 1.0) {
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  accumulate_pauli(h, p, coeff, n_qubits);
  return h;
}

// Jordan-Wigner Majorana strings, normalized so {chi_k, chi_l} = delta_kl.
// chi_{2j-1} = Z_1..Z_{j-1} X_j / sqrt(2),  chi_{2j} = Z_1..Z_{j-1} Y_j / sqrt(2).
// The 1/sqrt(2) lives outside the PauliString; majorana_string(k) is the
// string alone. k is 1-based to match the usual operator labels.
inline PauliString majorana_string(int k) {
  const int qb = (k - 1) / 2;  // 0-based qubit
  PauliString p;
  p.x = 1ull << qb;
  p.z = (1ull << qb) - 1;  // Z tail on qubits below
  if (k % 2 == 0) {        // Y = i X Z
    p.z |= 1ull << qb;
    p.phase = 1;
  }
  return p;
}

inline constexpr double kMajoranaNorm = 0.7071067811865475244;  // 1/sqrt(2)

}  // namespace sfflab
