#include "sfflab/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include "sfflab/errors.hpp"

namespace sfflab {

namespace {

void check_hermitian(const Eigen::MatrixXcd& m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix is not square");
  const double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > tol)
    throw std::invalid_argument("matrix is not Hermitian: max |H - H^dag| = " +
                                std::to_string(dev));
}

}  // namespace

Spectrum diagonalize(const HamiltonianInstance& h, double hermiticity_tol) {
  check_hermitian(h.matrix, hermiticity_tol);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix,
                                                         Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigenvalue iteration failed to converge");
  Spectrum s;
  s.energies.assign(solver.eigenvalues().data(),
                    solver.eigenvalues().data() + solver.eigenvalues().size());
  s.provenance = h.provenance;
  return s;
}

EigenSystem diagonalize_full(const HamiltonianInstance& h, double hermiticity_tol) {
  check_hermitian(h.matrix, hermiticity_tol);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigenvalue iteration failed to converge");
  EigenSystem es;
  es.spectrum.energies.assign(solver.eigenvalues().data(),
                              solver.eigenvalues().data() + solver.eigenvalues().size());
  es.spectrum.provenance = h.provenance;
  es.vectors = solver.eigenvectors();
  return es;
}

std::complex<double> partition_function(const Spectrum& s, std::complex<double> z) {
  if (s.energies.empty()) throw std::invalid_argument("empty spectrum");
  // shift by the energy that maximizes |exp(-z E)| so the sum stays bounded
  const double e_ref = (z.real() >= 0.0) ? s.energies.front() : s.energies.back();
  std::complex<double> sum = 0.0;
  for (double e : s.energies) sum += std::exp(-z * (e - e_ref));
  const std::complex<double> value = std::exp(-z * e_ref) * sum;
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
    throw NumericError("partition function overflow; use log_partition_function");
  return value;
}

std::complex<double> log_partition_function(const Spectrum& s, std::complex<double> z) {
  if (s.energies.empty()) throw std::invalid_argument("empty spectrum");
  const double e_ref = (z.real() >= 0.0) ? s.energies.front() : s.energies.back();
  std::complex<double> sum = 0.0;
  for (double e : s.energies) sum += std::exp(-z * (e - e_ref));
  return -z * e_ref + std::log(sum);
}

DegeneracyClusters cluster_degeneracies(const Spectrum& s, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("cluster tolerance must be > 0");
  if (s.energies.empty()) throw std::invalid_argument("empty spectrum");
  const double threshold = tol * s.width();

  DegeneracyClusters c;
  c.tolerance = tol;
  double sum = s.energies[0];
  int count = 1;
  for (std::size_t i = 1; i < s.energies.size(); ++i) {
    if (s.energies[i] - s.energies[i - 1] <= threshold) {
      sum += s.energies[i];
      ++count;
    } else {
      c.energies.push_back(sum / count);
      c.multiplicities.push_back(count);
      sum = s.energies[i];
      count = 1;
    }
  }
  c.energies.push_back(sum / count);
  c.multiplicities.push_back(count);
  return c;
}

}  // namespace sfflab
