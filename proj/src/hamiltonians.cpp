#include "sfflab/hamiltonians.hpp"

#include <cmath>
#include <stdexcept>

#include "sfflab/errors.hpp"
#include "sfflab/pauli.hpp"

namespace sfflab {

namespace {

void check_majorana_count(int n) {
  if (n < 4 || n % 2 != 0)
    throw std::invalid_argument("n_majorana must be even and >= 4, got " +
                                std::to_string(n));
  if (n > 62) throw ResourceError("n_majorana too large for 64-bit basis indexing");
}

std::string syk_param_echo(const SykParams& p) {
  return "n_majorana=" + std::to_string(p.n_majorana) +
         " j_scale=" + std::to_string(p.j_scale);
}

}  // namespace

SykCouplings::SykCouplings(int n_majorana, std::vector<double> ordered_values)
    : n_majorana_(n_majorana), values_(std::move(ordered_values)) {
  const std::size_t n = static_cast<std::size_t>(n_majorana);
  const std::size_t expected = n * (n - 1) * (n - 2) * (n - 3) / 24;
  if (values_.size() != expected)
    throw std::invalid_argument("coupling count does not match C(n,4)");
}

double SykCouplings::ordered(int k, int l, int m, int n) const {
  // rank of (k<l<m<n) in lexicographic order, 1-based indices
  auto c2 = [](std::size_t a) { return a * (a - 1) / 2; };
  auto c3 = [&](std::size_t a) { return a * (a - 1) * (a - 2) / 6; };
  auto c4 = [&](std::size_t a) { return a * (a - 1) * (a - 2) * (a - 3) / 24; };
  const std::size_t N = static_cast<std::size_t>(n_majorana_);
  // count quadruples preceding (k,l,m,n): standard combinatorial ranking
  std::size_t rank = c4(N) - c4(N - k + 1) + (c3(N - k) - c3(N - l + 1)) +
                     (c2(N - l) - c2(N - m + 1)) + (std::size_t(N - m) - (N - n + 1));
  return values_[rank];
}

double SykCouplings::value(int k, int l, int m, int n) const {
  int idx[4] = {k, l, m, n};
  // sort 4 indices, tracking permutation parity
  int sign = 1;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3 - i; ++j)
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        sign = -sign;
      }
  if (idx[0] == idx[1] || idx[1] == idx[2] || idx[2] == idx[3]) return 0.0;
  return sign * ordered(idx[0], idx[1], idx[2], idx[3]);
}

MajoranaSet build_majorana_set(int n_majorana, std::size_t memory_budget_bytes) {
  check_majorana_count(n_majorana);
  const int n_qubits = n_majorana / 2;
  const std::size_t dim = std::size_t(1) << n_qubits;
  const std::size_t bytes = std::size_t(n_majorana) * dim * dim * sizeof(std::complex<double>);
  if (bytes > memory_budget_bytes)
    throw ResourceError("dense Majorana set needs " + std::to_string(bytes >> 20) +
                        " MiB, over the " + std::to_string(memory_budget_bytes >> 20) +
                        " MiB budget");
  MajoranaSet set;
  set.n_majorana = n_majorana;
  set.operators.reserve(n_majorana);
  for (int k = 1; k <= n_majorana; ++k)
    set.operators.push_back(pauli_to_dense(majorana_string(k), n_qubits, kMajoranaNorm));
  return set;
}

SykCouplings sample_syk_couplings(const SykParams& params, RngStream& rng) {
  check_majorana_count(params.n_majorana);
  const int n = params.n_majorana;
  const double var = 6.0 * params.j_scale * params.j_scale /
                     (static_cast<double>(n) * n * n);
  const double sigma = std::sqrt(var);
  std::vector<double> values;
  values.reserve(std::size_t(n) * (n - 1) * (n - 2) * (n - 3) / 24);
  for (int k = 1; k <= n; ++k)
    for (int l = k + 1; l <= n; ++l)
      for (int m = l + 1; m <= n; ++m)
        for (int q = m + 1; q <= n; ++q) values.push_back(sigma * rng.normal());
  return SykCouplings(n, std::move(values));
}

HamiltonianInstance build_syk_hamiltonian(const SykParams& params,
                                          const SykCouplings& couplings) {
  check_majorana_count(params.n_majorana);
  if (couplings.n_majorana() != params.n_majorana)
    throw std::invalid_argument("coupling table drawn for a different n_majorana");
  const int n = params.n_majorana;
  const int n_qubits = n / 2;
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;

  HamiltonianInstance inst;
  inst.matrix = Eigen::MatrixXcd::Zero(dim, dim);
  inst.provenance = {"syk", syk_param_echo(params), params.seed};

  // (1/4) sum over ordered quadruples; each chi carries 1/sqrt(2), so a
  // quartic string contributes with prefactor (1/4) * (1/sqrt2)^4 = 1/16.
  const double prefactor = 1.0 / 16.0;
  std::size_t rank = 0;
  for (int k = 1; k <= n; ++k)
    for (int l = k + 1; l <= n; ++l) {
      const PauliString pkl = majorana_string(k) * majorana_string(l);
      for (int m = l + 1; m <= n; ++m) {
        const PauliString pklm = pkl * majorana_string(m);
        for (int q = m + 1; q <= n; ++q) {
          const PauliString p = pklm * majorana_string(q);
          const double j = couplings.raw()[rank++];
          accumulate_pauli(inst.matrix, p, prefactor * j, n_qubits);
        }
      }
    }
  return inst;
}

HamiltonianInstance build_syk_hamiltonian(const SykParams& params) {
  RngStream rng(params.seed);
  return build_syk_hamiltonian(params, sample_syk_couplings(params, rng));
}

Eigen::MatrixXd goe_from_normals(const GoeParams& params, std::span<const double> normals) {
  if (params.dim < 1) throw std::invalid_argument("goe dim must be >= 1");
  const int d = params.dim;
  const std::size_t needed = std::size_t(d) * (d + 1) / 2;
  if (normals.size() != needed)
    throw std::invalid_argument("expected " + std::to_string(needed) + " normal draws");
  const double sigma = params.scale / std::sqrt(static_cast<double>(d));
  Eigen::MatrixXd h(d, d);
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double g = normals[idx++];
      if (i == j)
        h(i, i) = sigma * std::sqrt(2.0) * g;
      else
        h(i, j) = h(j, i) = sigma * g;
    }
  return h;
}

HamiltonianInstance build_goe_hamiltonian(const GoeParams& params, RngStream& rng) {
  if (params.dim < 1) throw std::invalid_argument("goe dim must be >= 1");
  const std::size_t needed = std::size_t(params.dim) * (params.dim + 1) / 2;
  std::vector<double> normals(needed);
  for (auto& g : normals) g = rng.normal();
  HamiltonianInstance inst;
  inst.matrix = goe_from_normals(params, normals).cast<std::complex<double>>();
  inst.provenance = {"goe",
                     "dim=" + std::to_string(params.dim) +
                         " scale=" + std::to_string(params.scale),
                     params.seed};
  return inst;
}

HamiltonianInstance build_goe_hamiltonian(const GoeParams& params) {
  RngStream rng(params.seed);
  return build_goe_hamiltonian(params, rng);
}

}  // namespace sfflab
