#include "sfflab/sff.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "sfflab/errors.hpp"

namespace sfflab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_spectrum(const Spectrum& s) {
  if (s.energies.empty()) throw std::invalid_argument("empty spectrum");
}

// Stabilized exponential sums: every evaluator assembles
//   F = exp(shift) * |S_num|^2 / (S_z * S_den)
// where each S is a sum of exp(a_n - max a_n) terms, so the largest term is
// exactly 1 and overflow cannot occur regardless of beta, gamma, t.
struct ShiftedSum {
  double shift = kNegInf;        // max exponent
  std::complex<double> sum = 0;  // sum of exp(a - shift) * phase
};

ShiftedSum shifted_sum(const std::vector<double>& exponents,
                       const std::vector<double>& phases) {
  ShiftedSum r;
  for (double a : exponents) r.shift = std::max(r.shift, a);
  if (r.shift == kNegInf) return r;  // all terms vanish
  for (std::size_t n = 0; n < exponents.size(); ++n) {
    const double mag = std::exp(exponents[n] - r.shift);
    if (phases.empty())
      r.sum += mag;
    else
      r.sum += mag * std::complex<double>(std::cos(phases[n]), std::sin(phases[n]));
  }
  return r;
}

double clamp_fidelity(double f) {
  if (!std::isfinite(f)) throw NumericError("fidelity evaluation produced non-finite value");
  return std::clamp(f, 0.0, 1.0);
}

// F = e^{2 a_num.shift - z.shift - den.shift} |num|^2 / (z * den)
double assemble(const ShiftedSum& num, const ShiftedSum& z, const ShiftedSum& den) {
  if (z.sum.real() <= 0.0 || den.sum.real() <= 0.0 || den.shift == kNegInf)
    throw DegenerateFilterError("fidelity denominator vanished");
  const double log_scale = 2.0 * num.shift - z.shift - den.shift;
  const double f = std::exp(log_scale) * std::norm(num.sum) / (z.sum.real() * den.sum.real());
  return clamp_fidelity(f);
}

}  // namespace

std::vector<double> filter_log_values(const FilterSpec& f, const Spectrum& s, double t) {
  check_spectrum(s);
  const std::size_t d = s.energies.size();
  std::vector<double> lg(d);
  if (const auto* p = std::get_if<PowerFilter>(&f)) {
    if (p->gamma < 0 || p->delta < 0)
      throw std::invalid_argument("power filter needs gamma >= 0 and delta >= 0");
    for (std::size_t n = 0; n < d; ++n)
      lg[n] = -p->gamma * t * std::pow(std::abs(s.energies[n]), p->delta);
  } else if (const auto* q = std::get_if<NamedFilter>(&f)) {
    if (q->gamma < 0) throw std::invalid_argument("filter gamma must be >= 0");
    for (std::size_t n = 0; n < d; ++n) {
      const double u = q->gamma * t * s.energies[n] * s.energies[n];
      if (q->name == "lorentz")
        lg[n] = -std::log1p(u);
      else if (q->name == "sech")
        lg[n] = -(u + std::log1p(std::exp(-2.0 * u))) + M_LN2;  // log sech(u)
      else
        throw std::invalid_argument("unknown filter shape: " + q->name);
    }
  } else {
    const auto& table = std::get<TableFilter>(f);
    if (table.values.size() != d)
      throw std::invalid_argument("table filter not aligned with spectrum");
    for (std::size_t n = 0; n < d; ++n) {
      const double g = table.values[n];
      if (g < 0) throw std::invalid_argument("filter values must be >= 0");
      lg[n] = (g > 0) ? std::log(g) : kNegInf;
    }
  }
  if (std::all_of(lg.begin(), lg.end(), [](double v) { return v == kNegInf; }))
    throw DegenerateFilterError("filter vanishes on the entire spectrum");
  return lg;
}

double sff_unitary(const Spectrum& s, double beta, double t) {
  check_spectrum(s);
  const std::size_t d = s.energies.size();
  std::vector<double> a(d), phase(d);
  for (std::size_t n = 0; n < d; ++n) {
    a[n] = -beta * s.energies[n];
    phase[n] = -t * s.energies[n];
  }
  const ShiftedSum num = shifted_sum(a, phase);
  const ShiftedSum z = shifted_sum(a, {});
  return assemble(num, z, z);
}

double sff_bgl(const Spectrum& s, double beta, double gamma, double t) {
  check_spectrum(s);
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  const std::size_t d = s.energies.size();
  std::vector<double> a(d), b(d), zz(d), phase(d);
  for (std::size_t n = 0; n < d; ++n) {
    const double e = s.energies[n];
    a[n] = -beta * e - gamma * t * e * e;
    b[n] = -beta * e - 2.0 * gamma * t * e * e;
    zz[n] = -beta * e;
    phase[n] = -t * e;
  }
  return assemble(shifted_sum(a, phase), shifted_sum(zz, {}), shifted_sum(b, {}));
}

double sff_dephasing_jumps(const Spectrum& s, double beta, double gamma, double t,
                           int max_dim) {
  check_spectrum(s);
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  const int d = s.dim();
  if (d > max_dim)
    throw ResourceError("dephasing pair sum is O(d^2); dim " + std::to_string(d) +
                        " exceeds the cap " + std::to_string(max_dim));
  // Gibbs weights p_n via softmax, then the explicitly real pair sum.
  std::vector<double> a(d);
  double shift = kNegInf;
  for (int n = 0; n < d; ++n) {
    a[n] = -beta * s.energies[n];
    shift = std::max(shift, a[n]);
  }
  std::vector<double> p(d);
  double norm = 0.0;
  for (int n = 0; n < d; ++n) norm += (p[n] = std::exp(a[n] - shift));
  for (int n = 0; n < d; ++n) p[n] /= norm;

  double f = 0.0;
  for (int n = 0; n < d; ++n) f += p[n] * p[n];
  for (int n = 0; n < d; ++n)
    for (int m = n + 1; m < d; ++m) {
      const double de = s.energies[n] - s.energies[m];
      f += 2.0 * p[n] * p[m] * std::exp(-gamma * t * de * de) * std::cos(de * t);
    }
  return clamp_fidelity(f);
}

double sff_filtered(const Spectrum& s, double beta, const FilterSpec& filter, double t) {
  const std::vector<double> lg = filter_log_values(filter, s, t);
  const std::size_t d = s.energies.size();
  std::vector<double> a(d), b(d), zz(d), phase(d);
  for (std::size_t n = 0; n < d; ++n) {
    const double e = s.energies[n];
    a[n] = -beta * e + lg[n];
    b[n] = -beta * e + 2.0 * lg[n];
    zz[n] = -beta * e;
    phase[n] = -t * e;
  }
  return assemble(shifted_sum(a, phase), shifted_sum(zz, {}), shifted_sum(b, {}));
}

double plateau_value(const DegeneracyClusters& clusters, double beta, PlateauMode mode) {
  if (clusters.energies.empty()) throw std::invalid_argument("empty cluster list");
  const std::size_t L = clusters.energies.size();
  double shift = kNegInf;
  for (double e : clusters.energies) shift = std::max(shift, -beta * e);
  double z0 = 0.0;
  for (std::size_t n = 0; n < L; ++n)
    z0 += clusters.multiplicities[n] * std::exp(-beta * clusters.energies[n] - shift);

  if (mode == PlateauMode::Unitary) {
    double num = 0.0;
    for (std::size_t n = 0; n < L; ++n) {
      const double nn = clusters.multiplicities[n];
      num += nn * nn * std::exp(2.0 * (-beta * clusters.energies[n] - shift));
    }
    return clamp_fidelity(num / (z0 * z0));
  }
  // level nearest E = 0 dominates the late-time gain/loss filter
  std::size_t star = 0;
  for (std::size_t n = 1; n < L; ++n)
    if (std::abs(clusters.energies[n]) < std::abs(clusters.energies[star])) star = n;
  const double num =
      clusters.multiplicities[star] * std::exp(-beta * clusters.energies[star] - shift);
  return clamp_fidelity(num / z0);
}

double plateau_finite_t(const DegeneracyClusters& clusters, double beta, double gamma,
                        double t) {
  if (clusters.energies.empty()) throw std::invalid_argument("empty cluster list");
  const std::size_t L = clusters.energies.size();
  std::vector<double> a(L), b(L), zz(L);
  for (std::size_t n = 0; n < L; ++n) {
    const double e = clusters.energies[n];
    a[n] = -2.0 * beta * e - 2.0 * gamma * t * e * e;
    b[n] = -beta * e - 2.0 * gamma * t * e * e;
    zz[n] = -beta * e;
  }
  auto weighted = [&](const std::vector<double>& expo, bool square_mult) {
    ShiftedSum r;
    for (double v : expo) r.shift = std::max(r.shift, v);
    for (std::size_t n = 0; n < L; ++n) {
      double w = clusters.multiplicities[n];
      if (square_mult) w *= clusters.multiplicities[n];
      r.sum += w * std::exp(expo[n] - r.shift);
    }
    return r;
  };
  const ShiftedSum num = weighted(a, true);
  const ShiftedSum z = weighted(zz, false);
  const ShiftedSum den = weighted(b, false);
  const double f = std::exp(num.shift - z.shift - den.shift) * num.sum.real() /
                   (z.sum.real() * den.sum.real());
  return clamp_fidelity(f);
}

const GaussHermite& gauss_hermite(int m) {
  if (m < 2) throw std::invalid_argument("need at least 2 quadrature nodes");
  static std::map<int, GaussHermite> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;

  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix with
  // off-diagonal b_k = sqrt(k/2) (physicists' Hermite, weight e^{-x^2}).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(m - 1);
  for (int k = 1; k < m; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericError("quadrature node computation failed");

  GaussHermite rule;
  rule.nodes.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + m);
  rule.weights.resize(m);
  // w_k = e^{-x^2} / (m * psi_{m-1}(x)^2) with Hermite functions
  // psi_{k+1} = x sqrt(2/(k+1)) psi_k - sqrt(k/(k+1)) psi_{k-1}; the
  // function recurrence stays O(1) where the polynomial one overflows.
  for (int k = 0; k < m; ++k) {
    const double x = rule.nodes[k];
    double prev = 0.0;
    double cur = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    for (int j = 0; j < m - 1; ++j) {
      const double next =
          x * std::sqrt(2.0 / (j + 1)) * cur - std::sqrt(double(j) / (j + 1)) * prev;
      prev = cur;
      cur = next;
    }
    const double psi2 = cur * cur;
    rule.weights[k] = (psi2 > 0.0) ? std::exp(-x * x) / (m * psi2) : 0.0;
  }
  return cache.emplace(m, std::move(rule)).first->second;
}

double sff_via_kernel(const Spectrum& s, double beta, double gamma, double t, int nodes) {
  check_spectrum(s);
  if (gamma <= 0 || t <= 0)
    throw std::invalid_argument("kernel route needs gamma > 0 and t > 0");
  const GaussHermite& rule = gauss_hermite(nodes);
  const std::size_t d = s.energies.size();
  const double spread = std::sqrt(2.0 * gamma * t);
  const double wnorm = 1.0 / std::sqrt(M_PI);  // sum w_k / sqrt(pi) = 1

  // phi_n = E_u[e^{-i spread u E_n}], u standard normal; exact value e^{-gamma t E_n^2}.
  // The denominator double integral factorizes per eigenvalue into |phi_n|^2.
  std::vector<double> a(d);
  double shift = kNegInf;
  for (std::size_t n = 0; n < d; ++n) shift = std::max(shift, a[n] = -beta * s.energies[n]);

  std::complex<double> num = 0.0;
  double z0 = 0.0, den = 0.0;
  for (std::size_t n = 0; n < d; ++n) {
    const double e = s.energies[n];
    std::complex<double> phi = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double arg = -spread * (M_SQRT2 * rule.nodes[k]) * e;
      phi += (rule.weights[k] * wnorm) * std::complex<double>(std::cos(arg), std::sin(arg));
    }
    const double mag = std::exp(a[n] - shift);
    num += mag * std::complex<double>(std::cos(-t * e), std::sin(-t * e)) * phi;
    z0 += mag;
    den += mag * std::norm(phi);
  }
  if (den <= 0.0) throw DegenerateFilterError("kernel denominator vanished");
  return clamp_fidelity(std::norm(num) / (z0 * den));
}

KernelResult sff_via_kernel_adaptive(const Spectrum& s, double beta, double gamma,
                                     double t, int start_nodes, int max_nodes,
                                     double tol) {
  KernelResult r;
  int m = std::max(start_nodes, 8);
  double prev = sff_via_kernel(s, beta, gamma, t, m);
  while (2 * m <= max_nodes) {
    m *= 2;
    const double cur = sff_via_kernel(s, beta, gamma, t, m);
    if (std::abs(cur - prev) < tol * std::max(1.0, std::abs(cur))) {
      r.value = cur;
      r.nodes_used = m;
      r.converged = true;
      return r;
    }
    prev = cur;
  }
  r.value = prev;
  r.nodes_used = m;
  r.converged = false;
  return r;
}

}  // namespace sfflab
