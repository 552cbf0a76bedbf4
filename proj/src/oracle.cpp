#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include "error.hpp"

namespace qsym {

namespace {

double log_z1(double x, int dim) {
  // ln (2 sinh(x/2))^-dim, stable for large x
  return -dim * (0.5 * x + std::log1p(-std::exp(-x)));
}

/// ln of prod_k [4 sin^2(pi k / P) + x^2]^(-1/2) and its x-derivative.
std::pair<double, double> log_ring(double x, int P) {
  double lz = 0.0, dlz = 0.0;
  for (int k = 0; k < P; ++k) {
    const double s = std::sin(std::numbers::pi * k / P);
    const double d = 4.0 * s * s + x * x;
    lz -= 0.5 * std::log(d);
    dlz -= x / d;
  }
  return {lz, dlz};
}

HarmonicPartition combine(double lz1, double lz2, double e1, double e2) {
  // lz1 = ln Z1(beta), lz2 = ln Z1(2 beta); e1, e2 the matching -d/dbeta of each
  // (e2 already includes the chain-rule factor of the 2 beta argument).
  HarmonicPartition h;
  h.z1_beta = std::exp(lz1);
  h.z1_2beta = std::exp(lz2);
  h.ratio = std::exp(lz2 - 2.0 * lz1);
  h.z_boson = 0.5 * (h.z1_beta * h.z1_beta + h.z1_2beta);
  h.z_fermion = 0.5 * (h.z1_beta * h.z1_beta - h.z1_2beta);
  h.e_distinguishable = 2.0 * e1;
  h.e_boson = (2.0 * e1 + h.ratio * e2) / (1.0 + h.ratio);
  h.e_fermion = (2.0 * e1 - h.ratio * e2) / (1.0 - h.ratio);
  return h;
}

struct GaussRule {
  std::vector<double> x, w;
};

/// Golub-Welsch: nodes and weights from the symmetric Jacobi matrix with zero
/// diagonal and off-diagonal b_k (k = 1..n-1); mu0 is the weight's integral.
template <class OffDiag>
GaussRule golub_welsch(int n, OffDiag offdiag, double mu0) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = offdiag(k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j);
  GaussRule rule;
  for (int k = 0; k < n; ++k) {
    rule.x.push_back(eig.eigenvalues()(k));
    const double v = eig.eigenvectors()(0, k);
    rule.w.push_back(mu0 * v * v);
  }
  return rule;
}

GaussRule gauss_hermite(int n) {
  GaussRule rule =
      golub_welsch(n, [](int k) { return std::sqrt(0.5 * k); }, std::sqrt(std::numbers::pi));
  // Eigenvector weights carry absolute, not relative, accuracy: far nodes would
  // be off by many orders of magnitude. Polish each node by Newton on h_n and
  // take the Christoffel weight 1 / sum_j h_j(x)^2 instead.
  const double h0 = std::pow(std::numbers::pi, -0.25);
  for (int k = 0; k < n; ++k) {
    double x = rule.x[k];
    for (int iter = 0; iter < 3; ++iter) {
      double prev = 0.0, cur = h0;
      for (int j = 0; j < n; ++j) {
        const double next = std::sqrt(2.0 / (j + 1)) * x * cur - std::sqrt(double(j) / (j + 1)) * prev;
        prev = cur;
        cur = next;
      }
      // cur = h_n(x), prev = h_{n-1}(x); h_n' = sqrt(2n) h_{n-1}
      x -= cur / (std::sqrt(2.0 * n) * prev);
    }
    double prev = 0.0, cur = h0, sum = 0.0;
    for (int j = 0; j < n; ++j) {
      sum += cur * cur;
      const double next = std::sqrt(2.0 / (j + 1)) * x * cur - std::sqrt(double(j) / (j + 1)) * prev;
      prev = cur;
      cur = next;
    }
    rule.x[k] = x;
    rule.w[k] = 1.0 / sum;
  }
  return rule;
}

GaussRule gauss_legendre(int n) {
  return golub_welsch(n, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); }, 2.0);
}

/// Rows: quadrature nodes; columns: h_n(xi) for n = 0..nmax, the Hermite
/// functions without their Gaussian factor.
Eigen::MatrixXd hermite_table(const std::vector<double>& xi, int nmax) {
  Eigen::MatrixXd h(static_cast<Eigen::Index>(xi.size()), nmax + 1);
  const double h0 = std::pow(std::numbers::pi, -0.25);
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    h(r, 0) = h0;
    if (nmax >= 1) h(r, 1) = std::sqrt(2.0) * xi[k] * h0;
    for (int n = 1; n < nmax; ++n)
      h(r, n + 1) = std::sqrt(2.0 / (n + 1)) * xi[k] * h(r, n) - std::sqrt(double(n) / (n + 1)) * h(r, n - 1);
  }
  return h;
}

/// <n| exp(-tau^2 xi^2) |n'> between oscillator eigenfunctions (xi in units of
/// the oscillator length).
Eigen::MatrixXd gaussian_matrix(const GaussRule& gh, int nmax, double tau) {
  const double s = std::sqrt(1.0 + tau * tau);
  std::vector<double> xi(gh.x.size());
  for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = gh.x[k] / s;
  const Eigen::MatrixXd h = hermite_table(xi, nmax);
  const Eigen::Map<const Eigen::VectorXd> w(gh.w.data(), static_cast<Eigen::Index>(gh.w.size()));
  return (h.transpose() * w.asDiagonal() * h) / s;
}

struct BasisState {
  int nx, ny;
};

}  // namespace

HarmonicPartition harmonic_partition(double beta, double hbar_omega, int dim) {
  if (!(beta * hbar_omega > 0.0)) throw InvalidArgument("harmonic oracle: beta hbar omega must be > 0");
  if (dim < 1) throw InvalidArgument("harmonic oracle: dim must be >= 1");
  const double x = beta * hbar_omega;
  // single-particle energy n_d (hw/2) coth(beta hw / 2)
  const double e1 = dim * 0.5 * hbar_omega / std::tanh(0.5 * x);
  const double e2 = 2.0 * dim * 0.5 * hbar_omega / std::tanh(x);
  return combine(log_z1(x, dim), log_z1(2.0 * x, dim), e1, e2);
}

HarmonicPartition harmonic_partition_discrete(double beta, double hbar_omega, int dim,
                                              int num_beads) {
  if (!(beta * hbar_omega > 0.0)) throw InvalidArgument("harmonic oracle: beta hbar omega must be > 0");
  if (num_beads < 1) throw InvalidArgument("harmonic oracle: num_beads must be >= 1");
  const double x = beta * hbar_omega / num_beads;
  const auto [l1, d1] = log_ring(x, num_beads);
  const auto [l2, d2] = log_ring(x, 2 * num_beads);
  const double dx = hbar_omega / num_beads;
  return combine(dim * l1, dim * l2, -dim * d1 * dx, -dim * d2 * dx);
}

std::vector<double> harmonic_pair_distribution(double beta, double omega, double mass, int dim,
                                               SymmetryChannel channel,
                                               std::span<const double> r_grid) {
  if (!(beta * omega > 0.0) || !(mass > 0.0) || dim < 1)
    throw InvalidArgument("harmonic oracle: invalid pair-distribution parameters");
  const double mu = 0.5 * mass;
  const double a = mu * omega * std::tanh(0.5 * beta * omega);
  const double b = mu * omega / std::tanh(0.5 * beta * omega);
  const double c = channel == SymmetryChannel::Boson     ? 1.0
                   : channel == SymmetryChannel::Fermion ? -1.0
                                                         : 0.0;
  const double surface = 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
  const double norm = std::pow(std::numbers::pi / a, 0.5 * dim) +
                      c * std::pow(std::numbers::pi / b, 0.5 * dim);
  std::vector<double> g;
  g.reserve(r_grid.size());
  for (double r : r_grid) {
    const double r2 = r * r;
    // e^{-a r^2} - e^{-b r^2} loses digits near r = 0; b > a.
    const double bracket = c < 0.0 ? -std::exp(-a * r2) * std::expm1(-(b - a) * r2)
                                   : std::exp(-a * r2) + c * std::exp(-b * r2);
    g.push_back(surface * std::pow(r, dim - 1) * bracket / norm);
  }
  return g;
}

double harmonic_pair_bin_average(double beta, double omega, double mass, int dim,
                                 SymmetryChannel channel, double r_lo, double r_hi) {
  if (!(r_hi > r_lo)) throw InvalidArgument("harmonic oracle: empty bin");
  auto g = [&](double r) {
    const double v[1] = {r};
    return harmonic_pair_distribution(beta, omega, mass, dim, channel, v)[0];
  };
  return boost::math::quadrature::gauss<double, 20>::integrate(g, r_lo, r_hi) / (r_hi - r_lo);
}

double SpectrumTable::ground(Parity parity) const {
  for (const auto& l : levels)
    if (l.parity == parity) return l.energy;
  throw InvalidArgument("spectrum: no level of the requested parity");
}

void SpectrumTable::write(std::ostream& out, const std::vector<std::string>& header_lines) const {
  for (const auto& line : header_lines) out << "# " << line << '\n';
  out << fmt::format("# hbar_omega_x = {:.17g} meV\n", hbar_omega_x);
  out << fmt::format("# hbar_omega_y = {:.17g} meV\n", hbar_omega_y);
  out << fmt::format("# wigner_parameter = {:.17g}\n", dot.wigner_parameter());
  out << fmt::format("# gamma_c = {:.17g}\n", dot.gamma_c);
  out << fmt::format("# softening = {:.17g} nm\n", dot.softening);
  out << fmt::format("# cutoff = {}\n", cutoff);
  out << fmt::format("# basis_size = {}\n", basis_size);
  out << fmt::format("# extrapolated = {}\n", extrapolated);
  out << fmt::format("# previous_cutoff = {}\n", previous_cutoff);
  out << fmt::format("# convergence_residual = {:.6g} meV\n", residual);
  out << "energy_meV\tparity\n";
  for (const auto& l : levels)
    out << fmt::format("{:.12f}\t{}\n", l.energy, l.parity == Parity::Even ? "even" : "odd");
}

SpectrumTable dot_exact_diagonalize(const DotParams& dot, int cutoff) {
  dot.validate();
  if (cutoff < 1) throw InvalidArgument("exact diagonalization: cutoff must be >= 1");
  const double hbar = units::dot::hbar;
  const double mu = 0.5 * dot.mass();
  const double bx = std::sqrt(hbar / (mu * dot.omega_x));
  const double by = std::sqrt(hbar / (mu * dot.omega_y));
  const double hwx = hbar * dot.omega_x;
  const double hwy = hbar * dot.omega_y;
  const double kappa = dot.coulomb_strength();
  const double a = dot.softening;

  // Parity blocks (nx mod 2, ny mod 2); exchange parity is (-1)^(nx + ny).
  std::vector<BasisState> blocks[2][2];
  for (int nx = 0; nx <= cutoff; ++nx)
    for (int ny = 0; nx + ny <= cutoff; ++ny) blocks[nx % 2][ny % 2].push_back({nx, ny});

  std::vector<Eigen::MatrixXd> h(4);
  for (int b = 0; b < 4; ++b) {
    const auto& states = blocks[b / 2][b % 2];
    const auto n = static_cast<Eigen::Index>(states.size());
    h[b] = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      h[b](i, i) = hwx * (states[i].nx + 0.5) + hwy * (states[i].ny + 0.5);
  }

  if (kappa != 0.0) {
    // 1/sqrt(r^2 + a^2) = (2/sqrt(pi)) int_0^inf exp(-t^2 (r^2 + a^2)) dt, done
    // on Gauss-Legendre panels in ln t.
    const GaussRule gh = gauss_hermite(std::max(64, cutoff + 8));
    const GaussRule gl = gauss_legendre(16);
    const double bmax = std::max(bx, by), bmin = std::min(bx, by);
    const double u_lo = std::log(1e-7 / bmax);
    const double u_hi = a > 0.0 ? std::log(8.0 / a) : std::log(1e7 / bmin);
    const int panels = static_cast<int>(std::ceil((u_hi - u_lo) / 0.75));
    const double width = (u_hi - u_lo) / panels;
    const double pref = 2.0 / std::sqrt(std::numbers::pi) * kappa;
    for (int p = 0; p < panels; ++p)
      for (std::size_t q = 0; q < gl.x.size(); ++q) {
        const double u = u_lo + width * (p + 0.5 * (gl.x[q] + 1.0));
        const double t = std::exp(u);
        const double weight = pref * 0.5 * width * gl.w[q] * t * std::exp(-t * t * a * a);
        const Eigen::MatrixXd gx = gaussian_matrix(gh, cutoff, t * bx);
        const Eigen::MatrixXd gy = gaussian_matrix(gh, cutoff, t * by);
        for (int b = 0; b < 4; ++b) {
          const auto& states = blocks[b / 2][b % 2];
          const auto n = static_cast<Eigen::Index>(states.size());
          for (Eigen::Index j = 0; j < n; ++j) {
            const auto& sj = states[j];
            for (Eigen::Index i = 0; i <= j; ++i)
              h[b](i, j) += weight * gx(states[i].nx, sj.nx) * gy(states[i].ny, sj.ny);
          }
        }
      }
  }

  SpectrumTable table;
  table.dot = dot;
  table.cutoff = cutoff;
  table.hbar_omega_x = hwx;
  table.hbar_omega_y = hwy;
  table.residual = std::nan("");
  for (int b = 0; b < 4; ++b) {
    const auto n = h[b].rows();
    table.basis_size += static_cast<std::size_t>(n);
    if (n == 0) continue;
    Eigen::MatrixXd sym = h[b].selfadjointView<Eigen::Upper>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalAbort("exact diagonalization: eigensolver failed");
    const Parity parity = (b / 2 + b % 2) % 2 == 0 ? Parity::Even : Parity::Odd;
    for (Eigen::Index k = 0; k < n; ++k) table.levels.push_back({eig.eigenvalues()(k), parity, b});
  }
  std::stable_sort(table.levels.begin(), table.levels.end(),
                   [](const SpectrumLevel& l, const SpectrumLevel& r) { return l.energy < r.energy; });
  return table;
}

SpectrumTable extrapolate_cutoff(const SpectrumTable& coarse, const SpectrumTable& fine) {
  if (coarse.extrapolated || fine.extrapolated || fine.cutoff != 2 * coarse.cutoff)
    throw InvalidArgument("spectrum extrapolation: need raw tables at cutoffs N and 2N");
  SpectrumTable out = fine;
  out.levels.clear();
  out.extrapolated = true;
  out.previous_cutoff = coarse.cutoff;
  for (int b = 0; b < 4; ++b) {
    std::vector<double> ec, ef;
    Parity parity = Parity::Even;
    for (const auto& l : coarse.levels)
      if (l.block == b) ec.push_back(l.energy);
    for (const auto& l : fine.levels)
      if (l.block == b) {
        ef.push_back(l.energy);
        parity = l.parity;
      }
    // levels are already ascending within a block
    for (std::size_t k = 0; k < std::min(ec.size(), ef.size()); ++k)
      out.levels.push_back({2.0 * ef[k] - ec[k], parity, b});
  }
  std::stable_sort(out.levels.begin(), out.levels.end(),
                   [](const SpectrumLevel& l, const SpectrumLevel& r) { return l.energy < r.energy; });
  return out;
}

SpectrumTable dot_exact_diagonalize_converged(const DotParams& dot, int start, int max_cutoff,
                                              double tolerance) {
  if (start < 1 || max_cutoff < 2 * start)
    throw InvalidArgument("exact diagonalization: need 1 <= start and 2 start <= max_cutoff");
  SpectrumTable coarse = dot_exact_diagonalize(dot, start);
  SpectrumTable fine = dot_exact_diagonalize(dot, 2 * start);
  SpectrumTable prev = extrapolate_cutoff(coarse, fine);
  prev.residual = std::nan("");
  for (int cutoff = 4 * start; cutoff <= max_cutoff; cutoff *= 2) {
    coarse = std::move(fine);
    fine = dot_exact_diagonalize(dot, cutoff);
    SpectrumTable next = extrapolate_cutoff(coarse, fine);
    next.residual =
        std::max(std::abs(next.ground(Parity::Even) - prev.ground(Parity::Even)),
                 std::abs(next.ground(Parity::Odd) - prev.ground(Parity::Odd)));
    if (next.residual < tolerance) return next;
    prev = std::move(next);
  }
  throw ConvergenceFailure(
      fmt::format("exact diagonalization not converged to {} meV at cutoff {} (last shift {:.3g} meV)",
                  tolerance, prev.cutoff, prev.residual),
      prev.ground(Parity::Even) - prev.residual, prev.ground(Parity::Even));
}

double dot_center_of_mass_energy(const SpectrumTable& spectrum, double beta) {
  double e = 0.0;
  for (double hw : {spectrum.hbar_omega_x, spectrum.hbar_omega_y})
    e += 0.5 * hw / std::tanh(0.5 * beta * hw);
  return e;
}

namespace {

Parity parity_of(SymmetryChannel channel) {
  if (channel == SymmetryChannel::Distinguishable)
    throw InvalidArgument("dot oracle: channel must be singlet (Boson) or triplet (Fermion)");
  return channel == SymmetryChannel::Boson ? Parity::Even : Parity::Odd;
}

}  // namespace

double dot_thermal_energy(const SpectrumTable& spectrum, double beta, SymmetryChannel channel) {
  const Parity parity = parity_of(channel);
  const double e0 = spectrum.ground(parity);
  double z = 0.0, ez = 0.0;
  for (const auto& l : spectrum.levels) {
    if (l.parity != parity) continue;
    const double w = std::exp(-beta * (l.energy - e0));
    z += w;
    ez += w * l.energy;
  }
  return dot_center_of_mass_energy(spectrum, beta) + ez / z;
}

double dot_free_energy(const SpectrumTable& spectrum, double beta, SymmetryChannel channel) {
  const Parity parity = parity_of(channel);
  const double e0 = spectrum.ground(parity);
  double z = 0.0;
  for (const auto& l : spectrum.levels)
    if (l.parity == parity) z += std::exp(-beta * (l.energy - e0));
  double f_cm = 0.0;
  for (double hw : {spectrum.hbar_omega_x, spectrum.hbar_omega_y})
    f_cm += (0.5 * beta * hw + std::log1p(-std::exp(-beta * hw))) / beta;
  return f_cm + e0 - std::log(z) / beta;
}

}  // namespace qsym
