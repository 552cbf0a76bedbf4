#include "potentials.hpp"

#include <cmath>

#include <fmt/format.h>

#include "error.hpp"

namespace qsym {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_same_dim(std::span<const double> r1, std::span<const double> r2) {
  if (r1.size() != r2.size() || r1.empty())
    throw InvalidArgument(
        fmt::format("potential: position dimensions differ ({} vs {})", r1.size(), r2.size()));
}

}  // namespace

double DotParams::omega0() const {
  return std::sqrt(0.5 * (omega_x * omega_x + omega_y * omega_y));
}

double DotParams::length0() const { return std::sqrt(units::dot::hbar / (mass() * omega0())); }

double DotParams::coulomb_strength() const {
  return gamma_c * units::dot::coulomb_constant / epsilon_r;
}

double DotParams::wigner_parameter() const { return bare_coulomb(length0()) / hbar_omega0(); }

void DotParams::validate() const {
  if (!(omega_x > 0.0) || !(omega_y > 0.0))
    throw InvalidArgument("dot: confinement frequencies must be positive");
  if (!(epsilon_r > 0.0)) throw InvalidArgument("dot: epsilon_r must be positive");
  if (!(m_star_ratio > 0.0)) throw InvalidArgument("dot: effective mass ratio must be positive");
  if (!(gamma_c >= 0.0) || gamma_c > 1.0)
    throw InvalidArgument(fmt::format("dot: gamma_C = {} outside [0, 1]", gamma_c));
  if (!(softening >= 0.0) || !std::isfinite(softening))
    throw InvalidArgument("dot: Coulomb softening must be non-negative");
}

DotParams DotParams::from_material(double hbar_omega0, double eta, double m_star_ratio,
                                   double epsilon_r, double gamma_c, double softening_over_l0) {
  DotParams dot;
  std::tie(dot.omega_x, dot.omega_y) = solve_dot_frequencies(hbar_omega0, eta);
  dot.m_star_ratio = m_star_ratio;
  dot.epsilon_r = epsilon_r;
  dot.gamma_c = gamma_c;
  dot.softening = softening_over_l0 * dot.length0();
  dot.validate();
  return dot;
}

DotParams DotParams::from_wigner(double hbar_omega0, double eta, double wigner,
                                 double m_star_ratio, double epsilon_r,
                                 double softening_over_l0) {
  DotParams dot = from_material(hbar_omega0, eta, m_star_ratio, epsilon_r, 1.0, softening_over_l0);
  // R_W is linear in gamma_C.
  dot.gamma_c = wigner / dot.wigner_parameter();
  dot.validate();
  return dot;
}

std::string potential_name(const PotentialSpec& potential) {
  return std::visit(overloaded{[](const FreeParticles&) { return std::string("free"); },
                               [](const IsotropicHarmonic&) { return std::string("harmonic"); },
                               [](const QuantumDot&) { return std::string("quantum_dot"); }},
                    potential);
}

double evaluate_with_gradient(const PotentialSpec& potential, std::span<const double> r1,
                              std::span<const double> r2, std::span<double> g1,
                              std::span<double> g2) {
  require_same_dim(r1, r2);
  const std::size_t dim = r1.size();
  return std::visit(
      overloaded{
          [&](const FreeParticles&) {
            for (std::size_t d = 0; d < dim; ++d) g1[d] = g2[d] = 0.0;
            return 0.0;
          },
          [&](const IsotropicHarmonic& h) {
            const double k = h.mass * h.omega * h.omega;
            double sq = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
              g1[d] = k * r1[d];
              g2[d] = k * r2[d];
              sq += r1[d] * r1[d] + r2[d] * r2[d];
            }
            return 0.5 * k * sq;
          },
          [&](const QuantumDot& q) {
            if (dim != 2)
              throw InvalidArgument(fmt::format("quantum dot requires 2D positions, got {}", dim));
            const DotParams& p = q.dot;
            const double m = p.mass();
            const double kx = m * p.omega_x * p.omega_x;
            const double ky = m * p.omega_y * p.omega_y;
            const double dx = r1[0] - r2[0];
            const double dy = r1[1] - r2[1];
            const double rr = dx * dx + dy * dy + p.softening * p.softening;
            const double inv = 1.0 / std::sqrt(rr);
            const double vc = p.coulomb_strength() * inv;
            // d/dr1 of kappa / sqrt(r^2 + a^2) = -kappa (r1 - r2) / (r^2 + a^2)^{3/2}
            const double fc = vc / rr;
            g1[0] = kx * r1[0] - fc * dx;
            g1[1] = ky * r1[1] - fc * dy;
            g2[0] = kx * r2[0] + fc * dx;
            g2[1] = ky * r2[1] + fc * dy;
            return 0.5 * (kx * (r1[0] * r1[0] + r2[0] * r2[0]) +
                          ky * (r1[1] * r1[1] + r2[1] * r2[1])) +
                   vc;
          }},
      potential);
}

double evaluate(const PotentialSpec& potential, std::span<const double> r1,
                std::span<const double> r2) {
  double g1[3], g2[3];
  if (r1.size() > 3) throw InvalidArgument("potential: at most 3 dimensions");
  return evaluate_with_gradient(potential, r1, r2, std::span<double>(g1, r1.size()),
                                std::span<double>(g2, r1.size()));
}

void gradient(const PotentialSpec& potential, std::span<const double> r1,
              std::span<const double> r2, std::span<double> grad_r1, std::span<double> grad_r2) {
  if (grad_r1.size() != r1.size() || grad_r2.size() != r2.size())
    throw InvalidArgument("potential: gradient buffer size mismatch");
  evaluate_with_gradient(potential, r1, r2, grad_r1, grad_r2);
}

std::pair<double, double> solve_dot_frequencies(double hbar_omega0, double eta, double hbar) {
  if (!(hbar_omega0 > 0.0) || !(eta > 0.0) || !(hbar > 0.0))
    throw InvalidArgument("solve_dot_frequencies: hbar_omega0, eta, hbar must be positive");
  const double omega0 = hbar_omega0 / hbar;
  const double omega_x = omega0 * std::sqrt(2.0 / (1.0 + eta * eta));
  return {omega_x, eta * omega_x};
}

}  // namespace qsym
