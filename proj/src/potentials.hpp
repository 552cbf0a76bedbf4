#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>

#include "units.hpp"

namespace qsym {

/// Two-electron quantum dot: anisotropic harmonic confinement plus a softened,
/// rescaled Coulomb repulsion. All quantities in dot units (meV, nm, fs).
struct DotParams {
  double m_star_ratio = 0.07;
  double omega_x = 0.0;  // 1/fs
  double omega_y = 0.0;  // 1/fs
  double epsilon_r = 12.5;
  double gamma_c = 0.9;
  double softening = 0.0;  // nm; Coulomb uses sqrt(r^2 + a^2)

  double mass() const { return m_star_ratio * units::dot::electron_mass; }
  double omega0() const;
  double eta() const { return omega_y / omega_x; }
  double hbar_omega0() const { return units::dot::hbar * omega0(); }
  /// Characteristic length sqrt(hbar / (m* omega0)).
  double length0() const;
  /// Prefactor of the Coulomb term: gamma_C e^2 / (4 pi eps_r eps_0), meV nm.
  double coulomb_strength() const;
  /// Bare (unsoftened) Coulomb at distance r.
  double bare_coulomb(double r) const { return coulomb_strength() / r; }
  /// Wigner parameter V_C(l0) / (hbar omega0), from the bare Coulomb term.
  double wigner_parameter() const;

  void validate() const;

  /// Build from confinement and material constants.
  static DotParams from_material(double hbar_omega0, double eta, double m_star_ratio,
                                 double epsilon_r, double gamma_c,
                                 double softening_over_l0 = 1e-3);
  /// Build from confinement and a target Wigner parameter; gamma_C is solved for.
  static DotParams from_wigner(double hbar_omega0, double eta, double wigner,
                               double m_star_ratio, double epsilon_r,
                               double softening_over_l0 = 1e-3);
};

struct FreeParticles {};

struct IsotropicHarmonic {
  double omega = 1.0;
  double mass = 1.0;
};

struct QuantumDot {
  DotParams dot;
};

using PotentialSpec = std::variant<FreeParticles, IsotropicHarmonic, QuantumDot>;

std::string potential_name(const PotentialSpec& potential);

/// Pair potential V(r1, r2) including both one-body terms.
double evaluate(const PotentialSpec& potential, std::span<const double> r1,
                std::span<const double> r2);

/// Writes dV/dr1 and dV/dr2. Returns V.
double evaluate_with_gradient(const PotentialSpec& potential, std::span<const double> r1,
                              std::span<const double> r2, std::span<double> grad_r1,
                              std::span<double> grad_r2);

void gradient(const PotentialSpec& potential, std::span<const double> r1,
              std::span<const double> r2, std::span<double> grad_r1, std::span<double> grad_r2);

/// Frequencies (omega_x, omega_y) with omega_y/omega_x = eta and
/// sqrt((omega_x^2 + omega_y^2)/2) = hbar_omega0/hbar.
std::pair<double, double> solve_dot_frequencies(double hbar_omega0, double eta,
                                                double hbar = units::dot::hbar);

}  // namespace qsym
