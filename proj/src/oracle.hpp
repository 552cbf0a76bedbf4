#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "potentials.hpp"

namespace qsym {

/// Two non-interacting particles in an isotropic harmonic well (hbar = 1 scale
/// absorbed in hbar_omega). Energies in units of hbar_omega's energy unit.
struct HarmonicPartition {
  double z1_beta = 0.0;   // Z1(beta)  = (2 sinh(beta hw / 2))^-n_d
  double z1_2beta = 0.0;  // Z1(2 beta)
  double z_boson = 0.0;
  double z_fermion = 0.0;
  double ratio = 0.0;  // Z_O / Z_oo = Z1(2 beta) / Z1(beta)^2
  double e_boson = 0.0;
  double e_fermion = 0.0;
  double e_distinguishable = 0.0;
};

HarmonicPartition harmonic_partition(double beta, double hbar_omega, int dim);

/// The same quantities for the P-bead primitive discretization that the
/// sampler actually simulates. The connected ring is one particle at 2 beta
/// with 2P beads.
HarmonicPartition harmonic_partition_discrete(double beta, double hbar_omega, int dim,
                                              int num_beads);

/// Normalized pair-distance density g(r) (unit integral over r >= 0) for the
/// requested channel; mass is the single-particle mass, hbar = 1.
std::vector<double> harmonic_pair_distribution(double beta, double omega, double mass, int dim,
                                               SymmetryChannel channel,
                                               std::span<const double> r_grid);

/// Mean of g over [r_lo, r_hi); used to compare against histogram bins.
double harmonic_pair_bin_average(double beta, double omega, double mass, int dim,
                                 SymmetryChannel channel, double r_lo, double r_hi);

enum class Parity { Even, Odd };

struct SpectrumLevel {
  double energy = 0.0;  // meV
  Parity parity = Parity::Even;
  int block = 0;  // 2 * (n_x mod 2) + (n_y mod 2)
};

/// Relative-motion spectrum of the two-electron dot plus the centre-of-mass
/// oscillator parameters.
struct SpectrumTable {
  std::vector<SpectrumLevel> levels;  // ascending
  double hbar_omega_x = 0.0;
  double hbar_omega_y = 0.0;
  int cutoff = 0;  // states with n_x + n_y <= cutoff
  std::size_t basis_size = 0;
  bool extrapolated = false;  // levels are 2 E(cutoff) - E(cutoff / 2)
  double residual = 0.0;  // max ground-energy shift against the previous table (NaN if none)
  int previous_cutoff = 0;
  DotParams dot;

  double ground(Parity parity) const;
  void write(std::ostream& out, const std::vector<std::string>& header_lines = {}) const;
};

/// Exact diagonalization of the relative Hamiltonian in an oscillator product
/// basis with n_x + n_y <= cutoff.
SpectrumTable dot_exact_diagonalize(const DotParams& dot, int cutoff);

/// The Coulomb cusp makes every level converge like 1/cutoff. Combines the
/// sorted levels of each parity block at `cutoff` and `cutoff / 2` as
/// 2 E(cutoff) - E(cutoff / 2).
SpectrumTable extrapolate_cutoff(const SpectrumTable& coarse, const SpectrumTable& fine);

/// Extrapolated spectra for cutoffs (start, 2 start), (2 start, 4 start), ...
/// until the lowest even and odd levels move by less than `tolerance` meV;
/// throws ConvergenceFailure once the fine cutoff would exceed `max_cutoff`.
SpectrumTable dot_exact_diagonalize_converged(const DotParams& dot, int start = 30,
                                              int max_cutoff = 120, double tolerance = 1e-3);

/// Singlet = even relative parity (Boson channel), triplet = odd (Fermion channel).
double dot_thermal_energy(const SpectrumTable& spectrum, double beta, SymmetryChannel channel);
double dot_free_energy(const SpectrumTable& spectrum, double beta, SymmetryChannel channel);

/// Thermal energy of the 2D centre-of-mass oscillator.
double dot_center_of_mass_energy(const SpectrumTable& spectrum, double beta);

}  // namespace qsym
