#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "potentials.hpp"

namespace qsym {

/// Ring-polymer topology: two separate P-bead necklaces, or one exchanged 2P-bead ring.
enum class Topology { Distinguishable, Connected };

enum class SymmetryChannel { Boson, Fermion, Distinguishable };

const char* to_string(Topology topo);
const char* to_string(SymmetryChannel channel);

struct SystemSpec {
  double mass = 1.0;
  double beta = 1.0;
  double hbar = 1.0;
  int num_beads = 2;
  int dim = 3;
  PotentialSpec potential = FreeParticles{};

  /// m P / (2 hbar^2 beta^2); multiplies each squared bead separation.
  double spring_constant() const {
    return mass * num_beads / (2.0 * hbar * hbar * beta * beta);
  }
  std::size_t coordinate_count() const {
    return 2 * static_cast<std::size_t>(num_beads) * static_cast<std::size_t>(dim);
  }

  void validate() const;
};

/// Bead positions (and optionally momenta), laid out as [particle][bead][dim].
class BeadConfiguration {
 public:
  BeadConfiguration() = default;
  BeadConfiguration(int num_beads, int dim, bool with_momenta = true);
  explicit BeadConfiguration(const SystemSpec& spec, bool with_momenta = true)
      : BeadConfiguration(spec.num_beads, spec.dim, with_momenta) {}

  int num_beads() const { return num_beads_; }
  int dim() const { return dim_; }
  bool has_momenta() const { return !momenta_.empty(); }

  std::size_t offset(int particle, int bead) const {
    return (static_cast<std::size_t>(particle) * num_beads_ + bead) * dim_;
  }

  std::span<double> position(int particle, int bead) {
    return {positions_.data() + offset(particle, bead), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> position(int particle, int bead) const {
    return {positions_.data() + offset(particle, bead), static_cast<std::size_t>(dim_)};
  }
  std::span<double> momentum(int particle, int bead) {
    return {momenta_.data() + offset(particle, bead), static_cast<std::size_t>(dim_)};
  }

  std::span<double> positions() { return positions_; }
  std::span<const double> positions() const { return positions_; }
  std::span<double> momenta() { return momenta_; }
  std::span<const double> momenta() const { return momenta_; }

  void enable_momenta();

  bool all_finite() const;

  /// Throws InvalidArgument unless the shape is 2 x P x dim of the spec.
  void check_shape(const SystemSpec& spec) const;

  friend bool operator==(const BeadConfiguration&, const BeadConfiguration&) = default;

 private:
  int num_beads_ = 0;
  int dim_ = 0;
  std::vector<double> positions_;
  std::vector<double> momenta_;
};

/// Spring part of the effective potential for the given topology. The
/// connected ring visits particle 1 beads 1..P, then particle 2 beads 1..P.
double spring_energy(const BeadConfiguration& config, const SystemSpec& spec, Topology topo);

/// (1/P) sum_i V(r_1^i, r_2^i); the same for both topologies.
double potential_energy(const BeadConfiguration& config, const SystemSpec& spec);

/// s = V_O - V_oo via the four closure beads.
double collective_variable_s(const BeadConfiguration& config, const SystemSpec& spec);

/// ds/dr for every coordinate; zero except on r_1^1, r_1^P, r_2^1, r_2^P.
std::vector<double> cv_gradient(const BeadConfiguration& config, const SystemSpec& spec);

/// Adds scale * ds/dr into `out` (sized like the positions). Hot-path variant.
void add_cv_gradient(const BeadConfiguration& config, const SystemSpec& spec, double scale,
                     std::span<double> out);

/// A real number stored as sign * exp(log_abs); sign is -1, 0 or +1.
struct SignedLog {
  int sign = 0;
  double log_abs = -INFINITY;

  /// Converts to double; throws NumericalAbort if the magnitude overflows.
  double value() const;
};

/// W_I(s) = 1 +/- exp(-beta s). Channel must be Boson or Fermion.
SignedLog symmetry_weight(double s, double beta, SymmetryChannel channel);

}  // namespace qsym
