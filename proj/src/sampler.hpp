#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "metadynamics.hpp"
#include "model.hpp"
#include "sample.hpp"

namespace qsym {

/// Harmonic restraint 1/2 k (s - bound)^2 outside [s_min, s_max]; off when k = 0.
struct Walls {
  double s_min = 0.0;
  double s_max = 0.0;
  double k = 0.0;

  bool enabled() const { return k > 0.0; }
  double value(double s) const;
  double derivative(double s) const;
};

struct IntegratorSpec {
  double timestep = 0.0;
  double friction = -1.0;  // negative: 1 / (10 timestep)
  std::int64_t n_steps = 0;
  std::int64_t sample_stride = 1;
  std::uint64_t seed = 1;
  Topology topology = Topology::Distinguishable;
  Walls walls;

  double effective_friction() const { return friction < 0.0 ? 0.1 / timestep : friction; }
  void validate() const;
};

/// Writes -dU/dr into `force` and returns U for
///   U = spring(topo) + (1/P) sum_i V + V_bias(s) + V_wall(s).
/// `potential_gradient`, if non-empty, receives dV/dr per bead (unscaled by 1/P).
double total_force(const BeadConfiguration& config, const SystemSpec& spec, Topology topo,
                   const BiasState* bias, const Walls& walls, std::span<double> force,
                   std::span<double> potential_gradient = {});

double total_energy(const BeadConfiguration& config, const SystemSpec& spec, Topology topo,
                    const BiasState* bias, const Walls& walls);

/// Per-sample observables of a configuration (see TrajectorySample).
/// `potential_gradient` must hold dV/dr for every bead.
TrajectorySample measure(const BeadConfiguration& config, const SystemSpec& spec,
                         const BiasState* bias, const Walls& walls,
                         std::span<const double> potential_gradient, std::int64_t step);

/// Beads scattered around the potential minimum, momenta from Maxwell-Boltzmann.
BeadConfiguration initial_configuration(const SystemSpec& spec, std::uint64_t seed);

/// Everything needed to continue a trajectory bit-identically.
struct SamplerState {
  BeadConfiguration config;
  std::int64_t step = 0;
  std::string rng;
  std::string normal;
  std::optional<BiasState> bias;
  bool depositing = false;
};

/// One Langevin path-integral trajectory, integrated with the BAOAB splitting
/// on Cartesian bead coordinates.
class Sampler {
 public:
  using SampleCallback = std::function<void(const TrajectorySample&, const BeadConfiguration&)>;

  Sampler(SystemSpec spec, IntegratorSpec integ, BeadConfiguration init,
          std::optional<BiasState> bias = std::nullopt);
  static Sampler restore(SystemSpec spec, IntegratorSpec integ, const SamplerState& state);

  const SystemSpec& system() const { return spec_; }
  const IntegratorSpec& integrator() const { return integ_; }
  const BeadConfiguration& config() const { return config_; }
  std::int64_t step() const { return step_; }
  const BiasState* bias() const { return bias_ ? &*bias_ : nullptr; }
  bool depositing() const { return depositing_; }

  /// Build phase: deposit a Gaussian every `stride` steps (on a step-count multiple).
  void set_depositing(bool on);

  /// Advances `steps` steps; `on_sample` fires whenever the global step count
  /// is a multiple of sample_stride.
  void run(std::int64_t steps, const SampleCallback& on_sample = {});
  void advance();

  TrajectorySample sample() const;
  double energy() const { return energy_; }
  double kinetic_energy() const;

  SamplerState state() const;

 private:
  void compute_forces();
  void check_finite() const;

  SystemSpec spec_;
  IntegratorSpec integ_;
  BeadConfiguration config_;
  std::optional<BiasState> bias_;
  bool depositing_ = false;
  std::int64_t step_ = 0;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::vector<double> force_;
  std::vector<double> grad_v_;
  double energy_ = 0.0;
  double c1_ = 1.0, c2_ = 0.0;
};

/// Two-phase protocol: `build_steps` with deposition (skipped without a bias),
/// then `sample_steps` with the bias frozen.
void equilibrate_then_sample(Sampler& sampler, std::int64_t build_steps,
                             std::int64_t sample_steps, const Sampler::SampleCallback& on_sample);

}  // namespace qsym
