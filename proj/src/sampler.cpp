#include "sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "error.hpp"

namespace qsym {

double Walls::value(double s) const {
  if (!enabled()) return 0.0;
  if (s < s_min) return 0.5 * k * (s - s_min) * (s - s_min);
  if (s > s_max) return 0.5 * k * (s - s_max) * (s - s_max);
  return 0.0;
}

double Walls::derivative(double s) const {
  if (!enabled()) return 0.0;
  if (s < s_min) return k * (s - s_min);
  if (s > s_max) return k * (s - s_max);
  return 0.0;
}

void IntegratorSpec::validate() const {
  if (!(timestep > 0.0) || !std::isfinite(timestep))
    throw InvalidArgument("integrator: timestep must be positive");
  if (friction >= 0.0 && !std::isfinite(friction))
    throw InvalidArgument("integrator: friction must be finite");
  if (n_steps < 0) throw InvalidArgument("integrator: n_steps must be >= 0");
  if (sample_stride < 1) throw InvalidArgument("integrator: sample_stride must be >= 1");
  if (walls.k < 0.0) throw InvalidArgument("integrator: wall_k must be >= 0");
  if (walls.enabled() && !(walls.s_min < walls.s_max))
    throw InvalidArgument("integrator: walls need s_min < s_max");
}

double total_force(const BeadConfiguration& config, const SystemSpec& spec, Topology topo,
                   const BiasState* bias, const Walls& walls, std::span<double> force,
                   std::span<double> potential_gradient) {
  const int P = spec.num_beads;
  const int dim = spec.dim;
  const double k = spec.spring_constant();
  const double inv_p = 1.0 / P;
  std::fill(force.begin(), force.end(), 0.0);
  const bool keep_grad = !potential_gradient.empty();

  double u = 0.0;
  double g1[3], g2[3];
  for (int i = 0; i < P; ++i) {
    const auto r1 = config.position(0, i);
    const auto r2 = config.position(1, i);
    const double v = evaluate_with_gradient(spec.potential, r1, r2, {g1, std::size_t(dim)},
                                            {g2, std::size_t(dim)});
    u += v * inv_p;
    double* f1 = force.data() + config.offset(0, i);
    double* f2 = force.data() + config.offset(1, i);
    for (int d = 0; d < dim; ++d) {
      f1[d] -= g1[d] * inv_p;
      f2[d] -= g2[d] * inv_p;
    }
    if (keep_grad) {
      std::copy(g1, g1 + dim, potential_gradient.data() + config.offset(0, i));
      std::copy(g2, g2 + dim, potential_gradient.data() + config.offset(1, i));
    }
  }

  // Links i -> i+1 inside each particle, then the two closures.
  auto link = [&](int na, int ia, int nb, int ib) {
    const auto a = config.position(na, ia);
    const auto b = config.position(nb, ib);
    double* fa = force.data() + config.offset(na, ia);
    double* fb = force.data() + config.offset(nb, ib);
    for (int d = 0; d < dim; ++d) {
      const double diff = b[d] - a[d];
      u += k * diff * diff;
      fa[d] += 2.0 * k * diff;
      fb[d] -= 2.0 * k * diff;
    }
  };
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i + 1 < P; ++i) link(n, i, n, i + 1);
  if (topo == Topology::Distinguishable) {
    link(0, P - 1, 0, 0);
    link(1, P - 1, 1, 0);
  } else {
    link(0, P - 1, 1, 0);
    link(1, P - 1, 0, 0);
  }

  const bool biased = bias != nullptr && !bias->empty();
  if (biased || walls.enabled()) {
    const double s = collective_variable_s(config, spec);
    double dv = walls.derivative(s);
    u += walls.value(s);
    if (biased) {
      u += bias->value(s);
      dv += bias->derivative(s);
    }
    if (dv != 0.0) add_cv_gradient(config, spec, -dv, force);
  }
  return u;
}

double total_energy(const BeadConfiguration& config, const SystemSpec& spec, Topology topo,
                    const BiasState* bias, const Walls& walls) {
  double u = spring_energy(config, spec, topo) + potential_energy(config, spec);
  if ((bias != nullptr && !bias->empty()) || walls.enabled()) {
    const double s = collective_variable_s(config, spec);
    u += walls.value(s);
    if (bias != nullptr) u += bias->value(s);
  }
  return u;
}

TrajectorySample measure(const BeadConfiguration& config, const SystemSpec& spec,
                         const BiasState* bias, const Walls& walls,
                         std::span<const double> potential_gradient, std::int64_t step) {
  const int P = spec.num_beads;
  const int dim = spec.dim;
  TrajectorySample t;
  t.step = step;
  t.s = collective_variable_s(config, spec);
  t.bias_value = bias != nullptr ? bias->value(t.s) : 0.0;
  t.wall_value = walls.value(t.s);
  t.potential_energy = potential_energy(config, spec);
  t.spring_energy_oo = spring_energy(config, spec, Topology::Distinguishable);

  double centroid[2][3] = {};
  for (int n = 0; n < 2; ++n) {
    for (int i = 0; i < P; ++i) {
      const auto r = config.position(n, i);
      for (int d = 0; d < dim; ++d) centroid[n][d] += r[d];
    }
    for (int d = 0; d < dim; ++d) centroid[n][d] /= P;
  }
  double com[3] = {};
  for (int d = 0; d < dim; ++d) com[d] = 0.5 * (centroid[0][d] + centroid[1][d]);

  double vir_oo = 0.0, vir_con = 0.0, pair = 0.0;
  for (int i = 0; i < P; ++i) {
    double r2 = 0.0;
    for (int n = 0; n < 2; ++n) {
      const auto r = config.position(n, i);
      const double* g = potential_gradient.data() + config.offset(n, i);
      for (int d = 0; d < dim; ++d) {
        vir_oo += (r[d] - centroid[n][d]) * g[d];
        vir_con += (r[d] - com[d]) * g[d];
      }
    }
    const auto a = config.position(0, i);
    const auto b = config.position(1, i);
    for (int d = 0; d < dim; ++d) r2 += (a[d] - b[d]) * (a[d] - b[d]);
    pair += std::sqrt(r2);
  }
  t.virial_oo = vir_oo / (2.0 * P);
  t.virial_connected = vir_con / (2.0 * P);
  t.pair_distance = pair / P;
  return t;
}

BeadConfiguration initial_configuration(const SystemSpec& spec, std::uint64_t seed) {
  spec.validate();
  BeadConfiguration config(spec, true);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;

  double width = 0.0;
  double centers[2][3] = {};
  if (const auto* q = std::get_if<QuantumDot>(&spec.potential)) {
    const double l0 = q->dot.length0();
    width = 0.5 * l0;
    centers[0][0] = -0.5 * l0;
    centers[1][0] = 0.5 * l0;
  } else if (const auto* h = std::get_if<IsotropicHarmonic>(&spec.potential)) {
    width = 1.0 / std::sqrt(spec.mass * h->omega * spec.beta);
  } else {
    width = std::sqrt(spec.beta / (spec.mass * spec.num_beads)) * spec.hbar;
  }
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < spec.num_beads; ++i) {
      auto r = config.position(n, i);
      for (int d = 0; d < spec.dim; ++d) r[d] = centers[n][d] + width * normal(rng);
    }
  const double sigma_p = std::sqrt(spec.mass / spec.beta);
  for (double& p : config.momenta()) p = sigma_p * normal(rng);
  return config;
}

Sampler::Sampler(SystemSpec spec, IntegratorSpec integ, BeadConfiguration init,
                 std::optional<BiasState> bias)
    : spec_(std::move(spec)), integ_(integ), config_(std::move(init)), bias_(std::move(bias)) {
  spec_.validate();
  integ_.validate();
  config_.check_shape(spec_);
  if (!config_.has_momenta()) config_.enable_momenta();
  if ((bias_ || integ_.walls.enabled()) && integ_.topology != Topology::Distinguishable)
    throw ConfigError("sampler: bias and walls are defined on the distinguishable ensemble only");
  if (!config_.all_finite()) throw InvalidArgument("sampler: initial configuration is not finite");
  rng_.seed(integ_.seed);
  const double gdt = integ_.effective_friction() * integ_.timestep;
  c1_ = std::exp(-gdt);
  c2_ = std::sqrt(std::max(0.0, 1.0 - c1_ * c1_));
  force_.assign(spec_.coordinate_count(), 0.0);
  grad_v_.assign(spec_.coordinate_count(), 0.0);
  compute_forces();
}

Sampler Sampler::restore(SystemSpec spec, IntegratorSpec integ, const SamplerState& state) {
  Sampler s(std::move(spec), integ, state.config, state.bias);
  s.step_ = state.step;
  s.depositing_ = state.depositing && s.bias_.has_value();
  std::istringstream rng(state.rng);
  rng >> s.rng_;
  std::istringstream normal(state.normal);
  normal >> s.normal_;
  if (rng.fail() || normal.fail()) throw IoError("sampler: corrupt RNG state in checkpoint");
  return s;
}

SamplerState Sampler::state() const {
  SamplerState st;
  st.config = config_;
  st.step = step_;
  std::ostringstream rng, normal;
  rng << rng_;
  normal.precision(17);
  normal << normal_;
  st.rng = rng.str();
  st.normal = normal.str();
  st.bias = bias_;
  st.depositing = depositing_;
  return st;
}

void Sampler::set_depositing(bool on) {
  if (on && !bias_) throw ConfigError("sampler: deposition requested without metadynamics");
  depositing_ = on;
}

void Sampler::compute_forces() {
  energy_ = total_force(config_, spec_, integ_.topology, bias(), integ_.walls, force_, grad_v_);
}

void Sampler::check_finite() const {
  if (std::isfinite(energy_) && config_.all_finite()) return;
  const auto pos = config_.positions();
  const auto mom = config_.momenta();
  std::size_t bad = 0;
  while (bad < pos.size() && std::isfinite(pos[bad]) && std::isfinite(mom[bad])) ++bad;
  const std::size_t per_particle = static_cast<std::size_t>(spec_.num_beads) * spec_.dim;
  if (bad < pos.size())
    throw NumericalAbort(fmt::format("non-finite coordinate at step {}: particle {}, bead {}",
                                     step_, bad / per_particle + 1,
                                     (bad % per_particle) / spec_.dim + 1));
  throw NumericalAbort(fmt::format("non-finite energy at step {}", step_));
}

void Sampler::advance() {
  const double dt = integ_.timestep;
  const double half_kick = 0.5 * dt;
  const double half_drift = 0.5 * dt / spec_.mass;
  const double noise = c2_ * std::sqrt(spec_.mass / spec_.beta);
  auto q = config_.positions();
  auto p = config_.momenta();
  const std::size_t n = q.size();

  for (std::size_t k = 0; k < n; ++k) {
    p[k] += half_kick * force_[k];
    q[k] += half_drift * p[k];
  }
  if (c1_ < 1.0)
    for (std::size_t k = 0; k < n; ++k) p[k] = c1_ * p[k] + noise * normal_(rng_);
  for (std::size_t k = 0; k < n; ++k) q[k] += half_drift * p[k];
  compute_forces();
  for (std::size_t k = 0; k < n; ++k) p[k] += half_kick * force_[k];
  ++step_;

  if (depositing_ && step_ % bias_->params().stride == 0) {
    bias_->deposit(collective_variable_s(config_, spec_), spec_.beta);
    compute_forces();
  }
  check_finite();
}

void Sampler::run(std::int64_t steps, const SampleCallback& on_sample) {
  for (std::int64_t k = 0; k < steps; ++k) {
    advance();
    if (on_sample && step_ % integ_.sample_stride == 0) on_sample(sample(), config_);
  }
}

TrajectorySample Sampler::sample() const {
  return measure(config_, spec_, bias(), integ_.walls, grad_v_, step_);
}

double Sampler::kinetic_energy() const {
  double sum = 0.0;
  for (double p : config_.momenta()) sum += p * p;
  return 0.5 * sum / spec_.mass;
}

void equilibrate_then_sample(Sampler& sampler, std::int64_t build_steps,
                             std::int64_t sample_steps, const Sampler::SampleCallback& on_sample) {
  if (build_steps < 0 || sample_steps < 0)
    throw InvalidArgument("equilibrate_then_sample: step counts must be >= 0");
  if (sampler.bias() != nullptr && build_steps > 0) {
    sampler.set_depositing(true);
    sampler.run(build_steps);
  }
  if (sampler.bias() != nullptr) sampler.set_depositing(false);
  sampler.run(sample_steps, on_sample);
}

}  // namespace qsym
