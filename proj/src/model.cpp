#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "error.hpp"

namespace qsym {

const char* to_string(Topology topo) {
  return topo == Topology::Distinguishable ? "distinguishable" : "connected";
}

const char* to_string(SymmetryChannel channel) {
  switch (channel) {
    case SymmetryChannel::Boson: return "boson";
    case SymmetryChannel::Fermion: return "fermion";
    case SymmetryChannel::Distinguishable: return "distinguishable";
  }
  return "?";
}

void SystemSpec::validate() const {
  if (num_beads < 2) throw InvalidArgument(fmt::format("system: P = {} must be >= 2", num_beads));
  if (dim < 1 || dim > 3) throw InvalidArgument(fmt::format("system: dim = {} not in 1..3", dim));
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("system: beta must be > 0");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("system: mass must be > 0");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidArgument("system: hbar must be > 0");
  const double k = spring_constant();
  if (!std::isfinite(k) || !(k > 0.0))
    throw InvalidArgument("system: spring constant is not finite and positive");
  if (const auto* h = std::get_if<IsotropicHarmonic>(&potential)) {
    if (!(h->omega > 0.0)) throw InvalidArgument("harmonic potential: omega must be > 0");
    if (h->mass != mass) throw InvalidArgument("harmonic potential: mass differs from system mass");
  }
  if (const auto* q = std::get_if<QuantumDot>(&potential)) {
    q->dot.validate();
    if (dim != 2) throw InvalidArgument("quantum dot requires dim = 2");
  }
}

BeadConfiguration::BeadConfiguration(int num_beads, int dim, bool with_momenta)
    : num_beads_(num_beads), dim_(dim) {
  if (num_beads < 1 || dim < 1) throw InvalidArgument("bead configuration: empty shape");
  positions_.assign(2 * static_cast<std::size_t>(num_beads) * dim, 0.0);
  if (with_momenta) momenta_.assign(positions_.size(), 0.0);
}

void BeadConfiguration::enable_momenta() {
  if (momenta_.empty()) momenta_.assign(positions_.size(), 0.0);
}

bool BeadConfiguration::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(positions_.begin(), positions_.end(), finite) &&
         std::all_of(momenta_.begin(), momenta_.end(), finite);
}

void BeadConfiguration::check_shape(const SystemSpec& spec) const {
  if (num_beads_ != spec.num_beads || dim_ != spec.dim)
    throw InvalidArgument(fmt::format("configuration shape 2x{}x{} does not match system 2x{}x{}",
                                      num_beads_, dim_, spec.num_beads, spec.dim));
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace

double spring_energy(const BeadConfiguration& config, const SystemSpec& spec, Topology topo) {
  config.check_shape(spec);
  const int P = spec.num_beads;
  double sum = 0.0;
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i + 1 < P; ++i)
      sum += squared_distance(config.position(n, i + 1), config.position(n, i));
  if (topo == Topology::Distinguishable) {
    sum += squared_distance(config.position(0, 0), config.position(0, P - 1));
    sum += squared_distance(config.position(1, 0), config.position(1, P - 1));
  } else {
    sum += squared_distance(config.position(1, 0), config.position(0, P - 1));
    sum += squared_distance(config.position(0, 0), config.position(1, P - 1));
  }
  return spec.spring_constant() * sum;
}

double potential_energy(const BeadConfiguration& config, const SystemSpec& spec) {
  config.check_shape(spec);
  double sum = 0.0;
  for (int i = 0; i < spec.num_beads; ++i)
    sum += evaluate(spec.potential, config.position(0, i), config.position(1, i));
  if (!std::isfinite(sum)) throw NumericalAbort("potential energy is not finite");
  return sum / spec.num_beads;
}

double collective_variable_s(const BeadConfiguration& config, const SystemSpec& spec) {
  config.check_shape(spec);
  const int last = spec.num_beads - 1;
  const auto a1 = config.position(0, 0);
  const auto aP = config.position(0, last);
  const auto b1 = config.position(1, 0);
  const auto bP = config.position(1, last);
  return spec.spring_constant() * (squared_distance(b1, aP) + squared_distance(a1, bP) -
                                   squared_distance(a1, aP) - squared_distance(b1, bP));
}

void add_cv_gradient(const BeadConfiguration& config, const SystemSpec& spec, double scale,
                     std::span<double> out) {
  const int last = spec.num_beads - 1;
  const int dim = spec.dim;
  const double c = 2.0 * spec.spring_constant() * scale;
  const auto a1 = config.position(0, 0);
  const auto aP = config.position(0, last);
  const auto b1 = config.position(1, 0);
  const auto bP = config.position(1, last);
  double* ga1 = out.data() + config.offset(0, 0);
  double* gaP = out.data() + config.offset(0, last);
  double* gb1 = out.data() + config.offset(1, 0);
  double* gbP = out.data() + config.offset(1, last);
  for (int d = 0; d < dim; ++d) {
    ga1[d] += c * (aP[d] - bP[d]);
    gaP[d] += c * (a1[d] - b1[d]);
    gb1[d] += c * (bP[d] - aP[d]);
    gbP[d] += c * (b1[d] - a1[d]);
  }
}

std::vector<double> cv_gradient(const BeadConfiguration& config, const SystemSpec& spec) {
  config.check_shape(spec);
  std::vector<double> grad(config.positions().size(), 0.0);
  add_cv_gradient(config, spec, 1.0, grad);
  return grad;
}

double SignedLog::value() const {
  if (sign == 0) return 0.0;
  if (log_abs > std::log(std::numeric_limits<double>::max()))
    throw NumericalAbort(fmt::format("signed-log value exp({}) overflows a double", log_abs));
  return sign * std::exp(log_abs);
}

SignedLog symmetry_weight(double s, double beta, SymmetryChannel channel) {
  const double x = beta * s;
  if (std::isnan(x)) throw NumericalAbort("symmetry weight: beta * s is NaN");
  switch (channel) {
    case SymmetryChannel::Boson: {
      // log(1 + e^{-x})
      const double log_abs = x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
      return {1, log_abs};
    }
    case SymmetryChannel::Fermion: {
      if (x == 0.0) return {0, -INFINITY};
      if (x > 0.0) return {1, std::log(-std::expm1(-x))};
      // 1 - e^{-x} = -(e^{-x})(1 - e^{x})
      return {-1, -x + std::log(-std::expm1(x))};
    }
    case SymmetryChannel::Distinguishable: break;
  }
  throw InvalidArgument("symmetry weight requires the Boson or Fermion channel");
}

}  // namespace qsym
