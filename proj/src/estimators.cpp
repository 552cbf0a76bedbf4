#include "estimators.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "error.hpp"

namespace qsym {

namespace {

// Scalar channel layout.
enum : std::size_t {
  kWeight = 0,         // w
  kExchange,           // w e^{-beta s}
  kEnergyOO,           // w E_oo
  kEnergyConnected,    // w e^{-beta s} E_O
  kPairOO,             // w r
  kPairConnected,      // w e^{-beta s} r
  kScalarChannels
};

double fermi(double x) {
  // 1 / (1 + e^x) without overflow
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

}  // namespace

double characteristic_length(const SystemSpec& spec) {
  if (const auto* h = std::get_if<IsotropicHarmonic>(&spec.potential))
    return 1.0 / std::sqrt(spec.mass * h->omega * spec.beta);
  if (const auto* q = std::get_if<QuantumDot>(&spec.potential)) return q->dot.length0();
  return std::sqrt(spec.beta * spec.hbar * spec.hbar / spec.mass);
}

EstimatorSpec EstimatorSpec::defaults_for(const SystemSpec& spec) {
  const double l = characteristic_length(spec);
  EstimatorSpec e;
  e.pair.bins = 200;
  e.pair.max = 6.0 * l;
  e.density = spec.dim >= 2;
  e.density_grid.bins = 128;
  e.density_grid.half_width = 4.0 * l;
  return e;
}

void EstimatorSpec::validate(const SystemSpec& spec) const {
  if (pair_distribution && (pair.bins == 0 || !(pair.max > 0.0)))
    throw InvalidArgument("estimators: pair histogram needs bins > 0 and a positive range");
  if (density) {
    if (spec.dim < 2) throw InvalidArgument("estimators: density grid needs dim >= 2");
    if (density_grid.bins == 0 || !(density_grid.half_width > 0.0))
      throw InvalidArgument("estimators: density grid needs bins > 0 and a positive range");
  }
  if (min_blocks < 2) throw InvalidArgument("estimators: min_blocks must be >= 2");
  if (block_capacity < 2 * min_blocks || histogram_block_capacity < 2 * min_blocks)
    throw InvalidArgument("estimators: block capacity must be at least 2 * min_blocks");
}

Analysis::Analysis(const SystemSpec& spec, const EstimatorSpec& estimators)
    : spec_(spec), est_(estimators) {
  spec_.validate();
  est_.validate(spec_);
  scalars_ = BlockedSums(kScalarChannels, est_.block_capacity);
  if (est_.pair_distribution) {
    const std::size_t n = est_.pair.bins + 1;
    pair_ = BlockedSums(2 * n + 2, est_.histogram_block_capacity);
    pair_w_.assign(n, 0.0);
    pair_w2_.assign(n, 0.0);
  }
  if (est_.density) {
    const std::size_t n = est_.density_grid.bins * est_.density_grid.bins + 1;
    density_ = BlockedSums(2 * n + 2, est_.histogram_block_capacity);
    density_w_.assign(n, 0.0);
    density_w2_.assign(n, 0.0);
  }
}

void Analysis::add(const TrajectorySample& sample, const BeadConfiguration* snapshot) {
  const double beta = spec_.beta;
  const double log_w = beta * (sample.bias_value + sample.wall_value);
  const double log_x = log_w - beta * sample.s;
  if (!std::isfinite(log_w) || !std::isfinite(log_x))
    throw NumericalAbort(fmt::format("analysis: non-finite weight at step {}", sample.step));
  const double top = std::max(log_w, log_x);

  scalars_.raise_reference(top);
  {
    const double ref = scalars_.log_reference();
    const double m0 = std::exp(log_w - ref);
    const double m1 = std::exp(log_x - ref);
    const double dim = spec_.dim;
    const double e_oo = sample.potential_energy + dim / beta + sample.virial_oo;
    const double e_con = sample.potential_energy + dim / (2.0 * beta) + sample.virial_connected;
    auto cur = scalars_.current();
    cur[kWeight] += m0;
    cur[kExchange] += m1;
    cur[kEnergyOO] += m0 * e_oo;
    cur[kEnergyConnected] += m1 * e_con;
    cur[kPairOO] += m0 * sample.pair_distance;
    cur[kPairConnected] += m1 * sample.pair_distance;
    scalars_.commit_sample();
  }
  log_w_.add(log_w);
  log_w2_.add(2.0 * log_w);

  if (snapshot == nullptr || (!est_.pair_distribution && !est_.density)) return;
  snapshot->check_shape(spec_);
  ++snapshots_;
  const int P = spec_.num_beads;

  if (est_.pair_distribution) {
    const double f = pair_.raise_reference(top);
    if (f != 1.0)
      for (std::size_t k = 0; k < pair_w_.size(); ++k) {
        pair_w_[k] *= f;
        pair_w2_[k] *= f * f;
      }
    const double ref = pair_.log_reference();
    const double m0 = std::exp(log_w - ref);
    const double m1 = std::exp(log_x - ref);
    const std::size_t n = est_.pair.bins + 1;
    const double inv_width = static_cast<double>(est_.pair.bins) / est_.pair.max;
    auto cur = pair_.current();
    for (int i = 0; i < P; ++i) {
      const auto a = snapshot->position(0, i);
      const auto b = snapshot->position(1, i);
      double r2 = 0.0;
      for (int d = 0; d < spec_.dim; ++d) r2 += (a[d] - b[d]) * (a[d] - b[d]);
      const double x = std::sqrt(r2) * inv_width;
      const std::size_t k = x < static_cast<double>(est_.pair.bins)
                                ? static_cast<std::size_t>(x)
                                : est_.pair.bins;
      cur[k] += m0;
      cur[n + k] += m1;
      pair_w_[k] += m0;
      pair_w2_[k] += m0 * m0;
    }
    cur[2 * n] += P * m0;
    cur[2 * n + 1] += P * m1;
    pair_.commit_sample();
  }

  if (est_.density) {
    const double f = density_.raise_reference(top);
    if (f != 1.0)
      for (std::size_t k = 0; k < density_w_.size(); ++k) {
        density_w_[k] *= f;
        density_w2_[k] *= f * f;
      }
    const double ref = density_.log_reference();
    const double m0 = std::exp(log_w - ref);
    const double m1 = std::exp(log_x - ref);
    const std::size_t bins = est_.density_grid.bins;
    const std::size_t overflow = bins * bins;
    const std::size_t n = overflow + 1;
    const double hw = est_.density_grid.half_width;
    const double inv_cell = static_cast<double>(bins) / (2.0 * hw);
    auto cur = density_.current();
    for (int p = 0; p < 2; ++p)
      for (int i = 0; i < P; ++i) {
        const auto r = snapshot->position(p, i);
        const double x = (r[0] + hw) * inv_cell;
        const double y = (r[1] + hw) * inv_cell;
        std::size_t k = overflow;
        if (x >= 0.0 && y >= 0.0 && x < static_cast<double>(bins) && y < static_cast<double>(bins))
          k = static_cast<std::size_t>(x) * bins + static_cast<std::size_t>(y);
        cur[k] += m0;
        cur[n + k] += m1;
        density_w_[k] += m0;
        density_w2_[k] += m0 * m0;
      }
    cur[2 * n] += 2 * P * m0;
    cur[2 * n + 1] += 2 * P * m1;
    density_.commit_sample();
  }
}

void Analysis::merge_kish(std::vector<double>& s1, std::vector<double>& s2,
                          const BlockedSums& mine, const std::vector<double>& o1,
                          const std::vector<double>& o2, const BlockedSums& theirs) {
  if (theirs.samples() == 0) return;
  if (mine.samples() == 0) {
    s1 = o1;
    s2 = o2;
    return;
  }
  const double ref = std::max(mine.log_reference(), theirs.log_reference());
  const double fm = std::exp(mine.log_reference() - ref);
  const double ft = std::exp(theirs.log_reference() - ref);
  for (std::size_t k = 0; k < s1.size(); ++k) {
    s1[k] = s1[k] * fm + o1[k] * ft;
    s2[k] = s2[k] * fm * fm + o2[k] * ft * ft;
  }
}

void Analysis::merge(const Analysis& other) {
  if (!(other.est_ == est_) || other.spec_.num_beads != spec_.num_beads ||
      other.spec_.dim != spec_.dim || other.spec_.beta != spec_.beta)
    throw InvalidArgument("analysis: cannot merge accumulators of different setups");
  scalars_.merge(other.scalars_);
  log_w_.merge(other.log_w_);
  log_w2_.merge(other.log_w2_);
  snapshots_ += other.snapshots_;
  if (est_.pair_distribution) {
    merge_kish(pair_w_, pair_w2_, pair_, other.pair_w_, other.pair_w2_, other.pair_);
    pair_.merge(other.pair_);
  }
  if (est_.density) {
    merge_kish(density_w_, density_w2_, density_, other.density_w_, other.density_w2_,
               other.density_);
    density_.merge(other.density_);
  }
}

double Analysis::effective_sample_size() const {
  if (sample_count() == 0) return 0.0;
  return std::exp(2.0 * log_w_.value() - log_w2_.value());
}

double Analysis::channel_sign(SymmetryChannel channel) {
  switch (channel) {
    case SymmetryChannel::Boson: return 1.0;
    case SymmetryChannel::Fermion: return -1.0;
    case SymmetryChannel::Distinguishable: return 0.0;
  }
  return 0.0;
}

Estimate Analysis::mean_weight(SymmetryChannel channel) const {
  if (channel == SymmetryChannel::Distinguishable) return {1.0, 0.0};
  const double c = channel_sign(channel);
  return block_jackknife(
      scalars_,
      [c](std::span<const double> s, std::span<double> out) {
        out[0] = (s[kWeight] + c * s[kExchange]) / s[kWeight];
      },
      1, est_.min_blocks)[0];
}

bool Analysis::sign_collapsed(SymmetryChannel channel) const {
  if (channel == SymmetryChannel::Distinguishable) return false;
  const Estimate w = mean_weight(channel);
  return !(std::abs(w.value) >= 2.0 * w.error);
}

void Analysis::check_sign(SymmetryChannel channel) const {
  if (sample_count() == 0) throw InvalidArgument("analysis: no samples");
  if (!sign_collapsed(channel)) return;
  const Estimate w = mean_weight(channel);
  throw SignCollapse(fmt::format("sign collapse in the {} channel: <W> = {:.6g} +/- {:.3g}",
                                 to_string(channel), w.value, w.error),
                     w.value, w.error);
}

Estimate Analysis::weighted_average(Observable observable, SymmetryChannel channel) const {
  check_sign(channel);
  const double c = channel_sign(channel);
  std::size_t a = 0, b = 0;
  switch (observable) {
    case Observable::Unity: a = kWeight, b = kExchange; break;
    case Observable::Energy: a = kEnergyOO, b = kEnergyConnected; break;
    case Observable::PairDistance: a = kPairOO, b = kPairConnected; break;
  }
  return block_jackknife(
      scalars_,
      [=](std::span<const double> s, std::span<double> out) {
        out[0] = (s[a] + c * s[b]) / (s[kWeight] + c * s[kExchange]);
      },
      1, est_.min_blocks)[0];
}

Estimate Analysis::exchange_ratio() const {
  if (sample_count() == 0) throw InvalidArgument("analysis: no samples");
  return block_jackknife(
      scalars_,
      [](std::span<const double> s, std::span<double> out) {
        out[0] = s[kExchange] / s[kWeight];
      },
      1, est_.min_blocks)[0];
}

Estimate Analysis::fermion_energy_via_free_energy() const {
  check_sign(SymmetryChannel::Boson);
  const double beta = spec_.beta;
  const Estimate r = exchange_ratio();
  if (!(r.value < 1.0))
    throw InvalidArgument("free-energy route: Z_O/Z_oo >= 1 leaves no fermionic state");
  return block_jackknife(
      scalars_,
      [beta](std::span<const double> s, std::span<double> out) {
        const double e_b = (s[kEnergyOO] + s[kEnergyConnected]) / (s[kWeight] + s[kExchange]);
        const double ratio = s[kExchange] / s[kWeight];
        out[0] = e_b - std::log((1.0 - ratio) / (1.0 + ratio)) / beta;
      },
      1, est_.min_blocks)[0];
}

HistogramResult Analysis::pair_distribution(SymmetryChannel channel) const {
  if (!est_.pair_distribution) throw InvalidArgument("analysis: pair distribution not enabled");
  if (snapshots_ == 0) throw InvalidArgument("analysis: no snapshots for the pair distribution");
  check_sign(channel);
  const double c = channel_sign(channel);
  const std::size_t bins = est_.pair.bins;
  const std::size_t n = bins + 1;
  const double width = est_.pair.max / static_cast<double>(bins);
  auto est = block_jackknife(
      pair_,
      [=](std::span<const double> s, std::span<double> out) {
        const double norm = s[2 * n] + c * s[2 * n + 1];
        for (std::size_t k = 0; k < bins; ++k) out[k] = (s[k] + c * s[n + k]) / (norm * width);
        out[bins] = (s[bins] + c * s[n + bins]) / norm;
      },
      n, est_.min_blocks);
  HistogramResult h;
  h.bin_width = width;
  for (std::size_t k = 0; k < bins; ++k) {
    h.centers.push_back((static_cast<double>(k) + 0.5) * width);
    h.values.push_back(est[k].value);
    h.errors.push_back(est[k].error);
    h.effective_samples.push_back(pair_w2_[k] > 0.0 ? pair_w_[k] * pair_w_[k] / pair_w2_[k] : 0.0);
  }
  h.overflow = est[bins].value;
  return h;
}

GridResult Analysis::density_combination(double fermion_coeff, double boson_coeff) const {
  if (!est_.density) throw InvalidArgument("analysis: density grid not enabled");
  if (snapshots_ == 0) throw InvalidArgument("analysis: no snapshots for the density");
  if (fermion_coeff != 0.0) check_sign(SymmetryChannel::Fermion);
  const std::size_t bins = est_.density_grid.bins;
  const std::size_t cells = bins * bins;
  const std::size_t n = cells + 1;
  const double cell = 2.0 * est_.density_grid.half_width / static_cast<double>(bins);
  const double area = cell * cell;
  auto est = block_jackknife(
      density_,
      [=](std::span<const double> s, std::span<double> out) {
        const double norm_b = s[2 * n] + s[2 * n + 1];
        const double norm_f = s[2 * n] - s[2 * n + 1];
        for (std::size_t k = 0; k < cells; ++k) {
          const double rho_b = 2.0 * (s[k] + s[n + k]) / (norm_b * area);
          const double rho_f = fermion_coeff != 0.0 ? 2.0 * (s[k] - s[n + k]) / (norm_f * area) : 0.0;
          out[k] = fermion_coeff * rho_f + boson_coeff * rho_b;
        }
      },
      cells, est_.min_blocks);
  GridResult g;
  g.bins = bins;
  g.cell = cell;
  for (std::size_t k = 0; k < bins; ++k)
    g.centers.push_back(-est_.density_grid.half_width + (static_cast<double>(k) + 0.5) * cell);
  g.values.reserve(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    g.values.push_back(est[k].value);
    g.errors.push_back(est[k].error);
    g.effective_samples.push_back(
        density_w2_[k] > 0.0 ? density_w_[k] * density_w_[k] / density_w2_[k] : 0.0);
  }
  return g;
}

Estimate Analysis::density_integral(double fermion_coeff, double boson_coeff,
                                   std::span<const std::size_t> cells) const {
  if (!est_.density) throw InvalidArgument("analysis: density grid not enabled");
  if (snapshots_ == 0) throw InvalidArgument("analysis: no snapshots for the density");
  if (fermion_coeff != 0.0) check_sign(SymmetryChannel::Fermion);
  if (boson_coeff != 0.0) check_sign(SymmetryChannel::Boson);
  const std::size_t bins = est_.density_grid.bins;
  const std::size_t n = bins * bins + 1;
  for (std::size_t k : cells)
    if (k >= bins * bins) throw InvalidArgument("analysis: density cell index out of range");
  std::vector<std::size_t> picked(cells.begin(), cells.end());
  return block_jackknife(
      density_,
      [=](std::span<const double> s, std::span<double> out) {
        double plus = 0.0, minus = 0.0;
        for (std::size_t k : picked) {
          plus += s[k] + s[n + k];
          minus += s[k] - s[n + k];
        }
        const double norm_b = s[2 * n] + s[2 * n + 1];
        const double norm_f = s[2 * n] - s[2 * n + 1];
        out[0] = 2.0 * (boson_coeff * plus / norm_b + (fermion_coeff != 0.0 ? fermion_coeff * minus / norm_f : 0.0));
      },
      1, est_.min_blocks)[0];
}

GridResult Analysis::density(SymmetryChannel channel) const {
  if (!est_.density) throw InvalidArgument("analysis: density grid not enabled");
  if (snapshots_ == 0) throw InvalidArgument("analysis: no snapshots for the density");
  check_sign(channel);
  const double c = channel_sign(channel);
  const std::size_t bins = est_.density_grid.bins;
  const std::size_t cells = bins * bins;
  const std::size_t n = cells + 1;
  const double cell = 2.0 * est_.density_grid.half_width / static_cast<double>(bins);
  const double area = cell * cell;
  auto est = block_jackknife(
      density_,
      [=](std::span<const double> s, std::span<double> out) {
        const double norm = s[2 * n] + c * s[2 * n + 1];
        for (std::size_t k = 0; k < cells; ++k)
          out[k] = 2.0 * (s[k] + c * s[n + k]) / (norm * area);
      },
      cells, est_.min_blocks);
  GridResult g;
  g.bins = bins;
  g.cell = cell;
  for (std::size_t k = 0; k < bins; ++k)
    g.centers.push_back(-est_.density_grid.half_width + (static_cast<double>(k) + 0.5) * cell);
  g.values.reserve(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    g.values.push_back(est[k].value);
    g.errors.push_back(est[k].error);
    g.effective_samples.push_back(
        density_w2_[k] > 0.0 ? density_w_[k] * density_w_[k] / density_w2_[k] : 0.0);
  }
  return g;
}

// Bennett ---------------------------------------------------------------------

void BennettLeg::add(double s_value, double log_w) {
  // weights stay implicit until the first non-zero one arrives
  if (log_w != 0.0 && log_weight.empty()) log_weight.assign(s.size(), 0.0);
  s.push_back(s_value);
  if (!log_weight.empty()) log_weight.push_back(log_w);
}

double BennettLeg::effective_size() const {
  if (log_weight.empty()) return static_cast<double>(s.size());
  LogSumExp w, w2;
  for (double lw : log_weight) {
    w.add(lw);
    w2.add(2.0 * lw);
  }
  return std::exp(2.0 * w.value() - w2.value());
}

namespace {

/// Weighted mean of f(sign * (beta s + C)) over samples outside [skip_begin, skip_end).
double leg_mean(const BennettLeg& leg, double beta, double shift, double sign,
                std::size_t skip_begin = 0, std::size_t skip_end = 0) {
  const bool weighted = !leg.log_weight.empty();
  double max_lw = 0.0;
  if (weighted) {
    max_lw = -INFINITY;
    for (std::size_t k = 0; k < leg.s.size(); ++k)
      if (k < skip_begin || k >= skip_end) max_lw = std::max(max_lw, leg.log_weight[k]);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < leg.s.size(); ++k) {
    if (k >= skip_begin && k < skip_end) continue;
    const double w = weighted ? std::exp(leg.log_weight[k] - max_lw) : 1.0;
    num += w * fermi(sign * (beta * leg.s[k] + shift));
    den += w;
  }
  return num / den;
}

}  // namespace

BennettPoint bennett_at(const BennettLeg& oo, const BennettLeg& con, double beta, double shift,
                        std::size_t blocks) {
  const double a = leg_mean(oo, beta, shift, 1.0);
  const double b = leg_mean(con, beta, shift, -1.0);
  BennettPoint p;
  p.shift = shift;
  p.ratio = a / b * std::exp(shift);
  const double ea = jackknife_error(oo.s.size(), blocks, [&](std::size_t lo, std::size_t hi) {
    return std::log(leg_mean(oo, beta, shift, 1.0, lo, hi));
  });
  const double eb = jackknife_error(con.s.size(), blocks, [&](std::size_t lo, std::size_t hi) {
    return std::log(leg_mean(con, beta, shift, -1.0, lo, hi));
  });
  p.error = p.ratio * std::sqrt(ea * ea + eb * eb);
  return p;
}

BennettResult bennett_ratio(const BennettLeg& oo, const BennettLeg& con, double beta,
                            std::size_t blocks) {
  if (oo.s.size() < 2 || con.s.size() < 2)
    throw InvalidArgument("bennett: each leg needs at least two samples");
  if (!oo.log_weight.empty() && oo.log_weight.size() != oo.s.size())
    throw InvalidArgument("bennett: weight count differs from sample count");
  if (!con.log_weight.empty() && con.log_weight.size() != con.s.size())
    throw InvalidArgument("bennett: weight count differs from sample count");
  const double n_oo = oo.effective_size();
  const double n_con = con.effective_size();
  auto balance = [&](double shift) {
    return n_oo * leg_mean(oo, beta, shift, 1.0) - n_con * leg_mean(con, beta, shift, -1.0);
  };
  // balance is decreasing in C.
  double lo = -200.0, hi = 200.0;
  if (balance(lo) < 0.0 || balance(hi) > 0.0)
    throw NoOverlap("bennett: count balance has no root in [-200, 200]");
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (balance(mid) > 0.0 ? lo : hi) = mid;
  }
  BennettResult r;
  r.shift = 0.5 * (lo + hi);
  r.mean_fermi_distinguishable = leg_mean(oo, beta, r.shift, 1.0);
  r.mean_fermi_connected = leg_mean(con, beta, r.shift, -1.0);
  if (r.mean_fermi_distinguishable < 1e-12 && r.mean_fermi_connected < 1e-12)
    throw NoOverlap(
        "bennett: the two s-distributions do not overlap; bias one or both legs with metadynamics");
  const BennettPoint centre = bennett_at(oo, con, beta, r.shift, blocks);
  r.ratio = centre.ratio;
  r.error = centre.error;
  r.plateau = true;
  for (int k = -5; k <= 5; ++k) {
    const double shift = r.shift + 0.2 * k;
    BennettPoint p = k == 0 ? centre : bennett_at(oo, con, beta, shift, blocks);
    if (std::abs(p.ratio - r.ratio) >= r.error) r.plateau = false;
    r.scan.push_back(p);
  }
  return r;
}

double fermion_energy_via_free_energy(double boson_energy, double ratio, double beta) {
  if (!(ratio < 1.0))
    throw InvalidArgument(fmt::format(
        "free-energy route: Z_O/Z_oo = {} >= 1 makes the fermionic partition function non-positive",
        ratio));
  if (!(ratio > -1.0)) throw InvalidArgument("free-energy route: Z_O/Z_oo must be > -1");
  return boson_energy - std::log((1.0 - ratio) / (1.0 + ratio)) / beta;
}

Estimate fermion_energy_via_free_energy(const Estimate& boson_energy, const Estimate& ratio,
                                        double beta) {
  const double value = fermion_energy_via_free_energy(boson_energy.value, ratio.value, beta);
  const double slope = 2.0 / ((1.0 - ratio.value * ratio.value) * beta);
  return {value, std::hypot(boson_energy.error, slope * ratio.error)};
}

}  // namespace qsym
