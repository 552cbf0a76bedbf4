#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "accumulators.hpp"
#include "model.hpp"
#include "sample.hpp"

namespace qsym {

/// Length scale used for default histogram ranges: 1/sqrt(m omega beta) for
/// the harmonic toy, l0 for the dot, the thermal length otherwise.
double characteristic_length(const SystemSpec& spec);

struct HistogramSpec {
  std::size_t bins = 200;
  double max = 1.0;  // pair distance in [0, max)
};

struct DensitySpec {
  std::size_t bins = 128;  // per axis
  double half_width = 1.0;  // grid covers [-half_width, half_width]^2
};

struct EstimatorSpec {
  bool pair_distribution = true;
  HistogramSpec pair;
  bool density = false;
  DensitySpec density_grid;
  std::size_t block_capacity = 256;
  std::size_t histogram_block_capacity = 128;
  std::size_t min_blocks = 32;

  /// 200 bins over [0, 6 l) and 128 x 128 over [-4 l, 4 l]^2.
  static EstimatorSpec defaults_for(const SystemSpec& spec);
  void validate(const SystemSpec& spec) const;

  friend bool operator==(const EstimatorSpec& a, const EstimatorSpec& b) {
    return a.pair_distribution == b.pair_distribution && a.pair.bins == b.pair.bins &&
           a.pair.max == b.pair.max && a.density == b.density &&
           a.density_grid.bins == b.density_grid.bins &&
           a.density_grid.half_width == b.density_grid.half_width &&
           a.block_capacity == b.block_capacity &&
           a.histogram_block_capacity == b.histogram_block_capacity &&
           a.min_blocks == b.min_blocks;
  }
};

enum class Observable { Unity, Energy, PairDistance };

struct HistogramResult {
  double bin_width = 0.0;
  std::vector<double> centers;
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<double> effective_samples;
  double overflow = 0.0;  // normalized weight beyond the last bin
};

/// Row-major over x: index = ix * bins + iy.
struct GridResult {
  std::size_t bins = 0;
  double cell = 0.0;
  std::vector<double> centers;
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<double> effective_samples;

  double value(std::size_t ix, std::size_t iy) const { return values[ix * bins + iy]; }
  double error(std::size_t ix, std::size_t iy) const { return errors[ix * bins + iy]; }
};

/// Streaming weighted estimators over samples of the distinguishable ensemble.
///
/// Every sample carries the static reweighting factor exp(beta (V_bias + V_wall))
/// of a frozen bias. Boson and fermion averages follow from the same sums via
/// W_I = 1 +/- exp(-beta s):
///     <O>_I = <O W_I>_oo / <W_I>_oo.
/// Read-outs for a channel whose <W_I> is consistent with zero throw SignCollapse.
class Analysis {
 public:
  Analysis(const SystemSpec& spec, const EstimatorSpec& estimators);

  /// `snapshot` feeds the pair-distribution and density histograms; samples
  /// without one only update the scalar estimators.
  void add(const TrajectorySample& sample, const BeadConfiguration* snapshot = nullptr);
  void merge(const Analysis& other);

  const SystemSpec& system() const { return spec_; }
  const EstimatorSpec& estimators() const { return est_; }
  std::size_t sample_count() const { return scalars_.samples(); }
  std::size_t snapshot_count() const { return snapshots_; }
  /// Kish effective sample size of the reweighting factors.
  double effective_sample_size() const;

  /// <W_I>_oo relative to the reweighted distinguishable ensemble.
  Estimate mean_weight(SymmetryChannel channel) const;
  /// Throws SignCollapse if |<W_I>| < 2 stderr.
  void check_sign(SymmetryChannel channel) const;
  bool sign_collapsed(SymmetryChannel channel) const;

  Estimate weighted_average(Observable observable, SymmetryChannel channel) const;
  /// Virial energy estimator.
  Estimate energy(SymmetryChannel channel) const { return weighted_average(Observable::Energy, channel); }
  /// <exp(-beta s)>_oo = Z_O / Z_oo.
  Estimate exchange_ratio() const;
  /// E_B - (1/beta) ln[(1 - r)/(1 + r)] with r = Z_O/Z_oo, both from these
  /// samples; the jackknife carries their correlation.
  Estimate fermion_energy_via_free_energy() const;

  HistogramResult pair_distribution(SymmetryChannel channel) const;
  GridResult density(SymmetryChannel channel) const;
  /// fermion_coeff * rho_F + boson_coeff * rho_B with joint errors.
  GridResult density_combination(double fermion_coeff, double boson_coeff) const;
  /// Integral of fermion_coeff * rho_F + boson_coeff * rho_B over the listed
  /// cells (index ix * bins + iy), jackknifed as one quantity.
  Estimate density_integral(double fermion_coeff, double boson_coeff,
                            std::span<const std::size_t> cells) const;

 private:
  static double channel_sign(SymmetryChannel channel);
  void merge_kish(std::vector<double>& s1, std::vector<double>& s2, const BlockedSums& mine,
                  const std::vector<double>& o1, const std::vector<double>& o2,
                  const BlockedSums& theirs);

  SystemSpec spec_;
  EstimatorSpec est_;
  BlockedSums scalars_;
  LogSumExp log_w_;
  LogSumExp log_w2_;
  std::size_t snapshots_ = 0;

  BlockedSums pair_;
  std::vector<double> pair_w_, pair_w2_;
  BlockedSums density_;
  std::vector<double> density_w_, density_w2_;
};

/// Samples of s from one leg of a Bennett calculation, with optional static
/// reweighting factors (log scale) when the leg ran under a frozen bias.
struct BennettLeg {
  std::vector<double> s;
  std::vector<double> log_weight;  // empty: unweighted

  void add(double s_value, double log_w = 0.0);
  double effective_size() const;
};

struct BennettPoint {
  double shift = 0.0;
  double ratio = 0.0;
  double error = 0.0;
};

struct BennettResult {
  double ratio = 0.0;  // Z_O / Z_oo
  double error = 0.0;
  double shift = 0.0;  // C*
  double mean_fermi_distinguishable = 0.0;  // <f(beta s + C*)>_oo
  double mean_fermi_connected = 0.0;        // <f(-beta s - C*)>_O
  std::vector<BennettPoint> scan;           // C* - 1 ... C* + 1
  bool plateau = false;                     // |ratio(C) - ratio(C*)| < error across the scan
};

/// Bennett estimate of Z_O/Z_oo = <f(beta s + C)>_oo / <f(-beta s - C)>_O e^C,
/// f(x) = 1/(1 + e^x). C* solves the count balance
/// n_oo <f(beta s + C)>_oo = n_O <f(-beta s - C)>_O by bisection on [-200, 200].
BennettResult bennett_ratio(const BennettLeg& distinguishable, const BennettLeg& connected,
                            double beta, std::size_t blocks = 64);

/// Bennett ratio at a fixed shift C.
BennettPoint bennett_at(const BennettLeg& distinguishable, const BennettLeg& connected,
                        double beta, double shift, std::size_t blocks = 64);

/// E_F = E_B - (1/beta) ln[(1 - r)/(1 + r)], r = Z_O/Z_oo.
double fermion_energy_via_free_energy(double boson_energy, double ratio, double beta);
/// Same with first-order error propagation (inputs treated as independent).
Estimate fermion_energy_via_free_energy(const Estimate& boson_energy, const Estimate& ratio,
                                        double beta);

}  // namespace qsym
