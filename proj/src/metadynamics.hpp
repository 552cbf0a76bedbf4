#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qsym {

/// Well-tempered metadynamics settings. Heights and widths are in CV units
/// (energy when the CV is s).
struct MetadynamicsParams {
  double initial_height = 0.0;  // w(0)
  double width = 0.0;           // sigma_G
  double bias_factor = 0.0;     // gamma > 1
  std::int64_t stride = 1;      // tau_G, in MD steps
  double grid_min = 0.0;
  double grid_max = 0.0;
  double grid_spacing = 0.0;

  void validate() const;

  /// Heights/widths/grid given in units of k_B T = 1/beta; grid spacing sigma/10.
  static MetadynamicsParams in_thermal_units(double beta, double height_kt, double width_kt,
                                             double bias_factor, std::int64_t stride,
                                             double grid_min_kt = -60.0,
                                             double grid_max_kt = 60.0);
};

struct Gaussian {
  double center = 0.0;
  double height = 0.0;
};

/// History-dependent bias V(s) = sum_k h_k exp(-(s - c_k)^2 / (2 sigma^2)).
///
/// The hot path reads a cubic-Hermite interpolant over a uniform grid that is
/// updated at every deposition; outside the grid the bias is held constant.
/// exact_value/exact_derivative sum the Gaussians directly.
class BiasState {
 public:
  BiasState() = default;
  explicit BiasState(MetadynamicsParams params);

  const MetadynamicsParams& params() const { return params_; }
  std::span<const Gaussian> gaussians() const { return gaussians_; }
  std::size_t deposited_count() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }

  double value(double s) const;
  double derivative(double s) const;
  double exact_value(double s) const;
  double exact_derivative(double s) const;

  /// Well-tempered height w0 exp(-beta V(s) / (gamma - 1)) for a deposition at s.
  double next_height(double s, double beta) const;
  /// Appends a Gaussian at s with the well-tempered height.
  void deposit(double s, double beta);
  /// Appends a Gaussian with an explicit height (used when reloading).
  void add_gaussian(double center, double height);

  /// Hills file: commented header with the parameters, then one
  /// "index center height width" record per Gaussian.
  void write_hills(std::ostream& out, const std::vector<std::string>& header_lines = {}) const;
  static BiasState read_hills(std::istream& in);

  friend bool operator==(const BiasState& a, const BiasState& b) {
    return a.gaussians_.size() == b.gaussians_.size() && a.grid_value_ == b.grid_value_ &&
           a.grid_derivative_ == b.grid_derivative_;
  }

 private:
  MetadynamicsParams params_;
  std::vector<Gaussian> gaussians_;
  double spacing_ = 0.0;
  std::vector<double> grid_value_;
  std::vector<double> grid_derivative_;
};

/// Static reweighting factor of a sample drawn under a frozen bias; always positive.
struct ReweightFactor {
  int sign = 1;
  double log_weight = 0.0;
};

ReweightFactor reweight_factor(const BiasState& bias, double s, double beta);

}  // namespace qsym
