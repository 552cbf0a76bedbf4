#pragma once

#include <array>
#include <cstdint>

namespace qsym {

/// Per-sample record streamed from a trajectory to the estimators.
///
/// The virial fields are the configuration-dependent parts of the virial
/// energy estimator for each topology:
///   virial_oo        = 1/(2P) sum_{i,n} (r_n^i - centroid_n) . dV/dr_n^i
///   virial_connected = 1/(2P) sum_{i,n} (r_n^i - center_of_mass) . dV/dr_n^i
struct TrajectorySample {
  std::int64_t step = 0;
  double s = 0.0;
  double bias_value = 0.0;
  double wall_value = 0.0;
  double potential_energy = 0.0;  // (1/P) sum_i V(r_1^i, r_2^i)
  double spring_energy_oo = 0.0;
  double virial_oo = 0.0;
  double virial_connected = 0.0;
  double pair_distance = 0.0;  // (1/P) sum_i |r_1^i - r_2^i|

  static constexpr std::size_t field_count = 9;
  std::array<double, field_count> to_array() const;
  static TrajectorySample from_array(const std::array<double, field_count>& a);
  static const std::array<const char*, field_count>& field_names();

  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

inline std::array<double, TrajectorySample::field_count> TrajectorySample::to_array() const {
  return {static_cast<double>(step), s, bias_value, wall_value, potential_energy,
          spring_energy_oo, virial_oo, virial_connected, pair_distance};
}

inline TrajectorySample TrajectorySample::from_array(
    const std::array<double, field_count>& a) {
  TrajectorySample t;
  t.step = static_cast<std::int64_t>(a[0]);
  t.s = a[1];
  t.bias_value = a[2];
  t.wall_value = a[3];
  t.potential_energy = a[4];
  t.spring_energy_oo = a[5];
  t.virial_oo = a[6];
  t.virial_connected = a[7];
  t.pair_distance = a[8];
  return t;
}

inline const std::array<const char*, TrajectorySample::field_count>&
TrajectorySample::field_names() {
  static const std::array<const char*, field_count> names = {
      "step",      "s",         "bias",           "wall",         "potential",
      "spring_oo", "virial_oo", "virial_connected", "pair_distance"};
  return names;
}

}  // namespace qsym
