#pragma once

// Unit systems.
//
// Natural units (toy models): hbar = m = omega = 1.
// Dot units: energy meV, length nm, time fs. Mass is then meV fs^2 / nm^2.

namespace qsym::units {

namespace natural {
inline constexpr double hbar = 1.0;
}  // namespace natural

namespace dot {
// 0.6582119569 meV ps
inline constexpr double hbar = 658.2119569;  // meV fs
inline constexpr double boltzmann = 0.08617333;  // meV / K
inline constexpr double speed_of_light = 299.792458;  // nm / fs
inline constexpr double electron_rest_energy = 510998.95e3;  // meV
inline constexpr double electron_mass =
    electron_rest_energy / (speed_of_light * speed_of_light);  // meV fs^2 / nm^2
// e^2 / (4 pi eps0)
inline constexpr double coulomb_constant = 1439.964548;  // meV nm
}  // namespace dot

}  // namespace qsym::units
