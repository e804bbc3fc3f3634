#pragma once

#include <numbers>

// Internal unit system: time in microseconds, energies as angular
// frequencies in rad/us with hbar = 1, lengths in micrometres.
// Ordinary frequencies (MHz, kHz) only appear at the configuration boundary.
namespace rydchain::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double mhz_to_angular(double mhz) { return kTwoPi * mhz; }
constexpr double angular_to_mhz(double rad_per_us) { return rad_per_us / kTwoPi; }
constexpr double khz_to_angular(double khz) { return kTwoPi * khz * 1e-3; }
constexpr double angular_to_khz(double rad_per_us) { return rad_per_us / kTwoPi * 1e3; }

/// C6 is quoted in GHz um^6; internally it is handled in MHz um^6.
constexpr double c6_ghz_to_mhz(double ghz_um6) { return ghz_um6 * 1e3; }

}  // namespace rydchain::units
