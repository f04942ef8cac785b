#pragma once

namespace sivnems {

// Vacuum light speed in nm*THz (= um*GHz*1e-3); lambda_nm = kSpeedOfLightNmThz / nu_THz.
inline constexpr double kSpeedOfLightNmThz = 299792.458;

// k_B / h in GHz per kelvin.
inline constexpr double kBoltzmannOverPlanckGhzPerK = 20.836619;

// Vacuum permittivity, F/m.
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

}  // namespace sivnems
