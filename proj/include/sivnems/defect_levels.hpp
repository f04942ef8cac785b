#pragma once

// SiV orbital-doublet level structure under defect-frame strain.
//
// Each manifold (GS, ES) is a two-branch orbital doublet split by spin-orbit
// coupling lambda at zero strain. Eg-symmetric strain mixes the branches and
// opens the splitting as sqrt(lambda^2 + 4|beta|^2); A1g-symmetric strain
// shifts both branches by the same amount and leaves splittings unchanged.

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "sivnems/constants.hpp"

namespace sivnems {

struct SpinOrbitParams {
  double lambda_gs_ghz = 46.0;
  double lambda_es_ghz = 255.0;

  void validate() const {
    if (!(lambda_gs_ghz > 0.0) || !(lambda_es_ghz > 0.0))
      throw std::invalid_argument("SpinOrbitParams: lambda must be > 0");
  }
};

// Strain-induced orbital terms for one manifold, in GHz.
// alpha: A1g common shift; beta_x/beta_y: Eg mixing channels.
struct OrbitalStrainTerms {
  double alpha_ghz = 0.0;
  double beta_x_ghz = 0.0;
  double beta_y_ghz = 0.0;

  double beta_norm_ghz() const {
    return std::hypot(beta_x_ghz, beta_y_ghz);
  }
};

// Linear map from a defect-frame strain tensor to OrbitalStrainTerms,
// one instance per manifold. Units: GHz per unit strain.
struct StrainSusceptibilities {
  double t_par_ghz = 0.0;
  double t_perp_ghz = 0.0;
  double d_ghz = 0.0;
  double f_ghz = 0.0;
};

struct ZeemanParams {
  double delta_z_ghz = 0.0;  // qubit splitting between |1,down> and |1,up>

  void validate() const {
    if (!(delta_z_ghz >= 0.0))
      throw std::invalid_argument("ZeemanParams: delta_z must be >= 0");
  }
};

// Absolute level/line frequencies in THz, splittings in GHz.
struct LevelDiagram {
  double gs_lower_thz = 0.0;
  double gs_upper_thz = 0.0;
  double es_lower_thz = 0.0;
  double es_upper_thz = 0.0;
  double line_a_thz = 0.0;
  double line_b_thz = 0.0;
  double line_c_thz = 0.0;
  double line_d_thz = 0.0;
  double delta_gs_ghz = 0.0;
  double delta_es_ghz = 0.0;
};

inline double frequency_thz_to_wavelength_nm(double nu_thz) {
  if (!(nu_thz > 0.0))
    throw std::invalid_argument("wavelength conversion requires nu > 0");
  return kSpeedOfLightNmThz / nu_thz;
}

inline double wavelength_nm_to_frequency_thz(double lambda_nm) {
  if (!(lambda_nm > 0.0))
    throw std::invalid_argument("frequency conversion requires lambda > 0");
  return kSpeedOfLightNmThz / lambda_nm;
}

// Orbital splitting of one manifold: sqrt(lambda^2 + 4(beta_x^2 + beta_y^2)).
// Independent of the A1g shift alpha.
inline double orbital_splitting_ghz(double lambda_ghz, const OrbitalStrainTerms& terms) {
  if (!(lambda_ghz > 0.0))
    throw std::invalid_argument("orbital_splitting: lambda must be > 0");
  if (!std::isfinite(lambda_ghz) || !std::isfinite(terms.alpha_ghz) ||
      !std::isfinite(terms.beta_x_ghz) || !std::isfinite(terms.beta_y_ghz))
    throw std::invalid_argument("orbital_splitting: non-finite input");
  const double beta2 = terms.beta_x_ghz * terms.beta_x_ghz +
                       terms.beta_y_ghz * terms.beta_y_ghz;
  return std::sqrt(lambda_ghz * lambda_ghz + 4.0 * beta2);
}

// Map a symmetric defect-frame strain tensor to orbital terms:
//   alpha  = t_par*e_zz + t_perp*(e_xx + e_yy)
//   beta_x = d*(e_xx - e_yy) + f*e_zx
//   beta_y = -2 d*e_xy + f*e_yz
inline OrbitalStrainTerms strain_to_terms(const Eigen::Matrix3d& strain,
                                          const StrainSusceptibilities& s,
                                          double symmetry_tol = 1e-10) {
  if (!strain.allFinite())
    throw std::invalid_argument("strain_to_terms: non-finite strain tensor");
  if ((strain - strain.transpose()).cwiseAbs().maxCoeff() > symmetry_tol)
    throw std::invalid_argument("strain_to_terms: strain tensor not symmetric");
  OrbitalStrainTerms t;
  t.alpha_ghz = s.t_par_ghz * strain(2, 2) + s.t_perp_ghz * (strain(0, 0) + strain(1, 1));
  t.beta_x_ghz = s.d_ghz * (strain(0, 0) - strain(1, 1)) + s.f_ghz * strain(2, 0);
  t.beta_y_ghz = -2.0 * s.d_ghz * strain(0, 1) + s.f_ghz * strain(1, 2);
  return t;
}

// Four optical lines from the splittings, anchored at the mean ZPL frequency:
//   A = nu_mean + (d_es + d_gs)/2,  B = nu_mean + (d_es - d_gs)/2,
//   C = nu_mean - (d_es - d_gs)/2,  D = nu_mean - (d_es + d_gs)/2,
// all offset by the A1g common shift.
inline LevelDiagram optical_lines(double delta_gs_ghz, double delta_es_ghz,
                                  double nu_mean_thz, double common_shift_ghz = 0.0) {
  if (!(delta_gs_ghz >= 0.0) || !(delta_es_ghz >= 0.0))
    throw std::invalid_argument("optical_lines: splittings must be >= 0");
  if (!(nu_mean_thz > 0.0))
    throw std::invalid_argument("optical_lines: nu_mean must be > 0");

  const double ghz = 1e-3;  // GHz -> THz
  LevelDiagram d;
  d.delta_gs_ghz = delta_gs_ghz;
  d.delta_es_ghz = delta_es_ghz;
  const double center = nu_mean_thz + common_shift_ghz * ghz;
  d.line_a_thz = center + 0.5 * (delta_es_ghz + delta_gs_ghz) * ghz;
  d.line_b_thz = center + 0.5 * (delta_es_ghz - delta_gs_ghz) * ghz;
  d.line_c_thz = center - 0.5 * (delta_es_ghz - delta_gs_ghz) * ghz;
  d.line_d_thz = center - 0.5 * (delta_es_ghz + delta_gs_ghz) * ghz;
  // Levels with the GS doublet centred at 0 and the ES doublet at the mean ZPL.
  d.gs_lower_thz = common_shift_ghz * ghz - 0.5 * delta_gs_ghz * ghz;
  d.gs_upper_thz = common_shift_ghz * ghz + 0.5 * delta_gs_ghz * ghz;
  d.es_lower_thz = center - 0.5 * delta_es_ghz * ghz;
  d.es_upper_thz = center + 0.5 * delta_es_ghz * ghz;
  return d;
}

struct ExtractedSplittings {
  double delta_gs_ghz;
  double delta_es_ghz;
  double nu_mean_thz;
};

// Inverse of optical_lines. Lines in THz, descending A >= B >= C >= D.
// An inconsistent line set (|(A-B) - (C-D)| beyond tolerance) is rejected.
inline ExtractedSplittings splittings_from_lines(double a_thz, double b_thz,
                                                 double c_thz, double d_thz,
                                                 double consistency_tol_ghz = 1e-6) {
  if (!(a_thz >= b_thz && b_thz >= c_thz && c_thz >= d_thz))
    throw std::invalid_argument("splittings_from_lines: lines must satisfy A >= B >= C >= D");
  const double thz = 1e3;  // THz -> GHz
  const double ab = (a_thz - b_thz) * thz;
  const double cd = (c_thz - d_thz) * thz;
  if (std::abs(ab - cd) > consistency_tol_ghz)
    throw std::invalid_argument("splittings_from_lines: inconsistent line set, (A-B) != (C-D)");
  ExtractedSplittings out;
  out.delta_gs_ghz = 0.5 * (ab + cd);
  out.delta_es_ghz = 0.5 * ((a_thz - c_thz) + (b_thz - d_thz)) * thz;
  out.nu_mean_thz = 0.25 * (a_thz + b_thz + c_thz + d_thz);
  return out;
}

// GS spin-orbital levels {0, delta_z, delta_gs, delta_gs + delta_z} in GHz,
// ordered (lower,down), (lower,up), (upper,down), (upper,up).
inline std::array<double, 4> qubit_levels_ghz(double delta_gs_ghz, const ZeemanParams& z) {
  if (!(delta_gs_ghz >= 0.0))
    throw std::invalid_argument("qubit_levels: delta_gs must be >= 0");
  z.validate();
  return {0.0, z.delta_z_ghz, delta_gs_ghz, delta_gs_ghz + z.delta_z_ghz};
}

}  // namespace sivnems
