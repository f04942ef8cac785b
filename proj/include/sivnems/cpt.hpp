#pragma once

// Coherent population trapping on the C1/C2 Lambda-scheme. Steady states of a
// Lindblad generator give fluorescence vs two-photon detuning; dip widths are
// extracted with Lorentzian fits and extrapolated to zero optical power.
//
// User-facing frequencies and rates are ordinary frequencies in MHz; the
// generator works in angular units of 1e6 rad/s.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "sivnems/constants.hpp"
#include "sivnems/fitting.hpp"
#include "sivnems/phonon_bath.hpp"

namespace sivnems {

enum class DephasingModel {
  kEffective,    // pure dephasing rate gamma_phi on the qubit coherence (3 levels)
  kMicroscopic,  // spin-conserving orbital jumps at gamma_up/gamma_down (5 levels)
};

struct LambdaConfig {
  double rabi_1_mhz = 1.0;
  double rabi_2_mhz = 1.0;
  double detuning_1_mhz = 0.0;
  double detuning_2_mhz = 0.0;
  double gamma_e_mhz = 94.0;  // radiative linewidth of |e>
  double branching_1 = 0.5;   // decay fraction |e> -> |1,down>
  double branching_2 = 0.5;   // decay fraction |e> -> |1,up>
  DephasingModel model = DephasingModel::kEffective;
  double gamma_phi_mhz = 0.0;
  double gamma_up_mhz = 0.0;
  double gamma_down_mhz = 0.0;
  double delta_gs_ghz = 46.0;  // orbital splitting (microscopic model energies)
  double delta_z_ghz = 0.0;    // qubit splitting; C1/C2 two-photon separation
  double hf_offset_mhz = 0.0;  // secondary-resonance offset
  double hf_weight = 0.0;      // weight of the secondary component in [0, 1)

  void validate() const {
    if (!(rabi_1_mhz >= 0.0 && rabi_2_mhz >= 0.0))
      throw std::invalid_argument("LambdaConfig: Rabi frequencies must be >= 0");
    if (!(gamma_e_mhz >= 0.0 && gamma_phi_mhz >= 0.0 && gamma_up_mhz >= 0.0 &&
          gamma_down_mhz >= 0.0))
      throw std::invalid_argument("LambdaConfig: rates must be >= 0");
    if (!(branching_1 >= 0.0 && branching_2 >= 0.0 && branching_1 + branching_2 <= 1.0 + 1e-12))
      throw std::invalid_argument("LambdaConfig: branching fractions must be in [0,1], sum <= 1");
    if (!(hf_weight >= 0.0 && hf_weight < 1.0))
      throw std::invalid_argument("LambdaConfig: hf_weight must be in [0, 1)");
    if (!(delta_z_ghz >= 0.0))
      throw std::invalid_argument("LambdaConfig: delta_z must be >= 0");
  }

  int dimension() const { return model == DephasingModel::kEffective ? 3 : 5; }
};

// gamma_phi giving a zero-power CPT FWHM of 1/(2 pi T2*): the dip FWHM equals
// 2 gamma_phi (in ordinary MHz), so gamma_phi = 1 / (4 pi T2*).
inline double gamma_phi_for_t2star_mhz(double t2_star_us) {
  if (!(t2_star_us > 0.0))
    throw std::invalid_argument("gamma_phi_for_t2star: T2* must be > 0");
  return 1.0 / (4.0 * kPi * t2_star_us);
}

inline double t2_star_us_from_fwhm_mhz(double fwhm_mhz) {
  if (!(fwhm_mhz > 0.0))
    throw std::invalid_argument("t2_star_from_fwhm: FWHM must be > 0");
  return 1.0 / (kTwoPi * fwhm_mhz);
}

struct LindbladGenerator {
  Eigen::MatrixXcd matrix;  // acts on column-stacked rho
  int dim = 0;
};

namespace detail {

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline void add_dissipator(Eigen::MatrixXcd& lv, const Eigen::MatrixXcd& c) {
  const Eigen::Index n = c.rows();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd cdc = c.adjoint() * c;
  lv += kron(c.conjugate(), c);
  lv -= 0.5 * kron(id, cdc);
  lv -= 0.5 * kron(cdc.transpose(), id);
}

inline void add_hamiltonian(Eigen::MatrixXcd& lv, const Eigen::MatrixXcd& h) {
  const Eigen::Index n = h.rows();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  const std::complex<double> im(0.0, 1.0);
  lv += -im * (kron(id, h) - kron(h.transpose(), id));
}

}  // namespace detail

// Lindblad generator in the two-laser rotating frame. Ground-state basis
// |1,down>, |1,up> (plus |2,down>, |2,up> in the microscopic model), excited
// state last. Two-photon detuning = detuning_1 - detuning_2; the dark state
// sits at zero. Decay branching not accounted for by branching_1/2 is routed
// back equally to the two qubit states (phonon-sideband relaxation).
inline LindbladGenerator build_generator(const LambdaConfig& cfg) {
  cfg.validate();
  const int n = cfg.dimension();
  const int e = n - 1;  // excited-state index
  const double w1 = kTwoPi * cfg.rabi_1_mhz;
  const double w2 = kTwoPi * cfg.rabi_2_mhz;
  const double d1 = kTwoPi * cfg.detuning_1_mhz;
  const double d2ph = kTwoPi * (cfg.detuning_1_mhz - cfg.detuning_2_mhz);
  const double g_e = kTwoPi * cfg.gamma_e_mhz;

  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  h(1, 1) = -d2ph;
  h(e, e) = -d1;
  h(e, 0) = h(0, e) = 0.5 * w1;
  h(e, 1) = h(1, e) = 0.5 * w2;
  if (cfg.model == DephasingModel::kMicroscopic) {
    const double w_orb = kTwoPi * cfg.delta_gs_ghz * 1e3;
    h(2, 2) = w_orb;
    h(3, 3) = w_orb - d2ph;
  }

  Eigen::MatrixXcd lv = Eigen::MatrixXcd::Zero(n * n, n * n);
  detail::add_hamiltonian(lv, h);

  const double spill = std::max(0.0, 1.0 - cfg.branching_1 - cfg.branching_2);
  const double b1 = cfg.branching_1 + 0.5 * spill;
  const double b2 = cfg.branching_2 + 0.5 * spill;
  auto lower = [&](int to, double rate) {
    if (rate <= 0.0) return;
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
    c(to, e) = std::sqrt(rate);
    detail::add_dissipator(lv, c);
  };
  lower(0, b1 * g_e);
  lower(1, b2 * g_e);

  if (cfg.model == DephasingModel::kEffective) {
    const double g_phi = kTwoPi * cfg.gamma_phi_mhz;
    if (g_phi > 0.0) {
      Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
      c(0, 0) = std::sqrt(0.5 * g_phi);
      c(1, 1) = -std::sqrt(0.5 * g_phi);
      detail::add_dissipator(lv, c);
    }
  } else {
    const double g_up = kTwoPi * cfg.gamma_up_mhz;
    const double g_down = kTwoPi * cfg.gamma_down_mhz;
    auto jump = [&](int from, int to, double rate) {
      if (rate <= 0.0) return;
      Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
      c(to, from) = std::sqrt(rate);
      detail::add_dissipator(lv, c);
    };
    jump(0, 2, g_up);
    jump(1, 3, g_up);
    jump(2, 0, g_down);
    jump(3, 1, g_down);
  }
  return {lv, n};
}

inline bool is_physical_density(const Eigen::MatrixXcd& rho, double trace_tol = 1e-10,
                                double herm_tol = 1e-12, double eig_tol = 1e-10) {
  if (std::abs(rho.trace().real() - 1.0) > trace_tol) return false;
  if (std::abs(rho.trace().imag()) > trace_tol) return false;
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > herm_tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  return es.eigenvalues().minCoeff() >= -eig_tol;
}

// Null-space solve of the generator subject to unit trace. A kernel of
// dimension > 1 (fully decoupled level) is reported as an error.
inline Eigen::MatrixXcd steady_state(const LindbladGenerator& gen) {
  const int n = gen.dim;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(gen.matrix, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = std::max(sv(0), 1.0) * 1e-13;
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) < tol) ++nullity;
  if (nullity == 0) nullity = 1;  // smallest singular value is the kernel candidate
  if (nullity > 1)
    throw std::runtime_error("steady_state: degenerate kernel (dimension " +
                             std::to_string(nullity) + "); system has decoupled sectors");

  Eigen::VectorXcd v = svd.matrixV().col(gen.matrix.cols() - 1);
  Eigen::MatrixXcd rho = Eigen::Map<Eigen::MatrixXcd>(v.data(), n, n);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  if (std::abs(tr) < 1e-12)
    throw std::runtime_error("steady_state: kernel vector has vanishing trace");
  rho /= tr;

  const double resid = (gen.matrix * Eigen::Map<Eigen::VectorXcd>(rho.data(), n * n)).norm();
  if (resid > 1e-10 * std::max(1.0, gen.matrix.norm()))
    throw std::runtime_error("steady_state: residual too large (" + std::to_string(resid) + ")");
  return rho;
}

// Steady-state fluorescence signal gamma_e * rho_ee for one two-photon detuning.
inline double fluorescence_signal(LambdaConfig cfg, double two_photon_detuning_mhz) {
  cfg.detuning_2_mhz = cfg.detuning_1_mhz - two_photon_detuning_mhz;
  const auto gen = build_generator(cfg);
  const auto rho = steady_state(gen);
  const int e = cfg.dimension() - 1;
  return cfg.gamma_e_mhz * std::max(0.0, rho(e, e).real());
}

struct CptSpectrum {
  std::vector<double> detuning_mhz;  // two-photon detuning grid
  std::vector<double> signal;        // gamma_e * rho_ee, arbitrary units
  double expected_fwhm_mhz = 0.0;
  bool grid_adequate = true;  // >= 7 points across the expected width
};

// Rough weak-drive width estimate used for grid checks: dephasing plus
// power broadening, in ordinary MHz.
inline double estimate_cpt_fwhm_mhz(const LambdaConfig& cfg) {
  const double g_phi_eff =
      cfg.model == DephasingModel::kEffective ? cfg.gamma_phi_mhz : cfg.gamma_up_mhz;
  const double power = cfg.rabi_1_mhz * cfg.rabi_1_mhz + cfg.rabi_2_mhz * cfg.rabi_2_mhz;
  return 2.0 * g_phi_eff + (cfg.gamma_e_mhz > 0.0 ? power / cfg.gamma_e_mhz : 0.0);
}

// Fluorescence vs two-photon detuning. With hf_weight > 0 the signal is an
// incoherent weighted sum of two Lambda-systems offset by hf_offset.
inline CptSpectrum cpt_spectrum(const LambdaConfig& cfg, const std::vector<double>& grid_mhz) {
  cfg.validate();
  if (grid_mhz.size() < 2)
    throw std::invalid_argument("cpt_spectrum: need >= 2 grid points");
  for (size_t i = 1; i < grid_mhz.size(); ++i)
    if (!(grid_mhz[i] > grid_mhz[i - 1]))
      throw std::invalid_argument("cpt_spectrum: grid must be strictly increasing");

  CptSpectrum spec;
  spec.detuning_mhz = grid_mhz;
  spec.expected_fwhm_mhz = estimate_cpt_fwhm_mhz(cfg);
  const double span = grid_mhz.back() - grid_mhz.front();
  if (spec.expected_fwhm_mhz > 0.0 && span < 10.0 * spec.expected_fwhm_mhz)
    throw std::invalid_argument("cpt_spectrum: grid span must cover >= 10x the expected width");
  const double step = span / static_cast<double>(grid_mhz.size() - 1);
  if (spec.expected_fwhm_mhz > 0.0 && spec.expected_fwhm_mhz / step < 7.0)
    spec.grid_adequate = false;

  spec.signal.reserve(grid_mhz.size());
  const double w = cfg.hf_weight;
  for (double d : grid_mhz) {
    double s = (1.0 - w) * fluorescence_signal(cfg, d);
    if (w > 0.0) s += w * fluorescence_signal(cfg, d - cfg.hf_offset_mhz);
    spec.signal.push_back(s);
  }
  return spec;
}

struct PowerScanResult {
  std::vector<double> power;      // Omega_1^2 + Omega_2^2, MHz^2
  std::vector<double> fwhm_mhz;   // fitted dip width per power
  double linewidth_mhz = 0.0;     // zero-power extrapolation
  double linewidth_stderr = 0.0;
  double slope_mhz_per_power = 0.0;
  double t2_star_us = 0.0;
  bool linear_regime = true;  // quadratic term insignificant
};

namespace detail {

inline CptSpectrum auto_spectrum(const LambdaConfig& cfg, int points = 161) {
  const double est = std::max(estimate_cpt_fwhm_mhz(cfg), 1e-3);
  const double half_span = 6.0 * est;
  std::vector<double> grid(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i)
    grid[static_cast<size_t>(i)] = -half_span + 2.0 * half_span * i / (points - 1);
  return cpt_spectrum(cfg, grid);
}

}  // namespace detail

// Fit the dip width at each optical power (Omega_1 = Omega_2 = sqrt(P/2)) and
// extrapolate linearly to zero power.
inline PowerScanResult linewidth_at_zero_power(LambdaConfig cfg,
                                               const std::vector<double>& power_grid) {
  cfg.validate();
  if (power_grid.size() < 4)
    throw std::invalid_argument("linewidth_at_zero_power: need >= 4 power points");

  PowerScanResult out;
  for (double p : power_grid) {
    if (!(p > 0.0))
      throw std::invalid_argument("linewidth_at_zero_power: powers must be > 0");
    LambdaConfig c = cfg;
    c.rabi_1_mhz = c.rabi_2_mhz = std::sqrt(p / 2.0);
    const CptSpectrum spec = detail::auto_spectrum(c);
    const DipFitResult fit = fit_lorentzian_dips(spec.detuning_mhz, spec.signal, 1);
    if (!fit.converged)
      throw std::runtime_error("linewidth_at_zero_power: dip fit failed (" + fit.message + ")");
    out.power.push_back(p);
    out.fwhm_mhz.push_back(fit.dips[0].fwhm);
  }

  const LinearFit lin = fit_linear(out.power, out.fwhm_mhz);
  out.linewidth_mhz = lin.intercept;
  out.linewidth_stderr = lin.intercept_stderr;
  out.slope_mhz_per_power = lin.slope;
  out.t2_star_us = out.linewidth_mhz > 0.0 ? t2_star_us_from_fwhm_mhz(out.linewidth_mhz) : 0.0;

  // Flag a significant quadratic term (power scan outside the linear regime).
  FitProblem quad;
  quad.initial = Eigen::Vector3d(lin.intercept, lin.slope, 0.0);
  quad.residual = [&out](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(out.power.size()));
    for (size_t i = 0; i < out.power.size(); ++i)
      r[static_cast<Eigen::Index>(i)] =
          q[0] + q[1] * out.power[i] + q[2] * out.power[i] * out.power[i] - out.fwhm_mhz[i];
    return r;
  };
  const FitResult qf = nlls_fit(quad);
  if (qf.stderrs.allFinite() && std::abs(qf.params[2]) > 3.0 * qf.stderrs[2] &&
      std::abs(qf.params[2]) * out.power.back() > 0.05 * std::abs(qf.params[1]))
    out.linear_regime = false;
  return out;
}

// Spin linewidth vs orbital splitting: floor + c * gamma_up / (2 pi), in MHz.
inline std::vector<double> predict_linewidth_vs_strain(const std::vector<double>& delta_ghz,
                                                       const BathParams& bath,
                                                       double floor_mhz, double scale_c) {
  if (!(floor_mhz >= 0.0) || !(scale_c >= 0.0))
    throw std::invalid_argument("predict_linewidth_vs_strain: floor and c must be >= 0");
  std::vector<double> out;
  out.reserve(delta_ghz.size());
  for (double d : delta_ghz)
    out.push_back(floor_mhz + scale_c * gamma_up_hz(d, bath) / (kTwoPi * 1e6));
  return out;
}

// Scale factor c pinning the curve to a known linewidth at one splitting.
inline double anchor_linewidth_scale(double anchor_delta_ghz, double anchor_linewidth_mhz,
                                     double floor_mhz, const BathParams& bath) {
  const double g = gamma_up_hz(anchor_delta_ghz, bath);
  if (!(g > 0.0))
    throw std::invalid_argument("anchor_linewidth_scale: gamma_up vanishes at the anchor");
  return (anchor_linewidth_mhz - floor_mhz) * kTwoPi * 1e6 / g;
}

}  // namespace sivnems
