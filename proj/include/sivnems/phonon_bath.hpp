#pragma once

// Single-phonon orbital relaxation between the two GS branches:
//   gamma_up(D)   = chi (D/D0)^n n_BE(D, T)
//   gamma_down(D) = chi (D/D0)^n (n_BE(D, T) + 1)
// with D0 = 46 GHz the unstrained splitting. Detailed balance
// gamma_up/gamma_down = exp(-hD/kT) holds identically.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "sivnems/constants.hpp"
#include "sivnems/fitting.hpp"

namespace sivnems {

inline constexpr double kReferenceSplittingGhz = 46.0;

struct BathParams {
  double chi_hz = 1e6;  // zero-temperature emission rate at the reference splitting
  double exponent_n = 2.0;
  double temperature_k = 4.0;

  void validate() const {
    if (!(chi_hz >= 0.0)) throw std::invalid_argument("BathParams: chi must be >= 0");
    if (!(exponent_n >= 0.0)) throw std::invalid_argument("BathParams: exponent must be >= 0");
    if (!(temperature_k >= 0.0)) throw std::invalid_argument("BathParams: temperature must be >= 0");
  }
};

// Bose-Einstein occupation at frequency delta (GHz) and temperature T (K).
// T = 0 is the limit 0; delta = 0 diverges and is rejected.
inline double bose_occupation(double delta_ghz, double temperature_k) {
  if (!(delta_ghz > 0.0))
    throw std::invalid_argument("bose_occupation: delta must be > 0");
  if (!(temperature_k >= 0.0))
    throw std::invalid_argument("bose_occupation: temperature must be >= 0");
  if (temperature_k == 0.0) return 0.0;
  const double u = delta_ghz / (kBoltzmannOverPlanckGhzPerK * temperature_k);
  return 1.0 / std::expm1(u);
}

inline double gamma_up_hz(double delta_ghz, const BathParams& bath) {
  bath.validate();
  const double dos = std::pow(delta_ghz / kReferenceSplittingGhz, bath.exponent_n);
  return bath.chi_hz * dos * bose_occupation(delta_ghz, bath.temperature_k);
}

inline double gamma_down_hz(double delta_ghz, const BathParams& bath) {
  bath.validate();
  const double dos = std::pow(delta_ghz / kReferenceSplittingGhz, bath.exponent_n);
  return bath.chi_hz * dos * (bose_occupation(delta_ghz, bath.temperature_k) + 1.0);
}

struct BranchPopulations {
  double lower = 1.0;
  double upper = 0.0;
};

// Boltzmann steady state of the two-branch rate equation:
//   p_up / p_low = gamma_up / gamma_down = exp(-hD/kT), p_up + p_low = 1.
inline BranchPopulations equilibrium_populations(double delta_ghz, const BathParams& bath) {
  if (!(delta_ghz > 0.0))
    throw std::invalid_argument("equilibrium_populations: delta must be > 0");
  bath.validate();
  if (bath.temperature_k == 0.0) return {1.0, 0.0};
  const double u = delta_ghz / (kBoltzmannOverPlanckGhzPerK * bath.temperature_k);
  const double r = std::exp(-u);
  return {1.0 / (1.0 + r), r / (1.0 + r)};
}

struct RelaxationTrace {
  std::vector<double> time_s;
  std::vector<double> upper_population;
  double noise_amplitude = 0.0;
  std::uint64_t seed = 0;
};

// Upper-branch population relaxing toward thermal equilibrium:
//   p(t) = p_eq + (p0 - p_eq) exp(-(gamma_up + gamma_down) t)
// with optional seeded additive Gaussian noise (clamped to [0, 1]).
inline RelaxationTrace simulate_pump_probe(double delta_ghz, const BathParams& bath,
                                           double p0, const std::vector<double>& time_s,
                                           double noise_amplitude = 0.0,
                                           std::uint64_t seed = 0) {
  if (!(p0 >= 0.0 && p0 <= 1.0))
    throw std::invalid_argument("simulate_pump_probe: p0 must be in [0, 1]");
  if (time_s.size() < 2)
    throw std::invalid_argument("simulate_pump_probe: need >= 2 time points");
  for (size_t i = 1; i < time_s.size(); ++i)
    if (!(time_s[i] > time_s[i - 1]))
      throw std::invalid_argument("simulate_pump_probe: time grid must be strictly increasing");

  const double g_up = gamma_up_hz(delta_ghz, bath);
  const double g_down = gamma_down_hz(delta_ghz, bath);
  const double g_tot = g_up + g_down;
  const double p_eq = g_tot > 0.0 ? g_up / g_tot : p0;

  RelaxationTrace trace;
  trace.time_s = time_s;
  trace.noise_amplitude = noise_amplitude;
  trace.seed = seed;
  trace.upper_population.reserve(time_s.size());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double t : time_s) {
    double p = p_eq + (p0 - p_eq) * std::exp(-g_tot * t);
    if (noise_amplitude > 0.0) p += noise_amplitude * noise(rng);
    trace.upper_population.push_back(std::clamp(p, 0.0, 1.0));
  }
  return trace;
}

struct ExtractedRates {
  double gamma_up_hz = 0.0;
  double gamma_down_hz = 0.0;
  double gamma_up_stderr = 0.0;
  double gamma_down_stderr = 0.0;
  double gamma_total_hz = 0.0;
  double p_eq = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  bool window_adequate = true;  // trace spans >= 3 decay constants
  std::string message;
};

// Fit p(t) = p_eq + a exp(-g t) and split the total rate by the equilibrium:
//   gamma_up = g p_eq, gamma_down = g (1 - p_eq).
inline ExtractedRates extract_rates(const RelaxationTrace& trace) {
  const auto& t = trace.time_s;
  const auto& p = trace.upper_population;
  if (t.size() != p.size() || t.size() < 4)
    throw std::invalid_argument("extract_rates: need >= 4 samples");

  // Initial guesses: final value for p_eq, crude log-slope for the rate.
  const double p_eq0 = std::clamp(p.back(), 1e-6, 1.0 - 1e-6);
  const double amp0 = p.front() - p_eq0;
  double g0 = 1.0 / (t.back() - t.front());
  for (size_t i = 1; i < t.size(); ++i) {
    const double num = p[i] - p_eq0;
    if (amp0 != 0.0 && num / amp0 > 0.01 && num / amp0 < 0.9) {
      g0 = -std::log(num / amp0) / t[i];
      break;
    }
  }

  FitProblem problem;
  problem.initial = Eigen::Vector3d(p_eq0, amp0, g0);
  problem.transforms = {ParamTransform::kNone, ParamTransform::kNone,
                        ParamTransform::kLogPositive};
  problem.residual = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
    for (size_t i = 0; i < t.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = q[0] + q[1] * std::exp(-q[2] * t[i]) - p[i];
    return r;
  };
  const FitResult fr = nlls_fit(problem);

  ExtractedRates out;
  out.p_eq = fr.params[0];
  out.gamma_total_hz = fr.params[2];
  out.gamma_up_hz = fr.params[2] * fr.params[0];
  out.gamma_down_hz = fr.params[2] * (1.0 - fr.params[0]);
  out.residual_norm = fr.residual_norm;
  out.converged = fr.converged;
  out.message = fr.message;
  out.window_adequate = fr.params[2] * (t.back() - t.front()) >= 3.0;

  // Delta-method errors from the (p_eq, g) covariance block.
  if (fr.covariance.allFinite()) {
    const double v_pp = fr.covariance(0, 0);
    const double v_gg = fr.covariance(2, 2);
    const double v_pg = fr.covariance(0, 2);
    const double peq = fr.params[0], g = fr.params[2];
    out.gamma_up_stderr =
        std::sqrt(std::max(0.0, g * g * v_pp + peq * peq * v_gg + 2.0 * g * peq * v_pg));
    out.gamma_down_stderr = std::sqrt(std::max(
        0.0, g * g * v_pp + (1.0 - peq) * (1.0 - peq) * v_gg - 2.0 * g * (1.0 - peq) * v_pg));
  }
  if (!fr.converged)
    out.message += "; residual norm " + std::to_string(fr.residual_norm);
  return out;
}

}  // namespace sivnems
