#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) nonlinear least squares with
// numeric central-difference Jacobians, plus the specific fit models used by
// the rest of the toolkit: Lorentzian dips, the orbital strain response, and
// weighted linear regression.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sivnems/constants.hpp"
#include "sivnems/defect_levels.hpp"

namespace sivnems {

enum class ParamTransform {
  kNone,
  kLogPositive,  // internal parameter is log(p); enforces p > 0
};

struct FitProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  Eigen::VectorXd initial;
  std::vector<ParamTransform> transforms;  // empty = all kNone
  double gradient_tol = 1e-10;
  double step_tol = 1e-12;
  int max_iterations = 200;
};

struct FitResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd stderrs;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

namespace detail {

inline double to_internal(double p, ParamTransform t) {
  if (t == ParamTransform::kLogPositive) {
    if (!(p > 0.0))
      throw std::invalid_argument("log-transformed parameter must start > 0");
    return std::log(p);
  }
  return p;
}

inline double to_external(double q, ParamTransform t) {
  return t == ParamTransform::kLogPositive ? std::exp(q) : q;
}

inline Eigen::VectorXd external_params(const Eigen::VectorXd& q,
                                       const std::vector<ParamTransform>& tr) {
  Eigen::VectorXd p = q;
  for (int i = 0; i < q.size(); ++i)
    if (!tr.empty()) p[i] = to_external(q[i], tr[static_cast<size_t>(i)]);
  return p;
}

}  // namespace detail

// Central-difference Jacobian of the residual, step = max(1e-6 |p|, 1e-9).
inline Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    const Eigen::VectorXd& params) {
  const Eigen::VectorXd r0 = residual(params);
  Eigen::MatrixXd jac(r0.size(), params.size());
  for (int j = 0; j < params.size(); ++j) {
    const double h = std::max(1e-6 * std::abs(params[j]), 1e-9);
    Eigen::VectorXd p_plus = params, p_minus = params;
    p_plus[j] += h;
    p_minus[j] -= h;
    jac.col(j) = (residual(p_plus) - residual(p_minus)) / (2.0 * h);
  }
  return jac;
}

// Levenberg-Marquardt: damping x10 on reject, /10 on accept, starting at 1e-3.
inline FitResult nlls_fit(const FitProblem& problem) {
  if (!problem.residual)
    throw std::invalid_argument("nlls_fit: residual function not set");
  const int n = static_cast<int>(problem.initial.size());
  if (n == 0) throw std::invalid_argument("nlls_fit: empty parameter vector");
  std::vector<ParamTransform> tr = problem.transforms;
  if (tr.empty()) tr.assign(static_cast<size_t>(n), ParamTransform::kNone);
  if (static_cast<int>(tr.size()) != n)
    throw std::invalid_argument("nlls_fit: transform list length mismatch");

  // Work in internal (possibly log) coordinates.
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i)
    q[i] = detail::to_internal(problem.initial[i], tr[static_cast<size_t>(i)]);
  auto internal_residual = [&](const Eigen::VectorXd& qq) {
    return problem.residual(detail::external_params(qq, tr));
  };

  Eigen::VectorXd r = internal_residual(q);
  if (!r.allFinite())
    throw std::invalid_argument("nlls_fit: residual not finite at initial point");
  double cost = r.squaredNorm();

  FitResult out;
  // Start at zero damping so well-conditioned (e.g. linear) problems take the
  // pure Gauss-Newton step; escalate only when a step is rejected.
  double damping = 0.0;
  bool converged = false;
  int iter = 0;
  std::string message = "max iterations reached";

  for (; iter < problem.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = numeric_jacobian(internal_residual, q);
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < problem.gradient_tol) {
      converged = true;
      message = "gradient tolerance reached";
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;

    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += damping * jtj.diagonal().array().max(1e-30);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        damping = (damping == 0.0) ? 1e-3 : damping * 10.0;
        continue;
      }
      const Eigen::VectorXd q_new = q + step;
      const Eigen::VectorXd r_new = internal_residual(q_new);
      const double cost_new = r_new.allFinite() ? r_new.squaredNorm()
                                                : std::numeric_limits<double>::infinity();
      if (cost_new <= cost) {
        const double step_size = step.norm();
        q = q_new;
        r = r_new;
        cost = cost_new;
        damping /= 10.0;
        accepted = true;
        if (step_size < problem.step_tol * (q.norm() + problem.step_tol)) {
          converged = true;
          message = "step tolerance reached";
        }
        break;
      }
      damping = (damping == 0.0) ? 1e-3 : damping * 10.0;
    }
    if (!accepted) {
      message = "damping escalation failed to find a descent step";
      break;
    }
    if (converged) break;
  }

  out.params = detail::external_params(q, tr);
  out.residual_norm = std::sqrt(cost);
  out.iterations = iter;
  out.converged = converged;
  out.message = message;

  // Covariance in external coordinates from the Jacobian at the optimum,
  // scaled by the reduced chi-square.
  auto external_residual = [&](const Eigen::VectorXd& p) { return problem.residual(p); };
  const Eigen::MatrixXd jac_ext = numeric_jacobian(external_residual, out.params);
  const int m = static_cast<int>(r.size());
  const double dof = std::max(m - n, 1);
  const double scale = cost / dof;
  Eigen::MatrixXd jtj = jac_ext.transpose() * jac_ext;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible()) {
    out.covariance = lu.inverse() * scale;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    out.stderrs = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  } else {
    out.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    out.stderrs = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    if (out.message.find("singular") == std::string::npos)
      out.message += "; singular normal equations at optimum (some parameters unidentifiable)";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lorentzian dip fitting

struct LorentzianDip {
  double center = 0.0;
  double fwhm = 0.0;
  double depth = 0.0;  // signal drop at the dip centre
  double center_stderr = 0.0;
  double fwhm_stderr = 0.0;
  double depth_stderr = 0.0;
};

struct DipFitResult {
  std::vector<LorentzianDip> dips;
  double baseline = 0.0;
  double baseline_stderr = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  bool grid_adequate = true;  // >= 7 grid points across the narrowest fitted width
  std::string message;
};

// Model: baseline - sum_i depth_i * (w_i/2)^2 / ((x - c_i)^2 + (w_i/2)^2).
inline double lorentzian_dip_model(double x, double baseline,
                                   const std::vector<LorentzianDip>& dips) {
  double y = baseline;
  for (const auto& d : dips) {
    const double hw = d.fwhm / 2.0;
    y -= d.depth * hw * hw / ((x - d.center) * (x - d.center) + hw * hw);
  }
  return y;
}

inline DipFitResult fit_lorentzian_dips(const std::vector<double>& x,
                                        const std::vector<double>& y, int dip_count) {
  if (dip_count != 1 && dip_count != 2)
    throw std::invalid_argument("fit_lorentzian_dips: dip count must be 1 or 2");
  if (x.size() != y.size() || x.size() < static_cast<size_t>(3 * dip_count + 2))
    throw std::invalid_argument("fit_lorentzian_dips: insufficient data");

  const double baseline0 = *std::max_element(y.begin(), y.end());
  const double span = x.back() - x.front();
  if (!(span > 0.0))
    throw std::invalid_argument("fit_lorentzian_dips: grid must be increasing");

  // Seed dip positions at the deepest samples; for two dips, the second seed
  // is the deepest sample at least span/10 from the first.
  size_t i_min = static_cast<size_t>(
      std::min_element(y.begin(), y.end()) - y.begin());
  std::vector<double> centers0 = {x[i_min]};
  if (dip_count == 2) {
    double best = std::numeric_limits<double>::infinity();
    size_t i2 = i_min;
    for (size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - x[i_min]) < span / 10.0) continue;
      if (y[i] < best) {
        best = y[i];
        i2 = i;
      }
    }
    centers0.push_back(x[i2]);
  }

  const int n_params = 1 + 3 * dip_count;
  Eigen::VectorXd p0(n_params);
  p0[0] = baseline0;
  for (int k = 0; k < dip_count; ++k) {
    p0[1 + 3 * k] = centers0[static_cast<size_t>(k)];
    p0[2 + 3 * k] = span / 20.0;
    p0[3 + 3 * k] = std::max(baseline0 - *std::min_element(y.begin(), y.end()), 1e-12);
  }
  std::vector<ParamTransform> tr(static_cast<size_t>(n_params), ParamTransform::kNone);
  for (int k = 0; k < dip_count; ++k) {
    tr[static_cast<size_t>(2 + 3 * k)] = ParamTransform::kLogPositive;  // width > 0
    tr[static_cast<size_t>(3 + 3 * k)] = ParamTransform::kLogPositive;  // depth > 0
  }

  auto unpack = [dip_count](const Eigen::VectorXd& p) {
    std::vector<LorentzianDip> dips(static_cast<size_t>(dip_count));
    for (int k = 0; k < dip_count; ++k) {
      dips[static_cast<size_t>(k)].center = p[1 + 3 * k];
      dips[static_cast<size_t>(k)].fwhm = p[2 + 3 * k];
      dips[static_cast<size_t>(k)].depth = p[3 + 3 * k];
    }
    return dips;
  };

  FitProblem problem;
  problem.initial = p0;
  problem.transforms = tr;
  problem.residual = [&x, &y, unpack](const Eigen::VectorXd& p) {
    const auto dips = unpack(p);
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (size_t i = 0; i < x.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = lorentzian_dip_model(x[i], p[0], dips) - y[i];
    return r;
  };
  const FitResult fr = nlls_fit(problem);

  DipFitResult out;
  out.baseline = fr.params[0];
  out.baseline_stderr = fr.stderrs.size() > 0 ? fr.stderrs[0] : 0.0;
  out.dips = unpack(fr.params);
  for (int k = 0; k < dip_count; ++k) {
    auto& d = out.dips[static_cast<size_t>(k)];
    d.center_stderr = fr.stderrs[1 + 3 * k];
    d.fwhm_stderr = fr.stderrs[2 + 3 * k];
    d.depth_stderr = fr.stderrs[3 + 3 * k];
  }
  std::sort(out.dips.begin(), out.dips.end(),
            [](const LorentzianDip& a, const LorentzianDip& b) { return a.center < b.center; });
  out.residual_norm = fr.residual_norm;
  out.converged = fr.converged;
  out.message = fr.message;

  const double step = span / static_cast<double>(x.size() - 1);
  for (const auto& d : out.dips)
    if (d.fwhm / step < 7.0) out.grid_adequate = false;
  return out;
}

// ---------------------------------------------------------------------------
// Strain response fit: Delta_m(eps) = sqrt(lambda_m^2 + (2 d_m eps)^2)
// for one or both manifolds against a scalar strain abscissa.

struct StrainResponseData {
  std::vector<double> strain;
  std::vector<double> delta_gs_ghz;  // may be empty if fitting ES only
  std::vector<double> delta_es_ghz;  // may be empty if fitting GS only
};

struct StrainResponseFit {
  double lambda_gs_ghz = 0.0, lambda_gs_stderr = 0.0;
  double d_gs_ghz = 0.0, d_gs_stderr = 0.0;
  double lambda_es_ghz = 0.0, lambda_es_stderr = 0.0;
  double d_es_ghz = 0.0, d_es_stderr = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  bool d_identifiable = true;
  std::string message;
};

inline StrainResponseFit fit_strain_response(const StrainResponseData& data) {
  const size_t n = data.strain.size();
  const bool has_gs = !data.delta_gs_ghz.empty();
  const bool has_es = !data.delta_es_ghz.empty();
  if (!has_gs && !has_es)
    throw std::invalid_argument("fit_strain_response: no splitting data");
  if ((has_gs && data.delta_gs_ghz.size() != n) || (has_es && data.delta_es_ghz.size() != n))
    throw std::invalid_argument("fit_strain_response: column length mismatch");
  if (n < 5)
    throw std::invalid_argument("fit_strain_response: need >= 5 strain points");

  const double eps_max = *std::max_element(data.strain.begin(), data.strain.end(),
                                           [](double a, double b) {
                                             return std::abs(a) < std::abs(b);
                                           });
  const bool crossover_covered = std::abs(eps_max) > 0.0;

  const int blocks = (has_gs ? 1 : 0) + (has_es ? 1 : 0);
  Eigen::VectorXd p0(2 * blocks);
  int idx = 0;
  if (has_gs) {
    p0[idx++] = data.delta_gs_ghz.front();
    p0[idx++] = crossover_covered
                    ? std::max(data.delta_gs_ghz.back(), 1.0) / (2.0 * std::abs(eps_max))
                    : 1.0;
  }
  if (has_es) {
    p0[idx++] = data.delta_es_ghz.front();
    p0[idx++] = crossover_covered
                    ? std::max(data.delta_es_ghz.back(), 1.0) / (2.0 * std::abs(eps_max))
                    : 1.0;
  }

  FitProblem problem;
  problem.initial = p0;
  problem.transforms.assign(static_cast<size_t>(2 * blocks), ParamTransform::kLogPositive);
  problem.residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(n * static_cast<size_t>(blocks)));
    Eigen::Index k = 0;
    int base = 0;
    if (has_gs) {
      for (size_t i = 0; i < n; ++i)
        r[k++] = std::hypot(p[base], 2.0 * p[base + 1] * data.strain[i]) -
                 data.delta_gs_ghz[i];
      base += 2;
    }
    if (has_es) {
      for (size_t i = 0; i < n; ++i)
        r[k++] = std::hypot(p[base], 2.0 * p[base + 1] * data.strain[i]) -
                 data.delta_es_ghz[i];
    }
    return r;
  };

  const FitResult fr = nlls_fit(problem);
  StrainResponseFit out;
  idx = 0;
  if (has_gs) {
    out.lambda_gs_ghz = fr.params[idx];
    out.lambda_gs_stderr = fr.stderrs[idx];
    out.d_gs_ghz = fr.params[idx + 1];
    out.d_gs_stderr = fr.stderrs[idx + 1];
    idx += 2;
  }
  if (has_es) {
    out.lambda_es_ghz = fr.params[idx];
    out.lambda_es_stderr = fr.stderrs[idx];
    out.d_es_ghz = fr.params[idx + 1];
    out.d_es_stderr = fr.stderrs[idx + 1];
  }
  out.residual_norm = fr.residual_norm;
  out.converged = fr.converged;
  out.message = fr.message;

  // d is unidentifiable when the data never leave the quadratic onset
  // (zero-strain-only data, or a singular Jacobian at the optimum).
  for (int i = 0; i < fr.stderrs.size(); i += 2) {
    const double rel = fr.stderrs[i + 1] / std::max(std::abs(fr.params[i + 1]), 1e-300);
    if (!std::isfinite(rel) || rel > 10.0) out.d_identifiable = false;
  }
  if (std::abs(eps_max) == 0.0) out.d_identifiable = false;
  return out;
}

// ---------------------------------------------------------------------------
// Weighted linear regression, closed form.

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double residual_norm = 0.0;
};

inline LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& sigma = {}) {
  const size_t n = x.size();
  if (n != y.size() || (!sigma.empty() && sigma.size() != n))
    throw std::invalid_argument("fit_linear: length mismatch");
  if (n < 3) throw std::invalid_argument("fit_linear: need >= 3 points");

  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
    if (!sigma.empty() && !(sigma[i] > 0.0))
      throw std::invalid_argument("fit_linear: sigma must be > 0");
    s += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = s * sxx - sx * sx;
  if (std::abs(det) < 1e-300 * s * std::max(sxx, 1.0))
    throw std::invalid_argument("fit_linear: degenerate abscissa (all x equal)");

  LinearFit out;
  out.slope = (s * sxy - sx * sy) / det;
  out.intercept = (sxx * sy - sx * sxy) / det;

  double chi2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
    const double r = y[i] - out.slope * x[i] - out.intercept;
    chi2 += w * r * r;
  }
  out.residual_norm = std::sqrt(chi2);
  // With unit weights, scale errors by the reduced chi-square.
  const double scale = sigma.empty() ? chi2 / std::max<double>(static_cast<double>(n) - 2.0, 1.0)
                                     : 1.0;
  out.slope_stderr = std::sqrt(scale * s / det);
  out.intercept_stderr = std::sqrt(scale * sxx / det);
  return out;
}

}  // namespace sivnems
