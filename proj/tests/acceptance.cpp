// Acceptance suite: one pass/fail line per criterion. Exit code is the
// number of failed criteria.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sivnems/cpt.hpp"
#include "sivnems/csv.hpp"
#include "sivnems/defect_levels.hpp"
#include "sivnems/fitting.hpp"
#include "sivnems/nems.hpp"
#include "sivnems/phonon_bath.hpp"

using namespace sivnems;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// --- 1. zero-strain structure ----------------------------------------------

void criterion_1() {
  const bool ok = orbital_splitting_ghz(46.0, {}) == 46.0 &&
                  orbital_splitting_ghz(255.0, {}) == 255.0;
  report(1, "zero-strain splittings are 46 / 255 GHz exactly", ok);
}

// --- 2. strain-response shape ----------------------------------------------

void criterion_2() {
  const double lambda = 46.0;
  const double k = 1e6;
  auto shift = [&](double eps) {
    OrbitalStrainTerms t;
    t.beta_x_ghz = k * eps;
    return orbital_splitting_ghz(lambda, t) - lambda;
  };
  auto slope = [&](double eps) {
    const double f = 1.01;
    return (std::log(shift(eps * f)) - std::log(shift(eps / f))) / (2.0 * std::log(f));
  };
  const double s_low = slope(1e-3 * lambda / (2.0 * k));
  const double s_high = slope(40.0 * lambda / (2.0 * k));  // 2|beta| = 40 lambda
  const bool ok = std::abs(s_low - 2.0) <= 0.05 && std::abs(s_high - 1.0) <= 0.05;
  report(2, "log-log slope 2 at low strain, 1 at high strain",
         ok, "slopes " + fmt(s_low) + " / " + fmt(s_high));
}

// --- 3. A1g invariance ------------------------------------------------------

void criterion_3() {
  const auto base = optical_lines(46.0, 255.0, 406.7, 0.0);
  const auto shifted = optical_lines(46.0, 255.0, 406.7, 37.5);
  const double move = shifted.line_a_thz - base.line_a_thz;
  const double equal_shift =
      std::max({std::abs(shifted.line_b_thz - base.line_b_thz - move),
                std::abs(shifted.line_c_thz - base.line_c_thz - move),
                std::abs(shifted.line_d_thz - base.line_d_thz - move)});
  const double split_change =
      std::max(std::abs(shifted.delta_gs_ghz / base.delta_gs_ghz - 1.0),
               std::abs(shifted.delta_es_ghz / base.delta_es_ghz - 1.0));
  const bool ok = equal_shift < 1e-12 && split_change < 1e-12;
  report(3, "axial shift moves all lines equally, splittings unchanged", ok,
         "max rel split change " + fmt(split_change));
}

// --- 4. detailed balance ----------------------------------------------------

void criterion_4() {
  BathParams bath;
  double worst = 0.0;
  int points = 0;
  for (double t = 0.5; t <= 40.0; t *= 1.2) {
    bath.temperature_k = t;
    for (double d = 5.0; d <= 1500.0; d *= 1.15) {
      const double ratio = gamma_up_hz(d, bath) / gamma_down_hz(d, bath);
      const double boltz = std::exp(-d / (kBoltzmannOverPlanckGhzPerK * t));
      worst = std::max(worst, std::abs(ratio / boltz - 1.0));
      ++points;
    }
  }
  report(4, "detailed balance to 1e-12 over a (delta, T) grid", worst < 1e-12 && points >= 1000,
         fmt(points) + " points, worst rel dev " + fmt(worst));
}

// --- 5. gamma_up turnover ---------------------------------------------------

void criterion_5() {
  BathParams bath;  // n = 2, T = 4 K
  double best_d = 0.0, best_g = 0.0;
  for (double d = 100.0; d <= 180.0; d += 0.01) {
    const double g = gamma_up_hz(d, bath);
    if (g > best_g) {
      best_g = g;
      best_d = d;
    }
  }
  bool increasing = true;
  double prev = 0.0;
  for (double d = 46.0; d <= 110.0; d += 0.5) {
    const double g = gamma_up_hz(d, bath);
    if (g <= prev) increasing = false;
    prev = g;
  }
  const bool ok = std::abs(best_d - 132.8) <= 0.5 && increasing;
  report(5, "gamma_up peaks at 132.8 +- 0.5 GHz and rises over 46-110 GHz", ok,
         "argmax " + fmt(best_d) + " GHz");
}

// --- 6. suppression magnitude ----------------------------------------------

void criterion_6() {
  BathParams bath;
  const double ratio = gamma_up_hz(467.0, bath) / gamma_up_hz(46.0, bath);
  report(6, "gamma_up(467)/gamma_up(46) = 0.281 +- 0.001", std::abs(ratio - 0.281) <= 0.001,
         "ratio " + fmt(ratio));
}

// --- 7. pump-probe closed loop ---------------------------------------------

void criterion_7() {
  BathParams bath;
  bath.chi_hz = 4.0e5;
  const double delta = 70.0;
  const double g_up = gamma_up_hz(delta, bath);
  const double g_down = gamma_down_hz(delta, bath);
  const double g_tot = g_up + g_down;
  std::vector<double> times(250);
  for (size_t i = 0; i < times.size(); ++i)
    times[i] = 6.0 / g_tot * static_cast<double>(i) / (times.size() - 1);

  const auto clean = extract_rates(simulate_pump_probe(delta, bath, 1.0, times));
  const bool noiseless_ok = clean.converged &&
                            std::abs(clean.gamma_up_hz / g_up - 1.0) < 0.01 &&
                            std::abs(clean.gamma_down_hz / g_down - 1.0) < 0.01;

  int covered = 0;
  const int n_seeds = 200;
  for (int seed = 0; seed < n_seeds; ++seed) {
    const auto trace =
        simulate_pump_probe(delta, bath, 1.0, times, 0.02, static_cast<std::uint64_t>(seed));
    const auto rates = extract_rates(trace);
    if (!rates.converged) continue;
    if (std::abs(rates.gamma_up_hz - g_up) <= 3.0 * rates.gamma_up_stderr &&
        std::abs(rates.gamma_down_hz - g_down) <= 3.0 * rates.gamma_down_stderr)
      ++covered;
  }
  const bool ok = noiseless_ok && covered >= n_seeds * 95 / 100;
  report(7, "pump-probe extraction: 1% noiseless, 3-sigma coverage >= 95% of 200 seeds", ok,
         "coverage " + fmt(covered) + "/200");
}

// --- 8. dark state ----------------------------------------------------------

void criterion_8() {
  LambdaConfig cfg;
  cfg.rabi_1_mhz = cfg.rabi_2_mhz = 1.0;
  cfg.gamma_e_mhz = 94.0;
  cfg.gamma_phi_mhz = 0.0;
  double worst_ee = 0.0;
  for (double d1 : {0.0, 2.0, -7.0}) {
    cfg.detuning_1_mhz = cfg.detuning_2_mhz = d1;
    const auto rho = steady_state(build_generator(cfg));
    worst_ee = std::max(worst_ee, rho(2, 2).real());
  }

  cfg.detuning_1_mhz = cfg.detuning_2_mhz = 0.0;
  double lo = 1e300, hi = 0.0;
  for (double d = -2.0; d <= 2.0; d += 0.02) {
    const double s = fluorescence_signal(cfg, d);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double contrast = (hi - lo) / hi;
  const bool ok = worst_ee < 1e-10 && contrast > 0.999;
  report(8, "perfect dark state and ~100% dip contrast without dephasing", ok,
         "rho_ee " + fmt(worst_ee) + ", contrast " + fmt(contrast));
}

// --- 9. density-matrix sanity ----------------------------------------------

void criterion_9() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int good = 0;
  const int cases = 120;
  for (int i = 0; i < cases; ++i) {
    LambdaConfig cfg;
    cfg.rabi_1_mhz = 0.2 + 4.0 * u(rng);
    cfg.rabi_2_mhz = 0.2 + 4.0 * u(rng);
    cfg.detuning_1_mhz = -8.0 + 16.0 * u(rng);
    cfg.detuning_2_mhz = -8.0 + 16.0 * u(rng);
    cfg.gamma_e_mhz = 10.0 + 200.0 * u(rng);
    cfg.gamma_phi_mhz = 0.02 + 2.0 * u(rng);
    const double b = 0.2 + 0.6 * u(rng);
    cfg.branching_1 = b * u(rng);
    cfg.branching_2 = b - cfg.branching_1;
    const auto rho = steady_state(build_generator(cfg));
    if (is_physical_density(rho, 1e-10, 1e-12, 1e-10)) ++good;
  }
  report(9, "steady-state density matrices physical across randomized configs", good == cases,
         fmt(good) + "/" + fmt(cases));
}

// --- 10. linewidth pipeline -------------------------------------------------

void criterion_10() {
  LambdaConfig cfg;
  cfg.gamma_e_mhz = 500.0;
  cfg.gamma_phi_mhz = gamma_phi_for_t2star_mhz(0.25);
  const auto scan = linewidth_at_zero_power(cfg, {50.0, 100.0, 150.0, 200.0});
  const double target = 1.0 / (kTwoPi * 0.25);
  const double conv = t2_star_us_from_fwhm_mhz(0.64);
  const bool ok = std::abs(scan.linewidth_mhz / target - 1.0) < 0.05 &&
                  std::abs(conv - 0.2487) < 1e-3;
  report(10, "injected T2* = 0.25 us gives zero-power FWHM 0.637 MHz within 5%", ok,
         "extrapolated " + fmt(scan.linewidth_mhz) + " MHz");
}

// --- 11. saturation shape ---------------------------------------------------

void criterion_11() {
  BathParams bath;  // n = 2, T = 4 K
  const double floor_mhz = 1.0;
  const double zero_strain_mhz = 2.0 * gamma_phi_for_t2star_mhz(0.04);  // 3.98 MHz
  const double c = anchor_linewidth_scale(46.0, zero_strain_mhz, floor_mhz, bath);

  std::vector<double> grid;
  for (double d = 133.0; d <= 1000.0; d += 1.0) grid.push_back(d);
  const auto curve = predict_linewidth_vs_strain(grid, bath, floor_mhz, c);
  bool monotone = true;
  for (size_t i = 1; i < curve.size(); ++i)
    if (curve[i] >= curve[i - 1]) monotone = false;

  bool within = true;
  double worst = 0.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > 400.0 && curve[i] > 1.1 * floor_mhz) {
      within = false;
      worst = std::max(worst, curve[i]);
    }
  }
  report(11, "anchored curve monotone beyond turnover and within floor+10% past 400 GHz",
         monotone && within,
         "monotone " + std::string(monotone ? "yes" : "no") + ", worst beyond 400 GHz " +
             fmt(worst) + " MHz vs bound 1.1");
}

// --- 12. fitting engine -----------------------------------------------------

void criterion_12() {
  // Jacobian vs analytic derivatives on the Lorentzian dip model.
  const std::vector<double> xs = {-2.5, -0.7, 0.0, 0.9, 3.1};
  auto residual = [&xs](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i) {
      const double hw = q[2] / 2.0;
      r[static_cast<Eigen::Index>(i)] =
          q[0] - q[3] * hw * hw / ((xs[i] - q[1]) * (xs[i] - q[1]) + hw * hw);
    }
    return r;
  };
  Eigen::VectorXd q(4);
  q << 1.0, 0.2, 1.3, 0.6;
  const Eigen::MatrixXd jac = numeric_jacobian(residual, q);
  double jac_err = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - q[1];
    const double hw = q[2] / 2.0;
    const double denom = dx * dx + hw * hw;
    const auto ii = static_cast<Eigen::Index>(i);
    jac_err = std::max(jac_err, std::abs(jac(ii, 0) - 1.0));
    jac_err = std::max(jac_err,
                       std::abs(jac(ii, 1) + q[3] * hw * hw * 2.0 * dx / (denom * denom)) /
                           std::max(1.0, std::abs(jac(ii, 1))));
    jac_err = std::max(
        jac_err, std::abs(jac(ii, 2) + q[3] * (hw * denom - hw * hw * hw) / (denom * denom)) /
                     std::max(1.0, std::abs(jac(ii, 2))));
    jac_err = std::max(jac_err, std::abs(jac(ii, 3) + hw * hw / denom));
  }

  // Lorentzian closed loop.
  std::vector<double> gx, gy;
  std::vector<LorentzianDip> truth(1);
  truth[0] = {0.4, 1.7, 0.5};
  for (int i = 0; i <= 200; ++i) {
    const double x = -10.0 + 20.0 * i / 200.0;
    gx.push_back(x);
    gy.push_back(lorentzian_dip_model(x, 1.0, truth));
  }
  const auto dip = fit_lorentzian_dips(gx, gy, 1);
  const double dip_err =
      std::max({std::abs(dip.dips[0].center - 0.4), std::abs(dip.dips[0].fwhm / 1.7 - 1.0),
                std::abs(dip.dips[0].depth / 0.5 - 1.0)});

  // Strain-response closed loop.
  StrainResponseData data;
  const double d_true = 7.5e5;
  for (double eps : {0.0, 2e-5, 6e-5, 1.5e-4, 3e-4, 6e-4, 1e-3}) {
    data.strain.push_back(eps);
    data.delta_gs_ghz.push_back(std::hypot(46.0, 2.0 * d_true * eps));
  }
  const auto sfit = fit_strain_response(data);
  const double strain_err = std::max(std::abs(sfit.lambda_gs_ghz / 46.0 - 1.0),
                                     std::abs(sfit.d_gs_ghz / d_true - 1.0));

  const bool ok = jac_err < 1e-6 && dip.converged && dip_err < 0.01 && sfit.converged &&
                  strain_err < 0.02;
  report(12, "Jacobian to 1e-6; Lorentzian and strain closed loops within 1-2%", ok,
         "jac " + fmt(jac_err) + ", dip " + fmt(dip_err) + ", strain " + fmt(strain_err));
}

// --- 13. mechanics ----------------------------------------------------------

void criterion_13() {
  CantileverGeometry g;
  const double e1 = axial_surface_strain(g.emitter_x_um, 100.0, g);
  const double e2 = axial_surface_strain(g.emitter_x_um, 200.0, g);
  const bool quad_ok = std::abs(e2 / e1 - 4.0) < 1e-12;

  const Eigen::Matrix3d strain =
      crystal_strain_tensor(3e-4, Eigen::Vector3d(1, 1, 0).normalized(), 0.0);
  const Eigen::Matrix3d defect = to_defect_frame(strain, SivOrientation::transverse_default());
  const bool axial_ok = std::abs(defect(2, 2)) <= 1e-12 * 3e-4;

  std::mt19937_64 rng(57);
  std::normal_distribution<double> dist(0.0, 1.0);
  bool trace_ok = true;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d a(dist(rng), dist(rng), dist(rng));
    Eigen::Vector3d b(dist(rng), dist(rng), dist(rng));
    a.normalize();
    b = (b - b.dot(a) * a).normalized();
    SivOrientation o;
    o.x_axis = a;
    o.y_axis = b;
    o.z_axis = a.cross(b);
    const Eigen::Matrix3d r = to_defect_frame(strain, o);
    if (std::abs(r.trace() - strain.trace()) > 1e-10 * std::abs(strain.trace()))
      trace_ok = false;
  }
  report(13, "strain proportional to V^2; transverse axial component zero; trace preserved",
         quad_ok && axial_ok && trace_ok,
         "V^2 ratio dev " + fmt(std::abs(e2 / e1 - 4.0)));
}

// --- 14. determinism --------------------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_14() {
  const char* bin = std::getenv("SIVNEMS_BIN");
  const char* tmp = std::getenv("SIVNEMS_TMP");
  if (!bin || !tmp) {
    report(14, "CLI reruns are byte-identical", false, "SIVNEMS_BIN/SIVNEMS_TMP not set");
    return;
  }
  const std::string dir = tmp;
  const std::string cfg_path = dir + "/acc_determinism.ini";
  {
    std::ofstream cfg(cfg_path);
    cfg << "[bath]\npp_noise = 0.03\npp_points = 150\n";
  }
  bool ok = true;
  std::string detail;
  const std::vector<std::string> cmds = {"levels", "phonon", "cpt"};
  for (const auto& sub : cmds) {
    const std::string a = dir + "/acc_" + sub + "_a.csv";
    const std::string b = dir + "/acc_" + sub + "_b.csv";
    const std::string base = std::string(bin) + " --seed 11 --out ";
    if (std::system((base + a + " " + sub + " > /dev/null 2>&1").c_str()) != 0 ||
        std::system((base + b + " " + sub + " > /dev/null 2>&1").c_str()) != 0 ||
        slurp(a).empty() || slurp(a) != slurp(b)) {
      ok = false;
      detail = sub + " differs";
    }
  }
  const std::string a = dir + "/acc_pp_a.csv";
  const std::string b = dir + "/acc_pp_b.csv";
  const std::string base =
      std::string(bin) + " --config " + cfg_path + " --seed 11 --out ";
  if (std::system((base + a + " pumpprobe > /dev/null 2>&1").c_str()) != 0 ||
      std::system((base + b + " pumpprobe > /dev/null 2>&1").c_str()) != 0 ||
      slurp(a).empty() || slurp(a) != slurp(b)) {
    ok = false;
    detail = "pumpprobe differs";
  }
  report(14, "CLI reruns with identical config and seed are byte-identical", ok, detail);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  criterion_13();
  criterion_14();
  std::printf("%d/14 criteria passed\n", 14 - g_failures);
  return g_failures;
}
