// Command-line front end: figure-style sweeps and fits as CSV tables.
//
// Exit codes: 0 success, 1 runtime/fit failure, 2 config or schema error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sivnems/config.hpp"
#include "sivnems/cpt.hpp"
#include "sivnems/csv.hpp"
#include "sivnems/defect_levels.hpp"
#include "sivnems/fitting.hpp"
#include "sivnems/nems.hpp"
#include "sivnems/phonon_bath.hpp"

namespace {

constexpr const char* kVersion = "sivnems 1.0.0";

using sivnems::RunConfig;

const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"defect",
       {"lambda_gs_ghz", "lambda_es_ghz", "nu_mean_thz", "delta_z_ghz", "gs_t_par_ghz",
        "gs_t_perp_ghz", "gs_d_ghz", "gs_f_ghz", "es_t_par_ghz", "es_t_perp_ghz", "es_d_ghz",
        "es_f_ghz", "sweep", "sweep_min", "sweep_max", "sweep_points"}},
      {"cantilever",
       {"length_um", "width_um", "thickness_um", "gap_um", "youngs_gpa", "poisson",
        "emitter_x_um", "emitter_depth_um"}},
      {"bath",
       {"chi_hz", "exponent_n", "temp_k", "delta_min_ghz", "delta_max_ghz", "delta_points",
        "pp_delta_ghz", "pp_p0", "pp_decay_spans", "pp_points", "pp_noise"}},
      {"cpt",
       {"rabi1_mhz", "rabi2_mhz", "detuning1_mhz", "gamma_e_mhz", "branching1", "branching2",
        "model", "gamma_phi_mhz", "gamma_up_mhz", "gamma_down_mhz", "delta_gs_ghz", "delta_z_ghz",
        "hf_offset_mhz", "hf_weight", "span_mhz", "points", "power_min", "power_max",
        "power_points"}},
      {"fit", {"model", "dip_count"}},
      {"output", {"precision"}},
  };
  return schema;
}

void add_provenance(sivnems::CsvTable& table, const RunConfig& cfg, std::uint64_t seed) {
  table.add_comment(kVersion);
  table.add_comment("seed = " + std::to_string(seed));
  for (const auto& line : cfg.snapshot_lines()) table.add_comment(line);
}

void emit(const sivnems::CsvTable& table, const std::string& out_path) {
  if (out_path.empty())
    std::cout << table.to_string();
  else
    table.write_file(out_path);
}

sivnems::SpinOrbitParams defect_spin_orbit(const RunConfig& cfg) {
  sivnems::SpinOrbitParams so;
  so.lambda_gs_ghz = cfg.get_double("defect", "lambda_gs_ghz", 46.0);
  so.lambda_es_ghz = cfg.get_double("defect", "lambda_es_ghz", 255.0);
  so.validate();
  return so;
}

sivnems::StrainSusceptibilities manifold_susceptibilities(const RunConfig& cfg,
                                                          const std::string& prefix) {
  // Placeholder magnitudes of order 1 PHz/strain; not calibrated to any device.
  sivnems::StrainSusceptibilities s;
  s.t_par_ghz = cfg.get_double("defect", prefix + "_t_par_ghz", 1.0e6);
  s.t_perp_ghz = cfg.get_double("defect", prefix + "_t_perp_ghz", 0.0);
  s.d_ghz = cfg.get_double("defect", prefix + "_d_ghz", 1.0e6);
  s.f_ghz = cfg.get_double("defect", prefix + "_f_ghz", 0.0);
  return s;
}

sivnems::CantileverGeometry cantilever_geometry(const RunConfig& cfg) {
  sivnems::CantileverGeometry g;
  g.length_um = cfg.get_double("cantilever", "length_um", g.length_um);
  g.width_um = cfg.get_double("cantilever", "width_um", g.width_um);
  g.thickness_um = cfg.get_double("cantilever", "thickness_um", g.thickness_um);
  g.gap_um = cfg.get_double("cantilever", "gap_um", g.gap_um);
  g.youngs_gpa = cfg.get_double("cantilever", "youngs_gpa", g.youngs_gpa);
  g.poisson = cfg.get_double("cantilever", "poisson", g.poisson);
  g.emitter_x_um = cfg.get_double("cantilever", "emitter_x_um", g.emitter_x_um);
  g.emitter_depth_um = cfg.get_double("cantilever", "emitter_depth_um", g.emitter_depth_um);
  g.validate();
  return g;
}

sivnems::BathParams bath_params(const RunConfig& cfg) {
  sivnems::BathParams b;
  b.chi_hz = cfg.get_double("bath", "chi_hz", b.chi_hz);
  b.exponent_n = cfg.get_double("bath", "exponent_n", b.exponent_n);
  b.temperature_k = cfg.get_double("bath", "temp_k", b.temperature_k);
  b.validate();
  return b;
}

sivnems::LambdaConfig lambda_config(const RunConfig& cfg) {
  sivnems::LambdaConfig c;
  c.rabi_1_mhz = cfg.get_double("cpt", "rabi1_mhz", c.rabi_1_mhz);
  c.rabi_2_mhz = cfg.get_double("cpt", "rabi2_mhz", c.rabi_2_mhz);
  c.detuning_1_mhz = cfg.get_double("cpt", "detuning1_mhz", c.detuning_1_mhz);
  c.gamma_e_mhz = cfg.get_double("cpt", "gamma_e_mhz", c.gamma_e_mhz);
  c.branching_1 = cfg.get_double("cpt", "branching1", c.branching_1);
  c.branching_2 = cfg.get_double("cpt", "branching2", c.branching_2);
  const std::string model = cfg.get_string("cpt", "model", "effective");
  if (model == "effective")
    c.model = sivnems::DephasingModel::kEffective;
  else if (model == "microscopic")
    c.model = sivnems::DephasingModel::kMicroscopic;
  else
    throw sivnems::ConfigError("cpt.model must be 'effective' or 'microscopic', got '" + model +
                               "'");
  c.gamma_phi_mhz = cfg.get_double("cpt", "gamma_phi_mhz", c.gamma_phi_mhz);
  c.gamma_up_mhz = cfg.get_double("cpt", "gamma_up_mhz", c.gamma_up_mhz);
  c.gamma_down_mhz = cfg.get_double("cpt", "gamma_down_mhz", c.gamma_down_mhz);
  c.delta_gs_ghz = cfg.get_double("cpt", "delta_gs_ghz", c.delta_gs_ghz);
  c.delta_z_ghz = cfg.get_double("cpt", "delta_z_ghz", c.delta_z_ghz);
  c.hf_offset_mhz = cfg.get_double("cpt", "hf_offset_mhz", c.hf_offset_mhz);
  c.hf_weight = cfg.get_double("cpt", "hf_weight", c.hf_weight);
  c.validate();
  return c;
}

std::vector<double> linspace(double lo, double hi, std::int64_t n) {
  if (n < 2) throw sivnems::ConfigError("grids need at least 2 points");
  std::vector<double> out(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) /
                                           static_cast<double>(n - 1);
  return out;
}

std::string json_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_levels(const RunConfig& cfg, const std::string& out_path, std::uint64_t seed) {
  const auto so = defect_spin_orbit(cfg);
  const auto s_gs = manifold_susceptibilities(cfg, "gs");
  const auto s_es = manifold_susceptibilities(cfg, "es");
  const double nu_mean = cfg.get_double("defect", "nu_mean_thz", 406.7);
  const auto geom = cantilever_geometry(cfg);
  const auto orient = sivnems::SivOrientation::transverse_default();
  const Eigen::Vector3d long_axis = Eigen::Vector3d(1, 1, 0).normalized();

  const std::string sweep = cfg.get_string("defect", "sweep", "strain");
  const double lo = cfg.get_double("defect", "sweep_min", 0.0);
  const double hi = cfg.get_double("defect", "sweep_max", sweep == "voltage" ? 200.0 : 5e-4);
  const auto grid = linspace(lo, hi, cfg.get_int("defect", "sweep_points", 21));

  sivnems::CsvTable table({"sweep", "eps_axial", "delta_gs_ghz", "delta_es_ghz", "line_a_thz",
                           "line_b_thz", "line_c_thz", "line_d_thz", "line_a_nm", "line_b_nm",
                           "line_c_nm", "line_d_nm"});
  add_provenance(table, cfg, seed);
  table.add_comment("sweep axis: " + sweep);

  for (double v : grid) {
    double eps_axial;
    if (sweep == "strain") {
      eps_axial = v;
    } else if (sweep == "voltage") {
      eps_axial = sivnems::axial_surface_strain(geom.emitter_x_um, v, geom);
      const auto validity = sivnems::check_model_limits(v, geom);
      if (!validity.small_deflection_ok || !validity.linear_elastic_ok)
        std::cerr << "warning: model validity exceeded at V = " << v << " (deflection/gap = "
                  << validity.deflection_over_gap << ", strain = " << validity.strain_at_emitter
                  << ")\n";
    } else {
      throw sivnems::ConfigError("defect.sweep must be 'strain' or 'voltage', got '" + sweep +
                                 "'");
    }
    const Eigen::Matrix3d crystal =
        sivnems::crystal_strain_tensor(eps_axial, long_axis, geom.poisson);
    const Eigen::Matrix3d defect = sivnems::to_defect_frame(crystal, orient);
    const auto terms_gs = sivnems::strain_to_terms(defect, s_gs);
    const auto terms_es = sivnems::strain_to_terms(defect, s_es);
    const double dgs = sivnems::orbital_splitting_ghz(so.lambda_gs_ghz, terms_gs);
    const double des = sivnems::orbital_splitting_ghz(so.lambda_es_ghz, terms_es);
    const auto lines = sivnems::optical_lines(dgs, des, nu_mean, terms_es.alpha_ghz -
                                                                     terms_gs.alpha_ghz);
    table.add_row({v, eps_axial, dgs, des, lines.line_a_thz, lines.line_b_thz, lines.line_c_thz,
                   lines.line_d_thz, sivnems::frequency_thz_to_wavelength_nm(lines.line_a_thz),
                   sivnems::frequency_thz_to_wavelength_nm(lines.line_b_thz),
                   sivnems::frequency_thz_to_wavelength_nm(lines.line_c_thz),
                   sivnems::frequency_thz_to_wavelength_nm(lines.line_d_thz)});
  }
  emit(table, out_path);
  return 0;
}

int cmd_phonon(const RunConfig& cfg, const std::string& out_path, std::uint64_t seed) {
  const auto bath = bath_params(cfg);
  const auto grid = linspace(cfg.get_double("bath", "delta_min_ghz", 46.0),
                             cfg.get_double("bath", "delta_max_ghz", 600.0),
                             cfg.get_int("bath", "delta_points", 200));
  const double g_ref = sivnems::gamma_up_hz(sivnems::kReferenceSplittingGhz, bath);

  sivnems::CsvTable table({"delta_ghz", "n_be", "gamma_up_hz", "gamma_down_hz",
                           "gamma_up_normalized", "balance_ratio", "boltzmann_factor"});
  add_provenance(table, cfg, seed);
  for (double d : grid) {
    const double up = sivnems::gamma_up_hz(d, bath);
    const double down = sivnems::gamma_down_hz(d, bath);
    const double boltz =
        std::exp(-d / (sivnems::kBoltzmannOverPlanckGhzPerK * bath.temperature_k));
    table.add_row({d, sivnems::bose_occupation(d, bath.temperature_k), up, down,
                   g_ref > 0.0 ? up / g_ref : 0.0, up / down, boltz});
  }
  emit(table, out_path);
  return 0;
}

int cmd_pumpprobe(const RunConfig& cfg, const std::string& out_path, std::uint64_t seed) {
  const auto bath = bath_params(cfg);
  const double delta = cfg.get_double("bath", "pp_delta_ghz", 46.0);
  const double p0 = cfg.get_double("bath", "pp_p0", 1.0);
  const double spans = cfg.get_double("bath", "pp_decay_spans", 5.0);
  const std::int64_t points = cfg.get_int("bath", "pp_points", 200);
  const double noise = cfg.get_double("bath", "pp_noise", 0.0);

  const double g_tot = sivnems::gamma_up_hz(delta, bath) + sivnems::gamma_down_hz(delta, bath);
  if (!(g_tot > 0.0)) throw std::runtime_error("pumpprobe: total relaxation rate is zero");
  const auto times = linspace(0.0, spans / g_tot, points);
  const auto trace = sivnems::simulate_pump_probe(delta, bath, p0, times, noise, seed);
  const auto rates = sivnems::extract_rates(trace);
  if (!rates.converged)
    throw std::runtime_error("pumpprobe: rate extraction did not converge (" + rates.message +
                             ")");

  sivnems::CsvTable table({"time_s", "upper_population"});
  add_provenance(table, cfg, seed);
  for (size_t i = 0; i < trace.time_s.size(); ++i)
    table.add_row({trace.time_s[i], trace.upper_population[i]});
  emit(table, out_path);

  std::cout << "{\"gamma_up_hz\": " << json_number(rates.gamma_up_hz)
            << ", \"gamma_up_stderr_hz\": " << json_number(rates.gamma_up_stderr)
            << ", \"gamma_down_hz\": " << json_number(rates.gamma_down_hz)
            << ", \"gamma_down_stderr_hz\": " << json_number(rates.gamma_down_stderr)
            << ", \"gamma_total_hz\": " << json_number(rates.gamma_total_hz)
            << ", \"p_eq\": " << json_number(rates.p_eq) << "}\n";
  return 0;
}

int cmd_cpt(const RunConfig& cfg, const std::string& out_path, std::uint64_t seed) {
  const auto lambda = lambda_config(cfg);
  const double est = std::max(sivnems::estimate_cpt_fwhm_mhz(lambda), 1e-3);
  const double default_span = 12.0 * est + 2.0 * std::abs(lambda.hf_offset_mhz);
  const double span = cfg.get_double("cpt", "span_mhz", default_span);
  const auto grid = linspace(-span / 2.0, span / 2.0, cfg.get_int("cpt", "points", 201));
  const auto spec = sivnems::cpt_spectrum(lambda, grid);
  if (!spec.grid_adequate)
    std::cerr << "warning: fewer than 7 grid points across the expected dip width\n";

  sivnems::CsvTable table({"detuning_mhz", "signal"});
  add_provenance(table, cfg, seed);
  for (size_t i = 0; i < spec.detuning_mhz.size(); ++i)
    table.add_row({spec.detuning_mhz[i], spec.signal[i]});
  emit(table, out_path);

  const int dips = lambda.hf_weight > 0.0 ? 2 : 1;
  const auto fit = sivnems::fit_lorentzian_dips(spec.detuning_mhz, spec.signal, dips);
  if (!fit.converged)
    throw std::runtime_error("cpt: Lorentzian fit did not converge (" + fit.message + ")");
  std::cout << "{\"dips\": [";
  for (size_t k = 0; k < fit.dips.size(); ++k) {
    const auto& d = fit.dips[k];
    std::cout << (k ? ", " : "") << "{\"center_mhz\": " << json_number(d.center)
              << ", \"fwhm_mhz\": " << json_number(d.fwhm)
              << ", \"fwhm_stderr_mhz\": " << json_number(d.fwhm_stderr)
              << ", \"depth\": " << json_number(d.depth) << "}";
  }
  std::cout << "], \"baseline\": " << json_number(fit.baseline) << "}\n";
  return 0;
}

int cmd_powerscan(const RunConfig& cfg, const std::string& out_path, std::uint64_t seed) {
  const auto lambda = lambda_config(cfg);
  const auto powers = linspace(cfg.get_double("cpt", "power_min", 0.5),
                               cfg.get_double("cpt", "power_max", 4.0),
                               cfg.get_int("cpt", "power_points", 6));
  const auto scan = sivnems::linewidth_at_zero_power(lambda, powers);
  if (!scan.linear_regime)
    std::cerr << "warning: power scan shows a significant quadratic term; extrapolation may be "
                 "biased\n";

  sivnems::CsvTable table({"power_mhz2", "fwhm_mhz"});
  add_provenance(table, cfg, seed);
  for (size_t i = 0; i < scan.power.size(); ++i)
    table.add_row({scan.power[i], scan.fwhm_mhz[i]});
  emit(table, out_path);

  std::cout << "{\"linewidth_mhz\": " << json_number(scan.linewidth_mhz)
            << ", \"linewidth_stderr_mhz\": " << json_number(scan.linewidth_stderr)
            << ", \"slope_mhz_per_power\": " << json_number(scan.slope_mhz_per_power)
            << ", \"t2_star_us\": " << json_number(scan.t2_star_us) << "}\n";
  return 0;
}

void require_columns(const sivnems::CsvTable& table, const std::vector<std::string>& cols) {
  for (const auto& c : cols)
    if (!table.has_column(c))
      throw sivnems::ConfigError("input CSV is missing required column '" + c + "'");
}

int cmd_fit(const RunConfig& cfg, const std::string& in_path, const std::string& out_path,
            std::uint64_t seed) {
  if (in_path.empty()) throw sivnems::ConfigError("fit requires --in CSV");
  const auto table = sivnems::CsvTable::parse_file(in_path);
  const std::string model = cfg.get_string("fit", "model", "lorentzian");

  if (model == "lorentzian") {
    require_columns(table, {"detuning_mhz", "signal"});
    const auto x = table.column("detuning_mhz");
    const auto y = table.column("signal");
    const int dips = static_cast<int>(cfg.get_int("fit", "dip_count", 1));
    const auto fit = sivnems::fit_lorentzian_dips(x, y, dips);
    if (!fit.converged)
      throw std::runtime_error("fit: Lorentzian fit did not converge (" + fit.message + ")");
    std::cout << "{\"model\": \"lorentzian\", \"dips\": [";
    for (size_t k = 0; k < fit.dips.size(); ++k) {
      const auto& d = fit.dips[k];
      std::cout << (k ? ", " : "") << "{\"center_mhz\": " << json_number(d.center)
                << ", \"center_stderr_mhz\": " << json_number(d.center_stderr)
                << ", \"fwhm_mhz\": " << json_number(d.fwhm)
                << ", \"fwhm_stderr_mhz\": " << json_number(d.fwhm_stderr)
                << ", \"depth\": " << json_number(d.depth) << "}";
    }
    std::cout << "], \"baseline\": " << json_number(fit.baseline)
              << ", \"residual_norm\": " << json_number(fit.residual_norm) << "}\n";
    if (!out_path.empty()) {
      sivnems::CsvTable res({"detuning_mhz", "signal", "model", "residual"});
      add_provenance(res, cfg, seed);
      for (size_t i = 0; i < x.size(); ++i) {
        const double m = sivnems::lorentzian_dip_model(x[i], fit.baseline, fit.dips);
        res.add_row({x[i], y[i], m, y[i] - m});
      }
      res.write_file(out_path);
    }
    return 0;
  }

  if (model == "strain") {
    require_columns(table, {"strain", "line_a_thz", "line_b_thz", "line_c_thz", "line_d_thz"});
    sivnems::StrainResponseData data;
    data.strain = table.column("strain");
    const auto a = table.column("line_a_thz");
    const auto b = table.column("line_b_thz");
    const auto c = table.column("line_c_thz");
    const auto d = table.column("line_d_thz");
    for (size_t i = 0; i < data.strain.size(); ++i) {
      const auto sp = sivnems::splittings_from_lines(a[i], b[i], c[i], d[i], 1e-3);
      data.delta_gs_ghz.push_back(sp.delta_gs_ghz);
      data.delta_es_ghz.push_back(sp.delta_es_ghz);
    }
    const auto fit = sivnems::fit_strain_response(data);
    if (!fit.converged)
      throw std::runtime_error("fit: strain-response fit did not converge (" + fit.message + ")");
    if (!fit.d_identifiable)
      std::cerr << "warning: strain susceptibility d is unidentifiable from this data "
                   "(no crossover coverage)\n";
    std::cout << "{\"model\": \"strain\", \"lambda_gs_ghz\": " << json_number(fit.lambda_gs_ghz)
              << ", \"lambda_gs_stderr_ghz\": " << json_number(fit.lambda_gs_stderr)
              << ", \"d_gs_ghz\": " << json_number(fit.d_gs_ghz)
              << ", \"d_gs_stderr_ghz\": " << json_number(fit.d_gs_stderr)
              << ", \"lambda_es_ghz\": " << json_number(fit.lambda_es_ghz)
              << ", \"lambda_es_stderr_ghz\": " << json_number(fit.lambda_es_stderr)
              << ", \"d_es_ghz\": " << json_number(fit.d_es_ghz)
              << ", \"d_es_stderr_ghz\": " << json_number(fit.d_es_stderr)
              << ", \"residual_norm\": " << json_number(fit.residual_norm)
              << ", \"d_identifiable\": " << (fit.d_identifiable ? "true" : "false") << "}\n";
    return 0;
  }

  if (model == "linear") {
    require_columns(table, {"x", "y"});
    const auto x = table.column("x");
    const auto y = table.column("y");
    std::vector<double> sigma;
    if (table.has_column("sigma")) sigma = table.column("sigma");
    const auto fit = sivnems::fit_linear(x, y, sigma);
    std::cout << "{\"model\": \"linear\", \"slope\": " << json_number(fit.slope)
              << ", \"slope_stderr\": " << json_number(fit.slope_stderr)
              << ", \"intercept\": " << json_number(fit.intercept)
              << ", \"intercept_stderr\": " << json_number(fit.intercept_stderr)
              << ", \"residual_norm\": " << json_number(fit.residual_norm) << "}\n";
    return 0;
  }

  throw sivnems::ConfigError("fit.model must be 'lorentzian', 'strain', or 'linear', got '" +
                             model + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SiV strain, phonon-bath, and CPT simulation toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();  // allow --out etc. after the subcommand name

  std::string config_path, out_path, in_path;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "INI-style run configuration");
  app.add_option("--seed", seed, "RNG seed for synthetic noise");
  app.add_option("--out", out_path, "output CSV path (default: stdout)");
  app.add_option("--in", in_path, "input CSV path (fit subcommand)");

  auto* sub_levels = app.add_subcommand("levels", "orbital splittings and lines A-D vs strain");
  auto* sub_phonon = app.add_subcommand("phonon", "phonon rates vs orbital splitting");
  auto* sub_pp = app.add_subcommand("pumpprobe", "orbital relaxation trace and rate extraction");
  auto* sub_cpt = app.add_subcommand("cpt", "CPT fluorescence spectrum and dip fit");
  auto* sub_power = app.add_subcommand("powerscan", "CPT linewidth vs power, zero-power limit");
  auto* sub_fit = app.add_subcommand("fit", "fit a model to an input CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = config_path.empty() ? RunConfig::parse_string("", "<defaults>")
                                              : RunConfig::parse_file(config_path);
    cfg.validate_schema(config_schema());
    if (sub_levels->parsed()) return cmd_levels(cfg, out_path, seed);
    if (sub_phonon->parsed()) return cmd_phonon(cfg, out_path, seed);
    if (sub_pp->parsed()) return cmd_pumpprobe(cfg, out_path, seed);
    if (sub_cpt->parsed()) return cmd_cpt(cfg, out_path, seed);
    if (sub_power->parsed()) return cmd_powerscan(cfg, out_path, seed);
    if (sub_fit->parsed()) return cmd_fit(cfg, in_path, out_path, seed);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const sivnems::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sivnems::CsvError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
