#include "pwmstab/commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "pwmstab/buck.hpp"
#include "pwmstab/sim_oracle.hpp"
#include "pwmstab/stability.hpp"

namespace pwmstab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& operator<<(double v) { return cell(format_number(v)); }
  CsvWriter& operator<<(int v) { return cell(std::to_string(v)); }
  CsvWriter& operator<<(const std::string& v) { return cell(v); }
  CsvWriter& operator<<(const char* v) { return cell(v); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  CsvWriter& cell(const std::string& text) {
    if (!first_) out_ << ',';
    out_ << text;
    first_ = false;
    return *this;
  }

  std::ostream& out_;
  bool first_ = true;
};

SteadyStateOptions steady_options(const ConverterConfig& cfg) {
  return {cfg.solver.grid_points, cfg.solver.d_tol};
}

BuckPlant require_buck(const ConverterConfig& cfg) {
  const auto plant = buck_plant(cfg.model(), cfg.ramp);
  if (!plant) {
    throw Error(ErrorCode::Config,
                "command needs a buck model (A1 == A2, v_s column in the ON stage only)");
  }
  return *plant;
}

void require_count(int count, int min) {
  if (count < min) {
    throw Error(ErrorCode::Domain, "point count must be at least " + std::to_string(min));
  }
}

std::vector<double> duty_grid(const DutyRange& range) {
  if (!(range.lo > 0.0 && range.hi < 1.0)) {
    throw Error(ErrorCode::Domain, "duty range must lie inside (0, 1)");
  }
  return linear_grid(range.lo, range.hi, range.count);
}

// Period of the simulated steady behaviour started next to the orbit; 0 when
// no period up to 8 is found or the run breaks down.
int simulated_period(const ConverterConfig& cfg, const SwitchedLinearModel& model,
                     const SteadyState& ss) {
  PeriodOptions options;
  options.transient = cfg.solver.transient;
  options.tail = cfg.solver.tail;
  options.tol = cfg.solver.period_tol;
  options.sim.event_grid = cfg.solver.event_grid;
  const Vector x0 = ss.x0_start.array() * (1.0 + 1e-4) + 1e-4;
  try {
    const PeriodResult p = simulate_period(model, cfg.ramp, cfg.input, x0, options);
    return p.periodic ? p.period : 0;
  } catch (const Error&) {
    return 0;
  }
}

std::string error_label(const Error& e) { return "error:" + std::string(to_string(e.code())); }

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain: return kExitUsage;
    case ErrorCode::Config:
    case ErrorCode::Dimension: return kExitConfig;
    case ErrorCode::NoSwitching:
    case ErrorCode::DegenerateOrbit:
    case ErrorCode::NoRoot: return kExitNoOrbit;
    case ErrorCode::Singular:
    case ErrorCode::Grazing:
    case ErrorCode::Precondition:
    case ErrorCode::Pole: return kExitSingular;
    case ErrorCode::NoConvergence:
    case ErrorCode::OracleInvalid:
    case ErrorCode::Divergence: return kExitNoConvergence;
  }
  return kExitUsage;
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "vs") return SweepParameter::Vs;
  if (name == "vr") return SweepParameter::Vr;
  if (name == "D") return SweepParameter::Duty;
  if (name == "R") return SweepParameter::Resistance;
  if (name == "T") return SweepParameter::Period;
  throw Error(ErrorCode::Domain, "sweep parameter must be one of vs, vr, D, R, T");
}

void write_steady(const ConverterConfig& cfg, std::ostream& out) {
  const SwitchedLinearModel model = cfg.model();
  const SteadyState ss = solve_periodic_orbit(model, cfg.ramp, cfg.input, steady_options(cfg));
  CsvWriter csv(out);
  csv << "d_s" << "duty" << "y_switch_V" << "candidates";
  for (Eigen::Index i = 0; i < model.dimension(); ++i) csv << "x0_start_" + std::to_string(i + 1);
  for (Eigen::Index i = 0; i < model.dimension(); ++i) csv << "x0_switch_" + std::to_string(i + 1);
  csv.end_row();
  csv << ss.d << ss.duty << ss.y_switch << ss.candidate_count;
  for (Eigen::Index i = 0; i < model.dimension(); ++i) csv << ss.x0_start(i);
  for (Eigen::Index i = 0; i < model.dimension(); ++i) csv << ss.x0_switch(i);
  csv.end_row();
}

void write_eigs(const ConverterConfig& cfg, std::ostream& out) {
  const SwitchedLinearModel model = cfg.model();
  const SteadyState ss = solve_periodic_orbit(model, cfg.ramp, cfg.input, steady_options(cfg));
  const StabilityReport report =
      classify(jacobian(model, cfg.ramp, cfg.input, ss), cfg.solver.class_tol);
  CsvWriter csv(out);
  csv << "index" << "re" << "im" << "modulus" << "angle_rad" << "spectral_radius"
      << "classification";
  csv.end_row();
  int index = 0;
  for (const Complex& lambda : report.eigenvalues) {
    csv << index++ << lambda.real() << lambda.imag() << std::abs(lambda) << std::arg(lambda)
        << report.spectral_radius << to_string(report.classification);
    csv.end_row();
  }
}

void write_sweep_vs(const ConverterConfig& cfg, const DutyRange& range, std::ostream& out) {
  const BuckPlant plant = require_buck(cfg);
  const std::vector<double> grid = duty_grid(range);
  const double slope = ramp_slope(cfg.ramp);
  CsvWriter csv(out);
  csv << "D" << "vs_critical_V" << "residual_check";
  csv.end_row();
  for (const double duty : grid) {
    const double vs = vs_critical(plant, cfg.edge, duty);
    double check = kNaN;
    if (std::isfinite(vs)) {
      const double r = cfg.edge == Edge::TEM ? pdb_residual_tem(plant, duty, vs)
                                             : pdb_residual_lem(plant, duty, vs);
      check = std::abs(r) / slope;
    }
    csv << duty << vs << check;
    csv.end_row();
  }
}

void write_splot(const ConverterConfig& cfg, Complex lambda, const DutyRange& range,
                 std::ostream& out) {
  const std::vector<double> grid = duty_grid(range);
  const BoundaryCurve curve =
      s_plot(fixed_input_family(cfg.model(), cfg.ramp, cfg.input), lambda, grid);
  CsvWriter csv(out);
  csv << "D" << "S_re" << "S_im" << "hdot_V_per_s" << "singular";
  csv.end_row();
  for (const CurveSample& s : curve.samples) {
    csv << s.parameter << s.value.real() << s.value.imag() << s.reference
        << (s.singular ? 1 : 0);
    csv.end_row();
  }
}

void write_fplot(const ConverterConfig& cfg, int count, std::ostream& out) {
  require_count(count, 1);
  const SwitchedLinearModel model = cfg.model();
  const SteadyState ss = solve_periodic_orbit(model, cfg.ramp, cfg.input, steady_options(cfg));
  const std::vector<double> grid = theta_grid(count);
  const BoundaryCurve curve = f_plot(model, cfg.ramp, cfg.input, ss, grid);
  CsvWriter csv(out);
  csv << "theta_rad" << "F_re" << "F_im" << "hdot_V_per_s" << "singular";
  csv.end_row();
  for (const CurveSample& s : curve.samples) {
    csv << s.parameter << s.value.real() << s.value.imag() << s.reference
        << (s.singular ? 1 : 0);
    csv.end_row();
  }
}

void write_nyquist(const ConverterConfig& cfg, int count, std::ostream& out) {
  require_count(count, 2);
  const SwitchedLinearModel model = cfg.model();
  const SteadyState ss = solve_periodic_orbit(model, cfg.ramp, cfg.input, steady_options(cfg));
  const std::vector<double> grid = linear_grid(0.0, cfg.ramp.angular_frequency(), count);
  const BoundaryCurve curve = nyquist(model, cfg.ramp, cfg.input, ss, grid);
  CsvWriter csv(out);
  csv << "omega_rad_per_s" << "N_re" << "N_im" << "singular";
  csv.end_row();
  for (const CurveSample& s : curve.samples) {
    csv << s.parameter << s.value.real() << s.value.imag() << (s.singular ? 1 : 0);
    csv.end_row();
  }
}

void write_simulation(const ConverterConfig& cfg, int cycles, const std::optional<Vector>& x0,
                      bool from_steady_state, std::ostream& out) {
  require_count(cycles, 1);
  const SwitchedLinearModel model = cfg.model();
  Vector start = Vector::Zero(model.dimension());
  if (from_steady_state) {
    start = solve_periodic_orbit(model, cfg.ramp, cfg.input, steady_options(cfg)).x0_start;
  }
  if (x0) {
    if (x0->size() != model.dimension()) {
      throw Error(ErrorCode::Domain, "--x0 length does not match the model dimension");
    }
    start += *x0;
  }
  const Trajectory traj =
      simulate(model, cfg.ramp, cfg.input, start, cycles, {cfg.solver.event_grid});
  CsvWriter csv(out);
  csv << "cycle" << "t_s" << "d_event_s" << "saturated";
  for (Eigen::Index i = 0; i < model.dimension(); ++i) csv << "x_" + std::to_string(i + 1);
  csv.end_row();
  int index = 0;
  for (const CycleRecord& rec : traj.cycles) {
    csv << index++ << rec.t_start << rec.d_event
        << (rec.saturation == Saturation::None ? 0 : 1);
    for (Eigen::Index i = 0; i < model.dimension(); ++i) csv << rec.x_start(i);
    csv.end_row();
  }
}

void write_equivalence(const ConverterConfig& cfg, const DutyRange& range, int harmonics,
                       std::ostream& out) {
  require_count(harmonics, 1);
  const BuckPlant plant = require_buck(cfg);
  const std::vector<double> grid = duty_grid(range);
  CsvWriter csv(out);
  csv << "D" << "d_s" << "series_lhs" << "matrix_rhs" << "rel_error" << "tail_estimate";
  csv.end_row();
  for (const double duty : grid) {
    const double d = switching_instant(cfg.edge, duty, cfg.ramp.period);
    const EquivalenceCheck check = equivalence_residual(plant, d, harmonics);
    csv << duty << d << check.series_lhs << check.matrix_rhs
        << check.residual / std::abs(check.matrix_rhs) << check.tail_estimate;
    csv.end_row();
  }
}

void write_equivalence(const ConverterConfig& cfg, const DutyRange& range, std::ostream& out) {
  write_equivalence(cfg, range, cfg.solver.harmonics, out);
}

void write_taylor_compare(const ConverterConfig& cfg, const DutyRange& range, int order,
                          std::ostream& out) {
  const BuckPlant plant = require_buck(cfg);
  const std::vector<double> grid = duty_grid(range);
  CsvWriter csv(out);
  csv << "D" << "vs_tem_V" << "vs_taylor_V" << "rel_diff";
  csv.end_row();
  for (const double duty : grid) {
    const double exact = vs_critical_tem(plant, duty);
    const double approx = vs_critical_taylor(plant, duty, order);
    csv << duty << exact << approx << std::abs(approx - exact) / std::abs(exact);
    csv.end_row();
  }
}

void write_sweep(const ConverterConfig& cfg, const SweepSpec& spec, std::ostream& out) {
  if (!(spec.lo < spec.hi) || spec.count < 2) {
    throw Error(ErrorCode::Domain, "sweep needs lo < hi and count >= 2");
  }
  if (spec.parameter == SweepParameter::Resistance &&
      !std::holds_alternative<BuckPreset>(cfg.source)) {
    throw Error(ErrorCode::Config, "sweeping R needs preset = vmc_buck");
  }
  if (spec.parameter == SweepParameter::Duty && !(spec.lo > 0.0 && spec.hi < 1.0)) {
    throw Error(ErrorCode::Domain, "duty range must lie inside (0, 1)");
  }
  CsvWriter csv(out);
  csv << "value" << "duty" << "vr_V" << "spectral_radius" << "classification"
      << "pdb_residual_V_per_s";
  if (spec.simulate) csv << "sim_period";
  csv.end_row();
  for (const double value : linear_grid(spec.lo, spec.hi, spec.count)) {
    ConverterConfig point = cfg;
    switch (spec.parameter) {
      case SweepParameter::Vs: point.input.vs = value; break;
      case SweepParameter::Vr: point.input.vr = value; break;
      case SweepParameter::Period: point.ramp.period = value; break;
      case SweepParameter::Resistance: std::get<BuckPreset>(point.source).resistance = value; break;
      case SweepParameter::Duty: break;
    }
    try {
      const SwitchedLinearModel model = point.model();
      SteadyState ss;
      if (spec.parameter == SweepParameter::Duty) {
        const double d = switching_instant(point.edge, value, point.ramp.period);
        point.input = trim_reference(model, point.ramp, point.input, d);
        ss = steady_state_at_instant(model, point.ramp, point.input, d);
      } else {
        ss = solve_periodic_orbit(model, point.ramp, point.input, steady_options(point));
      }
      const StabilityReport report =
          classify(jacobian(model, point.ramp, point.input, ss), point.solver.class_tol);
      csv << value << ss.duty << point.input.vr << report.spectral_radius
          << to_string(report.classification)
          << pdb_residual(model, point.ramp, point.input, ss);
      if (spec.simulate) csv << simulated_period(point, model, ss);
    } catch (const Error& e) {
      csv << value << kNaN << point.input.vr << kNaN << error_label(e) << kNaN;
      if (spec.simulate) csv << 0;
    }
    csv.end_row();
  }
}

namespace {

Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw Error(ErrorCode::Domain, "cannot parse '" + item + "' as a number");
    }
  }
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(i) = values[i];
  return v;
}

ConverterConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Config, "cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sampled-data stability analysis of fixed-frequency PWM converters", "pwmstab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  bool quiet = false;
  std::string lambda_text = "-1,0";
  int count = 0;
  int harmonics = 0;
  bool sweep_simulate = false;
  int order = 2;
  int cycles = 100;
  std::string x0_text;
  bool from_steady = false;
  std::string sweep_param;
  double sweep_min = 0.0;
  double sweep_max = 0.0;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "converter config file")->required();
    sub->add_option("--out", out_path, "write CSV to FILE instead of stdout");
    sub->add_flag("--quiet", quiet, "suppress informational messages");
  };
  const auto duty_flags = [](CLI::App* sub, DutyRange& r) {
    sub->add_option("--dmin", r.lo, "first duty value")->capture_default_str();
    sub->add_option("--dmax", r.hi, "last duty value")->capture_default_str();
    sub->add_option("--count", r.count, "number of duty values")->capture_default_str();
  };
  DutyRange vs_range{0.1, 0.9, 81};
  DutyRange splot_range{0.1, 0.9, 81};
  DutyRange equiv_range{0.1, 0.9, 81};
  DutyRange taylor_range{0.05, 0.95, 19};

  auto* steady = app.add_subcommand("steady", "periodic orbit: d, duty, x0(0), x0(d)");
  common(steady);
  auto* eigs = app.add_subcommand("eigs", "Jacobian eigenvalues and classification");
  common(eigs);
  auto* sweep_vs = app.add_subcommand("sweep-vs", "buck period-doubling boundary v_s(D)");
  common(sweep_vs);
  auto* splot = app.add_subcommand("splot", "S(lambda, D) over a duty grid");
  common(splot);
  splot->add_option("--lambda", lambda_text, "lambda as re,im")->capture_default_str();
  auto* fplot = app.add_subcommand("fplot", "F(theta) over (-pi, pi]");
  common(fplot);
  fplot->add_option("--count", count, "number of angles")->default_val(360);
  auto* nyq = app.add_subcommand("nyquist", "discrete-time Nyquist curve over [0, w_s]");
  common(nyq);
  nyq->add_option("--count", count, "number of frequencies")->default_val(361);
  auto* sim = app.add_subcommand("simulate", "time-domain cycles from the simulation oracle");
  common(sim);
  sim->add_option("--cycles", cycles, "number of clock cycles")->capture_default_str();
  sim->add_option("--x0", x0_text, "initial state (added to the steady state with --from-steady)");
  sim->add_flag("--from-steady", from_steady, "start from the periodic orbit x0(0)");
  auto* equiv = app.add_subcommand("check-equivalence",
                                   "harmonic series vs closed matrix form of the LEM boundary");
  common(equiv);
  equiv->add_option("--harmonics", harmonics, "series truncation K (default: solver harmonics)");
  auto* taylor = app.add_subcommand("taylor-compare", "truncated Taylor boundary vs exact TEM");
  common(taylor);
  taylor->add_option("--order", order, "Taylor order (0, 1 or 2)")->capture_default_str();
  auto* sweep = app.add_subcommand("sweep", "stability along a parameter sweep");
  common(sweep);
  sweep->add_option("--param", sweep_param, "vs | vr | D | R | T")->required();
  sweep->add_option("--min", sweep_min, "first value")->required();
  sweep->add_option("--max", sweep_max, "last value")->required();
  sweep->add_option("--count", count, "number of values")->default_val(51);
  sweep->add_flag("--simulate", sweep_simulate, "add the simulated period of each point");
  auto* config_cmd = app.add_subcommand("config", "print the canonical form of a config");
  common(config_cmd);

  duty_flags(sweep_vs, vs_range);
  duty_flags(splot, splot_range);
  duty_flags(equiv, equiv_range);
  duty_flags(taylor, taylor_range);

  std::vector<std::string> argv_store{"pwmstab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "pwmstab: " << e.what() << "\n";
    return kExitUsage;
  }

  std::ostringstream buffer;
  try {
    const ConverterConfig cfg = load_config(config_path);
    if (*steady) {
      write_steady(cfg, buffer);
    } else if (*eigs) {
      write_eigs(cfg, buffer);
    } else if (*sweep_vs) {
      write_sweep_vs(cfg, vs_range, buffer);
    } else if (*splot) {
      const Vector l = parse_vector(lambda_text);
      if (l.size() != 2) throw Error(ErrorCode::Domain, "--lambda must be re,im");
      write_splot(cfg, Complex(l(0), l(1)), splot_range, buffer);
    } else if (*fplot) {
      write_fplot(cfg, count, buffer);
    } else if (*nyq) {
      write_nyquist(cfg, count, buffer);
    } else if (*sim) {
      std::optional<Vector> x0;
      if (!x0_text.empty()) x0 = parse_vector(x0_text);
      write_simulation(cfg, cycles, x0, from_steady, buffer);
    } else if (*equiv) {
      if (equiv->count("--harmonics") > 0) {
        write_equivalence(cfg, equiv_range, harmonics, buffer);
      } else {
        write_equivalence(cfg, equiv_range, buffer);
      }
    } else if (*taylor) {
      write_taylor_compare(cfg, taylor_range, order, buffer);
    } else if (*sweep) {
      write_sweep(cfg,
                  {parse_sweep_parameter(sweep_param), sweep_min, sweep_max, count, sweep_simulate},
                  buffer);
    } else if (*config_cmd) {
      buffer << emit_config(cfg);
    }
  } catch (const Error& e) {
    err << "pwmstab: " << to_string(e.code()) << " error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }

  if (out_path.empty()) {
    out << buffer.str();
  } else {
    std::ofstream file(out_path, std::ios::binary);
    if (!file || !(file << buffer.str())) {
      err << "pwmstab: cannot write '" << out_path << "'\n";
      return kExitUsage;
    }
    if (!quiet) err << "pwmstab: wrote " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace pwmstab
