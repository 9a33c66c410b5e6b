#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "pwmstab/config.hpp"

namespace pwmstab {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitNoOrbit = 3,
  kExitSingular = 4,
  kExitNoConvergence = 5,
};

int exit_code_for(ErrorCode code);

struct DutyRange {
  double lo = 0.1;
  double hi = 0.9;
  int count = 81;
};

enum class SweepParameter { Vs, Vr, Duty, Resistance, Period };

struct SweepSpec {
  SweepParameter parameter = SweepParameter::Vs;
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;
  bool simulate = false;  ///< add the simulated period of each point
};

SweepParameter parse_sweep_parameter(std::string_view name);

// CSV writers. Each emits a header naming the columns (with units) and one
// row per sample; numbers use 17 significant digits.

void write_steady(const ConverterConfig& cfg, std::ostream& out);
void write_eigs(const ConverterConfig& cfg, std::ostream& out);
void write_sweep_vs(const ConverterConfig& cfg, const DutyRange& range, std::ostream& out);
void write_splot(const ConverterConfig& cfg, Complex lambda, const DutyRange& range,
                 std::ostream& out);
void write_fplot(const ConverterConfig& cfg, int count, std::ostream& out);
void write_nyquist(const ConverterConfig& cfg, int count, std::ostream& out);
void write_simulation(const ConverterConfig& cfg, int cycles, const std::optional<Vector>& x0,
                      bool from_steady_state, std::ostream& out);
void write_equivalence(const ConverterConfig& cfg, const DutyRange& range, int harmonics,
                       std::ostream& out);
/// `harmonics` taken from the config's solver settings.
void write_equivalence(const ConverterConfig& cfg, const DutyRange& range, std::ostream& out);
void write_taylor_compare(const ConverterConfig& cfg, const DutyRange& range, int order,
                          std::ostream& out);
void write_sweep(const ConverterConfig& cfg, const SweepSpec& spec, std::ostream& out);

/// Entry point of the `pwmstab` tool. `args` excludes the program name.
/// Never throws; returns one of the ExitCode values.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace pwmstab
