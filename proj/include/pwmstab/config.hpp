#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "pwmstab/model.hpp"

namespace pwmstab {

struct BuckPreset {
  double inductance = 0.0;
  double capacitance = 0.0;
  double resistance = 0.0;
  double gain = 0.0;

  bool operator==(const BuckPreset&) const = default;
};

struct SolverSettings {
  int grid_points = 256;
  double d_tol = 1e-12;  ///< relative to T
  double class_tol = 1e-4;
  int harmonics = 2000;  ///< series truncation for check-equivalence
  int event_grid = 512;
  int transient = 512;
  int tail = 64;
  double period_tol = 1e-6;

  bool operator==(const SolverSettings&) const = default;
};

/// Parsed converter description. The model comes either from the buck
/// preset or from raw matrices; `edge` applies to both.
struct ConverterConfig {
  std::variant<BuckPreset, SwitchedLinearModel> source;
  Edge edge = Edge::TEM;
  RampSignal ramp;
  InputVector input;
  SolverSettings solver;

  SwitchedLinearModel model() const;

  bool operator==(const ConverterConfig&) const = default;
};

/// Parses the sectioned key/value format:
///
///   # comment            (also ';')
///   [model]              preset = vmc_buck with L, C, R, g
///                        or raw A1, A2, B1, B2, C, D, optional E1, E2
///                        edge = TEM | LEM
///   [ramp]               Vl, Vh, T
///   [input]              vr, vs
///   [solver]             optional: grid_points, d_tol, class_tol, harmonics,
///                        event_grid, transient, tail, period_tol
///
/// Matrices are rows separated by ';', entries by ','. Every failure raises
/// Error(Config) with the line number or the offending matrix in the message.
ConverterConfig parse_config(std::string_view text);

/// Canonical text form; parse_config(emit_config(c)) == c.
std::string emit_config(const ConverterConfig& config);

/// printf-style %.17g, as used in every CSV; round-trips doubles exactly.
std::string format_number(double value);

}  // namespace pwmstab
