#include "pwmstab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace pwmstab {

namespace {

[[noreturn]] void fail(int line, const std::string& message) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << message;
  throw Error(ErrorCode::Config, os.str());
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model", {"preset", "L", "C", "R", "g", "edge", "A1", "A2", "B1", "B2", "D", "E1", "E2"}},
      {"ramp", {"Vl", "Vh", "T"}},
      {"input", {"vr", "vs"}},
      {"solver",
       {"grid_points", "d_tol", "class_tol", "harmonics", "event_grid", "transient", "tail",
        "period_tol"}},
  };
  return keys;
}

double parse_number(std::string_view token, int line, const std::string& key) {
  token = trim(token);
  double value = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (token.empty() || ec != std::errc() || ptr != end) {
    fail(line, "syntax error: '" + std::string(token) + "' is not a number (key " + key + ")");
  }
  if (!std::isfinite(value)) fail(line, "value of " + key + " must be finite");
  return value;
}

int parse_int(std::string_view token, int line, const std::string& key) {
  token = trim(token);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    fail(line, "syntax error: '" + std::string(token) + "' is not an integer (key " + key + ")");
  }
  return value;
}

Matrix parse_matrix(std::string_view text, int line, const std::string& key) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t semi = text.find(';', start);
    const std::string_view row_text =
        text.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start);
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= row_text.size()) {
      const std::size_t comma = row_text.find(',', pos);
      row.push_back(parse_number(
          row_text.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                               : comma - pos),
          line, key));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(line, "syntax error: rows of " + key + " have different lengths");
    }
    rows.push_back(std::move(row));
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

RowVector parse_row(std::string_view text, int line, const std::string& key) {
  const Matrix m = parse_matrix(text, line, key);
  if (m.rows() != 1) {
    std::ostringstream os;
    os << "dimension mismatch: " << key << " must be a single row, got " << m.rows() << " rows";
    fail(line, os.str());
  }
  return m.row(0);
}

const Entry& require(const Section& section, const std::string& name, const std::string& key) {
  const auto it = section.find(key);
  if (it == section.end()) fail(0, "missing key '" + key + "' in [" + name + "]");
  return it->second;
}

Edge parse_edge(const Entry& e) {
  const std::string_view v = trim(e.value);
  if (v == "TEM") return Edge::TEM;
  if (v == "LEM") return Edge::LEM;
  fail(e.line, "edge must be TEM or LEM, got '" + std::string(v) + "'");
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i > 0) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ", ";
      out += format_number(m(i, j));
    }
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

SwitchedLinearModel ConverterConfig::model() const {
  if (const auto* preset = std::get_if<BuckPreset>(&source)) {
    return preset_vmc_buck(preset->inductance, preset->capacitance, preset->resistance,
                           preset->gain, edge);
  }
  SwitchedLinearModel m = std::get<SwitchedLinearModel>(source);
  m.edge = edge;
  return m;
}

ConverterConfig parse_config(std::string_view text) {
  std::map<std::string, Section> sections;
  std::string current;
  int line_no = 0;
  bool any_content = false;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    const std::string_view line = trim(raw);
    if (!line.empty() && line.front() != '#' && line.front() != ';') {
      any_content = true;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, "syntax error: unterminated section header");
        current = std::string(trim(line.substr(1, line.size() - 2)));
        if (!allowed_keys().contains(current)) fail(line_no, "unknown section [" + current + "]");
        if (sections.contains(current)) fail(line_no, "duplicate section [" + current + "]");
        sections[current];
      } else {
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "syntax error: expected key = value");
        if (current.empty()) fail(line_no, "syntax error: key outside of any section");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) fail(line_no, "syntax error: empty key");
        if (!allowed_keys().at(current).contains(key)) {
          fail(line_no, "unknown key '" + key + "' in [" + current + "]");
        }
        if (sections[current].contains(key)) fail(line_no, "duplicate key '" + key + "'");
        sections[current][key] = {value, line_no};
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!any_content) fail(line_no, "syntax error: empty configuration");
  for (const char* name : {"model", "ramp", "input"}) {
    if (!sections.contains(name)) fail(0, std::string("missing section [") + name + "]");
  }

  ConverterConfig cfg;
  const Section& model = sections["model"];
  cfg.edge = parse_edge(require(model, "model", "edge"));
  const auto number = [](const Section& s, const std::string& name, const std::string& key) {
    const Entry& e = require(s, name, key);
    return parse_number(e.value, e.line, key);
  };

  if (const auto it = model.find("preset"); it != model.end()) {
    if (trim(it->second.value) != "vmc_buck") {
      fail(it->second.line, "unknown preset '" + it->second.value + "'");
    }
    for (const char* raw_key : {"A1", "A2", "B1", "B2", "D", "E1", "E2"}) {
      if (model.contains(raw_key)) {
        fail(model.at(raw_key).line,
             std::string("key '") + raw_key + "' is not allowed together with a preset");
      }
    }
    BuckPreset preset{number(model, "model", "L"), number(model, "model", "C"),
                      number(model, "model", "R"), number(model, "model", "g")};
    if (!(preset.inductance > 0.0) || !(preset.capacitance > 0.0) ||
        !(preset.resistance > 0.0)) {
      fail(0, "buck preset needs positive L, C and R");
    }
    cfg.source = preset;
  } else {
    for (const char* preset_key : {"L", "R", "g"}) {
      if (model.contains(preset_key)) {
        fail(model.at(preset_key).line,
             std::string("key '") + preset_key + "' requires preset = vmc_buck");
      }
    }
    const auto matrix = [&](const std::string& key) {
      const Entry& e = require(model, "model", key);
      return parse_matrix(e.value, e.line, key);
    };
    const auto row = [&](const std::string& key) {
      const Entry& e = require(model, "model", key);
      return parse_row(e.value, e.line, key);
    };
    SwitchedLinearModel m;
    m.a1 = matrix("A1");
    m.a2 = matrix("A2");
    m.b1 = matrix("B1");
    m.b2 = matrix("B2");
    m.c = row("C");
    m.dmat = row("D");
    if (model.contains("E1")) m.e1 = row("E1");
    if (model.contains("E2")) m.e2 = row("E2");
    m.edge = cfg.edge;
    try {
      m.validate();
    } catch (const Error& e) {
      fail(0, std::string("dimension mismatch: ") + e.what());
    }
    cfg.source = std::move(m);
  }

  const Section& ramp = sections["ramp"];
  cfg.ramp = {number(ramp, "ramp", "Vl"), number(ramp, "ramp", "Vh"), number(ramp, "ramp", "T")};
  try {
    cfg.ramp.validate();
  } catch (const Error& e) {
    fail(0, e.what());
  }

  const Section& input = sections["input"];
  cfg.input = {number(input, "input", "vr"), number(input, "input", "vs")};

  if (sections.contains("solver")) {
    const Section& s = sections["solver"];
    SolverSettings& o = cfg.solver;
    const auto opt_int = [&](const char* key, int& out, int min) {
      if (const auto it = s.find(key); it != s.end()) {
        out = parse_int(it->second.value, it->second.line, key);
        if (out < min) fail(it->second.line, std::string(key) + " is out of range");
      }
    };
    const auto opt_pos = [&](const char* key, double& out) {
      if (const auto it = s.find(key); it != s.end()) {
        out = parse_number(it->second.value, it->second.line, key);
        if (!(out > 0.0)) fail(it->second.line, std::string(key) + " must be positive");
      }
    };
    opt_int("grid_points", o.grid_points, 2);
    opt_pos("d_tol", o.d_tol);
    opt_pos("class_tol", o.class_tol);
    opt_int("harmonics", o.harmonics, 1);
    opt_int("event_grid", o.event_grid, 1);
    opt_int("transient", o.transient, 0);
    opt_int("tail", o.tail, 64);
    opt_pos("period_tol", o.period_tol);
  }
  return cfg;
}

std::string emit_config(const ConverterConfig& config) {
  std::ostringstream os;
  os << "[model]\n";
  if (const auto* preset = std::get_if<BuckPreset>(&config.source)) {
    os << "preset = vmc_buck\n"
       << "L = " << format_number(preset->inductance) << "\n"
       << "C = " << format_number(preset->capacitance) << "\n"
       << "R = " << format_number(preset->resistance) << "\n"
       << "g = " << format_number(preset->gain) << "\n";
  } else {
    const auto& m = std::get<SwitchedLinearModel>(config.source);
    os << "A1 = " << format_matrix(m.a1) << "\n"
       << "A2 = " << format_matrix(m.a2) << "\n"
       << "B1 = " << format_matrix(m.b1) << "\n"
       << "B2 = " << format_matrix(m.b2) << "\n"
       << "C = " << format_matrix(m.c) << "\n"
       << "D = " << format_matrix(m.dmat) << "\n";
    if (m.e1) os << "E1 = " << format_matrix(*m.e1) << "\n";
    if (m.e2) os << "E2 = " << format_matrix(*m.e2) << "\n";
  }
  os << "edge = " << to_string(config.edge) << "\n\n";
  os << "[ramp]\n"
     << "Vl = " << format_number(config.ramp.vl) << "\n"
     << "Vh = " << format_number(config.ramp.vh) << "\n"
     << "T = " << format_number(config.ramp.period) << "\n\n";
  os << "[input]\n"
     << "vr = " << format_number(config.input.vr) << "\n"
     << "vs = " << format_number(config.input.vs) << "\n\n";
  const SolverSettings& s = config.solver;
  os << "[solver]\n"
     << "grid_points = " << s.grid_points << "\n"
     << "d_tol = " << format_number(s.d_tol) << "\n"
     << "class_tol = " << format_number(s.class_tol) << "\n"
     << "harmonics = " << s.harmonics << "\n"
     << "event_grid = " << s.event_grid << "\n"
     << "transient = " << s.transient << "\n"
     << "tail = " << s.tail << "\n"
     << "period_tol = " << format_number(s.period_tol) << "\n";
  return os.str();
}

}  // namespace pwmstab
