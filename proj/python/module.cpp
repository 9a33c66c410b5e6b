#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pwmstab/buck.hpp"
#include "pwmstab/config.hpp"
#include "pwmstab/sim_oracle.hpp"
#include "pwmstab/stability.hpp"

namespace py = pybind11;
using namespace pwmstab;

namespace {

py::dict curve_to_dict(const BoundaryCurve& curve) {
  std::vector<double> parameter;
  std::vector<Complex> value;
  std::vector<double> reference;
  std::vector<bool> singular;
  for (const CurveSample& s : curve.samples) {
    parameter.push_back(s.parameter);
    value.push_back(s.value);
    reference.push_back(s.reference);
    singular.push_back(s.singular);
  }
  py::dict out;
  out["parameter_name"] = curve.parameter;
  out["parameter"] = parameter;
  out["value"] = value;
  out["reference"] = reference;
  out["singular"] = singular;
  return out;
}

BuckPlant require_buck(const SwitchedLinearModel& model, const RampSignal& ramp) {
  auto plant = buck_plant(model, ramp);
  if (!plant) throw Error(ErrorCode::Precondition, "model does not have the buck structure");
  return *plant;
}

}  // namespace

PYBIND11_MODULE(pwmstab, m) {
  m.doc() = "Sampled-data stability analysis of fixed-frequency PWM converters";

  static py::handle error_type = py::exception<Error>(m, "Error").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = error_type(std::string(e.what()));
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), instance.ptr());
    }
  });

  py::enum_<Edge>(m, "Edge").value("TEM", Edge::TEM).value("LEM", Edge::LEM);

  py::enum_<Classification>(m, "Classification")
      .value("Stable", Classification::Stable)
      .value("PeriodDoubling", Classification::PeriodDoubling)
      .value("SaddleNode", Classification::SaddleNode)
      .value("NeimarkSacker", Classification::NeimarkSacker)
      .value("Unstable", Classification::Unstable)
      .def_property_readonly("label", [](Classification c) { return to_string(c); });

  py::class_<RampSignal>(m, "RampSignal")
      .def(py::init([](double vl, double vh, double period) {
             RampSignal r{vl, vh, period};
             r.validate();
             return r;
           }),
           py::arg("vl"), py::arg("vh"), py::arg("period"))
      .def_readwrite("vl", &RampSignal::vl)
      .def_readwrite("vh", &RampSignal::vh)
      .def_readwrite("period", &RampSignal::period)
      .def_property_readonly("amplitude", &RampSignal::amplitude)
      .def_property_readonly("slope", [](const RampSignal& r) { return ramp_slope(r); });

  py::class_<InputVector>(m, "InputVector")
      .def(py::init<double, double>(), py::arg("vr"), py::arg("vs"))
      .def_readwrite("vr", &InputVector::vr)
      .def_readwrite("vs", &InputVector::vs);

  py::class_<SwitchedLinearModel>(m, "SwitchedLinearModel")
      .def(py::init([](Matrix a1, Matrix a2, Matrix b1, Matrix b2, RowVector c, RowVector d,
                       Edge edge) {
             SwitchedLinearModel model{std::move(a1), std::move(a2), std::move(b1),
                                       std::move(b2), std::move(c), std::move(d),
                                       std::nullopt, std::nullopt, edge};
             model.validate();
             return model;
           }),
           py::arg("a1"), py::arg("a2"), py::arg("b1"), py::arg("b2"), py::arg("c"),
           py::arg("d"), py::arg("edge") = Edge::TEM)
      .def_readonly("a1", &SwitchedLinearModel::a1)
      .def_readonly("a2", &SwitchedLinearModel::a2)
      .def_readonly("b1", &SwitchedLinearModel::b1)
      .def_readonly("b2", &SwitchedLinearModel::b2)
      .def_readonly("c", &SwitchedLinearModel::c)
      .def_readonly("d", &SwitchedLinearModel::dmat)
      .def_readonly("edge", &SwitchedLinearModel::edge)
      .def_property_readonly("dimension", &SwitchedLinearModel::dimension);

  m.def("vmc_buck", &preset_vmc_buck, py::arg("inductance"), py::arg("capacitance"),
        py::arg("resistance"), py::arg("gain"), py::arg("edge") = Edge::TEM,
        "Voltage-mode buck converter with a proportional compensator.");

  py::class_<SteadyState>(m, "SteadyState")
      .def_readonly("d", &SteadyState::d)
      .def_readonly("duty", &SteadyState::duty)
      .def_readonly("x0_start", &SteadyState::x0_start)
      .def_readonly("x0_switch", &SteadyState::x0_switch)
      .def_readonly("y_switch", &SteadyState::y_switch)
      .def_readonly("candidate_count", &SteadyState::candidate_count);

  m.def(
      "steady_state",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, const InputVector& u,
         int grid_points) { return solve_periodic_orbit(model, ramp, u, {grid_points, 1e-12}); },
      py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("grid_points") = 256);
  m.def("steady_state_at_instant", &steady_state_at_instant, py::arg("model"), py::arg("ramp"),
        py::arg("u"), py::arg("d"));
  m.def("trim_reference", &trim_reference, py::arg("model"), py::arg("ramp"), py::arg("u"),
        py::arg("d"));

  py::class_<JacobianDecomposition>(m, "JacobianDecomposition")
      .def_readonly("phi", &JacobianDecomposition::phi)
      .def_readonly("phi0", &JacobianDecomposition::phi0)
      .def_readonly("gamma", &JacobianDecomposition::gamma)
      .def_readonly("psi", &JacobianDecomposition::psi);
  m.def("jacobian", &jacobian, py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("ss"));

  py::class_<StabilityReport>(m, "StabilityReport")
      .def_readonly("eigenvalues", &StabilityReport::eigenvalues)
      .def_readonly("spectral_radius", &StabilityReport::spectral_radius)
      .def_readonly("classification", &StabilityReport::classification)
      .def_readonly("critical_eigenvalue", &StabilityReport::critical_eigenvalue);
  m.def("classify", &classify, py::arg("jacobian"), py::arg("tol") = 1e-4);

  m.def("critical_value", &general_critical_value, py::arg("model"), py::arg("ramp"),
        py::arg("u"), py::arg("ss"), py::arg("lam"));
  m.def("pdb_residual", py::overload_cast<const SwitchedLinearModel&, const RampSignal&,
                                          const InputVector&, const SteadyState&>(&pdb_residual),
        py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("ss"));
  m.def("snb_residual", &snb_residual, py::arg("model"), py::arg("ramp"), py::arg("u"),
        py::arg("ss"));
  m.def("nsb_residual", &nsb_residual, py::arg("model"), py::arg("ramp"), py::arg("u"),
        py::arg("ss"), py::arg("theta"));

  m.def(
      "s_plot",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, const InputVector& u,
         Complex lam, const std::vector<double>& duties) {
        return curve_to_dict(s_plot(fixed_input_family(model, ramp, u), lam, duties));
      },
      py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("lam"), py::arg("duties"));
  m.def(
      "f_plot",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, const InputVector& u,
         const SteadyState& ss, const std::vector<double>& thetas) {
        return curve_to_dict(f_plot(model, ramp, u, ss, thetas));
      },
      py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("ss"), py::arg("thetas"));
  m.def(
      "nyquist",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, const InputVector& u,
         const SteadyState& ss, const std::vector<double>& omegas) {
        return curve_to_dict(nyquist(model, ramp, u, ss, omegas));
      },
      py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("ss"), py::arg("omegas"));

  m.def(
      "vs_critical",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, double duty) {
        return vs_critical(require_buck(model, ramp), model.edge, duty);
      },
      py::arg("model"), py::arg("ramp"), py::arg("duty"),
      "Period-doubling boundary of a buck converter, in volts.");
  m.def(
      "vs_critical_taylor",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, double duty, int order) {
        return vs_critical_taylor(require_buck(model, ramp), duty, order);
      },
      py::arg("model"), py::arg("ramp"), py::arg("duty"), py::arg("order") = 2);
  m.def(
      "equivalence_residual",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, double d, int harmonics) {
        const EquivalenceCheck c = equivalence_residual(require_buck(model, ramp), d, harmonics);
        py::dict out;
        out["series_lhs"] = c.series_lhs;
        out["matrix_rhs"] = c.matrix_rhs;
        out["residual"] = c.residual;
        out["tail_estimate"] = c.tail_estimate;
        return out;
      },
      py::arg("model"), py::arg("ramp"), py::arg("d"), py::arg("harmonics") = 2000);

  m.def(
      "simulate",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, const InputVector& u,
         const Vector& x0, int cycles) {
        const Trajectory traj = simulate(model, ramp, u, x0, cycles, {});
        std::vector<Vector> states;
        std::vector<double> events;
        for (const CycleRecord& rec : traj.cycles) {
          states.push_back(rec.x_start);
          events.push_back(rec.d_event);
        }
        states.push_back(traj.final_state);
        return py::make_tuple(states, events);
      },
      py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("x0"), py::arg("cycles"),
      "Returns (states at each clock edge including the last, switching instants).");
  m.def(
      "fd_jacobian",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, const InputVector& u,
         const Vector& x, double eps) { return fd_jacobian(model, ramp, u, x, eps, {}); },
      py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("x"), py::arg("eps") = 1e-6);
  m.def(
      "simulated_period",
      [](const SwitchedLinearModel& model, const RampSignal& ramp, const InputVector& u,
         const Vector& x0, int transient) -> py::object {
        PeriodOptions options;
        options.transient = transient;
        const PeriodResult r = simulate_period(model, ramp, u, x0, options);
        if (!r.periodic) return py::none();
        return py::int_(r.period);
      },
      py::arg("model"), py::arg("ramp"), py::arg("u"), py::arg("x0"), py::arg("transient") = 512,
      "Period of the simulated steady behaviour in clock cycles, or None.");

  m.def(
      "load_config",
      [](const std::string& text) {
        const ConverterConfig cfg = parse_config(text);
        return py::make_tuple(cfg.model(), cfg.ramp, cfg.input);
      },
      py::arg("text"), "Parses config text into (model, ramp, input).");
}
