#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "rcs/dispersion_lab.hpp"
#include "rcs/errors.hpp"
#include "rcs/nsc_solver.hpp"

namespace py = pybind11;
using namespace rcs;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

// Arrays are (components, z, y, x), matching the flat x-fastest storage.
ComplexArray to_numpy(const Field& f) {
  const auto n = static_cast<py::ssize_t>(f.grid().n());
  ComplexArray out({static_cast<py::ssize_t>(f.components()), n, n, n});
  std::memcpy(out.mutable_data(), f.values().data(), f.values().size() * sizeof(Complex));
  return out;
}

Field from_numpy(const ComplexArray& arr, double period, Representation rep) {
  if (arr.ndim() != 4 || arr.shape(1) != arr.shape(2) || arr.shape(2) != arr.shape(3)) {
    throw ContractError("expected an array of shape (components, n, n, n)");
  }
  Field f(make_grid(static_cast<int>(arr.shape(1)), period), static_cast<int>(arr.shape(0)), rep);
  std::memcpy(f.values().data(), arr.data(), f.values().size() * sizeof(Complex));
  return f;
}

SpectralState state_from_numpy(const ComplexArray& arr, double period, double t) {
  if (arr.ndim() != 4 || arr.shape(0) != 4) throw ContractError("state must have 4 components");
  return SpectralState(from_numpy(arr, period, Representation::spectral), t);
}

Sign parse_sign(const std::string& s) {
  if (s == "+" || s == "plus") return Sign::plus;
  if (s == "-" || s == "minus") return Sign::minus;
  throw ConfigError("sign must be '+' or '-'");
}

SimulationConfig config_from_dict(const py::dict& d) {
  const auto json_mod = py::module_::import("json");
  const std::string text = py::str(json_mod.attr("dumps")(d));
  return config_from_json(nlohmann::json::parse(text));
}

py::object json_to_py(const nlohmann::json& js) {
  return py::module_::import("json").attr("loads")(js.dump());
}

}  // namespace

PYBIND11_MODULE(_rcslab, m) {
  m.doc() = "Rotating low-Mach compressible flow: symbols, dispersion, norms and solver.";

  // Base first: later registrations are tried first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ModelBreakdownError>(m, "ModelBreakdownError", PyExc_RuntimeError);

  py::class_<Params>(m, "Params")
      .def(py::init(&Params::rescaled), py::arg("mu"), py::arg("eps"), py::arg("omega"),
           py::arg("gamma") = 2.0)
      .def_readwrite("mu", &Params::mu)
      .def_readwrite("mu_prime", &Params::mu_prime)
      .def_readwrite("eps", &Params::eps)
      .def_readwrite("omega", &Params::omega)
      .def_readwrite("gamma", &Params::gamma)
      .def("validate", &Params::validate)
      .def("__repr__", [](const Params& p) {
        return "Params(mu=" + std::to_string(p.mu) + ", eps=" + std::to_string(p.eps) +
               ", omega=" + std::to_string(p.omega) + ", gamma=" + std::to_string(p.gamma) + ")";
      });

  // symbol
  m.def("lambda_pm", [](const Vec3& xi, const std::string& s) { return lambda_pm(xi, parse_sign(s)); },
        py::arg("xi"), py::arg("sign"));
  m.def("eigen_quartic_coeffs", &eigen_quartic_coeffs, py::arg("xi"), py::arg("params"),
        "(c3, c2, c1, c0) of the per-mode eigen quartic");
  m.def(
      "viscous_charpoly",
      [](const Vec3& xi, const Params& p) {
        return characteristic_polynomial(double(kQuarticOrientation) * viscous_symbol(xi, p).entries);
      },
      py::arg("xi"), py::arg("params"), "characteristic polynomial of the viscous generator");
  m.def("quartic_roots", &quartic_roots, py::arg("coeffs"));
  m.def("slow_density_rate", &slow_density_rate, py::arg("xi"), py::arg("params"));
  m.def("hessian_det", [](const Vec3& xi, const std::string& s) { return hessian_det(xi, parse_sign(s)); },
        py::arg("xi"), py::arg("sign"));
  m.def(
      "hessian_det_closed_form",
      [](const Vec3& xi, const std::string& s) { return hessian_det_closed_form(xi, parse_sign(s)); },
      py::arg("xi"), py::arg("sign"));

  // lp_besov
  m.def(
      "besov_norm",
      [](const ComplexArray& spectral, double period, double s, double p, double sigma) {
        const Field f = from_numpy(spectral, period, Representation::spectral);
        return besov_norm(f, s, p, sigma).value;
      },
      py::arg("spectral"), py::arg("period"), py::arg("s"), py::arg("p"), py::arg("sigma"),
      "homogeneous Besov norm of a spectral field over the resolved blocks");
  m.def(
      "block_project",
      [](const ComplexArray& spectral, double period, int j) {
        return to_numpy(block_project(from_numpy(spectral, period, Representation::spectral), j));
      },
      py::arg("spectral"), py::arg("period"), py::arg("j"));

  // grid
  m.def(
      "forward_transform",
      [](const ComplexArray& physical, double period) {
        return to_numpy(transform(from_numpy(physical, period, Representation::physical), Direction::forward));
      },
      py::arg("physical"), py::arg("period"));
  m.def(
      "inverse_transform",
      [](const ComplexArray& spectral, double period) {
        return to_numpy(transform(from_numpy(spectral, period, Representation::spectral), Direction::inverse));
      },
      py::arg("spectral"), py::arg("period"));

  // propagator
  m.def(
      "evolve_viscous",
      [](const ComplexArray& state, double period, double t, const Params& p) {
        return to_numpy(evolve_viscous(state_from_numpy(state, period, 0.0), t, p).data());
      },
      py::arg("state"), py::arg("period"), py::arg("t"), py::arg("params"));
  m.def(
      "evolve_inviscid",
      [](const ComplexArray& state, double period, double t, double omega, double eps) {
        return to_numpy(evolve_inviscid(state_from_numpy(state, period, 0.0), t, omega, eps).data());
      },
      py::arg("state"), py::arg("period"), py::arg("t"), py::arg("omega"), py::arg("eps"));

  // dispersion_lab
  m.def(
      "axisymmetric_sup",
      [](int j, const std::string& s, double t, double resolution) {
        return axisymmetric_sup(j, parse_sign(s), t, resolution).sup;
      },
      py::arg("j"), py::arg("sign"), py::arg("t"), py::arg("resolution") = 1.0,
      "sup over x of the frequency-localized wave I_j(t, x)");
  m.def(
      "sup_decay_fit",
      [](int j, const std::string& s, double t_lo, double t_hi, int samples) {
        return json_to_py(to_json(sup_decay_fit(j, parse_sign(s), {t_lo, t_hi}, samples)));
      },
      py::arg("j"), py::arg("sign"), py::arg("t_lo"), py::arg("t_hi"), py::arg("samples") = 5);
  m.def(
      "strichartz_block_norm",
      [](int n, double period, int j, double q, double r, const Params& p, double T, std::size_t samples) {
        const SpectralState data = point_mass_data(make_grid(n, period));
        return strichartz_block_norm(data, j, q, r, p, T, samples).value;
      },
      py::arg("n"), py::arg("period"), py::arg("j"), py::arg("q"), py::arg("r"), py::arg("params"),
      py::arg("T"), py::arg("samples"), "block norm of the linear evolution of a point mass");
  m.def(
      "scaling_fit",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const ScalingFit f = scaling_fit(x, y);
        return py::make_tuple(f.slope, f.intercept, f.r2);
      },
      py::arg("x"), py::arg("y"), "(slope, intercept, r2) of log y on log x");

  // nsc_solver
  m.def(
      "make_initial_data",
      [](const py::dict& config) { return to_numpy(make_initial_data(config_from_dict(config)).data()); },
      py::arg("config"));
  m.def(
      "nonlinearity",
      [](const ComplexArray& state, double period, const Params& p) {
        return to_numpy(nonlinearity(state_from_numpy(state, period, 0.0), p).data());
      },
      py::arg("state"), py::arg("period"), py::arg("params"));
  m.def(
      "simulate",
      [](const py::dict& config, const std::string& out_dir) {
        const SimulationConfig c = config_from_dict(config);
        SimulationResult r(make_grid(8, 1.0));
        {
          py::gil_scoped_release release;
          r = simulate(c, out_dir);
        }
        py::dict out = json_to_py(summary_json(r));
        out["final_state"] = to_numpy(r.final_state.data());
        return out;
      },
      py::arg("config"), py::arg("out_dir") = "",
      "run the solver; returns the JSON summary plus the final spectral state");
  m.def(
      "omega_sweep",
      [](const py::dict& config, const std::vector<double>& omegas) {
        const SimulationConfig base = config_from_dict(config);
        std::vector<SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = omega_sweep(base, omegas);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["omega"] = r.omega;
          d["eps"] = r.eps;
          d["max_calA"] = r.max_calA;
          d["max_A"] = r.max_a_qr;
          d["max_E"] = r.max_e_eps;
          d["blowup"] = r.blowup;
          d["classification"] = to_string(r.classification);
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("omegas"));
}
