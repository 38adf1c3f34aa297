#include <cmath>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "phasetunnel/config.hpp"
#include "phasetunnel/errors.hpp"
#include "phasetunnel/instanton.hpp"
#include "phasetunnel/spectral.hpp"
#include "phasetunnel/transform.hpp"
#include "phasetunnel/verify.hpp"
#include "phasetunnel/weber.hpp"
#include "phasetunnel/width_fit.hpp"

namespace py = pybind11;
using namespace phasetunnel;

namespace {

py::dict action_dict(const Model& m, bool both) {
    const EikonalField field(m);
    const CorrespondencePair pair = find_correspondence_pair(field);
    const ActionResult a = action(build_broken_path(field, pair));

    py::dict d;
    d["loop_imag"] = a.loop_imag;
    d["S"] = a.S;
    d["x_plus"] = pair.x_plus;
    d["eta"] = pair.eta;
    d["t_corr"] = pair.t_corr;
    if (both) {
        const double s_tr = TransformedPhases(field).caustic_and_S().S_mu;
        d["S_geometry"] = a.S;
        d["S_transform"] = s_tr;
        d["relative_gap"] = std::abs(s_tr - a.S) / a.S;
    }
    return d;
}

py::dict resonance_dict(const Model& m, const GridSpec& g, const ResonanceResult& r) {
    py::dict d;
    d["rho"] = r.rho;
    d["eigvec_residual"] = r.eigvec_residual;
    d["theta_used"] = r.theta_used;
    d["theta_drift"] = r.theta_drift;
    d["iterations"] = r.iterations;
    d["N"] = g.points;
    d["L"] = g.half_width;
    d["accepted"] = accept_sample(r, AcceptanceRule{});
    d["boundary_decay"] = boundary_decay(m, g, m.params.planck_h);
    return d;
}

py::list report_list(const VerifyReport& rep) {
    py::list out;
    for (const CheckResult& c : rep.checks) {
        py::dict d;
        d["name"] = c.name;
        d["passed"] = c.passed;
        d["measured"] = c.measured;
        d["threshold"] = c.threshold;
        d["detail"] = c.detail;
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Resonance widths of a two-level semiclassical tunnelling model";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception<CacheError>(m, "CacheError", PyExc_RuntimeError);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("n", &ModelParams::n)
        .def_readwrite("mu", &ModelParams::mu)
        .def_readwrite("tau", &ModelParams::tau)
        .def_readwrite("c", &ModelParams::coupling_c)
        .def_readwrite("h", &ModelParams::planck_h)
        .def_readwrite("delta", &ModelParams::strip_delta);

    py::class_<Model>(m, "Model")
        .def(py::init([](int n, double mu, double tau, double c, double h) { return Model::radial(n, mu, tau, c, h); }),
             py::arg("n") = 2, py::arg("mu") = 0.1, py::arg("tau") = 0.1, py::arg("c") = 1.0, py::arg("h") = 1e-3)
        .def_static("anisotropic",
                    [](const MatR& a, double mu, double tau, double c, double h) {
                        Model md = Model::radial(static_cast<int>(a.rows()), mu, tau, c, h);
                        md.potential = PotentialModel::anisotropic(a);
                        return md;
                    },
                    py::arg("A"), py::arg("mu") = 0.1, py::arg("tau") = 0.1, py::arg("c") = 1.0, py::arg("h") = 1e-3)
        .def_readwrite("params", &Model::params)
        .def("harmonic_level", [](const Model& md, int j) { return harmonic_levels(md, j).level(j); }, py::arg("j") = 1)
        .def("v2", [](const Model& md, const VecR& x) { return v2_eval(md.potential, x); });

    m.def("action", &action_dict, py::arg("model"), py::arg("both") = false,
          "Correspondence pair and action of the broken instanton; with both=True also S in the transformed picture.");

    m.def("radial_oracle",
          [](const Model& md) {
              const RadialOracle o = action_radial_oracle(md);
              py::dict d;
              d["x_star"] = o.x_star;
              d["eta"] = o.eta;
              d["loop_imag"] = o.loop_imag;
              d["S"] = o.S;
              return d;
          },
          py::arg("model"));

    m.def("phi2",
          [](const Model& md, const VecR& x) {
              const Phi2Value v = EikonalField(md).phi2_at(x);
              return py::make_tuple(v.value, v.grad);
          },
          py::arg("model"), py::arg("x"));

    m.def("weber",
          [](double eps, int k_max, double z_min, double z_max, double tol) {
              const WeberEval ev = weber_family(eps, k_max, z_min, z_max, tol);
              py::dict d;
              d["z"] = ev.z_grid;
              d["values"] = ev.values;
              d["derivatives"] = ev.derivatives;
              d["residuals"] = ev.residuals;
              return d;
          },
          py::arg("epsilon"), py::arg("k_max") = 0, py::arg("z_min") = 0.0, py::arg("z_max") = 6.0,
          py::arg("tol") = 1e-10);

    m.def("default_theta", &default_theta, py::arg("h"));

    m.def("resonance",
          [](const Model& md, int points, double half_width, double theta, int level) {
              GridSpec g = grid_policy(md, md.params.planck_h);
              if (points > 0) g.points = points;
              if (half_width > 0.0) g.half_width = half_width;
              ResonanceResult r;
              {
                  py::gil_scoped_release release;
                  r = compute_resonance(md, g, theta, std::nullopt, level);
              }
              return resonance_dict(md, g, r);
          },
          py::arg("model"), py::arg("points") = 0, py::arg("half_width") = 0.0, py::arg("theta") = 0.0,
          py::arg("level") = 1,
          "Resonance near e_level h with its validation data; grid from the default policy unless overridden.");

    m.def("fit_width",
          [](const std::vector<double>& h, const std::vector<double>& im_rho, const std::vector<double>& residual) {
              if (h.size() != im_rho.size()) throw InputError("fit_width: h and im_rho differ in length");
              std::vector<WidthSample> s;
              for (std::size_t k = 0; k < h.size(); ++k)
                  s.push_back({h[k], cd(0.0, im_rho[k]), residual.empty() ? 0.0 : residual.at(k)});
              const WidthFit f = fit_width(s);
              py::dict d;
              d["S_fit"] = f.S_fit;
              d["S_stderr"] = f.S_stderr;
              d["q"] = f.prefactor_exponent;
              d["q_stderr"] = f.q_stderr;
              d["f00"] = std::exp(f.log_f00);
              d["residual_rms"] = f.residual_rms;
              d["S_constrained"] = f.S_constrained;
              d["f00_constrained"] = std::exp(f.log_f00_constrained);
              d["excluded"] = f.excluded;
              return d;
          },
          py::arg("h"), py::arg("im_rho"), py::arg("residual") = std::vector<double>{});

    m.def("config_fingerprint", [](const std::string& text) { return RunConfig::parse(text).fingerprint(); },
          py::arg("text"));
    m.def("config_canonical", [](const std::string& text) { return RunConfig::parse(text).serialize(); },
          py::arg("text"));

    m.def("weber_checks", [](double tol) { return report_list(weber_battery(tol)); }, py::arg("tol") = 1e-10);
    m.def("fit_checks", [](unsigned seed) { return report_list(fit_battery(seed)); }, py::arg("seed") = 5);
}
