#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "heatpot/config.hpp"
#include "heatpot/driver.hpp"
#include "heatpot/errors.hpp"
#include "heatpot/fgt.hpp"
#include "heatpot/helmholtz.hpp"
#include "heatpot/problems.hpp"

namespace py = pybind11;
using namespace heatpot;

namespace {

TreeField build_field_py(const py::function& f, int ncomp, double eps, int order, int max_level) {
    auto fn = [&f, ncomp](double x, double y, std::span<double> out) {
        py::object r = f(x, y);
        if (ncomp == 1 && (py::isinstance<py::float_>(r) || py::isinstance<py::int_>(r))) {
            out[0] = r.cast<double>();
            return;
        }
        auto seq = r.cast<std::vector<double>>();
        for (int c = 0; c < ncomp; ++c) out[c] = seq.at(c);
    };
    return build_adaptive(fn, ncomp, eps, order, max_level);
}

std::vector<double> eval_py(const TreeField& f, double x, double y) {
    std::vector<double> out(f.ncomp());
    f.eval(x, y, out);
    return out;
}

py::dict simulate_py(const std::string& config_text, const std::string& output_dir) {
    auto cfg = RunConfig::parse(config_text);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    auto s = run_simulation(cfg);
    py::dict d;
    d["steps"] = s.steps;
    d["t_final"] = s.t_final;
    d["final_leaf_count"] = s.final_leaf_count;
    d["final_point_count"] = s.final_point_count;
    d["leaf_trajectory"] = s.leaf_trajectory;
    if (s.l2_error_vs_exact >= 0.0) d["l2_error_vs_exact"] = s.l2_error_vs_exact;
    return d;
}

} // namespace

PYBIND11_MODULE(_heatpot, m) {
    m.doc() = "space-time adaptive solver for periodic parabolic problems: "
              "adaptive quadtree Chebyshev fields, fast Gauss transforms, "
              "Helmholtz projections and Adams multistep marching";

    py::register_exception<ConfigError>(m, "HeatpotConfigError");
    py::register_exception<Error>(m, "HeatpotError");

    py::class_<TreeField>(m, "Field")
        .def_property_readonly("ncomp", &TreeField::ncomp)
        .def_property_readonly("order", &TreeField::order)
        .def_property_readonly("time", &TreeField::time)
        .def_property_readonly("num_leaves", [](const TreeField& f) { return f.tree().leaf_count(); })
        .def_property_readonly("max_depth", [](const TreeField& f) { return f.tree().max_depth(); })
        .def("eval", &eval_py, py::arg("x"), py::arg("y"),
             "field components at a point of the unit torus")
        .def("eval1",
             [](const TreeField& f, double x, double y, int comp) { return f.eval1(x, y, comp); },
             py::arg("x"), py::arg("y"), py::arg("comp") = 0)
        .def("leaf_levels",
             [](const TreeField& f) {
                 std::vector<int> levels;
                 for (auto id : f.tree().leaves()) levels.push_back(f.tree().node(id).box.level);
                 return levels;
             })
        .def("mean", &TreeField::mean, py::arg("comp") = 0)
        .def("max_abs", &TreeField::max_abs, py::arg("comp") = 0)
        .def("max_tail_error", &TreeField::max_tail_error)
        .def("save", [](const TreeField& f, const std::string& path) { save_field(f, path); })
        .def_static("load", [](const std::string& path) { return load_field(path); })
        .def("__repr__", [](const TreeField& f) {
            std::ostringstream os;
            os << "<heatpot.Field ncomp=" << f.ncomp() << " order=" << f.order()
               << " leaves=" << f.tree().leaf_count() << " t=" << f.time() << ">";
            return os.str();
        });

    m.def("build_field", &build_field_py, py::arg("f"), py::arg("ncomp") = 1,
          py::arg("eps") = 1e-9, py::arg("order") = 8, py::arg("max_level") = 12,
          "resolve f(x, y) on an adaptive quadtree");

    m.def("heat_kernel",
          [](double x, double y, double tau, double D) { return heat_kernel(x, y, tau, D); },
          py::arg("x"), py::arg("y"), py::arg("tau"), py::arg("D") = 1.0,
          "periodic heat kernel value");

    m.def("gauss_transform",
          [](const TreeField& f, double delta, double eps, bool adaptive, int max_level) {
              if (eps <= 0.0) eps = f.resolve_eps() > 0 ? f.resolve_eps() : 1e-9;
              const auto& plan = fgt_plan(delta, eps, f.order());
              return adaptive ? plan.apply_adaptive(f, eps, max_level) : plan.apply(f);
          },
          py::arg("field"), py::arg("delta"), py::arg("eps") = 0.0, py::arg("adaptive") = true,
          py::arg("max_level") = 12,
          "periodic continuous Gauss transform (heat kernel with delta = 4 D tau)");

    m.def("poisson_solve",
          [](const TreeField& rhs, double eps, int grid_cap) {
              return poisson_solve_periodic(rhs, eps, grid_cap);
          },
          py::arg("rhs"), py::arg("eps") = 1e-9, py::arg("grid_cap") = 1024,
          "periodic Poisson solve; returns (phi, phi_x, phi_y) as a 3-component field");

    m.def("helmholtz_decompose",
          [](const TreeField& F, double eps, int grid_cap) {
              auto d = helmholtz_decompose(F, eps, grid_cap);
              return py::make_tuple(std::move(d.solenoidal), std::move(d.gradient),
                                    std::move(d.potential));
          },
          py::arg("field"), py::arg("eps") = 1e-9, py::arg("grid_cap") = 1024,
          "split a 2-component field into (solenoidal, gradient, potential)");

    m.def("vorticity", &vorticity, py::arg("field"));

    m.def("simulate", &simulate_py, py::arg("config_text"), py::arg("output_dir") = std::string(),
          "run a full simulation from config text; returns the summary");

    m.def("default_config", [] {
        RunConfig c;
        return c.emit();
    });
}
