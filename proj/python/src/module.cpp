#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pgdflow/cases.hpp"
#include "pgdflow/io.hpp"
#include "pgdflow/serve.hpp"

namespace py = pybind11;
using namespace pgdflow;

namespace {

py::array_t<double> vec_array(const std::vector<Vec2>& v)
{
    py::array_t<double> a({static_cast<py::ssize_t>(v.size()), py::ssize_t{2}});
    auto r = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < v.size(); ++i) {
        r(i, 0) = v[i].x;
        r(i, 1) = v[i].y;
    }
    return a;
}

py::array_t<double> scalar_array(const std::vector<double>& v)
{
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::array_t<double> centroids(const Mesh2D& m)
{
    std::vector<Vec2> c(m.n_cells());
    for (int i = 0; i < m.n_cells(); ++i) c[i] = m.cell_centroid(i);
    return vec_array(c);
}

RunConfig config_from(const std::string& case_or_json)
{
    const auto first = case_or_json.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && case_or_json[first] == '{') return parse_config(case_or_json);
    return default_config(case_or_json);
}

py::dict solve_full(const std::string& case_or_json, double mu)
{
    const RunConfig cfg = config_from(case_or_json);
    const FlowCase fc = make_case(cfg.case_name, cfg.params);
    if (!fc.grid->contains(mu)) throw DomainError("mu outside the case interval");
    FlowState st;
    {
        py::gil_scoped_release release;
        st = simple_solve(fc.full_order(mu), cfg.params.solver);
    }
    py::dict d;
    d["case"] = cfg.case_name;
    d["mu"] = mu;
    d["nx"] = fc.mesh->nx();
    d["ny"] = fc.mesh->ny();
    d["centroids"] = centroids(*fc.mesh);
    d["u"] = vec_array(st.u.cells);
    d["p"] = scalar_array(st.p.cells);
    d["converged"] = st.converged;
    d["iterations"] = st.iterations;
    d["p_drop"] = fc.qoi_patch.empty() ? py::object(py::none()) : py::cast(pressure_drop(st.p, *fc.mesh, fc.qoi_patch));
    return d;
}

py::dict pgd_offline(const std::string& case_or_json, const std::string& out_dir)
{
    const RunConfig cfg = config_from(case_or_json);
    const FlowCase fc = make_case(cfg.case_name, cfg.params);
    EnrichmentResult r;
    {
        py::gil_scoped_release release;
        r = enrich(fc.data, compute_bc_modes(fc.bc_recipes, cfg.params.solver), cfg.ads);
        save_archive(out_dir, cfg, r.expansion, r.reports, r.status == EnrichmentStatus::converged ||
                                                               r.status == EnrichmentStatus::max_modes,
                     to_string(r.status), r.message);
    }
    py::list reports;
    for (const ModeReport& m : r.reports) {
        py::dict x;
        x["mode"] = m.mode;
        x["sigma_u"] = m.sigma_u;
        x["sigma_p"] = m.sigma_p;
        x["eta"] = m.eta;
        x["iterations"] = m.iterations;
        x["ads_converged"] = m.ads_converged;
        reports.append(x);
    }
    py::dict d;
    d["status"] = to_string(r.status);
    d["n_bc_modes"] = r.expansion.n_bc_modes();
    d["n_computed"] = r.expansion.n_computed();
    d["reports"] = reports;
    return d;
}

struct PyArchive {
    std::shared_ptr<const Archive> a;

    py::dict evaluate(double mu) const
    {
        const auto [u, p] = evaluate_online(a->expansion, mu);
        py::dict d;
        d["u"] = vec_array(u.cells);
        d["p"] = scalar_array(p.cells);
        d["p_drop"] = a->flow.qoi_patch.empty() ? py::object(py::none())
                                                : py::cast(pressure_drop(p, *a->flow.mesh, a->flow.qoi_patch));
        return d;
    }
};

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Finite-volume SIMPLE solver with a nonintrusive PGD reduced-order layer";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("case_names", &case_names);
    m.def("kovasznay_lambda", &kovasznay_lambda, py::arg("mu"));
    m.def(
        "kovasznay_exact",
        [](double x, double y, double mu) {
            const KovasznayPoint k = kovasznay_exact({x, y}, mu);
            return py::make_tuple(k.u.x, k.u.y, k.p);
        },
        py::arg("x"), py::arg("y"), py::arg("mu"));
    m.def(
        "default_config", [](const std::string& name) { return config_to_json(default_config(name)); },
        py::arg("case"), "Default run configuration of a case, as JSON text.");
    m.def("solve_full", &solve_full, py::arg("config"), py::arg("mu"),
          "Full-order solve at one parameter value. `config` is a case name or JSON config text.");
    m.def("pgd_offline", &pgd_offline, py::arg("config"), py::arg("out_dir"),
          "Greedy enrichment; writes an expansion archive to out_dir.");

    py::class_<PyArchive>(m, "Archive")
        .def(py::init([](const std::string& dir) { return PyArchive{std::make_shared<const Archive>(load_archive(dir))}; }),
             py::arg("path"))
        .def_property_readonly("case", [](const PyArchive& s) { return s.a->expansion.case_name; })
        .def_property_readonly("mu_range", [](const PyArchive& s) {
            return py::make_tuple(s.a->flow.grid->lo(), s.a->flow.grid->hi());
        })
        .def_property_readonly("n_modes", [](const PyArchive& s) { return s.a->expansion.modes.size(); })
        .def_property_readonly("n_computed", [](const PyArchive& s) { return s.a->expansion.n_computed(); })
        .def_property_readonly("complete", [](const PyArchive& s) { return s.a->complete; })
        .def_property_readonly("centroids", [](const PyArchive& s) { return centroids(*s.a->flow.mesh); })
        .def("evaluate", &PyArchive::evaluate, py::arg("mu"))
        .def("meta_json", [](const PyArchive& s) { return api_meta(*s.a).body; })
        .def(
            "evaluate_json",
            [](const PyArchive& s, const std::string& mu, const std::string& stride) {
                const HttpReply r = api_evaluate(*s.a, mu, stride);
                return py::make_tuple(r.status, r.body);
            },
            py::arg("mu"), py::arg("stride") = "");
}
