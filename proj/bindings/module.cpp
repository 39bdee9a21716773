#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pfhom/boundary_trace.hpp"
#include "pfhom/network.hpp"
#include "pfhom/paramhom.hpp"
#include "pfhom/polysystem.hpp"
#include "pfhom/sweep.hpp"
#include "pfhom/tracker.hpp"

namespace py = pybind11;
using namespace pfhom;

namespace {

std::vector<std::complex<double>> to_std(const VecC& v) {
  return {v.data(), v.data() + v.size()};
}

VecC from_std(const std::vector<std::complex<double>>& v) {
  VecC out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

std::vector<double> to_std_r(const VecR& v) { return {v.data(), v.data() + v.size()}; }

/// Network plus its polynomial form, the unit the python side works with.
struct PySystem {
  Network net;
  ParamPolySystem sys;

  static PySystem from_json(const std::string& text) {
    PySystem s;
    s.net = parse_network(text);
    s.sys = polynomialize(s.net);
    return s;
  }
  static PySystem from_file(const std::string& path) {
    PySystem s;
    s.net = load_network(path);
    s.sys = polynomialize(s.net);
    return s;
  }
};

py::dict set_to_dict(const SolutionSet& set) {
  py::list sols;
  for (const SolutionEntry& e : set.solutions) {
    py::dict d;
    d["point"] = to_std(e.point);
    d["residual"] = e.residual;
    d["suspect_singular"] = e.suspect_singular;
    d["condition"] = e.condition;
    d["path_indices"] = e.path_indices;
    sols.append(d);
  }
  py::dict out;
  out["solutions"] = sols;
  out["n_paths"] = set.n_paths;
  out["n_converged"] = set.n_converged;
  out["n_diverged"] = set.n_diverged;
  out["n_failed"] = set.n_failed;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "power flow solution space exploration via polynomial homotopy continuation";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<TrackOptions>(m, "TrackOptions")
      .def(py::init<>())
      .def_readwrite("dt_init", &TrackOptions::dt_init)
      .def_readwrite("dt_min", &TrackOptions::dt_min)
      .def_readwrite("dt_max", &TrackOptions::dt_max)
      .def_readwrite("newton_tol", &TrackOptions::newton_tol)
      .def_readwrite("newton_max_iter", &TrackOptions::newton_max_iter)
      .def_readwrite("divergence_norm", &TrackOptions::divergence_norm)
      .def_readwrite("endgame_t", &TrackOptions::endgame_t)
      .def_readwrite("refine_tol", &TrackOptions::refine_tol)
      .def_readwrite("dedup_tol", &TrackOptions::dedup_tol)
      .def_readwrite("endgame_jump", &TrackOptions::endgame_jump);

  py::class_<StartCache>(m, "StartCache")
      .def_property_readonly("lambda_star",
                             [](const StartCache& c) { return c.lambda_star; })
      .def_property_readonly("solutions",
                             [](const StartCache& c) {
                               std::vector<std::vector<std::complex<double>>> out;
                               for (const VecC& s : c.solutions) out.push_back(to_std(s));
                               return out;
                             })
      .def_readonly("seed", &StartCache::seed)
      .def_readonly("system_hash", &StartCache::system_hash)
      .def_readonly("bound_used", &StartCache::bound_used)
      .def("save", [](const StartCache& c, const std::string& path) { save_cache(path, c); })
      .def_static("load", &load_cache);

  py::class_<PySystem>(m, "System")
      .def_static("from_json", &PySystem::from_json)
      .def_static("from_file", &PySystem::from_file)
      .def_property_readonly("n_vars", [](const PySystem& s) { return s.sys.n_vars(); })
      .def_property_readonly("n_params", [](const PySystem& s) { return s.sys.n_params(); })
      .def_property_readonly("params", [](const PySystem& s) { return s.sys.params; })
      .def_property_readonly("var_names",
                             [](const PySystem& s) {
                               std::vector<std::string> names;
                               for (int i = 0; i < s.sys.n_vars(); ++i)
                                 names.push_back(s.sys.vars.name(i));
                               return names;
                             })
      .def_property_readonly("degrees", [](const PySystem& s) { return s.sys.degrees(); })
      .def("content_hash", [](const PySystem& s) { return s.sys.content_hash(); })
      .def("dump", [](const PySystem& s) { return s.sys.dump(); })
      .def("network_json", [](const PySystem& s) { return serialize_network(s.net); })
      .def("bounds",
           [](const PySystem& s) {
             BoundsReport b = bounds(s.sys);
             return py::make_tuple(b.naive_cbb, b.degree_product, b.binomial);
           })
      .def(
          "solve_generic",
          [](const PySystem& s, std::uint64_t seed, const TrackOptions& opts, int workers) {
            return solve_generic(s.sys, seed, opts, workers);
          },
          py::arg("seed"), py::arg("opts") = TrackOptions{}, py::arg("workers") = 1,
          py::call_guard<py::gil_scoped_release>())
      .def(
          "track_to",
          [](const PySystem& s, const StartCache& cache,
             const std::vector<std::complex<double>>& lam, const TrackOptions& opts,
             int workers) {
            SolutionSet set;
            {
              py::gil_scoped_release release;
              set = track_to(s.sys, cache, lam, opts, workers);
            }
            return set_to_dict(set);
          },
          py::arg("cache"), py::arg("lam"), py::arg("opts") = TrackOptions{},
          py::arg("workers") = 1)
      .def(
          "count_real",
          [](const PySystem& s, const StartCache& cache, const std::vector<double>& lam,
             double tau_real, const TrackOptions& opts, int workers) {
            CountRealResult r;
            {
              py::gil_scoped_release release;
              r = count_real(s.sys, cache, lam, tau_real, opts, workers);
            }
            py::dict out = set_to_dict(r.set);
            out["n_real"] = r.n_real;
            std::vector<std::vector<double>> real_pts;
            for (const VecR& p : r.partition.real_points) real_pts.push_back(to_std_r(p));
            out["real_points"] = real_pts;
            return out;
          },
          py::arg("cache"), py::arg("lam"), py::arg("tau_real") = 1e-6,
          py::arg("opts") = TrackOptions{}, py::arg("workers") = 1)
      .def(
          "solve_direct",
          [](const PySystem& s, const std::vector<double>& lam, std::uint64_t seed,
             double tau_real, const TrackOptions& opts, int workers) {
            py::dict out;
            {
              py::gil_scoped_release release;
              FixedSystem target = instantiate(s.sys, std::span<const double>(lam));
              SolutionSet set = solve_total_degree(target, seed, opts, workers);
              RealPartition part = classify_real(set, tau_real, target, opts.refine_tol);
              py::gil_scoped_acquire acquire;
              out = set_to_dict(set);
              out["n_real"] = part.real_points.size();
              std::vector<std::vector<double>> real_pts;
              for (const VecR& p : part.real_points) real_pts.push_back(to_std_r(p));
              out["real_points"] = real_pts;
            }
            return out;
          },
          py::arg("lam"), py::arg("seed") = 1, py::arg("tau_real") = 1e-6,
          py::arg("opts") = TrackOptions{}, py::arg("workers") = 1)
      .def(
          "sweep",
          [](const PySystem& s, const StartCache& cache,
             const std::vector<std::tuple<std::string, double, double, int>>& dims,
             const std::vector<std::pair<std::string, double>>& fixed, int workers,
             double tau_real, const TrackOptions& opts, const std::string& emit_base) {
            ParameterGrid grid;
            for (const auto& [name, lo, hi, steps] : dims)
              grid.swept.push_back({name, lo, hi, steps});
            grid.fixed = fixed;
            CountGrid cg;
            {
              py::gil_scoped_release release;
              cg = run_sweep(s.sys, cache, grid, workers, tau_real, opts);
              if (!emit_base.empty()) emit_maps(cg, {}, emit_base);
            }
            py::dict out;
            out["nx"] = cg.nx;
            out["ny"] = cg.ny;
            out["counts"] = cg.counts;
            out["diverged"] = cg.diverged;
            out["failed"] = cg.failed;
            out["boundary_edges"] = cg.boundary_edges;
            return out;
          },
          py::arg("cache"), py::arg("dims"), py::arg("fixed") = std::vector<std::pair<std::string, double>>{},
          py::arg("workers") = 1, py::arg("tau_real") = 1e-6, py::arg("opts") = TrackOptions{},
          py::arg("emit_base") = std::string())
      .def(
          "refine_edge",
          [](const PySystem& s, const StartCache& cache,
             const std::vector<std::tuple<std::string, double, double, int>>& dims,
             const std::vector<std::pair<std::string, double>>& fixed,
             const std::vector<double>& pt_a, const std::vector<double>& pt_b, double tol,
             double tau_real, const TrackOptions& opts) {
            ParameterGrid grid;
            for (const auto& [name, lo, hi, steps] : dims)
              grid.swept.push_back({name, lo, hi, steps});
            grid.fixed = fixed;
            EdgeRefinement r;
            {
              py::gil_scoped_release release;
              r = refine_edge(s.sys, cache, grid, pt_a, pt_b, tol, tau_real, opts);
            }
            py::dict out;
            out["point"] = r.point;
            out["count_a"] = r.count_a;
            out["count_b"] = r.count_b;
            out["anomaly"] = r.anomaly;
            out["probes"] = r.probes;
            return out;
          },
          py::arg("cache"), py::arg("dims"), py::arg("fixed"), py::arg("pt_a"), py::arg("pt_b"),
          py::arg("tol") = 1e-4, py::arg("tau_real") = 1e-6, py::arg("opts") = TrackOptions{})
      .def(
          "trace_boundary",
          [](const PySystem& s, const StartCache& cache, const std::vector<std::string>& swept,
             const std::vector<std::pair<std::string, double>>& fixed,
             const std::vector<double>& guess, double eps, int max_steps, int direction,
             double tau_real, const TrackOptions& opts, const std::string& out_csv) {
            py::dict out;
            {
              py::gil_scoped_release release;
              AugmentedSystem aug = build_augmented(s.sys, swept, fixed);
              VecR z0 = make_boundary_guess(s.sys, cache, swept, fixed, guess, tau_real, opts);
              TraceResult tr = trace_boundary(aug, z0, eps, max_steps, direction);
              if (!out_csv.empty()) write_trace_csv(out_csv, aug, tr);
              py::gil_scoped_acquire acquire;
              out["closed"] = tr.closed;
              out["failed"] = tr.failed;
              out["message"] = tr.message;
              std::vector<std::vector<double>> lam;
              std::vector<double> sig;
              std::vector<double> phi;
              for (const TracePoint& p : tr.points) {
                lam.push_back(p.lambda);
                sig.push_back(p.sigma_min);
                phi.push_back(p.phi_inf);
              }
              out["lambda"] = lam;
              out["sigma_min"] = sig;
              out["phi_inf"] = phi;
            }
            return out;
          },
          py::arg("cache"), py::arg("swept"), py::arg("fixed"), py::arg("guess"),
          py::arg("eps") = 0.05, py::arg("max_steps") = 20000, py::arg("direction") = 1,
          py::arg("tau_real") = 1e-6, py::arg("opts") = TrackOptions{},
          py::arg("out_csv") = std::string());
}
