#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fadrf/errors.hpp"
#include "fadrf/estimators.hpp"
#include "fadrf/fda_core.hpp"
#include "fadrf/fsw.hpp"
#include "fadrf/io.hpp"
#include "fadrf/simlab.hpp"
#include "fadrf/tuning.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace fadrf;

namespace {

GridPtr make_grid(const Eigen::VectorXd& points) { return std::make_shared<const Grid>(points); }

FunctionalSample as_curve(const GridPtr& grid, const Eigen::VectorXd& values) {
  return FunctionalSample(grid, values);
}

AdrfFit fit(const Dataset& data, const std::string& method_text, int q, double h, int k,
            const std::string& rho_text, int components) {
  const Method method = parse_method(method_text);
  const RhoFamily rho = RhoFamily::parse(rho_text);
  auto model = std::make_shared<const FpcaModel>(fpca(data.z(), components > 0 ? components : q));
  switch (method) {
    case Method::naive: return fit_naive(data, model, q);
    case Method::fsw: return fit_fsw(data, model, estimate_weights(data, h, k, rho), q);
    case Method::outcome_regression: return fit_or(data, model, q);
    case Method::doubly_robust: {
      const AdrfFit outcome = fit_or(data, model, q);
      return fit_dr(data, model, outcome, estimate_weights(data, h, k, rho), q);
    }
  }
  throw Error(ErrorCategory::parameter, "unknown method");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Functional average dose-response estimation";

  static py::exception<Error> error(m, "FadrfError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string text = std::string(category_name(e.category())) + ": " + e.what();
      py::object type = error;
      py::object instance = type(text);
      instance.attr("category") = std::string(category_name(e.category()));
      PyErr_SetObject(error.ptr(), instance.ptr());
    }
  });

  m.def("uniform_grid", [](double lo, double hi, int size) { return Grid::uniform(lo, hi, size)->points(); },
        "lo"_a, "hi"_a, "size"_a);
  m.def("quadrature_weights", [](const Eigen::VectorXd& points) { return Grid(points).weights(); }, "points"_a);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Eigen::VectorXd& grid, const Eigen::MatrixXd& z, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& y) {
             return Dataset(CurveSet(make_grid(grid), z), x, y);
           }),
           "grid"_a, "z"_a, "x"_a, "y"_a)
      .def_property_readonly("grid", [](const Dataset& d) { return d.grid()->points(); })
      .def_property_readonly("z", [](const Dataset& d) { return d.z().values(); })
      .def_property_readonly("x", &Dataset::x)
      .def_property_readonly("y", &Dataset::y)
      .def("subset", [](const Dataset& d, const std::vector<int>& rows) { return d.subset(rows); })
      .def("__len__", &Dataset::size);

  py::class_<FpcaModel, std::shared_ptr<FpcaModel>>(m, "FpcaModel")
      .def_readonly("eigenvalues", &FpcaModel::eigenvalues)
      .def_readonly("eigenfunctions", &FpcaModel::eigenfunctions)
      .def_readonly("scores", &FpcaModel::scores)
      .def_property_readonly("mean", [](const FpcaModel& f) { return f.mean.values(); })
      .def_property_readonly("positive_rank", &FpcaModel::positive_rank)
      .def("project", [](const FpcaModel& f, const Eigen::VectorXd& z) {
        return pc_scores(f, as_curve(f.grid(), z));
      }, "z"_a);

  m.def("fpca", [](const Dataset& d, int components) {
    return std::make_shared<FpcaModel>(fpca(d.z(), components));
  }, "data"_a, "components"_a);

  py::class_<AdrfFit>(m, "AdrfFit")
      .def_property_readonly("method", [](const AdrfFit& f) { return std::string(method_name(f.method)); })
      .def_readonly("a_hat", &AdrfFit::a_hat)
      .def_readonly("b_coeffs", &AdrfFit::b_coeffs)
      .def_property_readonly("b_curve", [](const AdrfFit& f) { return f.b_curve.values(); })
      .def_readonly("theta_hat", &AdrfFit::theta_hat)
      .def_readonly("iterations", &AdrfFit::iterations)
      .def_readonly("converged", &AdrfFit::converged)
      .def_property_readonly("q", [](const AdrfFit& f) { return f.tuning.q; })
      .def("adrf", [](const AdrfFit& f, const Eigen::VectorXd& z) {
        return adrf_eval(f, as_curve(f.b_curve.grid(), z));
      }, "z"_a)
      .def("ate", [](const AdrfFit& f, const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) {
        const GridPtr& g = f.b_curve.grid();
        return ate(f, as_curve(g, z1), as_curve(g, z2));
      }, "z1"_a, "z2"_a)
      .def("to_text", &format_fit);

  m.def("parse_fit", [](const std::string& text) { return parse_fit(text); }, "text"_a);

  m.def("fit", &fit, "data"_a, "method"_a, "q"_a, "h"_a = 1.0, "k"_a = 2, "rho"_a = "et",
        "components"_a = 0,
        "Fit one estimator. `components` is the number of PCs kept (defaults to q).");

  m.def("weights", [](const Dataset& d, double h, int k, const std::string& rho) {
    const WeightFit w = estimate_weights(d, h, k, RhoFamily::parse(rho));
    return py::make_tuple(w.pi, w.raw_pi, w.failures());
  }, "data"_a, "h"_a, "k"_a, "rho"_a = "et");

  py::class_<TuningResult>(m, "TuningResult")
      .def_readonly("h", &TuningResult::h)
      .def_readonly("k", &TuningResult::k)
      .def_readonly("q", &TuningResult::q)
      .def_readonly("loss", &TuningResult::loss)
      .def_property_readonly("table", [](const TuningResult& r) {
        py::list rows;
        for (const TuningCandidate& c : r.table)
          rows.append(py::dict("h"_a = c.h, "k"_a = c.k, "q"_a = c.q, "loss"_a = c.loss, "error"_a = c.error));
        return rows;
      });

  m.def("select_tuning",
        [](const Dataset& d, const std::string& method, int folds, std::vector<double> h_grid,
           std::vector<int> k_grid, std::vector<int> q_grid, std::uint64_t seed, const std::string& rho) {
          CvConfig c;
          c.folds = folds;
          c.h_grid = std::move(h_grid);
          c.k_grid = std::move(k_grid);
          c.q_grid = std::move(q_grid);
          c.seed = seed;
          c.rho = RhoFamily::parse(rho);
          py::gil_scoped_release release;
          return select_tuning(d, c, parse_method(method));
        },
        "data"_a, "method"_a, "folds"_a = 10, "h_grid"_a = std::vector<double>{},
        "k_grid"_a = std::vector<int>{}, "q_grid"_a = std::vector<int>{}, "seed"_a = 1, "rho"_a = "et");

  m.def("simulate",
        [](const std::string& model, int n, std::uint64_t seed, int grid_points, bool independent) {
          SimModel s;
          s.id = parse_model(model);
          s.n = n;
          s.seed = seed;
          s.grid_points = grid_points;
          s.independent_covariates = independent;
          SimulatedData d = generate(s);
          py::dict truth("b"_a = d.b_true.values(), "a"_a = d.a_true, "coefficients"_a = d.coefficients);
          truth["theta"] = d.theta_true ? py::cast(*d.theta_true) : py::none();
          return py::make_tuple(std::move(d.data), truth);
        },
        "model"_a = "i", "n"_a = 200, "seed"_a = 1, "grid_points"_a = 101, "independent_covariates"_a = false);

  m.def("ise", [](const Eigen::VectorXd& grid, const Eigen::VectorXd& b_hat, const Eigen::VectorXd& b) {
    const GridPtr g = make_grid(grid);
    return ise(as_curve(g, b_hat), as_curve(g, b));
  }, "grid"_a, "b_hat"_a, "b"_a);

  m.def("load_dataset", [](const std::string& curves, const std::string& table, const std::string& outcome) {
    DatasetFiles f;
    f.functional_path = curves;
    f.tabular_path = table;
    f.outcome = outcome;
    return load_dataset(f);
  }, "curves"_a, "table"_a, "outcome"_a = "y");
}
