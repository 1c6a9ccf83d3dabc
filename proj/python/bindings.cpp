#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "resbound/cli.hpp"
#include "resbound/errors.hpp"
#include "resbound/estimators.hpp"
#include "resbound/fisher.hpp"
#include "resbound/parallel.hpp"
#include "resbound/rng.hpp"
#include "resbound/sampling.hpp"
#include "resbound/semiparam.hpp"

namespace py = pybind11;
using namespace resbound;

namespace {

DensityGenerator make_generator(const std::string& name, double shape, int dim) {
  if (name == "gaussian") return DensityGenerator::gaussian(dim);
  if (name == "student_t") return DensityGenerator::student_t(shape, dim);
  if (name == "generalized_gaussian") return DensityGenerator::generalized_gaussian(shape, dim);
  throw ConfigError("unknown generator '" + name + "'");
}

Constraint parse_constraint(const std::string& s) {
  if (s == "trace") return Constraint::TraceN;
  if (s == "det") return Constraint::Det1;
  throw ConfigError("unknown constraint '" + s + "'");
}

SampleBatch batch_from(const ResModel& model, const Matrix& data) {
  SampleBatch b;
  b.data = data;
  b.model_fingerprint = model.fingerprint();
  return b;
}

py::dict fixed_point(const LocationScatter& e) {
  py::dict d;
  d["location"] = e.location;
  d["scatter"] = e.scatter;
  d["iterations"] = e.iterations;
  d["residual"] = e.residual;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cramer-Rao and semiparametric Cramer-Rao bounds for elliptical models";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ModelError>(m, "ModelError", base.ptr());
  py::register_exception<SingularFim>(m, "SingularFim", base.ptr());
  py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
  py::register_exception<EstimatorError>(m, "EstimatorError", base.ptr());

  py::class_<ResModel>(m, "Model")
      .def(py::init([](const Vector& mu, const Matrix& sigma, const std::string& generator, double shape,
                       const std::string& constraint) {
             return ResModel(mu, sigma, make_generator(generator, shape, static_cast<int>(mu.size())),
                             parse_constraint(constraint));
           }),
           py::arg("mu"), py::arg("sigma"), py::arg("generator") = "gaussian", py::arg("shape") = 0.0,
           py::arg("constraint") = "trace")
      .def_property_readonly("mu", &ResModel::mu)
      .def_property_readonly("sigma", &ResModel::sigma)
      .def_property_readonly("dim", &ResModel::dim)
      .def_property_readonly("fingerprint", [](const ResModel& r) { return to_hex(r.fingerprint()); })
      .def("logpdf", &ResModel::logpdf, py::arg("x"))
      .def("mahalanobis", &ResModel::mahalanobis, py::arg("x"))
      .def("__repr__", &ResModel::describe);

  m.def("derive_seed", [](std::uint64_t seed, const std::string& tag, std::uint64_t index) {
    return derive_seed(seed, tag, index);
  }, py::arg("seed"), py::arg("tag"), py::arg("index") = 0);
  m.def("set_threads", &set_threads, py::arg("n"));

  m.def("sample", [](const ResModel& model, Eigen::Index size, std::uint64_t seed) {
    return sample_res(model, size, seed).data;
  }, py::arg("model"), py::arg("m"), py::arg("seed"));

  m.def("score", [](const ResModel& model, const Matrix& data) {
    return score_values_analytic(model, batch_from(model, data));
  }, py::arg("model"), py::arg("data"), "Packed scores, one column per row of data.");

  m.def("crb", [](const ResModel& model, Eigen::Index size, std::uint64_t seed, const std::string& interest) {
    const BoundResult r = compute_crb(model, sample_res(model, size, seed),
                                      ParamPartition::make(model.dim(), parse_interest(interest)));
    py::dict d;
    d["crb"] = r.crb;
    d["crb_schur"] = r.crb_schur;
    d["fim"] = r.fim;
    d["efficient_fim"] = r.efficient_fim;
    d["route_agreement"] = r.route_agreement;
    return d;
  }, py::arg("model"), py::arg("m"), py::arg("seed"), py::arg("interest") = "mu");

  m.def("scrb", [](const ResModel& model, Eigen::Index size, std::uint64_t seed, const std::string& interest,
                   const std::vector<int>& schedule, const std::string& family) {
    const SieveTrace t = scrb(model, ParamPartition::make(model.dim(), parse_interest(interest)), schedule, size,
                              seed, parse_family(family));
    py::dict d;
    d["k"] = t.k_schedule;
    d["scrb_k"] = t.scrb_k;
    d["metric"] = t.metric;
    d["crb"] = t.crb_parametric;
    d["scrb"] = t.final_scrb;
    d["converged"] = t.converged;
    return d;
  }, py::arg("model"), py::arg("m"), py::arg("seed"), py::arg("interest") = "shape",
     py::arg("schedule") = std::vector<int>{2, 4, 8, 16}, py::arg("family") = "polylog");

  m.def("sample_moments", [](const Matrix& data, const std::string& c) {
    return fixed_point(sample_moments(data, parse_constraint(c)));
  }, py::arg("data"), py::arg("constraint") = "trace");
  m.def("tyler", [](const Matrix& data, std::optional<Vector> center, const std::string& c, double tol, int max_iter) {
    return fixed_point(tyler(data, center, parse_constraint(c), {tol, max_iter}));
  }, py::arg("data"), py::arg("center") = py::none(), py::arg("constraint") = "trace", py::arg("tol") = 1e-9,
     py::arg("max_iter") = 500);
  m.def("huber", [](const Matrix& data, double q, const std::string& c, double tol, int max_iter) {
    return fixed_point(huber_m(data, q, parse_constraint(c), {tol, max_iter}));
  }, py::arg("data"), py::arg("q") = 0.9, py::arg("constraint") = "trace", py::arg("tol") = 1e-9,
     py::arg("max_iter") = 500);
  m.def("student_t_mle", [](const Matrix& data, double nu, const std::string& c, double tol, int max_iter) {
    return fixed_point(student_t_mle(data, nu, parse_constraint(c), {tol, max_iter}));
  }, py::arg("data"), py::arg("nu") = 4.0, py::arg("constraint") = "trace", py::arg("tol") = 1e-9,
     py::arg("max_iter") = 500);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a resbound subcommand; returns (exit code, stdout, stderr).");
}
