#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qdec/channels.hpp"
#include "qdec/entropy.hpp"
#include "qdec/experiment.hpp"
#include "qdec/protocols.hpp"
#include "qdec/qmat.hpp"

namespace py = pybind11;

namespace {

qdec::DensityOp density(const qdec::Mat& m, const qdec::Labels& labels, const std::vector<qdec::Index>& dims) {
  return qdec::DensityOp(qdec::LabeledOperator(qdec::SubsystemSpace(labels, dims), m));
}

py::dict result_dict(const qdec::ProtocolResult& r) {
  py::dict d;
  d["protocol"] = r.protocol;
  d["measured_error"] = r.measured_error;
  d["bound"] = r.bound;
  d["rates"] = r.rates;
  d["diagnostics"] = r.diagnostics;
  d["n"] = r.n;
  d["witness_tries"] = r.witness_tries;
  d["witness_anomaly"] = r.witness_anomaly;
  return d;
}

}  // namespace

PYBIND11_MODULE(_qdec, m) {
  m.doc() = "Decoupling bounds, Renyi entropies and protocol runs";
  m.attr("__version__") = qdec::tool_version();

  m.def("xi", &qdec::xi, py::arg("eps"));
  m.def("trace_norm", py::overload_cast<const qdec::Mat&>(&qdec::trace_norm), py::arg("m"));
  m.def("fidelity", py::overload_cast<const qdec::Mat&, const qdec::Mat&>(&qdec::fidelity), py::arg("rho"),
        py::arg("sigma"));
  m.def("renyi_entropy", &qdec::renyi_entropy, py::arg("rho"), py::arg("alpha"));
  m.def(
      "d_alpha",
      [](const qdec::Mat& rho, const qdec::Mat& sigma, double alpha, const std::string& dtype) {
        return qdec::d_alpha(rho, sigma, alpha, qdec::parse_dtype(dtype));
      },
      py::arg("rho"), py::arg("sigma"), py::arg("alpha"), py::arg("dtype") = "old");
  m.def(
      "h_cond",
      [](const qdec::Mat& rho, const qdec::Labels& labels, const std::vector<qdec::Index>& dims,
         const qdec::Labels& cond, double alpha, const std::string& dtype, bool optimized) {
        qdec::RenyiParams p{alpha, qdec::parse_dtype(dtype),
                            optimized ? qdec::Arrow::optimized : qdec::Arrow::fixed_marginal};
        return qdec::h_cond(density(rho, labels, dims), cond, p).value;
      },
      py::arg("rho"), py::arg("labels"), py::arg("dims"), py::arg("cond"), py::arg("alpha"),
      py::arg("dtype") = "old", py::arg("optimized") = true);
  m.def(
      "theta",
      [](const std::string& keyword, qdec::Index dim) {
        return qdec::theta(qdec::map_from_keyword(keyword, qdec::SubsystemSpace::single("A", dim))).theta;
      },
      py::arg("map"), py::arg("dim"));
  m.def(
      "fuchs_vdg",
      [](const qdec::Mat& rho, const qdec::Mat& sigma) {
        qdec::SubsystemSpace s = qdec::SubsystemSpace::single("A", rho.rows());
        qdec::FuchsReport r = qdec::fuchs_vdg_check({s, rho}, {s, sigma});
        return py::make_tuple(r.lower, r.tn, r.upper, r.holds);
      },
      py::arg("rho"), py::arg("sigma"));
  m.def(
      "protocol",
      [](const std::string& name, const std::string& fixture, int n, qdec::Index dim, std::uint64_t seed,
         double alpha, qdec::Index m_unitaries, qdec::Index dim_a0, qdec::Index dim_a1) {
        qdec::Fixture fx = qdec::load_fixture(fixture, seed);
        qdec::ProtocolOptions opt;
        opt.alpha = alpha;
        auto pure = [&]() -> const qdec::PureState& {
          if (!fx.pure) throw std::invalid_argument(name + " needs a pure fixture");
          return *fx.pure;
        };
        if (name == "schumacher") return result_dict(qdec::schumacher_run(pure(), n, dim, seed, opt));
        if (name == "fqsw") return result_dict(qdec::fqsw_run(pure(), n, dim_a1, dim, seed, opt));
        if (name == "merge") return result_dict(qdec::merge_run(pure(), n, {dim_a0, dim_a1, dim}, seed, opt));
        if (name == "destroy") return result_dict(qdec::destroy_run(fx.rho, n, m_unitaries, seed, dim, opt));
        throw std::invalid_argument("unknown protocol '" + name + "'");
      },
      py::arg("name"), py::arg("fixture"), py::arg("n"), py::arg("dim"), py::arg("seed"), py::arg("alpha") = 1.5,
      py::arg("m") = 1, py::arg("dim_a0") = 1, py::arg("dim_a1") = 1);
  m.def(
      "run_config",
      [](const std::string& text) {
        qdec::RunReport r = qdec::run(qdec::parse_config(text));
        return qdec::to_csv(r);
      },
      py::arg("text"), "run a sectioned key=value config and return the CSV report");
  m.def("builtin_fixtures", &qdec::builtin_fixtures);

  py::register_exception<qdec::ConfigError>(m, "ConfigError", PyExc_ValueError);
}
