#include "qdec/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace qdec {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

Json to_json(const SubsystemSpace& s) { return Json{{"labels", s.labels()}, {"dims", s.dims()}}; }

Json to_json(const Mat& m) {
  Json re = Json::array(), im = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array(), c = Json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
    }
    re.push_back(std::move(r));
    im.push_back(std::move(c));
  }
  return Json{{"re", re}, {"im", im}};
}

Json to_json(const LabeledOperator& op) {
  Json j = to_json(op.space);
  Json mj = to_json(op.m);
  j["re"] = mj["re"];
  j["im"] = mj["im"];
  return j;
}

Json to_json(const DensityOp& rho) {
  Json j = to_json(rho.op());
  j["trace_class"] = rho.trace_class() == TraceClass::unit ? "unit" : "subnormalized";
  return j;
}

Json to_json(const PureState& psi) {
  Json j = to_json(psi.space);
  Json re = Json::array(), im = Json::array();
  for (Index i = 0; i < psi.amps.size(); ++i) {
    re.push_back(psi.amps(i).real());
    im.push_back(psi.amps(i).imag());
  }
  j["amps_re"] = re;
  j["amps_im"] = im;
  return j;
}

Json to_json(const KrausMap& t) {
  Json ops = Json::array();
  for (const Mat& k : t.kraus) ops.push_back(to_json(k));
  return Json{{"name", t.name},
              {"in", to_json(t.in_space)},
              {"out", to_json(t.out_space)},
              {"tp_class", to_string(t.tp_class)},
              {"kraus", ops}};
}

Json to_json(const McEstimate& e) {
  return Json{{"mean", e.mean}, {"stderr", e.std_err}, {"n", e.n}, {"ensemble", e.ensemble}};
}

SubsystemSpace space_from_json(const Json& j) {
  return SubsystemSpace(j.at("labels").get<Labels>(), j.at("dims").get<std::vector<Index>>());
}

Mat mat_from_json(const Json& j) {
  const Json& re = j.at("re");
  const Json* im = j.contains("im") ? &j.at("im") : nullptr;
  const Index rows = static_cast<Index>(re.size());
  const Index cols = rows ? static_cast<Index>(re.at(0).size()) : 0;
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(re.at(i).size()) != cols) throw std::invalid_argument("matrix json: ragged rows");
    for (Index j2 = 0; j2 < cols; ++j2) {
      const double a = re.at(i).at(j2).get<double>();
      const double b = im ? im->at(i).at(j2).get<double>() : 0.0;
      m(i, j2) = cplx(a, b);
    }
  }
  return m;
}

LabeledOperator operator_from_json(const Json& j) {
  SubsystemSpace s = space_from_json(j);
  Mat m = mat_from_json(j);
  if (m.rows() != s.total_dim() || m.cols() != s.total_dim())
    throw std::invalid_argument("operator json: matrix shape does not match " + s.describe());
  return LabeledOperator(s, m);
}

DensityOp density_from_json(const Json& j) {
  TraceClass tc = TraceClass::unit;
  if (j.contains("trace_class") && j.at("trace_class").get<std::string>() == "subnormalized")
    tc = TraceClass::subnormalized;
  return DensityOp(operator_from_json(j), tc);
}

PureState pure_from_json(const Json& j) {
  SubsystemSpace s = space_from_json(j);
  const Json& re = j.at("amps_re");
  Vec v(static_cast<Index>(re.size()));
  for (Index i = 0; i < v.size(); ++i) {
    const double b = j.contains("amps_im") ? j.at("amps_im").at(i).get<double>() : 0.0;
    v(i) = cplx(re.at(i).get<double>(), b);
  }
  return PureState(s, v);
}

KrausMap kraus_from_json(const Json& j) {
  std::vector<Mat> ops;
  for (const Json& k : j.at("kraus")) ops.push_back(mat_from_json(k));
  return KrausMap(space_from_json(j.at("in")), space_from_json(j.at("out")), std::move(ops),
                  j.value("name", std::string()));
}

McEstimate mc_estimate_from_json(const Json& j) {
  McEstimate e;
  e.mean = j.at("mean").get<double>();
  e.std_err = j.at("stderr").get<double>();
  e.n = j.at("n").get<Index>();
  e.ensemble = j.value("ensemble", std::string());
  return e;
}

}  // namespace qdec
