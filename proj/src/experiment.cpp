#include "qdec/experiment.hpp"

#include "qdec/decouple.hpp"
#include "qdec/entropy.hpp"
#include "qdec/protocols.hpp"
#include "qdec/twirl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#ifndef QDEC_VERSION
#define QDEC_VERSION "0.0.0"
#endif

namespace qdec {

namespace {

const std::set<std::string> kKinds = {"entropy", "theta", "twirl_check", "decouple", "protocol", "sweep"};
const std::set<std::string> kProtocols = {"schumacher", "fqsw", "merge", "destroy"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

long long parse_int(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s[0] == '-') throw std::invalid_argument("not an unsigned 64-bit integer: '" + s + "'");
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not an unsigned 64-bit integer: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not an unsigned 64-bit integer: '" + s + "'");
  return v;
}

template <class T, class F>
std::vector<T> parse_grid(const std::string& v, F conv) {
  std::vector<T> out;
  for (const std::string& item : split_list(v)) {
    if (item.empty()) throw std::invalid_argument("empty list entry");
    out.push_back(static_cast<T>(conv(item)));
  }
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

struct UnknownKey : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void assign(ExperimentConfig& c, const std::string& section, const std::string& key, const std::string& v) {
  if (section == "run") {
    if (key == "kind") c.kind = v;
    else if (key == "target") c.target = v;
    else if (key == "seed") c.seed = parse_u64(v);
    else if (key == "samples") c.samples = parse_int(v);
    else if (key == "dtype") c.dtype = v;
    else if (key == "fixture") c.fixture = v;
    else if (key == "map") c.map = v;
    else if (key == "output") c.output = v;
    else throw UnknownKey(key);
  } else if (section == "grid") {
    if (key == "alpha") c.alphas = parse_grid<double>(v, parse_double);
    else if (key == "n") c.ns = parse_grid<int>(v, parse_int);
    else if (key == "dim") c.dims = parse_grid<Index>(v, parse_int);
    else if (key == "m") c.ms = parse_grid<Index>(v, parse_int);
    else if (key == "map") {
      c.maps = split_list(v);
      if (c.maps.empty()) throw std::invalid_argument("empty grid");
    } else throw UnknownKey(key);
  } else if (section == "protocol") {
    if (key == "name") c.protocol = v;
    else if (key == "delta1") c.delta1 = parse_double(v);
    else if (key == "delta2") c.delta2 = parse_double(v);
    else if (key == "witness_tries") c.witness_tries = static_cast<int>(parse_int(v));
    else if (key == "policy") c.policy = v;
    else if (key == "dim_a0") c.dim_a0 = parse_int(v);
    else if (key == "dim_a1") c.dim_a1 = parse_int(v);
    else throw UnknownKey(key);
  } else {
    throw UnknownKey(key);
  }
}

std::vector<DivergenceType> dtypes_of(const std::string& d) {
  if (d == "both") return {DivergenceType::old, DivergenceType::sandwiched};
  return {parse_dtype(d)};
}

}  // namespace

std::string ExperimentConfig::effective_kind() const { return kind == "sweep" ? target : kind; }

ConfigError::ConfigError(std::vector<std::string> v)
    : std::invalid_argument([&] {
        std::string msg = "invalid config:";
        for (const std::string& s : v) msg += "\n  " + s;
        return msg;
      }()),
      violations(std::move(v)) {}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> errs;
  if (c.kind.empty()) errs.push_back("run.kind: missing");
  else if (!kKinds.count(c.kind)) errs.push_back("run.kind: unknown kind '" + c.kind + "'");
  if (c.kind == "sweep" && (c.target.empty() || c.target == "sweep" || !kKinds.count(c.target)))
    errs.push_back("run.target: a sweep needs one of entropy, theta, twirl_check, decouple, protocol");
  if (!c.seed) errs.push_back("run.seed: missing (runs are never seeded from the clock)");
  if (c.dtype != "both") {
    try {
      parse_dtype(c.dtype);
    } catch (const std::exception&) {
      errs.push_back("run.dtype: expected old, sandwiched or both, got '" + c.dtype + "'");
    }
  }
  const std::string k = c.effective_kind();
  if ((k == "twirl_check" || k == "decouple") && c.samples < 2)
    errs.push_back("run.samples: Monte Carlo kinds need at least 2 samples");
  for (double a : c.alphas)
    if (!(a > 0.0 && a <= 2.0)) errs.push_back("grid.alpha: " + format_double(a) + " is outside (0, 2]");
  for (int n : c.ns)
    if (n < 1) errs.push_back("grid.n: copies must be >= 1, got " + std::to_string(n));
  for (Index d : c.dims)
    if (d < 0) errs.push_back("grid.dim: dimensions must be >= 0, got " + std::to_string(d));
  for (Index m : c.ms)
    if (m < 1) errs.push_back("grid.m: M must be >= 1, got " + std::to_string(m));

  auto need = [&](bool present, const std::string& grid) {
    if (!present) errs.push_back("grid." + grid + ": empty grid (required for kind " + k + ")");
  };
  if (k == "entropy") need(!c.alphas.empty(), "alpha");
  if (k == "theta") {
    need(!c.maps.empty(), "map");
    need(!c.dims.empty(), "dim");
  }
  if (k == "twirl_check") need(!c.dims.empty(), "dim");
  if (k == "decouple") {
    need(!c.alphas.empty(), "alpha");
    need(!c.ns.empty(), "n");
  }
  if (k == "protocol") {
    if (!kProtocols.count(c.protocol))
      errs.push_back("protocol.name: expected schumacher, fqsw, merge or destroy, got '" + c.protocol + "'");
    need(!c.alphas.empty(), "alpha");
    need(!c.ns.empty(), "n");
    need(!c.dims.empty(), "dim");
    if (c.protocol == "destroy") need(!c.ms.empty(), "m");
  }
  if (c.delta1 < 0.0 || c.delta2 < 0.0) errs.push_back("protocol.delta1/delta2: must be >= 0");
  if (c.witness_tries < 1) errs.push_back("protocol.witness_tries: must be >= 1");
  if (c.policy != "best_of" && c.policy != "first_success")
    errs.push_back("protocol.policy: expected best_of or first_success, got '" + c.policy + "'");
  if (c.dim_a0 < 1 || c.dim_a1 < 1) errs.push_back("protocol.dim_a0/dim_a1: must be >= 1");
  return errs;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<std::string> errs;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw, section;
  int ln = 0;
  while (std::getline(in, raw)) {
    ++ln;
    const std::string where = "line " + std::to_string(ln) + ": ";
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errs.push_back(where + "unterminated section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "grid" && section != "protocol")
        errs.push_back(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errs.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (section.empty()) {
      errs.push_back(where + "key '" + key + "' outside any section");
      continue;
    }
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) {
      errs.push_back(where + "duplicate key " + full);
      continue;
    }
    try {
      assign(cfg, section, key, value);
    } catch (const UnknownKey&) {
      errs.push_back(where + "unknown key '" + key + "' in [" + section + "]");
    } catch (const std::exception& e) {
      errs.push_back(where + full + ": " + e.what());
    }
  }
  for (std::string& e : validate_config(cfg)) errs.push_back(std::move(e));
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return cfg;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto join = [](const auto& xs, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s;
  };
  auto as_int = [](auto x) { return std::to_string(x); };
  os << "[run]\n";
  os << "kind = " << c.kind << "\n";
  if (!c.target.empty()) os << "target = " << c.target << "\n";
  if (c.seed) os << "seed = " << *c.seed << "\n";
  os << "samples = " << c.samples << "\n";
  os << "dtype = " << c.dtype << "\n";
  if (!c.fixture.empty()) os << "fixture = " << c.fixture << "\n";
  os << "map = " << c.map << "\n";
  if (!c.output.empty()) os << "output = " << c.output << "\n";
  os << "\n[grid]\n";
  if (!c.alphas.empty()) os << "alpha = " << join(c.alphas, format_double) << "\n";
  if (!c.ns.empty()) os << "n = " << join(c.ns, as_int) << "\n";
  if (!c.dims.empty()) os << "dim = " << join(c.dims, as_int) << "\n";
  if (!c.ms.empty()) os << "m = " << join(c.ms, as_int) << "\n";
  if (!c.maps.empty()) os << "map = " << join(c.maps, [](const std::string& s) { return s; }) << "\n";
  os << "\n[protocol]\n";
  if (!c.protocol.empty()) os << "name = " << c.protocol << "\n";
  os << "delta1 = " << format_double(c.delta1) << "\n";
  os << "delta2 = " << format_double(c.delta2) << "\n";
  os << "witness_tries = " << c.witness_tries << "\n";
  os << "policy = " << c.policy << "\n";
  os << "dim_a0 = " << c.dim_a0 << "\n";
  os << "dim_a1 = " << c.dim_a1 << "\n";
  return os.str();
}

// ---- cells and reports -------------------------------------------------------------

Cell num(double x) { return {format_double(x), CellKind::real}; }
Cell integer(long long x) { return {std::to_string(x), CellKind::integer}; }
Cell str(std::string s) { return {std::move(s), CellKind::text}; }

std::size_t RunReport::failed_rows() const {
  std::size_t k = 0;
  for (const auto& r : rows)
    if (!r.empty() && !r.back().text.empty()) ++k;
  return k;
}

std::string tool_version() { return std::string("qdec ") + QDEC_VERSION; }

const std::vector<std::string>& columns_for(const std::string& kind) {
  static const std::map<std::string, std::vector<std::string>> cols = {
      {"entropy", {"alpha", "dtype", "h_a", "h_cond_up", "h_cond_down", "iterations", "duality_residual", "error"}},
      {"theta", {"map", "dim", "theta", "closed_form", "class1", "error"}},
      {"twirl_check", {"dim", "ensemble", "samples", "max_abs_dev", "max_stderr", "max_z", "error"}},
      {"decouple",
       {"alpha", "n", "dtype", "log_nu_or_dimlog", "d_alpha", "theta", "rhs", "lhs_mean", "lhs_stderr", "slack",
        "error"}},
      {"protocol",
       {"protocol", "alpha", "dtype", "n", "dim", "m", "measured_error", "bound", "rate", "theorem_rate",
        "witness_tries", "witness_anomaly", "error"}},
  };
  auto it = cols.find(kind);
  if (it == cols.end()) throw std::invalid_argument("no column schema for kind '" + kind + "'");
  return it->second;
}

// ---- fixtures ------------------------------------------------------------------------

namespace {

PureState basis_sum(const SubsystemSpace& s, const std::vector<std::pair<Index, double>>& terms) {
  Vec v = Vec::Zero(s.total_dim());
  for (const auto& [i, a] : terms) v(i) = a;
  return PureState(s, v / v.norm());
}

Fixture from_pure(const std::string& name, PureState p) {
  Fixture f;
  f.name = name;
  f.rho = p.projector();
  f.pure = std::move(p);
  return f;
}

Fixture from_density(const std::string& name, DensityOp rho) {
  Fixture f;
  f.name = name;
  f.rho = std::move(rho);
  return f;
}

}  // namespace

std::vector<std::string> builtin_fixtures() {
  return {"qubit_random", "qutrit_random", "bell", "skewed_source", "ghz", "product_abr", "random_abc",
          "classical_correlated", "mes_ar_b"};
}

Fixture load_fixture(const std::string& name, std::uint64_t seed) {
  const SubsystemSpace ar2({"A", "R"}, {2, 2}), abr2({"A", "B", "R"}, {2, 2, 2});
  if (name == "qubit_random") return from_density(name, random_density(ar2, {seed, 0x51}));
  if (name == "qutrit_random") return from_density(name, random_density(SubsystemSpace({"A", "R"}, {3, 3}), {seed, 0x52}));
  if (name == "bell") return from_pure(name, mes(2, "A", "R"));
  if (name == "skewed_source") return from_pure(name, basis_sum(ar2, {{0, std::sqrt(0.9)}, {3, std::sqrt(0.1)}}));
  if (name == "ghz") return from_pure(name, basis_sum(abr2, {{0, 1.0}, {7, 1.0}}));
  if (name == "product_abr") return from_pure(name, basis_sum(abr2, {{0, 1.0}}));
  if (name == "random_abc")
    return from_pure(name, random_pure_state(SubsystemSpace({"A", "B", "C"}, {2, 2, 2}), {seed, 0x53}));
  if (name == "classical_correlated") {
    Mat m = Mat::Zero(4, 4);
    m(0, 0) = m(3, 3) = 0.5;
    return from_density(name, DensityOp(LabeledOperator(ar2, m)));
  }
  if (name == "mes_ar_b")  // A R maximally entangled, B in |0>
    return from_pure(name, basis_sum(abr2, {{0, 1.0}, {5, 1.0}}));

  std::ifstream in(name);
  if (!in) {
    std::string known;
    for (const std::string& b : builtin_fixtures()) known += " " + b;
    throw std::invalid_argument("fixture '" + name + "' is neither a builtin (" + trim(known) + ") nor a readable file");
  }
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw std::invalid_argument("fixture '" + name + "': " + e.what());
  }
  const Json& st = j.at("state");
  Fixture f = st.contains("amps_re") ? from_pure(name, pure_from_json(st)) : from_density(name, density_from_json(st));
  if (j.contains("map")) f.map = kraus_from_json(j.at("map"));
  return f;
}

KrausMap map_from_keyword(const std::string& keyword, const SubsystemSpace& space) {
  std::string head = trim(keyword), arg;
  const auto lp = head.find('(');
  if (lp != std::string::npos) {
    if (head.back() != ')') throw std::invalid_argument("map keyword '" + keyword + "': missing ')'");
    arg = trim(head.substr(lp + 1, head.size() - lp - 2));
    head = trim(head.substr(0, lp));
  }
  auto need_arg = [&] {
    if (arg.empty()) throw std::invalid_argument("map keyword '" + keyword + "' needs an argument");
  };
  if (head == "identity") return identity_map(space);
  if (head == "trace") return trace_map(space);
  if (head == "depolarizing") {
    need_arg();
    return depolarizing(space, parse_double(arg));
  }
  if (head == "t_w" || head == "compressive") {
    need_arg();
    PartialIsom w = PartialIsom::truncation(space, SubsystemSpace::single("E", parse_int(arg)));
    return head == "t_w" ? t_w_map(w) : compressive_map(w);
  }
  if (head == "randomizing") {
    need_arg();
    const Index m = parse_int(arg);
    std::vector<Mat> hw = heisenberg_weyl(space.total_dim());
    if (m < 1 || m > static_cast<Index>(hw.size()))
      throw std::invalid_argument("randomizing(" + arg + "): M must lie in [1, |A|^2]");
    return randomizing_map(space, std::vector<Mat>(hw.begin(), hw.begin() + m));
  }
  throw std::invalid_argument("unknown map keyword '" + keyword +
                              "' (identity, trace, depolarizing(p), t_w(k), compressive(k), randomizing(m))");
}

// ---- runners -------------------------------------------------------------------------

namespace {

// one grid point: key cells fixed up front, values filled by `body`
struct Point {
  std::vector<Cell> keys;
  std::function<std::vector<Cell>()> body;
};

Labels cat_labels(Labels a, const Labels& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::uint64_t point_seed(std::uint64_t master, std::size_t idx) {
  return make_engine({master, 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(idx)})();
}

std::vector<Point> entropy_points(const ExperimentConfig& c, const Fixture& fx) {
  std::vector<Point> pts;
  const DensityOp& rho = fx.rho;
  if (!rho.space().has("A")) throw std::invalid_argument("entropy fixture needs an 'A' label");
  const Labels cond = rho.space().has("B") ? Labels{"B"} : rho.space().without({"A"}).labels();
  for (double a : c.alphas)
    for (DivergenceType t : dtypes_of(c.dtype))
      pts.push_back({{num(a), str(to_string(t))}, [&rho, &fx, cond, a, t] {
                       Labels drop = rho.space().without(cat_labels({"A"}, cond)).labels();
                       DensityOp rab = drop.empty() ? rho : partial_trace(rho, drop);
                       DensityOp ra = partial_trace(rho, rho.space().without({"A"}).labels());
                       CondEntropyResult up = h_cond(rab, cond, {a, t, Arrow::optimized});
                       CondEntropyResult down = h_cond(rab, cond, {a, t, Arrow::fixed_marginal});
                       double dual = std::nan("");
                       if (fx.pure && fx.pure->space.size() >= 3 && cond.size() == 1) {
                         Labels rest = fx.pure->space.without(cat_labels({"A"}, cond)).labels();
                         dual = duality_check(*fx.pure, {"A"}, cond, rest, a);
                       }
                       return std::vector<Cell>{num(renyi_entropy(ra.mat(), a)), num(up.value), num(down.value),
                                                integer(up.iterations), num(dual)};
                     }});
  return pts;
}

std::vector<Point> theta_points(const ExperimentConfig& c) {
  std::vector<Point> pts;
  for (const std::string& mk : c.maps)
    for (Index d : c.dims)
      pts.push_back({{str(mk), integer(d)}, [mk, d] {
                       KrausMap t = map_from_keyword(mk, SubsystemSpace::single("A", d));
                       ThetaReport r = theta(t);
                       return std::vector<Cell>{num(r.theta), integer(r.closed_form_used ? 1 : 0),
                                                str(to_string(class1_certificate(t)))};
                     }});
  return pts;
}

std::vector<Point> twirl_points(const ExperimentConfig& c, std::uint64_t master) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < c.dims.size(); ++i) {
    const Index d = c.dims[i];
    const std::uint64_t seed = point_seed(master, i);
    const Index samples = c.samples;
    pts.push_back({{integer(d), str("haar"), integer(samples)}, [d, seed, samples] {
                     if (d < 1) throw std::invalid_argument("twirl_check: dimension must be >= 1");
                     SubsystemSpace s({"A", "R"}, {d, 2});
                     LabeledOperator sigma = random_density(s, {seed, 1}).op();
                     LabeledOperator x(SubsystemSpace::single("A", d), random_ginibre(d, d, {seed, 2}));
                     LabeledOperator w(SubsystemSpace::single("R", 2), random_ginibre(2, 2, {seed, 3}));
                     LabeledOperator exact = twirl_moment2(sigma, x, w);
                     OpEstimate mc = mc_average_op(
                         [&](const Mat& u) { return twirl_moment2_sample(u, sigma, x, w).m; },
                         UnitaryEnsemble::haar(d), samples, seed);
                     Eigen::MatrixXd dev = (mc.mean - exact.m).cwiseAbs();
                     double max_z = 0.0;
                     for (Index r = 0; r < dev.rows(); ++r)
                       for (Index k = 0; k < dev.cols(); ++k)
                         max_z = std::max(max_z, dev(r, k) / std::max(mc.std_err(r, k), 1e-300));
                     return std::vector<Cell>{num(dev.maxCoeff()), num(mc.std_err.maxCoeff()), num(max_z)};
                   }});
  }
  return pts;
}

std::vector<Point> decouple_points(const ExperimentConfig& c, const Fixture& fx, std::uint64_t master) {
  std::vector<Point> pts;
  if (!fx.rho.space().has("A")) throw std::invalid_argument("decouple fixture needs an 'A' label");
  KrausMap t = fx.map ? *fx.map : map_from_keyword(c.map, fx.rho.space().subset({"A"}));
  const Index samples = c.samples;
  for (double a : c.alphas)
    for (int n : c.ns)
      for (DivergenceType dt : dtypes_of(c.dtype)) {
        const std::uint64_t seed = point_seed(master, pts.size());
        pts.push_back({{num(a), integer(n), str(to_string(dt))}, [&fx, t, a, n, dt, seed, samples] {
                         DecouplingInstance inst{fx.rho, {"A"}, t, a, std::nullopt, n, dt};
                         inst.validate();
                         BoundReport br = n == 1 ? thm1_rhs(inst) : thm1_rhs_iid(inst);
                         McEstimate lhs = mc_lhs(inst, samples, seed);
                         return std::vector<Cell>{num(br.log_nu_or_dimlog), num(br.d_alpha_term), num(br.theta),
                                                  num(br.rhs), num(lhs.mean), num(lhs.std_err),
                                                  num(br.rhs - lhs.mean)};
                       }});
      }
  return pts;
}

std::pair<std::string, std::string> rate_names(const std::string& protocol) {
  if (protocol == "schumacher") return {"compression", "theorem_compression"};
  if (protocol == "fqsw") return {"quantum_communication", "theorem_quantum_communication"};
  if (protocol == "merge") return {"entanglement", "theorem_entanglement"};
  return {"randomness", "theorem_randomness"};
}

std::string default_fixture(const ExperimentConfig& c) {
  const std::string k = c.effective_kind();
  if (k == "entropy") return "random_abc";
  if (k == "protocol") {
    if (c.protocol == "schumacher") return "skewed_source";
    if (c.protocol == "fqsw") return "ghz";
    if (c.protocol == "merge") return "mes_ar_b";
    return "classical_correlated";
  }
  return "qubit_random";
}

std::vector<Point> protocol_points(const ExperimentConfig& c, const Fixture& fx, std::uint64_t master) {
  std::vector<Point> pts;
  ProtocolOptions base;
  base.delta1 = c.delta1;
  base.delta2 = c.delta2;
  base.witness_tries = c.witness_tries;
  base.policy = c.policy == "best_of" ? WitnessPolicy::best_of : WitnessPolicy::first_success;
  const std::string proto = c.protocol;
  const std::vector<Index> ms = proto == "destroy" ? c.ms : std::vector<Index>{0};
  const Index a0 = c.dim_a0, a1 = c.dim_a1;
  for (double a : c.alphas)
    for (DivergenceType dt : dtypes_of(c.dtype))
      for (int n : c.ns)
        for (Index d : c.dims)
          for (Index m : ms) {
            const std::uint64_t seed = point_seed(master, pts.size());
            ProtocolOptions opt = base;
            opt.alpha = a;
            opt.dtype = dt;
            pts.push_back({{str(proto), num(a), str(to_string(dt)), integer(n), integer(d), integer(m)},
                           [&fx, proto, opt, n, d, m, a0, a1, seed] {
                             auto pure = [&]() -> const PureState& {
                               if (!fx.pure) throw std::invalid_argument(proto + " needs a pure fixture");
                               return *fx.pure;
                             };
                             auto full_dim = [&](const SubsystemSpace& s) {
                               Index v = 1;
                               for (int i = 0; i < n; ++i) v *= s.dim_of("A");
                               return v;
                             };
                             ProtocolResult r;
                             if (proto == "schumacher")
                               r = schumacher_run(pure(), n, d == 0 ? full_dim(pure().space) : d, seed, opt);
                             else if (proto == "fqsw")
                               r = fqsw_run(pure(), n, a1, d, seed, opt);
                             else if (proto == "merge")
                               r = merge_run(pure(), n, MergeConfig{a0, a1, d}, seed, opt);
                             else
                               r = destroy_run(fx.rho, n, m, seed, d, opt);
                             const auto [rate, theorem] = rate_names(proto);
                             return std::vector<Cell>{num(r.measured_error), num(r.bound), num(r.rates.at(rate)),
                                                      num(r.rates.at(theorem)), integer(r.witness_tries),
                                                      integer(r.witness_anomaly ? 1 : 0)};
                           }});
          }
  return pts;
}

}  // namespace

RunReport run(const ExperimentConfig& cfg) {
  std::vector<std::string> errs = validate_config(cfg);
  if (!errs.empty()) throw ConfigError(std::move(errs));
  const auto t0 = std::chrono::steady_clock::now();
  const std::string kind = cfg.effective_kind();
  const std::uint64_t master = *cfg.seed;

  RunReport rep;
  rep.config_echo = serialize_config(cfg);
  rep.header = columns_for(kind);
  rep.tool_version = tool_version();

  std::optional<Fixture> fx;
  if (kind != "theta" && kind != "twirl_check")
    fx = load_fixture(cfg.fixture.empty() ? default_fixture(cfg) : cfg.fixture, master);

  std::vector<Point> pts;
  if (kind == "entropy") pts = entropy_points(cfg, *fx);
  else if (kind == "theta") pts = theta_points(cfg);
  else if (kind == "twirl_check") pts = twirl_points(cfg, master);
  else if (kind == "decouple") pts = decouple_points(cfg, *fx, master);
  else pts = protocol_points(cfg, *fx, master);

  const std::size_t width = rep.header.size();
  rep.rows.assign(pts.size(), {});
  parallel_chunks(static_cast<Index>(pts.size()), 1, [&](Index b, Index e) {
    for (Index i = b; i < e; ++i) {
      const Point& p = pts[static_cast<std::size_t>(i)];
      std::vector<Cell> row = p.keys;
      std::string error;
      try {
        for (Cell& cell : p.body()) row.push_back(std::move(cell));
      } catch (const std::exception& ex) {
        row.resize(p.keys.size());
        error = ex.what();
      }
      while (row.size() + 1 < width) row.push_back(num(std::nan("")));
      row.push_back(str(error));
      rep.rows[static_cast<std::size_t>(i)] = std::move(row);
    }
  });
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---- emission ------------------------------------------------------------------------

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string to_csv(const RunReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.header.size(); ++i) out += (i ? "," : "") + csv_field(r.header[i]);
  out += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i].text);
    out += "\n";
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    any = true;
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const RunReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json jr = Json::array();
    for (const Cell& c : row) {
      if (c.kind == CellKind::integer) {
        jr.push_back(std::stoll(c.text));
      } else if (c.kind == CellKind::real) {
        const double v = parse_double(c.text);
        if (std::isfinite(v)) jr.push_back(v);
        else jr.push_back(c.text);  // inf, -inf and nan stay textual
      } else {
        jr.push_back(c.text);
      }
    }
    rows.push_back(std::move(jr));
  }
  return Json{{"tool_version", r.tool_version}, {"config", r.config_echo}, {"columns", r.header}, {"rows", rows}};
}

std::vector<std::string> emit(const RunReport& r, const std::string& prefix, const std::vector<std::string>& formats) {
  std::vector<std::string> written;
  for (const std::string& f : formats) {
    if (f != "csv" && f != "json") throw std::invalid_argument("unknown output format '" + f + "' (csv, json)");
    const std::string path = prefix + "." + f;
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (f == "csv" ? to_csv(r) : to_json(r).dump(2) + "\n");
    if (!out) throw std::runtime_error("write failed for " + path);
    written.push_back(path);
  }
  return written;
}

}  // namespace qdec
