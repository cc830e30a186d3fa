#include "qdec/channels.hpp"

#include "qdec/linalg.hpp"
#include "qdec/twirl.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qdec {

std::string to_string(TpClass c) {
  switch (c) {
    case TpClass::cptp: return "cptp";
    case TpClass::cp_trace_nonincreasing: return "cp_trace_nonincreasing";
    case TpClass::cp_general: return "cp_general";
  }
  return "unknown";
}

std::string to_string(Class1Verdict v) {
  switch (v) {
    case Class1Verdict::yes_cptp: return "yes_cptp";
    case Class1Verdict::yes_trace_condition: return "yes_trace_condition";
    case Class1Verdict::unknown: return "unknown";
  }
  return "unknown";
}

namespace {

void check_shapes(const KrausMap& t) {
  if (t.kraus.empty()) throw std::invalid_argument("KrausMap '" + t.name + "': no Kraus operators");
  for (std::size_t i = 0; i < t.kraus.size(); ++i) {
    const Mat& k = t.kraus[i];
    if (k.rows() != t.dout() || k.cols() != t.din()) {
      std::ostringstream os;
      os << "KrausMap '" << t.name << "': Kraus operator " << i << " is " << k.rows() << "x" << k.cols()
         << ", expected " << t.dout() << "x" << t.din();
      throw std::invalid_argument(os.str());
    }
  }
}

TpClass infer_class(const Mat& s) {
  const Index d = s.rows();
  if ((s - Mat::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-9) return TpClass::cptp;
  if (linalg::eigvalsh(s).maxCoeff() <= 1.0 + 1e-9) return TpClass::cp_trace_nonincreasing;
  return TpClass::cp_general;
}

}  // namespace

KrausMap::KrausMap(SubsystemSpace in, SubsystemSpace out, std::vector<Mat> ops, std::string nm)
    : in_space(std::move(in)), out_space(std::move(out)), kraus(std::move(ops)), name(std::move(nm)) {
  check_shapes(*this);
  tp_class = infer_class(kraus_sum());
}

KrausMap::KrausMap(SubsystemSpace in, SubsystemSpace out, std::vector<Mat> ops, TpClass declared, std::string nm)
    : in_space(std::move(in)), out_space(std::move(out)), kraus(std::move(ops)), tp_class(declared),
      name(std::move(nm)) {
  check_shapes(*this);
  if (declared == TpClass::cptp) {
    const Mat s = kraus_sum();
    const double dev = (s - Mat::Identity(din(), din())).cwiseAbs().maxCoeff();
    if (dev > 1e-9) {
      std::ostringstream os;
      os << "KrausMap '" << name << "': declared cptp but max |sum K^dag K - I| = " << dev;
      throw std::invalid_argument(os.str());
    }
  }
}

Mat KrausMap::kraus_sum() const {
  Mat s = Mat::Zero(din(), din());
  for (const Mat& k : kraus) s.noalias() += k.adjoint() * k;
  return s;
}

Labels primed(const Labels& labels) {
  Labels out;
  for (const auto& l : labels) out.push_back(l + "'");
  return out;
}

namespace {

void check_input(const KrausMap& t, const SubsystemSpace& space) {
  for (std::size_t i = 0; i < t.in_space.size(); ++i) {
    const auto& l = t.in_space.labels()[i];
    if (!space.has(l))
      throw std::invalid_argument("apply '" + t.name + "': input label '" + l + "' missing from " + space.describe());
    if (space.dim_of(l) != t.in_space.dims()[i])
      throw std::invalid_argument("apply '" + t.name + "': dimension mismatch on label '" + l + "'");
  }
}

}  // namespace

LabeledOperator apply(const KrausMap& t, const LabeledOperator& m) {
  check_input(t, m.space);
  LabeledOperator acc;
  bool first = true;
  for (const Mat& k : t.kraus) {
    LabeledOperator term = sandwich(k, m, t.in_space.labels(), t.out_space);
    if (first) {
      acc = std::move(term);
      first = false;
    } else {
      acc.m += term.m;
    }
  }
  acc.hermitian_hint = m.hermitian_hint;
  if (m.hermitian_hint.value_or(false)) acc.m = linalg::hermitize(acc.m);
  return acc;
}

DensityOp apply(const KrausMap& t, const DensityOp& rho) {
  LabeledOperator out = apply(t, rho.op());
  const double tr = out.m.trace().real();
  TraceClass tc = (std::abs(tr - 1.0) <= 1e-9) ? TraceClass::unit : TraceClass::subnormalized;
  return DensityOp(std::move(out), tc);
}

RowApplied apply_factor(const KrausMap& t, const SubsystemSpace& space, const Mat& f) {
  check_input(t, space);
  std::vector<RowApplied> parts;
  Index cols = 0;
  for (const Mat& k : t.kraus) {
    parts.push_back(left_apply(k, space, f, t.in_space.labels(), t.out_space));
    cols += parts.back().x.cols();
  }
  RowApplied out{parts.front().space, Mat(parts.front().x.rows(), cols)};
  Index c = 0;
  for (auto& p : parts) {
    out.x.middleCols(c, p.x.cols()) = p.x;
    c += p.x.cols();
  }
  return out;
}

ChoiMatrix choi(const KrausMap& t) {
  const Index da = t.din(), de = t.dout();
  SubsystemSpace ref(primed(t.in_space.labels()), t.in_space.dims());
  SubsystemSpace s = t.out_space.concat(ref);
  Mat w = Mat::Zero(de * da, de * da);
  const double sc = 1.0 / std::sqrt(static_cast<double>(da));
  for (const Mat& k : t.kraus) {
    Vec v(de * da);
    for (Index e = 0; e < de; ++e)
      for (Index i = 0; i < da; ++i) v(e * da + i) = k(e, i) * sc;
    w.noalias() += v * v.adjoint();
  }
  return {LabeledOperator(std::move(s), linalg::hermitize(w), true), t.name};
}

KrausMap from_choi(const LabeledOperator& omega, const SubsystemSpace& in, const SubsystemSpace& out) {
  Labels order = out.labels();
  const Labels ap = primed(in.labels());
  order.insert(order.end(), ap.begin(), ap.end());
  LabeledOperator w = permute(omega, order);
  const Index da = in.total_dim(), de = out.total_dim();
  auto e = linalg::eigh(w.m);
  std::vector<Mat> ks;
  for (Index c = 0; c < e.values.size(); ++c) {
    const double lam = e.values(c);
    if (lam <= kEigFloor) continue;
    const double sc = std::sqrt(static_cast<double>(da) * lam);
    Mat k(de, da);
    for (Index r = 0; r < de; ++r)
      for (Index i = 0; i < da; ++i) k(r, i) = sc * e.vectors(r * da + i, c);
    ks.push_back(std::move(k));
  }
  if (ks.empty()) throw std::invalid_argument("from_choi: zero Choi matrix");
  return KrausMap(in, out, std::move(ks), "from_choi");
}

LabeledOperator choi_marginal(const KrausMap& t) {
  Mat s = Mat::Zero(t.dout(), t.dout());
  for (const Mat& k : t.kraus) s.noalias() += k * k.adjoint();
  s /= static_cast<double>(t.din());
  return LabeledOperator(t.out_space, linalg::hermitize(s), true);
}

Mat choi_square_marginal(const KrausMap& t) {
  const double da = static_cast<double>(t.din());
  const double de = static_cast<double>(t.dout());
  const double nk = static_cast<double>(t.kraus.size());
  const double kraus_cost = nk * nk * de * de * da;
  const double dense_cost = std::pow(de * da, 3.0);
  if (kraus_cost <= dense_cost) {
    Mat m = Mat::Zero(t.dout(), t.dout());
    for (std::size_t k = 0; k < t.kraus.size(); ++k)
      for (std::size_t l = 0; l < t.kraus.size(); ++l) {
        const cplx g = (t.kraus[k].adjoint() * t.kraus[l]).trace();
        if (std::abs(g) == 0.0) continue;
        m.noalias() += g * (t.kraus[k] * t.kraus[l].adjoint());
      }
    return linalg::hermitize(m / (da * da));
  }
  ChoiMatrix w = choi(t);
  LabeledOperator sq(w.op.space, w.op.m * w.op.m);
  return linalg::hermitize(partial_trace(sq, primed(t.in_space.labels())).m);
}

ThetaReport theta(const KrausMap& t) {
  Mat m = choi_square_marginal(t);
  if (m.trace().real() <= 1e-300) throw std::invalid_argument("theta: map '" + t.name + "' is zero");
  Mat s = linalg::sqrt_psd(m);
  const double tr = s.trace().real();
  ThetaReport r;
  r.theta = 2.0 * std::log2(tr);
  r.optimizer_theta_E = DensityOp(LabeledOperator(t.out_space, linalg::hermitize(s / tr), true));
  r.closed_form_used = true;
  return r;
}

Class1Verdict class1_certificate(const KrausMap& t) {
  const Mat s = t.kraus_sum();
  if ((s - Mat::Identity(t.din(), t.din())).cwiseAbs().maxCoeff() <= 1e-9) return Class1Verdict::yes_cptp;
  // Tr T(I) = Tr sum K†K
  if (std::abs(s.trace().real() - static_cast<double>(t.din())) <= 1e-9) return Class1Verdict::yes_trace_condition;
  return Class1Verdict::unknown;
}

Class1Report is_class1(const KrausMap& t, std::uint64_t seed, int n_haar, int n_sigma) {
  Class1Report rep;
  rep.certificate = class1_certificate(t);
  rep.verdict = rep.certificate;

  const Index da = t.din();
  const std::string ref = "#class1_ref";
  SubsystemSpace sp = t.in_space.concat(SubsystemSpace::single(ref, da));
  UnitaryEnsemble haar = UnitaryEnsemble::haar(da);
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_sigma; ++s) {
    Mat g = random_ginibre(sp.total_dim(), sp.total_dim(), {seed, 1000000u + static_cast<std::uint64_t>(s)});
    g /= trace_norm(g);
    LabeledOperator sigma(sp, g);
    auto f = [&](const Mat& u) { return trace_norm(apply(t, conjugate(u, sigma, t.in_space.labels()))); };
    McEstimate est = mc_average(f, haar, n_haar, seed * 1315423911u + static_cast<std::uint64_t>(s) + 1u);
    const double excess = est.mean - 1.0;
    const double z = excess / std::max(est.std_err, 1e-15);
    worst = std::max(worst, z);
    if (excess > 3.0 * est.std_err + 1e-12) rep.mc_violation = true;
  }
  rep.worst_excess_in_stderr = worst;
  if (rep.mc_violation) rep.verdict = Class1Verdict::unknown;
  return rep;
}

KrausMap identity_map(const SubsystemSpace& space) {
  const Index d = space.total_dim();
  return KrausMap(space, space, {Mat::Identity(d, d)}, TpClass::cptp, "identity");
}

KrausMap trace_map(const SubsystemSpace& space) {
  const Index d = space.total_dim();
  std::vector<Mat> ks;
  for (Index i = 0; i < d; ++i) {
    Mat k = Mat::Zero(1, d);
    k(0, i) = 1.0;
    ks.push_back(std::move(k));
  }
  return KrausMap(space, SubsystemSpace(), std::move(ks), TpClass::cptp, "trace");
}

KrausMap partial_trace_map(const SubsystemSpace& space, const Labels& traced) {
  SubsystemSpace kept = space.without(traced);
  Labels order = kept.labels();
  order.insert(order.end(), traced.begin(), traced.end());
  auto map = linalg::label_index_map(space, order);
  const Index dk = kept.total_dim(), dt = space.dim_of(traced), d = space.total_dim();
  std::vector<Mat> ks;
  for (Index t = 0; t < dt; ++t) {
    Mat k = Mat::Zero(dk, d);
    for (Index i = 0; i < dk; ++i) k(i, map[static_cast<std::size_t>(i * dt + t)]) = 1.0;
    ks.push_back(std::move(k));
  }
  return KrausMap(space, kept, std::move(ks), TpClass::cptp, "partial_trace");
}

std::vector<Mat> heisenberg_weyl(Index d) {
  if (d < 1) throw std::invalid_argument("heisenberg_weyl: d must be >= 1");
  const double pi = std::acos(-1.0);
  Mat x = Mat::Zero(d, d), z = Mat::Zero(d, d);
  for (Index j = 0; j < d; ++j) {
    x((j + 1) % d, j) = 1.0;
    z(j, j) = std::polar(1.0, 2.0 * pi * static_cast<double>(j) / static_cast<double>(d));
  }
  std::vector<Mat> xs(static_cast<std::size_t>(d)), zs(static_cast<std::size_t>(d));
  xs[0] = zs[0] = Mat::Identity(d, d);
  for (Index k = 1; k < d; ++k) {
    xs[static_cast<std::size_t>(k)] = x * xs[static_cast<std::size_t>(k - 1)];
    zs[static_cast<std::size_t>(k)] = z * zs[static_cast<std::size_t>(k - 1)];
  }
  std::vector<Mat> out;
  for (Index k = 0; k < d * d; ++k)
    out.push_back(xs[static_cast<std::size_t>(k / d)] * zs[static_cast<std::size_t>(k % d)]);
  return out;
}

KrausMap depolarizing(const SubsystemSpace& space, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("depolarizing: p must lie in [0, 1]");
  const Index d = space.total_dim();
  const double dd = static_cast<double>(d * d);
  auto hw = heisenberg_weyl(d);
  std::vector<Mat> ks;
  ks.push_back(std::sqrt(1.0 - p + p / dd) * hw[0]);
  if (p > 0.0)
    for (std::size_t k = 1; k < hw.size(); ++k) ks.push_back(std::sqrt(p / dd) * hw[k]);
  std::ostringstream nm;
  nm << "depolarizing(" << p << ")";
  return KrausMap(space, space, std::move(ks), TpClass::cptp, nm.str());
}

KrausMap unitary_map(const SubsystemSpace& space, const Mat& u) {
  return KrausMap(space, space, {u}, TpClass::cptp, "unitary");
}

KrausMap scaled(const KrausMap& t, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scaled: factor must be positive");
  std::vector<Mat> ks;
  for (const Mat& k : t.kraus) ks.push_back(std::sqrt(factor) * k);
  std::ostringstream nm;
  nm << factor << "*" << t.name;
  return KrausMap(t.in_space, t.out_space, std::move(ks), nm.str());
}

KrausMap t_w_map(const PartialIsom& w) {
  const Index da = w.domain().total_dim(), db = w.codomain().total_dim();
  if (da < db) throw std::invalid_argument("t_w_map: requires |A| >= |B|");
  if (!w.full_rank()) throw std::invalid_argument("t_w_map: W must be a full-rank partial isometry");
  const double sc = std::sqrt(static_cast<double>(da) / static_cast<double>(db));
  return KrausMap(w.domain(), w.codomain(), {sc * w.mat()}, "t_w");
}

KrausMap compressive_map(const PartialIsom& w) {
  const Index da = w.domain().total_dim(), db = w.codomain().total_dim();
  if (db > da) throw std::invalid_argument("compressive_map: requires |B| <= |A|");
  if (!w.full_rank()) throw std::invalid_argument("compressive_map: W must be a full-rank partial isometry");
  std::vector<Mat> ks{w.mat()};
  auto e = linalg::eigh(Mat::Identity(da, da) - w.mat().adjoint() * w.mat());
  const double sc = 1.0 / std::sqrt(static_cast<double>(db));
  for (Index j = 0; j < e.values.size(); ++j) {
    if (e.values(j) < 0.5) continue;
    for (Index b = 0; b < db; ++b) {
      Mat k = Mat::Zero(db, da);
      k.row(b) = sc * e.vectors.col(j).adjoint();
      ks.push_back(std::move(k));
    }
  }
  return KrausMap(w.domain(), w.codomain(), std::move(ks), TpClass::cptp, "compressive");
}

KrausMap isometry_map(const PartialIsom& w) { return KrausMap(w.domain(), w.codomain(), {w.mat()}, "isometry"); }

MeasurementFamily measurement_map(const SubsystemSpace& in, const SubsystemSpace& d_space, const std::string& x_label) {
  const Index dbc = in.total_dim(), dd = d_space.total_dim();
  if (dd > dbc) throw std::invalid_argument("measurement_map: |D| must not exceed |B||C|");
  const Index j = (dbc + dd - 1) / dd;
  MeasurementFamily mf;
  mf.j = j;
  Mat big = Mat::Zero(j * dd, dbc);
  for (Index x = 0; x < j; ++x) {
    Mat m = Mat::Zero(dd, dbc);
    for (Index i = 0; i < dd && x * dd + i < dbc; ++i) m(i, x * dd + i) = 1.0;
    big.middleRows(x * dd, dd) = m;
    mf.blocks.push_back(std::move(m));
  }
  std::vector<Mat> ks;
  for (Index x = 0; x < j; ++x) {
    Mat k = Mat::Zero(j * dd, dbc);
    k.middleRows(x * dd, dd) = mf.blocks[static_cast<std::size_t>(x)];
    ks.push_back(std::move(k));
  }
  SubsystemSpace out = SubsystemSpace::single(x_label, j).concat(d_space);
  mf.map = KrausMap(in, out, std::move(ks), TpClass::cptp, "measurement");
  return mf;
}

KrausMap randomizing_map(const SubsystemSpace& space, const std::vector<Mat>& family) {
  const Index d = space.total_dim();
  const std::size_t m = family.size();
  if (m == 0) throw std::invalid_argument("randomizing_map: empty unitary family");
  if (m > static_cast<std::size_t>(d * d))
    throw std::invalid_argument("randomizing_map: M exceeds |B|^2 (orthogonal family exhausted)");
  for (std::size_t i = 0; i < m; ++i) {
    if (family[i].rows() != d || family[i].cols() != d)
      throw std::invalid_argument("randomizing_map: unitary " + std::to_string(i) + " has wrong shape");
    for (std::size_t j = i; j < m; ++j) {
      const cplx g = (family[i].adjoint() * family[j]).trace();
      const double want = (i == j) ? static_cast<double>(d) : 0.0;
      if (std::abs(g - want) > 1e-9) {
        std::ostringstream os;
        os << "randomizing_map: orthogonality violated for pair (" << i << ", " << j << "): Tr V_i^dag V_j = " << g;
        throw std::invalid_argument(os.str());
      }
    }
  }
  const double sc = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<Mat> ks;
  for (const Mat& v : family) ks.push_back(sc * v);
  return KrausMap(space, space, std::move(ks), TpClass::cptp, "randomizing(" + std::to_string(m) + ")");
}

KrausMap compose(const KrausMap& t2, const KrausMap& t1) {
  for (std::size_t i = 0; i < t2.in_space.size(); ++i) {
    const auto& l = t2.in_space.labels()[i];
    if (!t1.out_space.has(l) || t1.out_space.dim_of(l) != t2.in_space.dims()[i])
      throw std::invalid_argument("compose: input '" + l + "' of '" + t2.name + "' is not an output of '" + t1.name + "'");
  }
  std::vector<Mat> ks;
  SubsystemSpace out;
  for (const Mat& k1 : t1.kraus)
    for (const Mat& k2 : t2.kraus) {
      RowApplied r = left_apply(k2, t1.out_space, k1, t2.in_space.labels(), t2.out_space);
      out = r.space;
      if (r.x.cwiseAbs().maxCoeff() > 1e-14) ks.push_back(std::move(r.x));
    }
  if (ks.empty()) throw std::invalid_argument("compose: composition is the zero map");
  return KrausMap(t1.in_space, out, std::move(ks), t2.name + "∘" + t1.name);
}

KrausMap tensor(const KrausMap& a, const KrausMap& b) {
  std::vector<Mat> ks;
  for (const Mat& ka : a.kraus)
    for (const Mat& kb : b.kraus) {
      Mat k(ka.rows() * kb.rows(), ka.cols() * kb.cols());
      for (Index i = 0; i < ka.rows(); ++i)
        for (Index j = 0; j < ka.cols(); ++j) k.block(i * kb.rows(), j * kb.cols(), kb.rows(), kb.cols()) = ka(i, j) * kb;
      ks.push_back(std::move(k));
    }
  return KrausMap(a.in_space.concat(b.in_space), a.out_space.concat(b.out_space), std::move(ks),
                  a.name + "⊗" + b.name);
}

TwoPositivityReport two_positivity_check(const KrausMap& t, const LabeledOperator& sigma) {
  LabeledOperator ts = apply(t, sigma);
  LabeledOperator tsd = apply(t, LabeledOperator(sigma.space, sigma.m.adjoint()));
  LabeledOperator tss = apply(t, LabeledOperator(sigma.space, sigma.m * sigma.m.adjoint()));
  LabeledOperator ti = apply(t, identity(sigma.space));
  Mat d = tss.m * ti.m - ts.m * tsd.m;
  TwoPositivityReport r;
  r.min_eig = linalg::min_eig(linalg::hermitize(d));
  r.holds = r.min_eig >= -1e-9;
  return r;
}

}  // namespace qdec
