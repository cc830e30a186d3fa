#include "qdec/decouple.hpp"

#include "qdec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qdec {

namespace {

double exponent_factor(double alpha) { return (alpha - 1.0) / (2.0 * alpha); }

bool same_label_set(const Labels& a, const Labels& b) {
  Labels x = a, y = b;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return x == y;
}

void check_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    std::ostringstream os;
    os << "decoupling bound: alpha = " << alpha << " is outside (1, 2]";
    throw std::invalid_argument(os.str());
  }
}

DensityOp trivial_state() { return DensityOp(LabeledOperator(SubsystemSpace(), Mat::Ones(1, 1), true)); }

double log_nu(const DensityOp& sigma) { return std::log2(static_cast<double>(distinct_eigs(sigma.mat()))); }

// target operator ω ⊗ X, reordered to `order`
LabeledOperator product_target(const LabeledOperator& omega, const LabeledOperator& x, const Labels& order) {
  return permute(tensor(omega, x), order);
}

}  // namespace

double decoupling_prefactor(double alpha) { return exponent_factor(alpha); }

// ---- instances ---------------------------------------------------------------

Labels DecouplingInstance::r_labels() const { return rho_ar.space().without(a_labels).labels(); }

void DecouplingInstance::validate() const {
  check_alpha(alpha);
  if (n_copies < 1) throw std::invalid_argument("decoupling instance: n_copies must be >= 1");
  if (a_labels.empty()) throw std::invalid_argument("decoupling instance: no A labels given");
  for (const auto& l : a_labels)
    if (!rho_ar.space().has(l)) throw std::invalid_argument("decoupling instance: A label '" + l + "' not in rho");
  const Labels single = a_labels;
  const Labels multi = suffixed(a_labels, n_copies);
  const Labels& tin = t.in_space.labels();
  const bool on_single = same_label_set(tin, single);
  const bool on_multi = n_copies > 1 && same_label_set(tin, multi);
  if (!on_single && !on_multi)
    throw std::invalid_argument("decoupling instance: map input " + t.in_space.describe() +
                                " matches neither A nor its copies");
  if (class1_certificate(t) == Class1Verdict::unknown)
    throw std::invalid_argument("decoupling instance: map '" + t.name + "' has no class-1 certificate");
  if (sigma_r) {
    SubsystemSpace r1 = rho_ar.space().subset(r_labels());
    const bool ok = sigma_r->space() == r1 || (n_copies > 1 && sigma_r->space() == power_space(r1, n_copies));
    if (!ok) throw std::invalid_argument("decoupling instance: sigma_R lives on " + sigma_r->space().describe());
  }
}

KrausMap map_power(const KrausMap& t, int n) {
  if (n < 1) throw std::invalid_argument("map_power: n must be >= 1");
  auto copy_k = [&](int k) {
    const std::string sfx = "." + std::to_string(k);
    return KrausMap(t.in_space.with_suffix(sfx), t.out_space.with_suffix(sfx), t.kraus, t.name);
  };
  KrausMap out = copy_k(1);
  for (int k = 2; k <= n; ++k) out = tensor(out, copy_k(k));
  out.name = t.name + "^" + std::to_string(n);
  return out;
}

CopiedInstance copied(const DecouplingInstance& inst) {
  CopiedInstance ci;
  const int n = inst.n_copies;
  if (n == 1) {
    ci.rho = inst.rho_ar;
    ci.a_labels = inst.a_labels;
    ci.r_labels = inst.r_labels();
    ci.t = inst.t;
    return ci;
  }
  ci.rho = tensor_power(inst.rho_ar, n);
  ci.a_labels = suffixed(inst.a_labels, n);
  ci.r_labels = suffixed(inst.r_labels(), n);
  ci.t = same_label_set(inst.t.in_space.labels(), inst.a_labels) ? map_power(inst.t, n) : inst.t;
  return ci;
}

double instance_theta(const DecouplingInstance& inst) {
  if (inst.n_copies > 1 && same_label_set(inst.t.in_space.labels(), inst.a_labels))
    return inst.n_copies * theta(inst.t).theta;  // Θ is additive on tensor powers
  return theta(inst.t).theta;
}

namespace {

DensityOp sigma_for(const DecouplingInstance& inst) {
  const int n = inst.n_copies;
  SubsystemSpace r1 = inst.rho_ar.space().subset(inst.r_labels());
  DensityOp s1;
  if (inst.sigma_r) {
    if (n > 1 && inst.sigma_r->space() != r1) return *inst.sigma_r;  // already on R^n
    s1 = *inst.sigma_r;
  } else if (inst.r_labels().empty()) {
    s1 = trivial_state();
  } else {
    auto h = h_cond_unchecked(inst.rho_ar, inst.r_labels(), inst.alpha, inst.dtype, Arrow::optimized);
    s1 = *h.optimizer;
  }
  if (n == 1 || s1.space().size() == 0) return s1;
  return tensor_power(s1, n);
}

BoundReport finish(BoundReport r, double alpha, int n) {
  r.exponent = r.log_nu_or_dimlog + r.d_alpha_term + r.theta;
  r.exponent_per_copy = r.exponent / n;
  if (std::isinf(r.d_alpha_term) || std::isnan(r.exponent)) {
    r.vacuous = true;
    r.rhs = kInf;
  } else {
    r.rhs = 4.0 * std::exp2(exponent_factor(alpha) * r.exponent);
  }
  return r;
}

}  // namespace

BoundReport thm1_rhs(const DecouplingInstance& inst) {
  inst.validate();
  CopiedInstance ci = copied(inst);
  DensityOp sigma = sigma_for(inst);
  BoundReport r;
  r.r_dim = ci.rho.space().dim_of(ci.r_labels);
  r.log_nu_or_dimlog = log_nu(sigma);
  LabeledOperator full = embed(sigma.op(), ci.rho.space());
  r.d_alpha_term = d_alpha(ci.rho.mat(), full.m, inst.alpha, inst.dtype);
  r.theta = theta(ci.t).theta;
  r.sigma_used = sigma;
  return finish(r, inst.alpha, inst.n_copies);
}

BoundReport thm1_rhs_iid(const DecouplingInstance& inst) {
  inst.validate();
  const int n = inst.n_copies;
  BoundReport r;
  r.r_dim = inst.rho_ar.space().dim_of(inst.r_labels());
  r.log_nu_or_dimlog = static_cast<double>(r.r_dim) * std::log2(static_cast<double>(n + 1));
  auto h = h_cond_unchecked(inst.rho_ar, inst.r_labels(), inst.alpha, inst.dtype, Arrow::optimized);
  r.d_alpha_term = -static_cast<double>(n) * h.value;
  r.theta = instance_theta(inst);
  if (h.optimizer) r.sigma_used = h.optimizer;
  return finish(r, inst.alpha, n);
}

// ---- factor-based error evaluation ------------------------------------------

Mat kron_factor(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

LabeledOperator reduced_factor(const SubsystemSpace& space, const Mat& factor, const Labels& kept) {
  SubsystemSpace ks = space.subset(kept);
  Mat acc = Mat::Zero(ks.total_dim(), ks.total_dim());
  for (Index c = 0; c < factor.cols(); ++c) acc += reduced(space, factor.col(c), kept).m;
  return LabeledOperator(ks, linalg::hermitize(acc), true);
}

double factor_difference_norm(const Mat& p, const Mat& q) {
  const Index rows = p.rows();
  const Index cols = p.cols() + q.cols();
  if (cols < rows) {
    Mat v(rows, cols);
    v.leftCols(p.cols()) = p;
    v.rightCols(q.cols()) = q;
    RVec w(cols);
    w.head(p.cols()).setOnes();
    w.tail(q.cols()).setConstant(-1.0);
    return trace_norm_lowrank(v, w);
  }
  Mat d = p * p.adjoint() - q * q.adjoint();
  return trace_norm(linalg::hermitize(d));
}

DecouplingCondition make_condition(const SubsystemSpace& space, const Mat& factor, const Labels& a_labels,
                                   const KrausMap& t, const SubsystemSpace& target_space, const Mat& target_factor,
                                   double threshold, const std::string& name) {
  DecouplingCondition c;
  c.space = space;
  c.factor = factor;
  c.a_labels = a_labels;
  c.t = t;
  c.threshold = threshold;
  c.name = name;
  Labels out_order = replaced_order(space, t.in_space.labels(), t.out_space.labels());
  if (!same_label_set(out_order, target_space.labels()))
    throw std::invalid_argument("condition '" + name + "': target space " + target_space.describe() +
                                " does not match the output labels of the map");
  c.target_space = target_space.subset(out_order);
  c.target_factor = permute_rows(target_space, target_factor, out_order);
  const Index rest_dim = space.total_dim() / t.din();
  if (static_cast<Index>(t.kraus.size()) * factor.cols() > t.dout() * rest_dim) {
    const Index di = t.din(), de = t.dout();
    c.superop = Mat::Zero(de * de, di * di);
    for (const Mat& k : t.kraus)
      for (Index e = 0; e < de; ++e)
        for (Index f = 0; f < de; ++f)
          for (Index a = 0; a < di; ++a)
            c.superop.row(e * de + f).segment(a * di, di) += k(e, a) * k.row(f).conjugate();
  }
  return c;
}

DecouplingCondition make_condition(const SubsystemSpace& space, const Mat& factor, const Labels& a_labels,
                                   const KrausMap& t, double threshold, const std::string& name) {
  SubsystemSpace rest = space.without(t.in_space.labels());
  LabeledOperator rho_rest = reduced_factor(space, factor, rest.labels());
  LabeledOperator omega = choi_marginal(t);
  Mat tf = kron_factor(linalg::psd_factor(omega.m), linalg::psd_factor(rho_rest.m));
  return make_condition(space, factor, a_labels, t, t.out_space.concat(rest), tf, threshold, name);
}

double condition_error(const Mat& u, const DecouplingCondition& c) {
  SubsystemSpace aspace = c.space.subset(c.a_labels);
  RowApplied ua = left_apply(u, c.space, c.factor, c.a_labels, aspace);
  if (c.superop.size() > 0) {
    // dense route: act on U rho U^† block-wise instead of fanning the factor out over every Kraus operator
    const Labels in = c.t.in_space.labels();
    const SubsystemSpace rest = ua.space.without(in);
    Labels order = in;
    for (const auto& l : rest.labels()) order.push_back(l);
    const Mat x = permute_rows(ua.space, ua.x, order);
    const Mat rho = x * x.adjoint();
    const Index di = c.t.din(), de = c.t.dout(), dr = rest.total_dim();
    Mat blocks(di * di, dr * dr);
    for (Index a = 0; a < di; ++a)
      for (Index b = 0; b < di; ++b)
        for (Index r = 0; r < dr; ++r) blocks.row(a * di + b).segment(r * dr, dr) = rho.row(a * dr + r).segment(b * dr, dr);
    const Mat mapped = c.superop * blocks;
    Mat sigma(de * dr, de * dr);
    for (Index e = 0; e < de; ++e)
      for (Index f = 0; f < de; ++f)
        for (Index r = 0; r < dr; ++r) sigma.row(e * dr + r).segment(f * dr, dr) = mapped.row(e * de + f).segment(r * dr, dr);
    LabeledOperator out(c.t.out_space.concat(rest), sigma);
    if (out.space != c.target_space) out = permute(out, c.target_space.labels());
    return trace_norm(linalg::hermitize(out.m - c.target_factor * c.target_factor.adjoint()));
  }
  RowApplied out = apply_factor(c.t, ua.space, ua.x);
  if (out.space != c.target_space) {
    Mat x = permute_rows(out.space, out.x, c.target_space.labels());
    return factor_difference_norm(x, c.target_factor);
  }
  return factor_difference_norm(out.x, c.target_factor);
}

double decoupling_error(const Mat& u, const CopiedInstance& ci) {
  DecouplingCondition c = make_condition(ci.rho.space(), linalg::psd_factor(ci.rho.mat()), ci.a_labels, ci.t, 0.0,
                                         "decoupling");
  return condition_error(u, c);
}

McEstimate mc_lhs(const DecouplingInstance& inst, Index n_samples, std::uint64_t seed, bool clifford_exact) {
  inst.validate();
  CopiedInstance ci = copied(inst);
  const Index in_dim = ci.rho.dim();
  const Index out_dim = ci.t.dout() * ci.rho.space().dim_of(ci.r_labels);
  if (in_dim > kMcDimCap || out_dim > kMcDimCap) {
    std::ostringstream os;
    os << "mc_lhs: dimension " << std::max(in_dim, out_dim) << " exceeds the cap " << kMcDimCap;
    throw std::invalid_argument(os.str());
  }
  DecouplingCondition c =
      make_condition(ci.rho.space(), linalg::psd_factor(ci.rho.mat()), ci.a_labels, ci.t, 0.0, "lhs");
  const Index da = ci.rho.space().dim_of(ci.a_labels);
  auto f = [&](const Mat& u) { return condition_error(u, c); };
  if (clifford_exact && da == 2) {
    UnitaryEnsemble cl = UnitaryEnsemble::clifford_qubit();
    McEstimate e;
    e.mean = ensemble_average(f, cl);
    e.std_err = 0.0;
    e.n = static_cast<Index>(cl.elements.size());
    e.ensemble = "clifford24-exact";
    return e;
  }
  return mc_average(f, UnitaryEnsemble::haar(da), n_samples, seed);
}

// ---- witness search -------------------------------------------------------------

namespace {

double worst_ratio(const std::vector<double>& errs, const std::vector<DecouplingCondition>& conds) {
  double w = 0.0;
  for (std::size_t k = 0; k < conds.size(); ++k) {
    const double th = conds[k].threshold;
    if (std::isinf(th)) continue;
    w = std::max(w, th > 0.0 ? errs[k] / th : (errs[k] > 0.0 ? kInf : 0.0));
  }
  return w;
}

bool all_met(const std::vector<double>& errs, const std::vector<DecouplingCondition>& conds) {
  for (std::size_t k = 0; k < conds.size(); ++k)
    if (!(errs[k] <= conds[k].threshold)) return false;
  return true;
}

}  // namespace

WitnessResult witness_search(const std::vector<DecouplingCondition>& conds, int n_tries, std::uint64_t seed,
                             WitnessPolicy policy) {
  if (conds.empty()) throw std::invalid_argument("witness_search: no conditions");
  if (n_tries < 1) throw std::invalid_argument("witness_search: n_tries must be >= 1");
  const Index da = conds.front().space.dim_of(conds.front().a_labels);
  for (const auto& c : conds)
    if (c.space.dim_of(c.a_labels) != da)
      throw std::invalid_argument("witness_search: condition '" + c.name + "' acts on a different A dimension");
  UnitaryEnsemble haar = UnitaryEnsemble::haar(da);
  auto eval = [&](std::uint64_t i) {
    Mat u = haar.draw(seed, i);
    std::vector<double> e;
    for (const auto& c : conds) e.push_back(condition_error(u, c));
    return e;
  };

  WitnessResult res;
  for (const auto& c : conds) res.thresholds.push_back(c.threshold);

  if (policy == WitnessPolicy::first_success) {
    double best = kInf;
    for (int i = 0; i < n_tries; ++i) {
      auto e = eval(static_cast<std::uint64_t>(i));
      res.tries = i + 1;
      const double w = worst_ratio(e, conds);
      if (res.chosen_index < 0 || w < best) {
        best = w;
        res.chosen_index = i;
        res.errors = e;
      }
      if (all_met(e, conds)) {
        res.chosen_index = i;
        res.errors = e;
        break;
      }
    }
  } else {
    std::vector<std::vector<double>> all(static_cast<std::size_t>(n_tries));
    parallel_chunks(n_tries, 1, [&](Index b, Index e) {
      for (Index i = b; i < e; ++i) all[static_cast<std::size_t>(i)] = eval(static_cast<std::uint64_t>(i));
    });
    double best = kInf;
    for (int i = 0; i < n_tries; ++i) {
      const double w = worst_ratio(all[static_cast<std::size_t>(i)], conds);
      if (res.chosen_index < 0 || w < best) {
        best = w;
        res.chosen_index = i;
      }
    }
    res.tries = n_tries;
    res.errors = all[static_cast<std::size_t>(res.chosen_index)];
  }
  res.unitary = haar.draw(seed, static_cast<std::uint64_t>(res.chosen_index));
  res.anomaly = !all_met(res.errors, conds);
  return res;
}

WitnessResult corollary1_search(const std::vector<DecouplingInstance>& insts, int n_tries, std::uint64_t seed,
                                WitnessPolicy policy) {
  if (insts.empty()) throw std::invalid_argument("corollary1_search: no instances");
  const double k = static_cast<double>(insts.size());
  std::vector<DecouplingCondition> conds;
  Labels shared;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    const auto& inst = insts[i];
    CopiedInstance ci = copied(inst);
    if (i == 0) shared = ci.a_labels;
    if (ci.a_labels != shared || inst.n_copies != insts.front().n_copies)
      throw std::invalid_argument("corollary1_search: instances must share A and n");
    const double th = k * thm1_rhs_iid(inst).rhs;
    conds.push_back(make_condition(ci.rho.space(), linalg::psd_factor(ci.rho.mat()), ci.a_labels, ci.t, th,
                                   "instance " + std::to_string(i)));
  }
  return witness_search(conds, n_tries, seed, policy);
}

// ---- Hayashi lemmas ------------------------------------------------------------

ProjectorPair projector_pair(const LabeledOperator& rho, const LabeledOperator& sigma, double zeta) {
  if (!(zeta > 0.0)) throw std::invalid_argument("projector_pair: zeta must be positive");
  LabeledOperator pinched = pinch(sigma, rho);
  LabeledOperator zs(sigma.space, zeta * sigma.m, true);
  ProjectorPair pp;
  pp.zeta = zeta;
  pp.pi = positive_part_projector(pinched, zs);
  pp.pi_hat = LabeledOperator(rho.space, Mat::Identity(rho.dim(), rho.dim()) - pp.pi.m, true);
  return pp;
}

HayashiReport hayashi_bounds(const LabeledOperator& rho, const LabeledOperator& sigma, double zeta, double alpha) {
  check_alpha(alpha);
  ProjectorPair pp = projector_pair(rho, sigma, zeta);
  HayashiReport r;
  r.norm_pi_rho = trace_norm(Mat(pp.pi.m * rho.m));
  const double q = q_alpha(rho.m, sigma.m, alpha, DivergenceType::old);
  r.bound_first = std::isinf(q) ? kInf : std::pow(zeta, (1.0 - alpha) / 2.0) * std::sqrt(q);
  Mat inv = mat_power(sigma.m, -1.0);
  r.second_lhs = (inv * pp.pi_hat.m * rho.m * rho.m * pp.pi_hat.m).trace().real();
  r.bound_second = static_cast<double>(distinct_eigs(sigma.m)) * zeta;
  return r;
}

ZetaChoice zeta_opt(double x, double y, double alpha) {
  if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("zeta_opt: x and y must be positive");
  check_alpha(alpha);
  ZetaChoice z;
  z.zeta = std::pow(x / y, 2.0 / alpha);
  z.value = x * std::pow(z.zeta, (1.0 - alpha) / 2.0) + y * std::sqrt(z.zeta);
  return z;
}

TriangleSplit triangle_split(const Mat& u, const DecouplingInstance& inst, const DensityOp& sigma_r, double zeta) {
  inst.validate();
  if (inst.n_copies != 1) throw std::invalid_argument("triangle_split: single-copy instances only");
  const LabeledOperator& rho = inst.rho_ar.op();
  const Labels r = inst.r_labels();
  ProjectorPair pp = projector_pair(rho, embed(sigma_r.op(), rho.space), zeta);
  LabeledOperator omega = choi_marginal(inst.t);

  auto err = [&](const LabeledOperator& x) {
    LabeledOperator out = apply(inst.t, conjugate(u, x, inst.a_labels));
    LabeledOperator xr = partial_trace(x, inst.a_labels);
    LabeledOperator tgt = product_target(omega, xr, out.space.labels());
    return trace_norm(Mat(out.m - tgt.m));
  };
  TriangleSplit ts;
  ts.whole = err(rho);
  ts.part_pi = err(LabeledOperator(rho.space, pp.pi.m * rho.m));
  ts.part_pi_hat = err(LabeledOperator(rho.space, pp.pi_hat.m * rho.m));
  return ts;
}

// ---- cq generalization ----------------------------------------------------------

Labels CqInstance::r_labels() const { return rho_x.front().space().without(a_labels).labels(); }

void CqInstance::validate() const {
  check_alpha(alpha);
  if (p.empty() || p.size() != rho_x.size()) throw std::invalid_argument("cq instance: p and rho_x sizes differ");
  double s = 0.0;
  for (double x : p) {
    if (x < 0.0) throw std::invalid_argument("cq instance: negative probability");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("cq instance: probabilities do not sum to 1");
  for (const auto& r : rho_x) {
    if (r.space() != rho_x.front().space()) throw std::invalid_argument("cq instance: rho_x on different spaces");
    if (r.trace_class() != TraceClass::unit) throw std::invalid_argument("cq instance: rho_x must have unit trace");
  }
  if (m < 1) throw std::invalid_argument("cq instance: M must be >= 1");
  if (!a_labels.empty()) {
    if (!same_label_set(t.in_space.labels(), a_labels))
      throw std::invalid_argument("cq instance: map input does not match the A labels");
    if (class1_certificate(t) == Class1Verdict::unknown)
      throw std::invalid_argument("cq instance: map '" + t.name + "' has no class-1 certificate");
  }
}

namespace {

struct CqMarginals {
  std::vector<LabeledOperator> rx;  // rho_x^R
  LabeledOperator r;                // rho^R
};

CqMarginals cq_marginals(const std::vector<double>& p, const std::vector<DensityOp>& rho_x, const Labels& a) {
  CqMarginals cm;
  for (std::size_t x = 0; x < rho_x.size(); ++x) {
    cm.rx.push_back(a.empty() ? rho_x[x].op() : partial_trace(rho_x[x].op(), a));
    if (x == 0) cm.r = LabeledOperator(cm.rx[0].space, p[0] * cm.rx[0].m, true);
    else cm.r.m += p[x] * cm.rx[x].m;
  }
  return cm;
}

// D_alpha of the block-diagonal cq pair: log(Σ p_x Q(ρ_x || σ)) / (alpha - 1)
double cq_divergence(const std::vector<double>& p, const std::vector<Mat>& states, const Mat& sigma, double alpha,
                     DivergenceType t) {
  double q = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    const double qx = q_alpha(states[x], sigma, alpha, t);
    if (std::isinf(qx)) return kInf;
    q += p[x] * qx;
  }
  return std::log2(q) / (alpha - 1.0);
}

double classical_term(const std::vector<double>& p, const CqMarginals& cm, const DensityOp& kappa, Index m,
                      double alpha, DivergenceType t, double* d_out, double* nu_out) {
  std::vector<Mat> rs;
  for (const auto& r : cm.rx) rs.push_back(r.m);
  const double d = cq_divergence(p, rs, kappa.mat(), alpha, t);
  const double ln = log_nu(kappa);
  *d_out = d;
  *nu_out = ln;
  if (std::isinf(d)) return kInf;
  return 4.0 * std::exp2(exponent_factor(alpha) * (ln + d - std::log2(static_cast<double>(m))));
}

std::size_t draw_index(const std::vector<double>& p, double u) {
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    acc += p[x];
    if (u < acc) return x;
  }
  return p.size() - 1;
}

}  // namespace

CqBoundReport thm1_2_rhs(const CqInstance& inst) {
  inst.validate();
  CqMarginals cm = cq_marginals(inst.p, inst.rho_x, inst.a_labels);
  DensityOp rho_r(cm.r);
  DensityOp sigma = inst.sigma_r.value_or(rho_r);
  DensityOp kappa = inst.kappa_r.value_or(rho_r);
  CqBoundReport r;
  const bool has_a = !inst.a_labels.empty() && inst.rho_x.front().space().dim_of(inst.a_labels) > 1;
  if (has_a) {
    std::vector<Mat> states;
    for (const auto& rx : inst.rho_x) states.push_back(rx.mat());
    LabeledOperator full = embed(sigma.op(), inst.rho_x.front().space());
    r.d_alpha_xar = cq_divergence(inst.p, states, full.m, inst.alpha, inst.dtype);
    r.log_nu_sigma = log_nu(sigma);
    r.theta = theta(inst.t).theta;
    r.quantum_term = std::isinf(r.d_alpha_xar)
                         ? kInf
                         : 4.0 * std::exp2(exponent_factor(inst.alpha) *
                                           (r.log_nu_sigma + r.d_alpha_xar -
                                            std::log2(static_cast<double>(inst.m)) + r.theta));
  }
  if (inst.p.size() != 1) {
    r.classical_term =
        classical_term(inst.p, cm, kappa, inst.m, inst.alpha, inst.dtype, &r.d_alpha_xr, &r.log_nu_kappa);
  }
  r.rhs = r.quantum_term + r.classical_term;
  return r;
}

McEstimate mc_lhs_cq(const CqInstance& inst, Index n_samples, std::uint64_t seed) {
  inst.validate();
  CqMarginals cm = cq_marginals(inst.p, inst.rho_x, inst.a_labels);
  const bool has_a = !inst.a_labels.empty();
  const SubsystemSpace& sp = inst.rho_x.front().space();
  const Index da = has_a ? sp.dim_of(inst.a_labels) : 1;
  Labels out_order = has_a ? replaced_order(sp, inst.t.in_space.labels(), inst.t.out_space.labels()) : cm.r.space.labels();
  LabeledOperator target = has_a ? product_target(choi_marginal(inst.t), cm.r, out_order) : cm.r;

  auto f = [&](Index i) {
    std::mt19937_64 eng = make_engine({seed, static_cast<std::uint64_t>(i)});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Mat acc = Mat::Zero(target.dim(), target.dim());
    for (Index j = 0; j < inst.m; ++j) {
      const std::size_t x = draw_index(inst.p, unif(eng));
      if (!has_a) {
        acc += cm.rx[x].m;
        continue;
      }
      const std::uint64_t s0 = eng(), s1 = eng();
      Mat u = sample_haar(da, {s0, s1});
      LabeledOperator out = apply(inst.t, conjugate(u, inst.rho_x[x].op(), inst.a_labels));
      acc += out.m;
    }
    acc /= static_cast<double>(inst.m);
    return trace_norm(linalg::hermitize(acc - target.m));
  };
  return mc_indexed(f, n_samples, has_a ? "haar+iid-x" : "iid-x");
}

CqBoundReport covering_bound(const CoveringInput& cq, Index m, double alpha, const std::optional<DensityOp>& kappa_r,
                             Index n_samples, std::uint64_t seed, DivergenceType dtype) {
  check_alpha(alpha);
  if (m < 1) throw std::invalid_argument("covering_bound: M must be >= 1");
  CqInstance inst;
  inst.p = cq.p;
  inst.rho_x = cq.rho_x;
  inst.m = m;
  inst.alpha = alpha;
  inst.kappa_r = kappa_r;
  inst.dtype = dtype;
  inst.validate();
  CqMarginals cm = cq_marginals(cq.p, cq.rho_x, {});
  DensityOp kappa = kappa_r.value_or(DensityOp(cm.r));
  CqBoundReport r;
  r.classical_term = classical_term(cq.p, cm, kappa, m, alpha, dtype, &r.d_alpha_xr, &r.log_nu_kappa);
  r.rhs = r.classical_term;
  if (n_samples >= 2) {
    r.lhs = mc_lhs_cq(inst, n_samples, seed);
    r.slack = r.rhs - r.lhs->mean;
  }
  return r;
}

double covering_exact(const CoveringInput& cq, Index m) {
  const std::size_t nx = cq.p.size();
  double total = std::pow(static_cast<double>(nx), static_cast<double>(m));
  if (total > 2e6) throw std::invalid_argument("covering_exact: too many draws to enumerate");
  CqMarginals cm = cq_marginals(cq.p, cq.rho_x, {});
  std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
  double acc = 0.0;
  for (;;) {
    double w = 1.0;
    Mat avg = Mat::Zero(cm.r.dim(), cm.r.dim());
    for (std::size_t x : idx) {
      w *= cq.p[x];
      avg += cm.rx[x].m;
    }
    if (w > 0.0) acc += w * trace_norm(linalg::hermitize(avg / static_cast<double>(m) - cm.r.m));
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == nx) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return acc;
}

}  // namespace qdec
