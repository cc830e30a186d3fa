#include "qdec/entropy.hpp"

#include "qdec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qdec {

std::string to_string(DivergenceType t) { return t == DivergenceType::old ? "old" : "sandwiched"; }
std::string to_string(Arrow a) { return a == Arrow::optimized ? "optimized" : "fixed_marginal"; }

DivergenceType parse_dtype(const std::string& s) {
  if (s == "old" || s == "petz") return DivergenceType::old;
  if (s == "sandwiched" || s == "sand") return DivergenceType::sandwiched;
  throw std::invalid_argument("unknown divergence type '" + s + "' (expected old or sandwiched)");
}

void RenyiParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    std::ostringstream os;
    os << "alpha = " << alpha << " is outside (0, 2]";
    throw std::invalid_argument(os.str());
  }
}

bool support_contained(const Mat& rho, const Mat& sigma) {
  Mat p = linalg::support_projector(sigma);
  const Index d = p.rows();
  const double leak = ((Mat::Identity(d, d) - p) * rho).trace().real();
  return leak <= 1e-10 * std::max(1.0, rho.trace().real());
}

double q_alpha(const Mat& rho, const Mat& sigma, double alpha, DivergenceType t) {
  if (rho.rows() != sigma.rows()) throw std::invalid_argument("q_alpha: dimension mismatch");
  if (alpha > 1.0 && !support_contained(rho, sigma)) return kInf;
  if (t == DivergenceType::old) {
    Mat a = mat_power(rho, alpha);
    Mat b = mat_power(sigma, 1.0 - alpha);
    return (a * b).trace().real();
  }
  const double g = (1.0 - alpha) / (2.0 * alpha);
  Mat sg = mat_power(sigma, g);
  Mat inner = linalg::hermitize(sg * rho * sg);
  return linalg::herm_func(inner, [alpha](double x) { return x > kEigFloor ? std::pow(x, alpha) : 0.0; })
      .trace()
      .real();
}

double q_alpha(const DensityOp& rho, const LabeledOperator& sigma, const RenyiParams& p) {
  p.validate();
  if (rho.space() != sigma.space) throw std::invalid_argument("q_alpha: space mismatch");
  return q_alpha(rho.mat(), sigma.m, p.alpha, p.dtype);
}

double relative_entropy(const Mat& rho, const Mat& sigma) {
  if (!support_contained(rho, sigma)) return kInf;
  return (rho * (linalg::log2_psd(rho) - linalg::log2_psd(sigma))).trace().real();
}

double d_alpha(const Mat& rho, const Mat& sigma, double alpha, DivergenceType t) {
  if (alpha == 1.0) return relative_entropy(rho, sigma);
  const double q = q_alpha(rho, sigma, alpha, t);
  if (std::isinf(q)) return kInf;
  if (q <= 0.0) return kInf;  // alpha < 1 with orthogonal supports
  return std::log2(q) / (alpha - 1.0);
}

double d_alpha(const DensityOp& rho, const LabeledOperator& sigma, const RenyiParams& p) {
  p.validate();
  if (rho.space() != sigma.space) throw std::invalid_argument("d_alpha: space mismatch");
  return d_alpha(rho.mat(), sigma.m, p.alpha, p.dtype);
}

double entropy_vn(const Mat& rho) {
  RVec ev = linalg::eigvalsh(rho);
  double h = 0.0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > kEigFloor) h -= ev(i) * std::log2(ev(i));
  return h;
}

double renyi_entropy(const Mat& rho, double alpha) {
  if (alpha == 1.0) return entropy_vn(rho);
  RVec ev = linalg::eigvalsh(rho);
  double s = 0.0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > kEigFloor) s += std::pow(ev(i), alpha);
  return std::log2(s) / (1.0 - alpha);
}

namespace {

Mat kron_id_left(Index da, const Mat& m) {
  Mat out = Mat::Zero(da * m.rows(), da * m.cols());
  for (Index a = 0; a < da; ++a) out.block(a * m.rows(), a * m.cols(), m.rows(), m.cols()) = m;
  return out;
}

// Tr over the leading factor of dimension da
Mat ptrace_first(const Mat& m, Index da, Index db) {
  Mat out = Mat::Zero(db, db);
  for (Index a = 0; a < da; ++a) out += m.block(a * db, a * db, db, db);
  return out;
}

struct Ordered {
  Mat rho;  // labels ordered (A..., B...)
  Index da = 1, db = 1;
  SubsystemSpace cond_space;
};

Ordered order_for(const DensityOp& rho, const Labels& cond) {
  SubsystemSpace rest = rho.space().without(cond);
  Labels order = rest.labels();
  order.insert(order.end(), cond.begin(), cond.end());
  Ordered o;
  o.rho = permute(rho.op(), order).m;
  o.da = rest.total_dim();
  o.db = rho.space().dim_of(cond);
  o.cond_space = rho.space().subset(cond);
  return o;
}

Mat natural_log(const Mat& m) {
  return linalg::herm_func(m, [](double x) { return std::log(std::max(x, 1e-300)); });
}

Mat exp_normalized(const Mat& l) {
  auto e = linalg::eigh(l);
  const double top = e.values.maxCoeff();
  RVec v(e.values.size());
  for (Index i = 0; i < v.size(); ++i) v(i) = std::exp(e.values(i) - top);
  Mat s = e.vectors * v.asDiagonal() * e.vectors.adjoint();
  return linalg::hermitize(s / s.trace().real());
}

// sandwiched divergence D~(rho || 1 ⊗ sigma) via the rho^{1/2} form, sigma full rank
struct SandObjective {
  Mat rho_half;
  Index da, db;
  double alpha;

  Mat z_of(const Mat& sigma) const {
    Mat s = mat_power(sigma, (1.0 - alpha) / alpha);
    return linalg::hermitize(rho_half * kron_id_left(da, s) * rho_half);
  }
  double d(const Mat& sigma) const {
    Mat z = z_of(sigma);
    const double a = alpha;
    const double q =
        linalg::herm_func(z, [a](double x) { return x > kEigFloor ? std::pow(x, a) : 0.0; }).trace().real();
    return std::log2(q) / (alpha - 1.0);
  }
  Mat gradient_core(const Mat& sigma) const {
    Mat z = z_of(sigma);
    const double a = alpha;
    Mat zp = linalg::herm_func(z, [a](double x) { return x > kEigFloor ? std::pow(x, a - 1.0) : 0.0; });
    return linalg::hermitize(ptrace_first(rho_half * zp * rho_half, da, db));
  }
};

CondEntropyResult sandwiched_optimized(const Ordered& o, double alpha) {
  Mat rb = ptrace_first(o.rho, o.da, o.db);
  auto eb = linalg::eigh(rb);
  std::vector<Index> keep;
  for (Index i = 0; i < eb.values.size(); ++i)
    if (eb.values(i) > kEigFloor) keep.push_back(i);
  const Index r = static_cast<Index>(keep.size());
  Mat vb(o.db, r);
  for (Index j = 0; j < r; ++j) vb.col(j) = eb.vectors.col(keep[static_cast<std::size_t>(j)]);

  // restrict to A ⊗ supp(rho_B); the optimal sigma never leaves that support
  Mat k = kron_id_left(o.da, vb.adjoint());
  Mat rho_r = linalg::hermitize(k * o.rho * k.adjoint());
  SandObjective obj{linalg::sqrt_psd(rho_r), o.da, r, alpha};

  Mat sigma = Mat::Zero(r, r);
  for (Index j = 0; j < r; ++j) sigma(j, j) = eb.values(keep[static_cast<std::size_t>(j)]);
  sigma /= sigma.trace().real();
  double d = obj.d(sigma);

  const double c_self = (alpha - 1.0) * (alpha - 1.0) / (alpha * alpha);
  CondEntropyResult res;
  res.converged = false;
  int it = 0;
  for (it = 1; it <= 500; ++it) {
    Mat g = obj.gradient_core(sigma);
    Mat next = exp_normalized(c_self * natural_log(sigma) + natural_log(g) / alpha);
    double dn = obj.d(next);
    const double slack = 1e-13 * std::max(1.0, std::abs(d));
    if (!(dn <= d + slack)) {
      bool moved = false;
      double t = 0.5;
      for (int b = 0; b < 40; ++b, t *= 0.5) {
        Mat trial = linalg::hermitize((1.0 - t) * sigma + t * next);
        const double dt = obj.d(trial);
        if (dt <= d + slack) {
          next = trial;
          dn = dt;
          moved = true;
          break;
        }
      }
      if (!moved) {
        res.converged = true;  // no descent direction left along the update
        break;
      }
    }
    const double step = 0.5 * trace_norm(Mat(next - sigma));
    sigma = next;
    d = std::min(d, dn);
    if (step <= 1e-10) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(it, 500);
  d = obj.d(sigma);
  res.value = -d;
  Mat full = linalg::hermitize(vb * sigma * vb.adjoint());
  full /= full.trace().real();
  res.optimizer = DensityOp(LabeledOperator(o.cond_space, full, true));
  return res;
}

}  // namespace

CondEntropyResult h_cond_unchecked(const DensityOp& rho, const Labels& cond, double alpha, DivergenceType t,
                                   Arrow arrow) {
  Ordered o = order_for(rho, cond);
  Mat rb = linalg::hermitize(ptrace_first(o.rho, o.da, o.db));
  CondEntropyResult res;

  if (alpha == 1.0) {
    res.value = entropy_vn(o.rho) - entropy_vn(rb);
    if (arrow == Arrow::optimized) res.optimizer = DensityOp(LabeledOperator(o.cond_space, rb / rb.trace().real(), true));
    return res;
  }
  if (arrow == Arrow::fixed_marginal) {
    res.value = -d_alpha(o.rho, kron_id_left(o.da, rb), alpha, t);
    return res;
  }
  if (t == DivergenceType::old) {
    const double a = alpha;
    Mat ra = linalg::herm_func(o.rho, [a](double x) { return x > kEigFloor ? std::pow(x, a) : 0.0; });
    Mat tau = linalg::hermitize(ptrace_first(ra, o.da, o.db));
    Mat s = mat_power(tau, 1.0 / alpha);
    const double c = s.trace().real();
    res.value = (alpha / (1.0 - alpha)) * std::log2(c);
    res.optimizer = DensityOp(LabeledOperator(o.cond_space, linalg::hermitize(s / c), true));
    return res;
  }
  return sandwiched_optimized(o, alpha);
}

CondEntropyResult h_cond(const DensityOp& rho, const Labels& cond, const RenyiParams& p) {
  p.validate();
  for (const auto& l : cond) rho.space().position(l);
  return h_cond_unchecked(rho, cond, p.alpha, p.dtype, p.arrow);
}

double cond_entropy_vn(const DensityOp& rho, const Labels& a, const Labels& b) {
  Labels ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  SubsystemSpace others = rho.space().without(ab);
  LabeledOperator rab = partial_trace(rho.op(), others.labels());
  LabeledOperator rb = partial_trace(rab, a);
  return entropy_vn(rab.m) - entropy_vn(rb.m);
}

VonNeumannSuite von_neumann_suite(const DensityOp& rho, const Labels& a, const Labels& b, const Labels& c) {
  VonNeumannSuite s;
  LabeledOperator ra = partial_trace(rho.op(), rho.space().without(a).labels());
  s.h_a = entropy_vn(ra.m);
  s.h_a_given_b = cond_entropy_vn(rho, a, b);
  Labels bc = b;
  bc.insert(bc.end(), c.begin(), c.end());
  s.i_ab_given_c = cond_entropy_vn(rho, a, c) - cond_entropy_vn(rho, a, bc);
  s.coherent_info = -s.h_a_given_b;
  return s;
}

std::string to_string(DualityPairing p) {
  switch (p) {
    case DualityPairing::sand_fixed_old_opt: return "sandwiched-fixed(alpha) + old-optimized(1/alpha)";
    case DualityPairing::sand_opt_sand_opt: return "sandwiched-optimized(alpha) + sandwiched-optimized(alpha/(2alpha-1))";
    case DualityPairing::old_fixed_old_fixed: return "old-fixed(alpha) + old-fixed(2-alpha)";
    case DualityPairing::sand_opt_inverse: return "sandwiched-optimized(alpha) + sandwiched-optimized(1/alpha)";
  }
  return "unknown";
}

double duality_residual(const PureState& psi, const Labels& a, const Labels& b, const Labels& c, double alpha,
                        DualityPairing pairing) {
  Labels ab = a, ac = a;
  ab.insert(ab.end(), b.begin(), b.end());
  ac.insert(ac.end(), c.begin(), c.end());
  for (const auto& l : psi.space.labels()) {
    const bool known = std::find(ab.begin(), ab.end(), l) != ab.end() || std::find(c.begin(), c.end(), l) != c.end();
    if (!known) throw std::invalid_argument("duality: label '" + l + "' is not in A, B or C");
  }
  DensityOp rab(reduced(psi, ab));
  DensityOp rac(reduced(psi, ac));
  using DT = DivergenceType;
  switch (pairing) {
    case DualityPairing::sand_fixed_old_opt:
      return h_cond_unchecked(rab, b, alpha, DT::sandwiched, Arrow::fixed_marginal).value +
             h_cond_unchecked(rac, c, 1.0 / alpha, DT::old, Arrow::optimized).value;
    case DualityPairing::sand_opt_sand_opt:
      return h_cond_unchecked(rab, b, alpha, DT::sandwiched, Arrow::optimized).value +
             h_cond_unchecked(rac, c, alpha / (2.0 * alpha - 1.0), DT::sandwiched, Arrow::optimized).value;
    case DualityPairing::old_fixed_old_fixed:
      return h_cond_unchecked(rab, b, alpha, DT::old, Arrow::fixed_marginal).value +
             h_cond_unchecked(rac, c, 2.0 - alpha, DT::old, Arrow::fixed_marginal).value;
    case DualityPairing::sand_opt_inverse:
      return h_cond_unchecked(rab, b, alpha, DT::sandwiched, Arrow::optimized).value +
             h_cond_unchecked(rac, c, 1.0 / alpha, DT::sandwiched, Arrow::optimized).value;
  }
  throw std::invalid_argument("duality: unknown pairing");
}

double duality_check(const PureState& psi, const Labels& a, const Labels& b, const Labels& c, double alpha) {
  if (!((alpha >= 0.5 && alpha < 1.0) || (alpha > 1.0 && alpha <= 2.0))) {
    std::ostringstream os;
    os << "duality_check: alpha = " << alpha << " outside [0.5, 1) ∪ (1, 2]";
    throw std::invalid_argument(os.str());
  }
  return duality_residual(psi, a, b, c, alpha, DualityPairing::sand_fixed_old_opt);
}

double duality_check(const DensityOp& psi, const Labels& a, const Labels& b, const Labels& c, double alpha) {
  auto e = linalg::eigh(psi.mat());
  const double top = e.values.maxCoeff();
  if (std::abs(top - 1.0) > 1e-9) throw std::invalid_argument("duality_check: input state is not pure");
  Vec v = e.vectors.col(e.values.size() - 1);
  return duality_check(PureState(psi.space(), v.normalized()), a, b, c, alpha);
}

DpiReport dpi_check(const DensityOp& rho, const LabeledOperator& sigma, const KrausMap& e, const RenyiParams& p) {
  p.validate();
  if (e.tp_class != TpClass::cptp) throw std::invalid_argument("dpi_check: map must be cptp");
  DpiReport r;
  r.before = d_alpha(rho.mat(), sigma.m, p.alpha, p.dtype);
  LabeledOperator er = apply(e, rho.op());
  LabeledOperator es = apply(e, sigma);
  r.after = d_alpha(er.m, es.m, p.alpha, p.dtype);
  if (std::isinf(r.before)) r.holds = true;
  else if (std::isinf(r.after)) r.holds = false;
  else r.holds = r.before >= r.after - 1e-9;
  return r;
}

}  // namespace qdec
