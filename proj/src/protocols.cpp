#include "qdec/protocols.hpp"

#include "qdec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qdec {

// ---- arrangement helpers -------------------------------------------------------

Mat arrange(const SubsystemSpace& space, const Vec& v, const Labels& rows, const Labels& cols) {
  Labels order = rows;
  order.insert(order.end(), cols.begin(), cols.end());
  if (order.size() != space.size())
    throw std::invalid_argument("arrange: row and column labels must cover " + space.describe());
  Mat col = permute_rows(space, Mat(v), order);
  const Index dr = space.dim_of(rows), dc = space.dim_of(cols);
  Mat out(dr, dc);
  for (Index i = 0; i < dr; ++i)
    for (Index j = 0; j < dc; ++j) out(i, j) = col(i * dc + j, 0);
  return out;
}

Vec flatten(const Mat& m) {
  Vec v(m.size());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

namespace {

Labels cat(Labels a, const Labels& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void require_labels(const SubsystemSpace& s, const Labels& want, const std::string& who) {
  Labels have = s.labels(), w = want;
  std::sort(have.begin(), have.end());
  std::sort(w.begin(), w.end());
  if (have != w) {
    std::ostringstream os;
    os << who << ": input must carry exactly the labels {";
    for (std::size_t i = 0; i < want.size(); ++i) os << (i ? ", " : "") << want[i];
    os << "}, got " << s.describe();
    throw std::invalid_argument(os.str());
  }
}

Index ipow(Index b, int e) {
  Index r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

double lg(double x) { return std::log2(x); }

// (1/(dim)) I as a factor
Mat mixed_factor(Index d) { return Mat::Identity(d, d) / std::sqrt(static_cast<double>(d)); }

// column-stacked low-rank difference: Σ_plus v v† − Σ_minus v v†
struct LowRank {
  std::vector<Vec> cols;
  std::vector<double> w;
  void add(const Vec& v, double weight) {
    cols.push_back(v);
    w.push_back(weight);
  }
  double norm() const {
    if (cols.empty()) return 0.0;
    Mat v(cols.front().size(), static_cast<Index>(cols.size()));
    RVec ws(static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      v.col(static_cast<Index>(k)) = cols[k];
      ws(static_cast<Index>(k)) = w[k];
    }
    return trace_norm_lowrank(v, ws);
  }
};

struct SourceEntropies {
  double h_tilde_a = 0.0;
  double h_a_given_r = 0.0;
};

// H_α̃(A) and H_α(A|R) of the single-copy marginal on A and R
SourceEntropies source_entropies(const PureState& psi, const ProtocolOptions& opt) {
  SourceEntropies s;
  DensityOp rho_a(reduced(psi, {"A"}));
  s.h_tilde_a = renyi_entropy(rho_a.mat(), dual_alpha(opt.alpha, opt.dtype));
  DensityOp rho_ar(reduced(psi, {"A", "R"}));
  s.h_a_given_r = h_cond_unchecked(rho_ar, {"R"}, opt.alpha, opt.dtype, Arrow::optimized).value;
  return s;
}

void check_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    std::ostringstream os;
    os << "protocol: alpha = " << alpha << " is outside (1, 2]";
    throw std::invalid_argument(os.str());
  }
}

void record_witness(ProtocolResult& res, const WitnessResult& wr, const std::vector<std::string>& names) {
  res.witness_tries = wr.tries;
  res.witness_anomaly = wr.anomaly;
  res.witnesses["U"] = wr.unitary;
  for (std::size_t k = 0; k < names.size() && k < wr.errors.size(); ++k)
    res.diagnostics["measured_" + names[k]] = wr.errors[k];
}

}  // namespace

// ---- Uhlmann -------------------------------------------------------------------

Mat polar_isometry(const Mat& k) {
  if (k.rows() < k.cols()) throw std::invalid_argument("polar_isometry: more columns than rows");
  Eigen::JacobiSVD<Mat> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

UhlmannResult uhlmann_extend(const Mat& from, const Mat& to, double eps) {
  if (from.cols() != to.cols()) throw std::invalid_argument("uhlmann_extend: common systems differ in dimension");
  if (from.rows() > to.rows()) {
    std::ostringstream os;
    os << "uhlmann_extend: |B| = " << from.rows() << " exceeds |C| = " << to.rows()
       << "; extend the smaller side first";
    throw std::invalid_argument(os.str());
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("uhlmann_extend: eps must be non-negative");
  UhlmannResult r;
  Mat k = to * from.adjoint();
  r.v = polar_isometry(k);
  Mat moved = r.v * from;
  r.overlap = std::abs((to.adjoint() * moved).trace());
  r.error = trace_distance_pure(flatten(moved), flatten(to));
  Mat mf = from.transpose() * from.conjugate();
  Mat mt = to.transpose() * to.conjugate();
  r.eps_measured = trace_norm(linalg::hermitize(mf - mt));
  r.bound = xi(eps);
  r.refined_bound = 2.0 * std::sqrt(eps);
  return r;
}

LabeledUhlmann uhlmann_extend(const SubsystemSpace& xi_space, const Vec& xi_vec, const PureState& psi,
                              const Labels& common, double eps) {
  SubsystemSpace bs = xi_space.without(common), cs = psi.space.without(common);
  if (xi_space.subset(common) != psi.space.subset(common))
    throw std::invalid_argument("uhlmann_extend: common labels have different dimensions");
  Mat from = arrange(xi_space, xi_vec, bs.labels(), common);
  Mat to = arrange(psi.space, psi.amps, cs.labels(), common);
  LabeledUhlmann out;
  out.report = uhlmann_extend(from, to, eps);
  out.v = PartialIsom(bs, cs, out.report.v);
  return out;
}

FuchsReport fuchs_vdg_check(const LabeledOperator& rho, const LabeledOperator& sigma) {
  if (rho.space != sigma.space) throw std::invalid_argument("fuchs_vdg_check: space mismatch");
  for (const auto* m : {&rho, &sigma}) {
    if (linalg::min_eig(m->m) < -1e-10) throw std::invalid_argument("fuchs_vdg_check: inputs must be PSD");
    if (m->m.trace().real() > 1.0 + 1e-9) throw std::invalid_argument("fuchs_vdg_check: trace exceeds 1");
  }
  FuchsReport r;
  const double f = fidelity(rho, sigma);
  const double s = rho.m.trace().real() + sigma.m.trace().real();
  r.lower = s - 2.0 * f;
  r.tn = trace_norm(linalg::hermitize(rho.m - sigma.m));
  r.upper = std::sqrt(std::max(0.0, s * s - 4.0 * f * f));
  r.holds = r.lower <= r.tn + 1e-9 && r.tn <= r.upper + 1e-9;
  return r;
}

// ---- rates ---------------------------------------------------------------------

double dual_alpha(double alpha, DivergenceType t) {
  return t == DivergenceType::old ? 1.0 / alpha : alpha / (2.0 * alpha - 1.0);
}

namespace {
double log_term(const RateInputs& in) { return std::log2(static_cast<double>(in.n) + 1.0) / in.n; }
}  // namespace

double schumacher_theorem_rate(const RateInputs& in) {
  return in.dim_r * log_term(in) + in.h_tilde_a + in.delta1;
}

double fqsw_quantum_rate(const RateInputs& in) {
  return 0.5 * (in.h_tilde_a - in.h_a_given_r) + (in.dim_b + 1.0) * in.dim_r * log_term(in) / 2.0 +
         (in.delta1 + in.delta2) / 2.0;
}

double fqsw_entanglement_rate(const RateInputs& in) {
  return fqsw_quantum_rate(in) + in.h_a_given_r - in.dim_r * log_term(in) - in.delta2;
}

double merge_entanglement_rate(const RateInputs& in) {
  return -in.h_a_given_r + in.dim_r * log_term(in) + in.delta1;
}

double merge_classical_rate(const RateInputs& in) {
  return in.h_tilde_a - in.h_a_given_r +
         ((in.dim_b + 1.0) * in.dim_r * std::log2(in.n + 1.0) + 2.0) / in.n + in.delta1 + in.delta2;
}

double destroy_theorem_rate(const RateInputs& in) {
  return in.h_tilde_a - in.h_a_given_r + (in.dim_e + 1.0) * in.dim_r * log_term(in) + in.delta1;
}

// ---- Schumacher ------------------------------------------------------------------

ProtocolResult schumacher_run(const PureState& psi_ar, int n, Index dim_b, std::uint64_t seed,
                              const ProtocolOptions& opt) {
  check_alpha(opt.alpha);
  require_labels(psi_ar.space, {"A", "R"}, "schumacher_run");
  if (n < 1) throw std::invalid_argument("schumacher_run: n must be >= 1");
  const Index da = psi_ar.space.dim_of("A"), dr = psi_ar.space.dim_of("R");
  const Index dan = ipow(da, n), drn = ipow(dr, n);
  if (dan * drn > kMcDimCap) {
    std::ostringstream os;
    os << "schumacher_run: |A R|^n = " << dan * drn << " exceeds the desk-scale cap " << kMcDimCap;
    throw std::invalid_argument(os.str());
  }
  if (dim_b < 1 || dim_b > dan) throw std::invalid_argument("schumacher_run: need 1 <= |B| <= |A|^n");

  const double c = decoupling_prefactor(opt.alpha);
  SourceEntropies se = source_entropies(psi_ar, opt);
  const double eps_n = 4.0 * std::exp2(c * (static_cast<double>(dr) * lg(n + 1.0) + n * se.h_tilde_a -
                                            lg(static_cast<double>(dim_b))));

  PureState psin = tensor_power(psi_ar, n);
  const Labels a = suffixed({"A"}, n), r = suffixed({"R"}, n);
  SubsystemSpace an = psin.space.subset(a);
  SubsystemSpace bsp = SubsystemSpace::single("B", dim_b);
  PartialIsom w = PartialIsom::truncation(an, bsp);
  KrausMap tmap = compose(trace_map(bsp), t_w_map(w));

  DecouplingCondition cond = make_condition(psin.space, Mat(psin.amps), a, tmap, eps_n, "eps");
  WitnessResult wr = witness_search({cond}, opt.witness_tries, seed, opt.policy);

  Mat psi_m = arrange(psin.space, psin.amps, a, r);
  Mat p = w.mat().adjoint() * w.mat();
  Mat xi_m = std::sqrt(static_cast<double>(dan) / static_cast<double>(dim_b)) * p * wr.unitary * psi_m;
  UhlmannResult uh = uhlmann_extend(psi_m, xi_m, eps_n);
  Mat w2 = w.mat() * uh.v;

  // Bob's output W2† C_{W2}(Ψ) = P'ΨP' + (P'/|B|) ⊗ Tr_A[(1 − P')Ψ]
  Mat kept = w2.adjoint() * w2 * psi_m;
  Mat lost = psi_m - kept;
  Mat tau = lost.transpose() * lost.conjugate();
  Mat mix = kron_factor(w2.adjoint() / std::sqrt(static_cast<double>(dim_b)), linalg::psd_factor(tau));
  LowRank diff;
  diff.add(flatten(kept), 1.0);
  for (Index k = 0; k < mix.cols(); ++k) diff.add(mix.col(k), 1.0);
  diff.add(flatten(psi_m), -1.0);

  ProtocolResult res;
  res.protocol = "schumacher";
  res.n = n;
  res.seed = {seed, 0};
  res.measured_error = diff.norm();
  res.bound = 2.0 * xi(eps_n);
  record_witness(res, wr, {"eps_condition"});
  res.witnesses["V"] = uh.v;
  res.witnesses["W2"] = w2;
  res.diagnostics["eps_n"] = eps_n;
  res.diagnostics["uhlmann_error"] = uh.error;
  res.diagnostics["h_tilde_a"] = se.h_tilde_a;

  RateInputs ri;
  ri.h_tilde_a = se.h_tilde_a;
  ri.h_a_given_r = se.h_a_given_r;
  ri.dim_r = static_cast<double>(dr);
  ri.n = n;
  ri.delta1 = opt.delta1;
  ri.delta2 = opt.delta2;
  res.rates["compression"] = lg(static_cast<double>(dim_b)) / n;
  res.rates["theorem_compression"] = schumacher_theorem_rate(ri);
  return res;
}

// ---- FQSW ------------------------------------------------------------------------

ProtocolResult fqsw_run(const PureState& psi_abr, int n, Index dim_a1, Index dim_a2, std::uint64_t seed,
                        const ProtocolOptions& opt) {
  check_alpha(opt.alpha);
  require_labels(psi_abr.space, {"A", "B", "R"}, "fqsw_run");
  if (n < 1) throw std::invalid_argument("fqsw_run: n must be >= 1");
  const Index da = psi_abr.space.dim_of("A"), db = psi_abr.space.dim_of("B"), dr = psi_abr.space.dim_of("R");
  const Index dan = ipow(da, n), dbn = ipow(db, n), drn = ipow(dr, n);
  if (dan * dbn * drn > kMcDimCap) {
    std::ostringstream os;
    os << "fqsw_run: |ABR|^n = " << dan * dbn * drn << " exceeds the desk-scale cap " << kMcDimCap;
    throw std::invalid_argument(os.str());
  }
  if (dim_a1 < 1 || dim_a2 < 1 || dim_a1 * dim_a2 > dan)
    throw std::invalid_argument("fqsw_run: need |A1||A2| <= |A|^n");

  const double c = decoupling_prefactor(opt.alpha);
  SourceEntropies se = source_entropies(psi_abr, opt);
  const double eps_n =
      8.0 * std::exp2(c * (static_cast<double>(db * dr) * lg(n + 1.0) + n * se.h_tilde_a -
                           lg(static_cast<double>(dim_a1 * dim_a2))));
  const double theta_n =
      8.0 * std::exp2(c * (static_cast<double>(dr) * lg(n + 1.0) - n * se.h_a_given_r +
                           lg(static_cast<double>(dim_a1) / static_cast<double>(dim_a2))));

  PureState psin = tensor_power(psi_abr, n);
  const Labels a = suffixed({"A"}, n), b = suffixed({"B"}, n), r = suffixed({"R"}, n);
  const Labels rest = psin.space.without(a).labels();
  SubsystemSpace an = psin.space.subset(a);
  SubsystemSpace code({"A1", "A2"}, {dim_a1, dim_a2});
  PartialIsom w = PartialIsom::truncation(an, code);
  KrausMap tw = t_w_map(w);

  KrausMap t_eps = compose(trace_map(code), tw);
  DecouplingCondition c_eps = make_condition(psin.space, Mat(psin.amps), a, t_eps, eps_n, "eps");
  LabeledOperator rho_ar_n = reduced(psin, psin.space.without(b).labels());
  KrausMap t_theta = compose(partial_trace_map(code, {"A2"}), tw);
  DecouplingCondition c_theta =
      make_condition(rho_ar_n.space, linalg::psd_factor(rho_ar_n.m), a, t_theta, theta_n, "theta");
  WitnessResult wr = witness_search({c_eps, c_theta}, opt.witness_tries, seed, opt.policy);

  const double scale = std::sqrt(static_cast<double>(dan) / static_cast<double>(dim_a1 * dim_a2));
  Mat psi_m = arrange(psin.space, psin.amps, a, rest);
  Mat p = w.mat().adjoint() * w.mat();
  UhlmannResult uh_v = uhlmann_extend(psi_m, scale * p * wr.unitary * psi_m, eps_n);

  // Bob's decoder from the A1 R^n decoupling condition
  SubsystemSpace eta_space = code.concat(psin.space.subset(rest));
  const Labels bob_in = cat({"A2"}, b), common = cat({"A1"}, r);
  Mat eta_m = scale * w.mat() * wr.unitary * psi_m;
  Mat from = arrange(eta_space, flatten(eta_m), bob_in, common);

  PureState psi_t(psi_abr.space.renamed("A", "Bt"), psi_abr.amps);
  PureState target = tensor(mes(dim_a1, "A1", "B1"), tensor_power(psi_t, n));
  const Labels bt = suffixed({"Bt"}, n);
  const Labels bob_out = cat(cat({"B1"}, bt), b);
  Mat to = arrange(target.space, target.amps, bob_out, common);
  UhlmannResult uh_u = uhlmann_extend(from, to, theta_n);

  // Alice: C_W ∘ V; Bob: Ũ on A2 B^n
  auto bob = [&](const Mat& on_code_rest) {
    return flatten(uh_u.v * arrange(eta_space, flatten(on_code_rest), bob_in, common));
  };
  LowRank diff;
  Mat vpsi = uh_v.v * psi_m;
  diff.add(bob(w.mat() * vpsi), 1.0);
  Mat lost = vpsi - p * vpsi;
  Mat tau = lost.transpose() * lost.conjugate();
  Mat tf = linalg::psd_factor(tau);
  const Index dcode = dim_a1 * dim_a2;
  for (Index e = 0; e < dcode; ++e)
    for (Index k = 0; k < tf.cols(); ++k) {
      Mat col = Mat::Zero(dcode, tf.rows());
      col.row(e) = tf.col(k).transpose() / std::sqrt(static_cast<double>(dcode));
      diff.add(bob(col), 1.0);
    }
  diff.add(flatten(to), -1.0);

  ProtocolResult res;
  res.protocol = "fqsw";
  res.n = n;
  res.seed = {seed, 0};
  res.measured_error = diff.norm();
  res.bound = xi(eps_n) + xi(theta_n);
  record_witness(res, wr, {"eps_condition", "theta_condition"});
  res.witnesses["V"] = uh_v.v;
  res.witnesses["U_tilde"] = uh_u.v;
  res.diagnostics["eps_n"] = eps_n;
  res.diagnostics["theta_n"] = theta_n;
  res.diagnostics["h_tilde_a"] = se.h_tilde_a;
  res.diagnostics["h_a_given_r"] = se.h_a_given_r;

  RateInputs ri;
  ri.h_tilde_a = se.h_tilde_a;
  ri.h_a_given_r = se.h_a_given_r;
  ri.dim_r = static_cast<double>(dr);
  ri.dim_b = static_cast<double>(db);
  ri.n = n;
  ri.delta1 = opt.delta1;
  ri.delta2 = opt.delta2;
  res.rates["quantum_communication"] = lg(static_cast<double>(dim_a2)) / n;
  res.rates["entanglement_gain"] = lg(static_cast<double>(dim_a1)) / n;
  res.rates["theorem_quantum_communication"] = fqsw_quantum_rate(ri);
  res.rates["theorem_entanglement_gain"] = fqsw_entanglement_rate(ri);
  return res;
}

// ---- state merging -----------------------------------------------------------------

Index MergeConfig::j() const { return (dim_e * dim_a0 + dim_a1 - 1) / dim_a1; }
double MergeConfig::zeta() const {
  return static_cast<double>(dim_e) * static_cast<double>(dim_a0) / static_cast<double>(dim_a1);
}
void MergeConfig::validate() const {
  if (dim_a0 < 1 || dim_a1 < 1 || dim_e < 1) throw std::invalid_argument("merge config: dimensions must be >= 1");
  if (dim_a1 > dim_a0 * dim_e) {
    std::ostringstream os;
    os << "merge config: |A1| = " << dim_a1 << " exceeds |A0||E| = " << dim_a0 * dim_e;
    throw std::invalid_argument(os.str());
  }
}

ProtocolResult merge_run(const PureState& psi_abr, int n, const MergeConfig& cfg, std::uint64_t seed,
                         const ProtocolOptions& opt) {
  check_alpha(opt.alpha);
  cfg.validate();
  require_labels(psi_abr.space, {"A", "B", "R"}, "merge_run");
  if (n < 1) throw std::invalid_argument("merge_run: n must be >= 1");
  const Index da = psi_abr.space.dim_of("A"), db = psi_abr.space.dim_of("B"), dr = psi_abr.space.dim_of("R");
  const Index dan = ipow(da, n), dbn = ipow(db, n), drn = ipow(dr, n);
  const Index da0 = cfg.dim_a0, da1 = cfg.dim_a1, de = cfg.dim_e;
  if (de > dan) throw std::invalid_argument("merge_run: |E| must not exceed |A|^n");
  if (da0 > da1 * dan)
    throw std::invalid_argument("merge_run: Bob's decoders need |A0| <= |A1||A|^n to be isometries");
  if (dan * dbn * drn * da0 * da0 > kMcDimCap) throw std::invalid_argument("merge_run: input exceeds desk scale");

  const double c = decoupling_prefactor(opt.alpha);
  SourceEntropies se = source_entropies(psi_abr, opt);
  const double zeta = cfg.zeta();
  const Index jj = cfg.j();
  const double eps_n = 8.0 * std::exp2(c * (static_cast<double>(db * dr) * lg(n + 1.0) + n * se.h_tilde_a -
                                            lg(static_cast<double>(de))));
  const double theta_n = 8.0 * std::exp2(c * (static_cast<double>(dr) * lg(n + 1.0) - n * se.h_a_given_r -
                                              (lg(static_cast<double>(da0)) - lg(static_cast<double>(da1)))));

  PureState psin = tensor_power(psi_abr, n);
  const Labels a = suffixed({"A"}, n), b = suffixed({"B"}, n), r = suffixed({"R"}, n);
  PureState full = tensor(psin, mes(da0, "A0", "B0"));
  const Labels alice = cat(a, {"A0"});
  const Labels rest = full.space.without(alice).labels();

  SubsystemSpace an = psin.space.subset(a);
  SubsystemSpace esp = SubsystemSpace::single("E", de);
  SubsystemSpace a0sp = SubsystemSpace::single("A0", da0);
  SubsystemSpace ea0 = esp.concat(a0sp);
  PartialIsom w = PartialIsom::truncation(an, esp);
  KrausMap tw_a0 = tensor(t_w_map(w), identity_map(a0sp));
  MeasurementFamily meas = measurement_map(ea0, SubsystemSpace::single("A1", da1), "X");
  if (meas.j != jj) throw std::logic_error("merge_run: measurement outcome count disagrees with J");

  ProtocolResult res;
  res.protocol = "merge";
  res.n = n;
  res.seed = {seed, 0};

  // ω^{XA1} = E(π^{EA0}) against π^{XA1}
  LabeledOperator omega = apply(meas.map, maximally_mixed(ea0).op());
  const double omega_gap =
      trace_norm(linalg::hermitize(omega.m - Mat::Identity(omega.dim(), omega.dim()) / static_cast<double>(omega.dim())));
  res.diagnostics["omega_gap"] = omega_gap;
  res.diagnostics["two_over_zeta"] = 2.0 / zeta;
  res.diagnostics["omega_check_passed"] = omega_gap < 2.0 / zeta ? 1.0 : 0.0;
  Mat msum = Mat::Zero(de * da0, de * da0);
  for (const Mat& m : meas.blocks) msum += m.adjoint() * m;
  res.diagnostics["measurement_completeness_defect"] =
      (msum - Mat::Identity(de * da0, de * da0)).cwiseAbs().maxCoeff();

  // the two decoupling conditions
  KrausMap t_theta = compose(meas.map, tw_a0);
  LabeledOperator rho_ar_n = reduced(psin, psin.space.without(b).labels());
  SubsystemSpace theta_space = rho_ar_n.space.concat(a0sp);
  Mat theta_factor = kron_factor(linalg::psd_factor(rho_ar_n.m), mixed_factor(da0));
  DecouplingCondition c_theta = make_condition(theta_space, theta_factor, alice, t_theta, theta_n, "theta");
  KrausMap t_eps = compose(trace_map(ea0), tw_a0);
  DecouplingCondition c_eps = make_condition(full.space, Mat(full.amps), alice, t_eps, eps_n, "eps");
  WitnessResult wr = witness_search({c_eps, c_theta}, opt.witness_tries, seed, opt.policy);
  record_witness(res, wr, {"eps_condition", "theta_condition"});

  const Mat id_a0 = Mat::Identity(da0, da0);
  Mat psi_m = arrange(full.space, full.amps, alice, rest);
  Mat p = kron_factor(w.mat().adjoint() * w.mat(), id_a0);
  Mat wa = kron_factor(w.mat(), id_a0);
  const double sc = std::sqrt(static_cast<double>(dan) / static_cast<double>(de));
  UhlmannResult uh_v = uhlmann_extend(psi_m, sc * p * wr.unitary * psi_m, eps_n);

  // per-outcome decoders
  PureState psi_t(psi_abr.space.renamed("A", "Bt"), psi_abr.amps);
  PureState target = tensor(mes(da1, "A1", "B1"), tensor_power(psi_t, n));
  const Labels bt = suffixed({"Bt"}, n);
  const Labels common = cat({"A1"}, r), bob_in = cat(b, {"B0"}), bob_out = cat(cat({"B1"}, bt), b);
  Mat to = arrange(target.space, target.amps, bob_out, common);
  SubsystemSpace out_x_space = SubsystemSpace::single("A1", da1).concat(full.space.subset(rest));

  LabeledOperator rho_r_n = reduced(psin, r);
  Mat pi_r = kron_factor(Mat::Identity(da1, da1) / static_cast<double>(da1), rho_r_n.m);

  const double sx = std::sqrt(static_cast<double>(jj) * static_cast<double>(dan) / static_cast<double>(de));
  std::vector<Mat> decoders;
  double eps_prime_mean = 0.0;
  for (Index x = 0; x < jj; ++x) {
    const Mat& mx = meas.blocks[static_cast<std::size_t>(x)];
    Mat xi_x = sx * mx * wa * wr.unitary * psi_m;
    Mat from = arrange(out_x_space, flatten(xi_x), bob_in, common);
    Mat marg = from.transpose() * from.conjugate();
    const double eps_x = trace_norm(linalg::hermitize(marg - pi_r));
    eps_prime_mean += eps_x / static_cast<double>(jj);
    decoders.push_back(uhlmann_extend(from, to, eps_x).v);
  }
  res.diagnostics["eps_prime_mean"] = eps_prime_mean;

  // Alice: E ∘ C_W ∘ V; Bob: V_x on B^n B0 for outcome x
  auto bob = [&](const Mat& on_ea0_rest) {
    std::vector<Vec> out;
    for (Index x = 0; x < jj; ++x) {
      Mat ox = meas.blocks[static_cast<std::size_t>(x)] * on_ea0_rest;
      out.push_back(flatten(decoders[static_cast<std::size_t>(x)] * arrange(out_x_space, flatten(ox), bob_in, common)));
    }
    return out;
  };
  LowRank diff;
  Mat vpsi = uh_v.v * psi_m;
  for (const Vec& v : bob(wa * vpsi)) diff.add(v, 1.0);
  // kernel part of C_W: Tr_{A^n}[(1 − W†W) ·] ⊗ π^E, keeping A0
  SubsystemSpace vspace = full.space.subset(alice).concat(full.space.subset(rest));
  Mat by_an = arrange(vspace, flatten(vpsi), a, cat({"A0"}, rest));
  Mat lost = by_an - w.mat().adjoint() * w.mat() * by_an;
  Mat tau = lost.transpose() * lost.conjugate();
  Mat tf = linalg::psd_factor(tau);
  const Index drest = full.space.dim_of(rest);
  for (Index e = 0; e < de; ++e)
    for (Index k = 0; k < tf.cols(); ++k) {
      Vec ek = Vec::Zero(de);
      ek(e) = 1.0 / std::sqrt(static_cast<double>(de));
      Vec col = flatten(kron_factor(Mat(ek), Mat(tf.col(k))));
      Mat on = Mat::Zero(de * da0, drest);
      for (Index i = 0; i < de * da0; ++i)
        for (Index j2 = 0; j2 < drest; ++j2) on(i, j2) = col(i * drest + j2);
      for (const Vec& v : bob(on)) diff.add(v, 1.0);
    }
  diff.add(flatten(to), -1.0);

  const double beta = theta_n + 2.0 / zeta;
  res.measured_error = diff.norm();
  res.bound = xi(eps_n) + 2.0 * std::sqrt(beta) + std::sqrt(2.0) * std::pow(beta, 0.75) + beta;
  res.witnesses["V"] = uh_v.v;
  res.diagnostics["eps_n"] = eps_n;
  res.diagnostics["theta_n"] = theta_n;
  res.diagnostics["beta_n"] = beta;
  res.diagnostics["zeta"] = zeta;
  res.diagnostics["J"] = static_cast<double>(jj);

  RateInputs ri;
  ri.h_tilde_a = se.h_tilde_a;
  ri.h_a_given_r = se.h_a_given_r;
  ri.dim_r = static_cast<double>(dr);
  ri.dim_b = static_cast<double>(db);
  ri.n = n;
  ri.delta1 = opt.delta1;
  ri.delta2 = opt.delta2;
  res.rates["entanglement"] = (lg(static_cast<double>(da0)) - lg(static_cast<double>(da1))) / n;
  res.rates["classical"] = lg(static_cast<double>(jj)) / n;
  res.rates["theorem_entanglement"] = merge_entanglement_rate(ri);
  res.rates["theorem_classical"] = merge_classical_rate(ri);
  return res;
}

// ---- destroying correlations ---------------------------------------------------------

ProtocolResult destroy_run(const DensityOp& rho_ar, int n, Index m, std::uint64_t seed, Index dim_b,
                           const ProtocolOptions& opt) {
  check_alpha(opt.alpha);
  require_labels(rho_ar.space(), {"A", "R"}, "destroy_run");
  if (n < 1) throw std::invalid_argument("destroy_run: n must be >= 1");
  const Index da = rho_ar.space().dim_of("A"), dr = rho_ar.space().dim_of("R");
  const Index dan = ipow(da, n), drn = ipow(dr, n);
  if (dim_b == 0) dim_b = dan;
  if (dim_b < 1 || dim_b > dan) throw std::invalid_argument("destroy_run: need 1 <= |B| <= |A|^n");
  if (m < 1 || m > dim_b * dim_b) {
    std::ostringstream os;
    os << "destroy_run: M = " << m << " exceeds |B|^2 = " << dim_b * dim_b << " (orthogonal family exhausted)";
    throw std::invalid_argument(os.str());
  }

  PureState psi = purify(rho_ar, "E");
  const Index de = psi.space.dim_of("E");
  if (dan * drn * ipow(de, n) > kMcDimCap) throw std::invalid_argument("destroy_run: input exceeds desk scale");

  const double c = decoupling_prefactor(opt.alpha);
  DensityOp rho_a(partial_trace(rho_ar.op(), {"R"}));
  const double h_tilde = renyi_entropy(rho_a.mat(), dual_alpha(opt.alpha, opt.dtype));
  const double h_ar = h_cond_unchecked(rho_ar, {"R"}, opt.alpha, opt.dtype, Arrow::optimized).value;
  const double eps_n = 8.0 * std::exp2(c * (static_cast<double>(dr * de) * lg(n + 1.0) + n * h_tilde -
                                            lg(static_cast<double>(dim_b))));
  const double theta_n = 8.0 * std::exp2(c * (static_cast<double>(dr) * lg(n + 1.0) - n * h_ar -
                                              lg(static_cast<double>(m)) + lg(static_cast<double>(dim_b))));

  PureState psin = tensor_power(psi, n);
  DensityOp rhon = tensor_power(rho_ar, n);
  const Labels a = suffixed({"A"}, n), r = suffixed({"R"}, n);
  const Labels rest = psin.space.without(a).labels();
  SubsystemSpace an = psin.space.subset(a);
  SubsystemSpace bsp = SubsystemSpace::single("B", dim_b);
  PartialIsom w = PartialIsom::truncation(an, bsp);
  KrausMap tw = t_w_map(w);

  std::vector<Mat> hw = heisenberg_weyl(dim_b);
  std::vector<Mat> family(hw.begin(), hw.begin() + static_cast<std::ptrdiff_t>(m));
  KrausMap t_eps = compose(trace_map(bsp), tw);
  KrausMap t_theta = compose(randomizing_map(bsp, family), tw);
  DecouplingCondition c_eps = make_condition(psin.space, Mat(psin.amps), a, t_eps, eps_n, "eps");
  DecouplingCondition c_theta =
      make_condition(rhon.space(), linalg::psd_factor(rhon.mat()), a, t_theta, theta_n, "theta");
  WitnessResult wr = witness_search({c_eps, c_theta}, opt.witness_tries, seed, opt.policy);

  Mat psi_m = arrange(psin.space, psin.amps, a, rest);
  Mat p = w.mat().adjoint() * w.mat();
  const double sc = std::sqrt(static_cast<double>(dan) / static_cast<double>(dim_b));
  UhlmannResult uh = uhlmann_extend(psi_m, sc * p * wr.unitary * psi_m, eps_n);

  Mat rho_m = permute(rhon.op(), cat(a, r)).m;
  Mat id_r = Mat::Identity(drn, drn);
  Mat avg = Mat::Zero(rho_m.rows(), rho_m.cols());
  const Mat q = Mat::Identity(dan, dan) - p;
  for (const Mat& v : family) {
    Mat lifted = w.mat().adjoint() * v * w.mat() + q;
    Mat k = kron_factor(lifted * uh.v, id_r);
    avg += k * rho_m * k.adjoint();
  }
  avg /= static_cast<double>(m);
  Mat rho_r = permute(partial_trace(rhon.op(), a), r).m;
  Mat target = kron_factor(p / static_cast<double>(dim_b), rho_r);

  ProtocolResult res;
  res.protocol = "destroy";
  res.n = n;
  res.seed = {seed, 0};
  res.measured_error = trace_norm(linalg::hermitize(avg - target));
  res.bound = xi(eps_n) + theta_n;
  record_witness(res, wr, {"eps_condition", "theta_condition"});
  res.witnesses["U2"] = uh.v;
  res.diagnostics["eps_n"] = eps_n;
  res.diagnostics["theta_n"] = theta_n;
  res.diagnostics["dim_e"] = static_cast<double>(de);

  RateInputs ri;
  ri.h_tilde_a = h_tilde;
  ri.h_a_given_r = h_ar;
  ri.dim_r = static_cast<double>(dr);
  ri.dim_e = static_cast<double>(de);
  ri.n = n;
  ri.delta1 = opt.delta1;
  ri.delta2 = opt.delta2;
  res.rates["randomness"] = lg(static_cast<double>(m)) / n;
  res.rates["theorem_randomness"] = destroy_theorem_rate(ri);
  return res;
}

}  // namespace qdec
