#include "qdec/qmat.hpp"

#include "qdec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qdec {

using linalg::eigh;
using linalg::hermitize;

// ---- SubsystemSpace ---------------------------------------------------------

SubsystemSpace::SubsystemSpace(Labels labels, std::vector<Index> dims)
    : labels_(std::move(labels)), dims_(std::move(dims)) {
  if (labels_.size() != dims_.size())
    throw std::invalid_argument("SubsystemSpace: labels and dims differ in length");
  total_ = 1;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (dims_[i] < 1)
      throw std::invalid_argument("SubsystemSpace: dimension of '" + labels_[i] + "' must be >= 1");
    for (std::size_t j = 0; j < i; ++j)
      if (labels_[j] == labels_[i])
        throw std::invalid_argument("SubsystemSpace: duplicate label '" + labels_[i] + "'");
    total_ *= dims_[i];
  }
}

SubsystemSpace SubsystemSpace::single(const std::string& label, Index dim) {
  return SubsystemSpace({label}, {dim});
}

bool SubsystemSpace::has(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t SubsystemSpace::position(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end())
    throw std::invalid_argument("unknown label '" + label + "' (space " + describe() + ")");
  return static_cast<std::size_t>(it - labels_.begin());
}

Index SubsystemSpace::dim_of(const std::string& label) const { return dims_[position(label)]; }

Index SubsystemSpace::dim_of(const Labels& labels) const {
  Index d = 1;
  for (const auto& l : labels) d *= dim_of(l);
  return d;
}

SubsystemSpace SubsystemSpace::concat(const SubsystemSpace& other) const {
  for (const auto& l : other.labels_)
    if (has(l)) throw std::invalid_argument("label collision: '" + l + "'");
  Labels l = labels_;
  std::vector<Index> d = dims_;
  l.insert(l.end(), other.labels_.begin(), other.labels_.end());
  d.insert(d.end(), other.dims_.begin(), other.dims_.end());
  return SubsystemSpace(std::move(l), std::move(d));
}

SubsystemSpace SubsystemSpace::subset(const Labels& labels) const {
  std::vector<Index> d;
  for (const auto& l : labels) d.push_back(dim_of(l));
  return SubsystemSpace(labels, std::move(d));
}

SubsystemSpace SubsystemSpace::without(const Labels& labels) const {
  for (const auto& l : labels) position(l);
  Labels keep;
  std::vector<Index> d;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (std::find(labels.begin(), labels.end(), labels_[i]) == labels.end()) {
      keep.push_back(labels_[i]);
      d.push_back(dims_[i]);
    }
  }
  return SubsystemSpace(std::move(keep), std::move(d));
}

SubsystemSpace SubsystemSpace::renamed(const std::string& from, const std::string& to) const {
  Labels l = labels_;
  l[position(from)] = to;
  return SubsystemSpace(std::move(l), dims_);
}

SubsystemSpace SubsystemSpace::with_suffix(const std::string& suffix) const {
  Labels l = labels_;
  for (auto& s : l) s += suffix;
  return SubsystemSpace(std::move(l), dims_);
}

std::string SubsystemSpace::describe() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) os << ",";
    os << labels_[i] << ":" << dims_[i];
  }
  os << "]";
  return os.str();
}

// ---- value types --------------------------------------------------------------

LabeledOperator::LabeledOperator(SubsystemSpace s, Mat mat, std::optional<bool> hint)
    : space(std::move(s)), m(std::move(mat)), hermitian_hint(hint) {
  if (m.rows() != space.total_dim() || m.cols() != space.total_dim()) {
    std::ostringstream os;
    os << "LabeledOperator: matrix is " << m.rows() << "x" << m.cols() << " but space "
       << space.describe() << " has dimension " << space.total_dim();
    throw std::invalid_argument(os.str());
  }
  if (hint.value_or(false) && linalg::herm_defect(m) > kHermTol)
    throw std::invalid_argument("LabeledOperator: hermitian_hint set but matrix is not Hermitian");
}

DensityOp::DensityOp(LabeledOperator op, TraceClass tc) : op_(std::move(op)), tc_(tc) {
  const double defect = linalg::herm_defect(op_.m);
  if (defect > kHermTol) {
    std::ostringstream os;
    os << "DensityOp: not Hermitian (max |m - m^dag| = " << defect << ")";
    throw std::invalid_argument(os.str());
  }
  op_.m = hermitize(op_.m);
  op_.hermitian_hint = true;
  RVec ev = linalg::eigvalsh(op_.m);
  if (ev.size() > 0 && ev(0) < 0.0) {
    if (ev(0) < -1e-10) {
      std::ostringstream os;
      os << "DensityOp: negative eigenvalue " << ev(0);
      throw std::invalid_argument(os.str());
    }
    op_.m = linalg::herm_func(op_.m, [](double x) { return x < 0.0 ? 0.0 : x; });
  }
  const double tr = op_.m.trace().real();
  if (tc_ == TraceClass::unit && std::abs(tr - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "DensityOp: unit trace required, got " << tr;
    throw std::invalid_argument(os.str());
  }
  if (tc_ == TraceClass::subnormalized && !(tr > 0.0 && tr <= 1.0 + 1e-9)) {
    std::ostringstream os;
    os << "DensityOp: subnormalized trace must lie in (0, 1], got " << tr;
    throw std::invalid_argument(os.str());
  }
}

PureState::PureState(SubsystemSpace s, Vec v) : space(std::move(s)), amps(std::move(v)) {
  if (amps.size() != space.total_dim())
    throw std::invalid_argument("PureState: amplitude count does not match space " + space.describe());
  if (std::abs(amps.norm() - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "PureState: norm must be 1, got " << amps.norm();
    throw std::invalid_argument(os.str());
  }
}

DensityOp PureState::projector() const {
  return DensityOp(LabeledOperator(space, amps * amps.adjoint()));
}

PartialIsom::PartialIsom(SubsystemSpace domain, SubsystemSpace codomain, Mat m)
    : dom_(std::move(domain)), cod_(std::move(codomain)), m_(std::move(m)) {
  if (m_.rows() != cod_.total_dim() || m_.cols() != dom_.total_dim())
    throw std::invalid_argument("PartialIsom: matrix shape must be codomain x domain");
  Eigen::BDCSVD<Mat> svd(m_);
  const RVec s = svd.singularValues();
  rank_ = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (std::abs(s(i) - 1.0) <= 1e-9) {
      ++rank_;
    } else if (s(i) > 1e-9) {
      std::ostringstream os;
      os << "PartialIsom: singular value " << s(i) << " is neither 0 nor 1";
      throw std::invalid_argument(os.str());
    }
  }
}

bool PartialIsom::full_rank() const {
  return rank_ == std::min(dom_.total_dim(), cod_.total_dim());
}

PartialIsom PartialIsom::truncation(SubsystemSpace domain, SubsystemSpace codomain) {
  Mat w = Mat::Zero(codomain.total_dim(), domain.total_dim());
  const Index r = std::min(codomain.total_dim(), domain.total_dim());
  for (Index i = 0; i < r; ++i) w(i, i) = 1.0;
  return PartialIsom(std::move(domain), std::move(codomain), std::move(w));
}

// ---- structure --------------------------------------------------------------

namespace {

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat permute_both(const Mat& m, const std::vector<Index>& map) {
  const Index n = m.rows();
  Mat out(n, n);
  for (Index j = 0; j < n; ++j) {
    const Index oj = map[static_cast<std::size_t>(j)];
    for (Index i = 0; i < n; ++i) out(i, j) = m(map[static_cast<std::size_t>(i)], oj);
  }
  return out;
}

}  // namespace

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
  SubsystemSpace s = a.space.concat(b.space);
  std::optional<bool> hint;
  if (a.hermitian_hint.value_or(false) && b.hermitian_hint.value_or(false)) hint = true;
  return LabeledOperator(std::move(s), kron(a.m, b.m), hint);
}

DensityOp tensor(const DensityOp& a, const DensityOp& b) {
  TraceClass tc = (a.trace_class() == TraceClass::unit && b.trace_class() == TraceClass::unit)
                      ? TraceClass::unit
                      : TraceClass::subnormalized;
  return DensityOp(tensor(a.op(), b.op()), tc);
}

PureState tensor(const PureState& a, const PureState& b) {
  SubsystemSpace s = a.space.concat(b.space);
  return PureState(std::move(s), kron(a.amps, b.amps));
}

LabeledOperator permute(const LabeledOperator& m, const Labels& new_order) {
  if (new_order == m.space.labels()) return m;
  auto map = linalg::label_index_map(m.space, new_order);
  return LabeledOperator(m.space.subset(new_order), permute_both(m.m, map), m.hermitian_hint);
}

Mat permute_rows(const SubsystemSpace& space, const Mat& x, const Labels& new_order) {
  if (new_order == space.labels()) return x;
  auto map = linalg::label_index_map(space, new_order);
  Mat out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(map[static_cast<std::size_t>(i)]);
  return out;
}

PureState permute(const PureState& s, const Labels& new_order) {
  return PureState(s.space.subset(new_order), permute_rows(s.space, s.amps, new_order));
}

LabeledOperator partial_trace(const LabeledOperator& m, const Labels& traced) {
  SubsystemSpace kept = m.space.without(traced);
  Labels order = kept.labels();
  order.insert(order.end(), traced.begin(), traced.end());
  LabeledOperator p = permute(m, order);
  const Index dk = kept.total_dim();
  const Index dt = m.space.dim_of(traced);
  Mat out = Mat::Zero(dk, dk);
  for (Index t = 0; t < dt; ++t)
    for (Index j = 0; j < dk; ++j)
      for (Index i = 0; i < dk; ++i) out(i, j) += p.m(i * dt + t, j * dt + t);
  return LabeledOperator(std::move(kept), std::move(out), m.hermitian_hint);
}

DensityOp partial_trace(const DensityOp& rho, const Labels& traced) {
  return DensityOp(partial_trace(rho.op(), traced), rho.trace_class());
}

LabeledOperator reduced(const SubsystemSpace& space, const Vec& v, const Labels& kept) {
  SubsystemSpace rest = space.without(kept);
  Labels order = kept;
  order.insert(order.end(), rest.labels().begin(), rest.labels().end());
  Vec p = permute_rows(space, v, order);
  const Index dk = space.dim_of(kept);
  const Index dr = rest.total_dim();
  // row-major reshape: index k*dr + r; Eigen maps column-major so take the transpose view
  Eigen::Map<const Mat> t(p.data(), dr, dk);
  Mat a = t.transpose();
  return LabeledOperator(space.subset(kept), a * a.adjoint(), true);
}

LabeledOperator reduced(const PureState& s, const Labels& kept) { return reduced(s.space, s.amps, kept); }

LabeledOperator identity(const SubsystemSpace& space) {
  return LabeledOperator(space, Mat::Identity(space.total_dim(), space.total_dim()), true);
}

LabeledOperator embed(const LabeledOperator& part, const SubsystemSpace& full) {
  SubsystemSpace rest = full.without(part.space.labels());
  LabeledOperator t = tensor(identity(rest), part);
  return permute(t, full.labels());
}

Labels replaced_order(const SubsystemSpace& space, const Labels& in_labels, const Labels& out_labels) {
  std::size_t first = space.labels().size();
  for (const auto& l : in_labels) first = std::min(first, space.position(l));
  Labels order;
  bool placed = false;
  for (std::size_t i = 0; i < space.labels().size(); ++i) {
    if (i == first) {
      order.insert(order.end(), out_labels.begin(), out_labels.end());
      placed = true;
    }
    const auto& l = space.labels()[i];
    if (std::find(in_labels.begin(), in_labels.end(), l) == in_labels.end()) order.push_back(l);
  }
  if (!placed) order.insert(order.end(), out_labels.begin(), out_labels.end());
  return order;
}

RowApplied left_apply(const Mat& k, const SubsystemSpace& space, const Mat& x, const Labels& in_labels,
                      const SubsystemSpace& out) {
  if (x.rows() != space.total_dim())
    throw std::invalid_argument("left_apply: row count does not match space " + space.describe());
  const Index din = space.dim_of(in_labels);
  if (k.cols() != din || k.rows() != out.total_dim()) {
    std::ostringstream os;
    os << "left_apply: operator is " << k.rows() << "x" << k.cols() << ", expected "
       << out.total_dim() << "x" << din;
    throw std::invalid_argument(os.str());
  }
  SubsystemSpace rest = space.without(in_labels);
  for (const auto& l : out.labels())
    if (rest.has(l)) throw std::invalid_argument("left_apply: output label '" + l + "' collides");

  Labels order = rest.labels();
  order.insert(order.end(), in_labels.begin(), in_labels.end());
  Mat xp = permute_rows(space, x, order);

  const Index dr = rest.total_dim();
  const Index dout = out.total_dim();
  const Index nc = x.cols();
  // rows are (r, a) with a fastest; viewed column-major this is a din x (dr*nc) block
  Eigen::Map<const Mat> view(xp.data(), din, dr * nc);
  Mat y = k * view;
  Eigen::Map<Mat> yv(y.data(), dr * dout, nc);

  SubsystemSpace mid = rest.concat(out);
  Labels final_order = replaced_order(space, in_labels, out.labels());

  Mat res = permute_rows(mid, Mat(yv), final_order);
  return {mid.subset(final_order), std::move(res)};
}

LabeledOperator sandwich(const Mat& k, const LabeledOperator& m, const Labels& in_labels,
                         const SubsystemSpace& out) {
  RowApplied y = left_apply(k, m.space, m.m, in_labels, out);
  Mat yt = y.x.adjoint();
  RowApplied z = left_apply(k, m.space, yt, in_labels, out);
  return LabeledOperator(z.space, z.x.adjoint());
}

LabeledOperator conjugate(const Mat& u, const LabeledOperator& m, const Labels& labels) {
  SubsystemSpace s = m.space.subset(labels);
  LabeledOperator r = sandwich(u, m, labels, s);
  r.hermitian_hint = m.hermitian_hint;
  return permute(r, m.space.labels());
}

// ---- spectral functionals ---------------------------------------------------

double trace_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (m.rows() == m.cols() && linalg::herm_defect(m) <= 1e-13 * scale)
    return linalg::eigvalsh(m).cwiseAbs().sum();
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues().sum();
}

double trace_norm(const LabeledOperator& m) { return trace_norm(m.m); }

double trace_norm_lowrank(const Mat& v, const RVec& weights) {
  if (v.cols() != weights.size()) throw std::invalid_argument("trace_norm_lowrank: weight count mismatch");
  if (v.cols() == 0) return 0.0;
  if (v.cols() >= v.rows()) {
    Mat d = v * weights.asDiagonal() * v.adjoint();
    return linalg::eigvalsh(d).cwiseAbs().sum();
  }
  Mat g = v.adjoint() * v;
  Mat gs = linalg::sqrt_psd(g);
  Mat k = gs * weights.asDiagonal() * gs;
  return linalg::eigvalsh(k).cwiseAbs().sum();
}

double trace_distance_pure(const Vec& a, const Vec& b) {
  const double na = a.squaredNorm(), nb = b.squaredNorm();
  const double ov = std::norm(a.dot(b));
  return std::sqrt(std::max(0.0, (na + nb) * (na + nb) - 4.0 * ov));
}

double fidelity(const Mat& rho, const Mat& sigma) {
  Mat a = linalg::sqrt_psd(rho);
  Mat b = linalg::sqrt_psd(sigma);
  Eigen::BDCSVD<Mat> svd(a * b);
  return svd.singularValues().sum();
}

double fidelity(const LabeledOperator& rho, const LabeledOperator& sigma) {
  if (rho.space != sigma.space)
    throw std::invalid_argument("fidelity: space mismatch " + rho.space.describe() + " vs " +
                                sigma.space.describe());
  return fidelity(rho.m, sigma.m);
}

double fidelity(const DensityOp& rho, const DensityOp& sigma) { return fidelity(rho.op(), sigma.op()); }

Mat mat_power(const Mat& m, double p) {
  const double scale = std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 1.0);
  if (linalg::herm_defect(m) > kHermTol * scale)
    throw std::invalid_argument("mat_power: input is not Hermitian");
  return linalg::herm_func(m, [p](double x) { return x > kEigFloor ? std::pow(x, p) : 0.0; });
}

LabeledOperator mat_power(const LabeledOperator& m, double p) {
  return LabeledOperator(m.space, mat_power(m.m, p), true);
}

LabeledOperator positive_part_projector(const LabeledOperator& rho, const LabeledOperator& sigma) {
  if (rho.space != sigma.space) throw std::invalid_argument("positive_part_projector: space mismatch");
  return LabeledOperator(rho.space,
                         linalg::herm_func(rho.m - sigma.m, [](double x) { return x >= -kEigFloor ? 1.0 : 0.0; }),
                         true);
}

std::vector<Mat> eigenprojectors(const Mat& sigma, double rel_tol) {
  auto e = eigh(sigma);
  const Index n = e.values.size();
  std::vector<Mat> out;
  if (n == 0) return out;
  const double tol = rel_tol * std::max(1.0, e.values.cwiseAbs().maxCoeff());
  Index start = 0;
  for (Index i = 1; i <= n; ++i) {
    if (i == n || e.values(i) - e.values(i - 1) > tol) {
      Mat v = e.vectors.middleCols(start, i - start);
      out.push_back(v * v.adjoint());
      start = i;
    }
  }
  return out;
}

int distinct_eigs(const Mat& sigma, double rel_tol) {
  if (linalg::herm_defect(sigma) > kHermTol * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("distinct_eigs: input is not Hermitian");
  RVec ev = linalg::eigvalsh(sigma);
  if (ev.size() == 0) return 0;
  const double tol = rel_tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
  int count = 1;
  for (Index i = 1; i < ev.size(); ++i)
    if (ev(i) - ev(i - 1) > tol) ++count;
  return count;
}

int distinct_eigs(const LabeledOperator& sigma, double rel_tol) { return distinct_eigs(sigma.m, rel_tol); }

LabeledOperator pinch(const LabeledOperator& sigma, const LabeledOperator& rho) {
  if (sigma.space != rho.space) throw std::invalid_argument("pinch: space mismatch");
  if (linalg::herm_defect(sigma.m) > kHermTol) throw std::invalid_argument("pinch: sigma is not Hermitian");
  Mat out = Mat::Zero(rho.dim(), rho.dim());
  for (const Mat& p : eigenprojectors(sigma.m)) out += p * rho.m * p;
  return LabeledOperator(rho.space, std::move(out), rho.hermitian_hint);
}

PureState purify(const DensityOp& rho, const std::string& ref_label) {
  const double tr = rho.trace();
  if (std::abs(tr - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "purify: unit-trace state required, got trace " << tr;
    throw std::invalid_argument(os.str());
  }
  auto e = eigh(rho.mat());
  std::vector<Index> keep;
  for (Index i = e.values.size(); i-- > 0;)
    if (e.values(i) > kEigFloor) keep.push_back(i);  // descending
  const Index r = static_cast<Index>(keep.size());
  const Index d = rho.dim();
  Vec v = Vec::Zero(d * r);
  for (Index j = 0; j < r; ++j) {
    const double s = std::sqrt(e.values(keep[static_cast<std::size_t>(j)]));
    const auto col = e.vectors.col(keep[static_cast<std::size_t>(j)]);
    for (Index a = 0; a < d; ++a) v(a * r + j) = s * col(a);
  }
  v.normalize();
  return PureState(rho.space().concat(SubsystemSpace::single(ref_label, r)), std::move(v));
}

PureState mes(Index d, const std::string& la, const std::string& lb) {
  if (d < 1) throw std::invalid_argument("mes: dimension must be >= 1");
  Vec v = Vec::Zero(d * d);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index i = 0; i < d; ++i) v(i * d + i) = s;
  return PureState(SubsystemSpace({la, lb}, {d, d}), std::move(v));
}

DensityOp maximally_mixed(const SubsystemSpace& space) {
  const Index d = space.total_dim();
  return DensityOp(LabeledOperator(space, Mat::Identity(d, d) / static_cast<double>(d), true));
}

DensityOp maximally_mixed(Index d, const std::string& label) {
  if (d < 1) throw std::invalid_argument("maximally_mixed: dimension must be >= 1");
  return maximally_mixed(SubsystemSpace::single(label, d));
}

double xi(double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("xi: argument must be non-negative");
  if (std::isinf(eps)) return eps;
  return std::sqrt(eps * (2.0 + eps + 2.0 * std::sqrt(1.0 + eps)));
}

LabeledOperator q_map(const LabeledOperator& sigma, const Labels& a_labels) {
  const Index da = sigma.space.dim_of(a_labels);
  LabeledOperator ss(sigma.space, sigma.m * sigma.m.adjoint());
  LabeledOperator t = partial_trace(ss, a_labels);
  LabeledOperator sb = partial_trace(sigma, a_labels);
  return LabeledOperator(t.space, static_cast<double>(da) * t.m - sb.m * sb.m.adjoint());
}

Labels suffixed(const Labels& labels, int n) {
  Labels out;
  for (int k = 1; k <= n; ++k)
    for (const auto& l : labels) out.push_back(l + "." + std::to_string(k));
  return out;
}

SubsystemSpace power_space(const SubsystemSpace& s, int n) {
  if (n < 1) throw std::invalid_argument("tensor power: n must be >= 1");
  SubsystemSpace out;
  for (int k = 1; k <= n; ++k) out = out.concat(s.with_suffix("." + std::to_string(k)));
  return out;
}

DensityOp tensor_power(const DensityOp& rho, int n) {
  SubsystemSpace s = power_space(rho.space(), n);
  Mat m = rho.mat();
  for (int k = 1; k < n; ++k) m = kron(m, rho.mat());
  return DensityOp(LabeledOperator(std::move(s), std::move(m), true), rho.trace_class());
}

PureState tensor_power(const PureState& psi, int n) {
  SubsystemSpace s = power_space(psi.space, n);
  Vec v = psi.amps;
  for (int k = 1; k < n; ++k) v = kron(v, psi.amps);
  return PureState(std::move(s), std::move(v));
}

}  // namespace qdec
