#include "qdec/twirl.hpp"

#include "qdec/linalg.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qdec {

std::mt19937_64 make_engine(RngSeed seed) {
  const auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x & 0xffffffffu); };
  const auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(seed.master_seed), hi(seed.master_seed), lo(seed.stream_index), hi(seed.stream_index),
                    0x71646563u};
  return std::mt19937_64(seq);
}

namespace {

Mat ginibre(Index rows, Index cols, std::mt19937_64& eng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat g(rows, cols);
  const double s = 1.0 / std::sqrt(2.0);
  // fill row by row so the stream layout does not depend on Eigen's storage order
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double re = nd(eng);
      const double im = nd(eng);
      g(i, j) = cplx(re * s, im * s);
    }
  return g;
}

Mat haar_from(Index dim, std::mt19937_64& eng) {
  Mat g = ginibre(dim, dim, eng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(dim, dim);
  const Mat& r = qr.matrixQR();
  for (Index j = 0; j < dim; ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a > 0.0) ? d / a : cplx(1.0, 0.0);
  }
  return q;
}

}  // namespace

Mat sample_haar(Index dim, RngSeed seed) {
  if (dim < 1) throw std::invalid_argument("sample_haar: dimension must be >= 1");
  auto eng = make_engine(seed);
  return haar_from(dim, eng);
}

Mat random_ginibre(Index rows, Index cols, RngSeed seed) {
  auto eng = make_engine(seed);
  return ginibre(rows, cols, eng);
}

PureState random_pure_state(const SubsystemSpace& space, RngSeed seed) {
  Vec v = random_ginibre(space.total_dim(), 1, seed).col(0);
  v.normalize();
  return PureState(space, std::move(v));
}

DensityOp random_density(const SubsystemSpace& space, RngSeed seed, Index rank) {
  const Index d = space.total_dim();
  if (rank <= 0 || rank > d) rank = d;
  Mat g = random_ginibre(d, rank, seed);
  Mat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityOp(LabeledOperator(space, linalg::hermitize(rho), true));
}

DensityOp random_subnormalized(const SubsystemSpace& space, RngSeed seed) {
  auto eng = make_engine(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const double t = 1.0 - ud(eng);  // (0, 1]
  const Index d = space.total_dim();
  Mat g = ginibre(d, d, eng);
  Mat rho = g * g.adjoint();
  rho *= t / rho.trace().real();
  return DensityOp(LabeledOperator(space, linalg::hermitize(rho), true), TraceClass::subnormalized);
}

std::vector<Mat> clifford_group_qubit() {
  const double s = 1.0 / std::sqrt(2.0);
  Mat h(2, 2), p(2, 2);
  h << s, s, s, -s;
  p << 1, 0, 0, cplx(0, 1);

  auto canonical = [](const Mat& u) {
    Mat c = u;
    for (Index k = 0; k < c.size(); ++k) {
      const cplx x = c.data()[k];
      if (std::abs(x) > 1e-9) {
        c *= std::conj(x) / std::abs(x);
        break;
      }
    }
    return c;
  };
  auto key = [](const Mat& u) {
    std::ostringstream os;
    for (Index k = 0; k < u.size(); ++k) {
      const long re = std::lround(u.data()[k].real() * 1e6);
      const long im = std::lround(u.data()[k].imag() * 1e6);
      os << (re == 0 ? 0 : re) << "," << (im == 0 ? 0 : im) << ";";
    }
    return os.str();
  };

  std::vector<Mat> group;
  std::map<std::string, std::size_t> seen;
  Mat id = Mat::Identity(2, 2);
  group.push_back(id);
  seen[key(id)] = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (const Mat* g : {&h, &p}) {
      Mat c = canonical((*g) * group[i]);
      auto k = key(c);
      if (!seen.count(k)) {
        seen[k] = group.size();
        group.push_back(c);
      }
    }
  }
  return group;
}

UnitaryEnsemble UnitaryEnsemble::haar(Index d) {
  UnitaryEnsemble e;
  e.kind = EnsembleKind::haar;
  e.dim = d;
  return e;
}

UnitaryEnsemble UnitaryEnsemble::clifford_qubit() {
  UnitaryEnsemble e;
  e.kind = EnsembleKind::clifford_qubit;
  e.dim = 2;
  e.elements = clifford_group_qubit();
  return e;
}

UnitaryEnsemble UnitaryEnsemble::explicit_list(std::vector<Mat> us) {
  if (us.empty()) throw std::invalid_argument("explicit ensemble: empty list");
  UnitaryEnsemble e;
  e.kind = EnsembleKind::explicit_list;
  e.dim = us.front().rows();
  for (std::size_t i = 0; i < us.size(); ++i) {
    const Mat& u = us[i];
    if (u.rows() != e.dim || u.cols() != e.dim ||
        (u.adjoint() * u - Mat::Identity(e.dim, e.dim)).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("explicit ensemble: element " + std::to_string(i) + " is not unitary");
  }
  e.elements = std::move(us);
  return e;
}

Mat UnitaryEnsemble::draw(std::uint64_t master, std::uint64_t i) const {
  if (kind == EnsembleKind::haar) return sample_haar(dim, {master, i});
  auto eng = make_engine({master, i});
  std::uniform_int_distribution<std::size_t> ud(0, elements.size() - 1);
  return elements[ud(eng)];
}

std::string UnitaryEnsemble::name() const {
  switch (kind) {
    case EnsembleKind::haar: return "haar";
    case EnsembleKind::clifford_qubit: return "clifford24";
    case EnsembleKind::explicit_list: return "explicit";
  }
  return "unknown";
}

int worker_count() {
  if (const char* env = std::getenv("QDEC_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_chunks(Index n, Index chunk, const std::function<void(Index, Index)>& fn) {
  if (n <= 0) return;
  if (chunk < 1) chunk = 1;
  const Index nchunks = (n + chunk - 1) / chunk;
  const int workers = static_cast<int>(std::min<Index>(worker_count(), nchunks));
  if (workers <= 1) {
    for (Index c = 0; c < nchunks; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      const Index c = next.fetch_add(1);
      if (c >= nchunks) return;
      try {
        fn(c * chunk, std::min(n, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

namespace {
constexpr Index kChunk = 256;
}

McEstimate mc_indexed(const std::function<double(Index)>& f, Index n, const std::string& label) {
  if (n < 2) throw std::invalid_argument("Monte Carlo estimate: at least 2 samples required");
  std::vector<double> v(static_cast<std::size_t>(n));
  parallel_chunks(n, kChunk, [&](Index b, Index e) {
    for (Index i = b; i < e; ++i) v[static_cast<std::size_t>(i)] = f(i);
  });
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  McEstimate out;
  out.mean = mean;
  out.std_err = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  out.n = n;
  out.ensemble = label;
  return out;
}

McEstimate mc_average(const std::function<double(const Mat&)>& f, const UnitaryEnsemble& ens, Index n,
                      std::uint64_t seed) {
  return mc_indexed([&](Index i) { return f(ens.draw(seed, static_cast<std::uint64_t>(i))); }, n, ens.name());
}

OpEstimate mc_average_op(const std::function<Mat(const Mat&)>& f, const UnitaryEnsemble& ens, Index n,
                         std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("mc_average_op: at least 2 samples required");
  const Index nchunks = (n + kChunk - 1) / kChunk;
  std::vector<Mat> sum(static_cast<std::size_t>(nchunks));
  std::vector<Eigen::MatrixXd> sq_re(static_cast<std::size_t>(nchunks)), sq_im(static_cast<std::size_t>(nchunks));
  parallel_chunks(n, kChunk, [&](Index b, Index e) {
    const auto c = static_cast<std::size_t>(b / kChunk);
    for (Index i = b; i < e; ++i) {
      Mat x = f(ens.draw(seed, static_cast<std::uint64_t>(i)));
      if (i == b) {
        sum[c] = Mat::Zero(x.rows(), x.cols());
        sq_re[c] = Eigen::MatrixXd::Zero(x.rows(), x.cols());
        sq_im[c] = Eigen::MatrixXd::Zero(x.rows(), x.cols());
      }
      sum[c] += x;
      sq_re[c] += x.real().cwiseAbs2();
      sq_im[c] += x.imag().cwiseAbs2();
    }
  });
  Mat s = sum[0];
  Eigen::MatrixXd qr = sq_re[0], qi = sq_im[0];
  for (std::size_t c = 1; c < sum.size(); ++c) {
    s += sum[c];
    qr += sq_re[c];
    qi += sq_im[c];
  }
  const double dn = static_cast<double>(n);
  OpEstimate out;
  out.mean = s / dn;
  Eigen::MatrixXd var_re = (qr - dn * out.mean.real().cwiseAbs2()) / (dn - 1.0);
  Eigen::MatrixXd var_im = (qi - dn * out.mean.imag().cwiseAbs2()) / (dn - 1.0);
  out.std_err = ((var_re.cwiseMax(0.0) + var_im.cwiseMax(0.0)) / dn).cwiseSqrt();
  out.n = n;
  return out;
}

double ensemble_average(const std::function<double(const Mat&)>& f, const UnitaryEnsemble& ens) {
  if (!ens.finite()) throw std::invalid_argument("ensemble_average: ensemble is not finite");
  double s = 0.0;
  for (const Mat& u : ens.elements) s += f(u);
  return s / static_cast<double>(ens.elements.size());
}

Mat ensemble_average_op(const std::function<Mat(const Mat&)>& f, const UnitaryEnsemble& ens) {
  if (!ens.finite()) throw std::invalid_argument("ensemble_average_op: ensemble is not finite");
  Mat s = f(ens.elements.front());
  for (std::size_t i = 1; i < ens.elements.size(); ++i) s += f(ens.elements[i]);
  return s / static_cast<double>(ens.elements.size());
}

LabeledOperator twirl_moment1(const LabeledOperator& m, const Labels& a_labels) {
  LabeledOperator rest = partial_trace(m, a_labels);
  LabeledOperator pa = maximally_mixed(m.space.subset(a_labels)).op();
  return permute(tensor(pa, rest), m.space.labels());
}

namespace {

struct SplitAR {
  Labels a, r;
  LabeledOperator sigma;  // ordered A then R (R in w's order)
};

SplitAR split(const LabeledOperator& sigma, const LabeledOperator& x, const LabeledOperator& w) {
  SplitAR s;
  s.a = x.space.labels();
  s.r = w.space.labels();
  Labels order = s.a;
  order.insert(order.end(), s.r.begin(), s.r.end());
  if (order.size() != sigma.space.size())
    throw std::invalid_argument("twirl_moment2: X and W must cover the labels of sigma");
  s.sigma = permute(sigma, order);
  if (s.sigma.space.subset(s.a) != x.space || s.sigma.space.subset(s.r) != w.space)
    throw std::invalid_argument("twirl_moment2: dimension mismatch between sigma and X/W");
  return s;
}

}  // namespace

LabeledOperator twirl_moment2(const LabeledOperator& sigma, const LabeledOperator& x, const LabeledOperator& w) {
  SplitAR s = split(sigma, x, w);
  const Index da = x.dim();
  if (da < 2) throw std::invalid_argument("twirl_moment2: |A| must be >= 2");
  const double d = static_cast<double>(da);
  Mat sr = partial_trace(s.sigma, s.a).m;
  Mat lambda = sr * w.m * sr.adjoint();
  Mat iw = embed(w, s.sigma.space).m;
  Mat upsilon = partial_trace(LabeledOperator(s.sigma.space, s.sigma.m * iw * s.sigma.m.adjoint()), s.a).m;
  Mat ia = Mat::Identity(da, da);
  LabeledOperator t1 = tensor(x, LabeledOperator(w.space, d * lambda - upsilon));
  LabeledOperator t2 = tensor(LabeledOperator(x.space, x.m.trace() * ia), LabeledOperator(w.space, d * upsilon - lambda));
  LabeledOperator out(t1.space, (t1.m + t2.m) / (d * (d * d - 1.0)));
  return permute(out, sigma.space.labels());
}

LabeledOperator twirl_moment2_sample(const Mat& u, const LabeledOperator& sigma, const LabeledOperator& x,
                                     const LabeledOperator& w) {
  SplitAR s = split(sigma, x, w);
  LabeledOperator us = conjugate(u, s.sigma, s.a);
  Mat xw = tensor(x, w).m;
  LabeledOperator out(s.sigma.space, us.m * xw * us.m.adjoint());
  return permute(out, sigma.space.labels());
}

DeltaMoment second_moment_delta(const KrausMap& t, const LabeledOperator& sigma) {
  const Labels& a = t.in_space.labels();
  const Index da = t.din();
  if (da < 2) throw std::invalid_argument("second_moment_delta: |A| must be >= 2");
  if (sigma.space.subset(a) != t.in_space)
    throw std::invalid_argument("second_moment_delta: map input does not match sigma");
  const double d = static_cast<double>(da);
  ChoiMatrix w = choi(t);
  const Labels ap = primed(a);
  LabeledOperator qw = q_map(w.op, ap);
  LabeledOperator qs = q_map(sigma, a);
  LabeledOperator ex = tensor(qw, qs);
  ex.m /= (d * d - 1.0);

  LabeledOperator ww(w.op.space, w.op.m * w.op.m.adjoint());
  LabeledOperator ss(sigma.space, sigma.m * sigma.m.adjoint());
  LabeledOperator up = tensor(partial_trace(ww, ap), partial_trace(ss, a));
  up.m *= d * d / (d * d - 1.0);

  Labels order = replaced_order(sigma.space, a, t.out_space.labels());
  return {permute(ex, order), permute(up, order)};
}

LabeledOperator delta_sample(const Mat& u, const KrausMap& t, const LabeledOperator& sigma) {
  const Labels& a = t.in_space.labels();
  LabeledOperator out = apply(t, conjugate(u, sigma, a));
  LabeledOperator target = tensor(choi_marginal(t), partial_trace(sigma, a));
  target = permute(target, out.space.labels());
  return LabeledOperator(out.space, out.m - target.m);
}

}  // namespace qdec
