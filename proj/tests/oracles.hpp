// Independent reference computations for the test suites. These deliberately avoid
// the library's spectral helpers and work straight from Eigen decompositions.
#pragma once

#include "qdec/qmat.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace oracle {

using qdec::cplx;
using qdec::Index;
using qdec::Mat;

inline Mat powm(const Mat& m, double p) {
  Eigen::SelfAdjointEigenSolver<Mat> es((m + m.adjoint()) / 2.0);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 1e-13 ? std::pow(ev(i), p) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Tr_A of an operator on A (da) ⊗ B (db)
inline Mat trace_first(const Mat& m, Index da, Index db) {
  Mat out = Mat::Zero(db, db);
  for (Index a = 0; a < da; ++a) out += m.block(a * db, a * db, db, db);
  return out;
}

// Tr_B of an operator on A (da) ⊗ B (db)
inline Mat trace_second(const Mat& m, Index da, Index db) {
  Mat out = Mat::Zero(da, da);
  for (Index i = 0; i < da; ++i)
    for (Index j = 0; j < da; ++j) out(i, j) = m.block(i * db, j * db, db, db).trace();
  return out;
}

inline double d_old(const Mat& rho, const Mat& sigma, double a) {
  return std::log2((powm(rho, a) * powm(sigma, 1 - a)).trace().real()) / (a - 1);
}

inline double d_sand(const Mat& rho, const Mat& sigma, double a) {
  Mat s = powm(sigma, (1 - a) / (2 * a));
  return std::log2(powm(s * rho * s, a).trace().real()) / (a - 1);
}

inline Mat bloch(double x, double y, double z) {
  Mat m(2, 2);
  m << cplx(1 + z, 0), cplx(x, -y), cplx(x, y), cplx(1 - z, 0);
  return m / 2.0;
}

// −min over the Bloch ball of D_alpha(rho_AB ‖ 1 ⊗ sigma_B), B a qubit, by a coarse grid of
// 10^4 points and two zoomed refinements of 10^4 points each around the running best
inline double h_up_bloch_grid(const Mat& rho_ab, Index da, double alpha, bool sandwiched) {
  auto value = [&](double r, double th, double ph) {
    const double x = r * std::sin(th) * std::cos(ph), y = r * std::sin(th) * std::sin(ph), z = r * std::cos(th);
    Mat sig = kron(Mat::Identity(da, da), bloch(x, y, z));
    return sandwiched ? d_sand(rho_ab, sig, alpha) : d_old(rho_ab, sig, alpha);
  };
  const double pi = std::acos(-1.0);
  double best = std::numeric_limits<double>::infinity(), br = 0, bt = 0, bp = 0;
  double r0 = 0, r1 = 0.999, t0 = 0, t1 = pi, p0 = 0, p1 = 2 * pi;
  for (int level = 0; level < 3; ++level) {
    const int nr = 25, nt = 20, np = 20;
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nt; ++j)
        for (int k = 0; k < np; ++k) {
          const double r = r0 + (r1 - r0) * i / (nr - 1), th = t0 + (t1 - t0) * j / (nt - 1),
                       ph = p0 + (p1 - p0) * k / (np - 1);
          const double v = value(r, th, ph);
          if (v < best) best = v, br = r, bt = th, bp = ph;
        }
    const double wr = (r1 - r0) / 6, wt = (t1 - t0) / 6, wp = (p1 - p0) / 6;
    r0 = std::max(0.0, br - wr), r1 = std::min(0.9999, br + wr);
    t0 = std::max(0.0, bt - wt), t1 = std::min(pi, bt + wt);
    p0 = bp - wp, p1 = bp + wp;
  }
  return -best;
}

// Θ(T) = inf over qubit σ_E of log Tr[(σ^{-1} ⊗ 1) ω²], the Petz order-2 divergence of the
// Choi operator ω on E ⊗ A' (E first) against σ ⊗ 1, on the same zoomed Bloch grid
inline double theta_bloch_grid(const Mat& choi_ea, Index da) {
  auto value = [&](double r, double th, double ph) {
    const double x = r * std::sin(th) * std::cos(ph), y = r * std::sin(th) * std::sin(ph), z = r * std::cos(th);
    Mat s = kron(powm(bloch(x, y, z), -1.0), Mat::Identity(da, da));
    return std::log2((s * choi_ea * choi_ea).trace().real());
  };
  const double pi = std::acos(-1.0);
  double best = std::numeric_limits<double>::infinity(), br = 0, bt = 0, bp = 0;
  double r0 = 0, r1 = 0.999, t0 = 0, t1 = pi, p0 = 0, p1 = 2 * pi;
  for (int level = 0; level < 3; ++level) {
    const int nr = 25, nt = 20, np = 20;
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nt; ++j)
        for (int k = 0; k < np; ++k) {
          const double r = r0 + (r1 - r0) * i / (nr - 1), th = t0 + (t1 - t0) * j / (nt - 1),
                       ph = p0 + (p1 - p0) * k / (np - 1);
          const double v = value(r, th, ph);
          if (v < best) best = v, br = r, bt = th, bp = ph;
        }
    const double wr = (r1 - r0) / 6, wt = (t1 - t0) / 6, wp = (p1 - p0) / 6;
    r0 = std::max(0.0, br - wr), r1 = std::min(0.9999, br + wr);
    t0 = std::max(0.0, bt - wt), t1 = std::min(pi, bt + wt);
    p0 = bp - wp, p1 = bp + wp;
  }
  return best;
}

}  // namespace oracle
