#include "qdec/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace qdec::linalg {

Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

double herm_defect(const Mat& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

Eigh eigh(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m));
  if (es.info() != Eigen::Success) throw std::runtime_error("eigh: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

RVec eigvalsh(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigvalsh: eigensolver failed");
  return es.eigenvalues();
}

Mat herm_func(const Mat& m, const std::function<double(double)>& f) {
  auto e = eigh(m);
  RVec fv(e.values.size());
  for (Index i = 0; i < e.values.size(); ++i) fv(i) = f(e.values(i));
  return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}

Mat sqrt_psd(const Mat& m) {
  return herm_func(m, [](double x) { return x > kEigFloor ? std::sqrt(x) : 0.0; });
}

Mat log2_psd(const Mat& m) {
  return herm_func(m, [](double x) { return x > kEigFloor ? std::log2(x) : 0.0; });
}

Mat support_projector(const Mat& m) {
  return herm_func(m, [](double x) { return x > kEigFloor ? 1.0 : 0.0; });
}

double min_eig(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return eigvalsh(m)(0);
}

std::vector<Index> label_index_map(const SubsystemSpace& space, const Labels& new_order) {
  const auto& labels = space.labels();
  const auto& dims = space.dims();
  const std::size_t k = labels.size();
  if (new_order.size() != k) throw std::invalid_argument("permutation: label count mismatch");

  std::vector<Index> old_stride(k, 1);
  for (std::size_t i = k; i-- > 1;) old_stride[i - 1] = old_stride[i] * dims[i];

  std::vector<Index> stride(k), radix(k);
  std::vector<bool> seen(k, false);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t p = space.position(new_order[j]);
    if (seen[p]) throw std::invalid_argument("permutation: repeated label '" + new_order[j] + "'");
    seen[p] = true;
    stride[j] = old_stride[p];
    radix[j] = dims[p];
  }

  const Index total = space.total_dim();
  std::vector<Index> map(static_cast<std::size_t>(total));
  std::vector<Index> digit(k, 0);
  Index cur = 0;
  for (Index i = 0; i < total; ++i) {
    map[static_cast<std::size_t>(i)] = cur;
    // odometer increment, last position fastest
    for (std::size_t j = k; j-- > 0;) {
      ++digit[j];
      cur += stride[j];
      if (digit[j] < radix[j]) break;
      cur -= stride[j] * radix[j];
      digit[j] = 0;
    }
  }
  return map;
}

Mat psd_factor(const Mat& m) {
  auto e = eigh(m);
  Index r = 0;
  for (Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > kEigFloor) ++r;
  Mat f(m.rows(), r);
  Index c = 0;
  for (Index i = 0; i < e.values.size(); ++i) {
    if (e.values(i) > kEigFloor) f.col(c++) = e.vectors.col(i) * std::sqrt(e.values(i));
  }
  return f;
}

}  // namespace qdec::linalg
