#pragma once

#include "qdec/qmat.hpp"
#include "qdec/twirl.hpp"

#include <doctest.h>

#include <initializer_list>

namespace qtest {

using namespace qdec;

inline Mat diag(std::initializer_list<double> xs) {
  Mat m = Mat::Zero(static_cast<Index>(xs.size()), static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) m(i, i) = x, ++i;
  return m;
}

inline Mat pauli(char which) {
  Mat m(2, 2);
  const cplx i(0, 1);
  switch (which) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m = Mat::Identity(2, 2);
  }
  return m;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline LabeledOperator op(const std::string& label, const Mat& m) {
  return LabeledOperator(SubsystemSpace::single(label, m.rows()), m);
}

inline DensityOp dens(const std::string& label, const Mat& m) { return DensityOp(op(label, m)); }

inline Mat random_herm(Index d, std::uint64_t seed) {
  Mat g = random_ginibre(d, d, {seed, 77});
  return (g + g.adjoint()) / 2.0;
}

}  // namespace qtest
