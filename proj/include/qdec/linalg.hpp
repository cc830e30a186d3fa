// Small Hermitian/PSD helpers shared by the modules.
#pragma once

#include "qdec/qmat.hpp"

#include <functional>

namespace qdec::linalg {

struct Eigh {
  RVec values;  // ascending
  Mat vectors;
};

Mat hermitize(const Mat& m);
double herm_defect(const Mat& m);  // max |m - m†|
Eigh eigh(const Mat& m);
RVec eigvalsh(const Mat& m);
// f applied to the spectrum of a Hermitian matrix
Mat herm_func(const Mat& m, const std::function<double(double)>& f);
Mat sqrt_psd(const Mat& m);
Mat log2_psd(const Mat& m);          // log on the support, 0 on the kernel
Mat support_projector(const Mat& m);
double min_eig(const Mat& m);
// row-major mixed-radix permutation: new row i corresponds to old row map[i]
std::vector<Index> label_index_map(const SubsystemSpace& space, const Labels& new_order);

// eigen-factor of a PSD matrix: returns F with F F† = m, columns for eigenvalues above the floor
Mat psd_factor(const Mat& m);

}  // namespace qdec::linalg
