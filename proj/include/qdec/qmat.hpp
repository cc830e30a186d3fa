// Dense complex operators on labeled tensor-product spaces.
//
// Kronecker ordering is row-major: the first label is the most significant
// digit of the computational-basis index. All logarithms are base 2.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace qdec {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;
using Labels = std::vector<std::string>;

// eigenvalues below this are treated as zero when taking powers or supports
inline constexpr double kEigFloor = 1e-12;
inline constexpr double kHermTol = 1e-10;

class SubsystemSpace {
public:
  SubsystemSpace() = default;  // the trivial one-dimensional space
  SubsystemSpace(Labels labels, std::vector<Index> dims);
  static SubsystemSpace single(const std::string& label, Index dim);

  const Labels& labels() const { return labels_; }
  const std::vector<Index>& dims() const { return dims_; }
  std::size_t size() const { return labels_.size(); }
  Index total_dim() const { return total_; }

  bool has(const std::string& label) const;
  std::size_t position(const std::string& label) const;
  Index dim_of(const std::string& label) const;
  Index dim_of(const Labels& labels) const;

  SubsystemSpace concat(const SubsystemSpace& other) const;
  SubsystemSpace subset(const Labels& labels) const;  // in the order given
  SubsystemSpace without(const Labels& labels) const;
  SubsystemSpace renamed(const std::string& from, const std::string& to) const;
  SubsystemSpace with_suffix(const std::string& suffix) const;

  bool operator==(const SubsystemSpace& o) const { return labels_ == o.labels_ && dims_ == o.dims_; }
  bool operator!=(const SubsystemSpace& o) const { return !(*this == o); }
  std::string describe() const;

private:
  Labels labels_;
  std::vector<Index> dims_;
  Index total_ = 1;
};

struct LabeledOperator {
  SubsystemSpace space;
  Mat m;
  std::optional<bool> hermitian_hint;

  LabeledOperator() : m(Mat::Ones(1, 1)) {}
  LabeledOperator(SubsystemSpace s, Mat mat, std::optional<bool> hint = std::nullopt);

  Index dim() const { return space.total_dim(); }
  cplx trace() const { return m.trace(); }
};

enum class TraceClass { unit, subnormalized };

class DensityOp {
public:
  DensityOp() = default;
  // validates Hermiticity, clamps eigenvalues in [-1e-10, 0) to zero, checks the trace
  explicit DensityOp(LabeledOperator op, TraceClass tc = TraceClass::unit);
  DensityOp(SubsystemSpace s, Mat m, TraceClass tc = TraceClass::unit)
      : DensityOp(LabeledOperator(std::move(s), std::move(m)), tc) {}

  const LabeledOperator& op() const { return op_; }
  const Mat& mat() const { return op_.m; }
  const SubsystemSpace& space() const { return op_.space; }
  TraceClass trace_class() const { return tc_; }
  double trace() const { return op_.m.trace().real(); }
  Index dim() const { return op_.space.total_dim(); }

private:
  LabeledOperator op_;
  TraceClass tc_ = TraceClass::unit;
};

struct PureState {
  SubsystemSpace space;
  Vec amps;

  PureState() : amps(Vec::Ones(1)) {}
  PureState(SubsystemSpace s, Vec v);  // norm must be 1 within 1e-10

  DensityOp projector() const;
};

class PartialIsom {
public:
  PartialIsom() = default;
  PartialIsom(SubsystemSpace domain, SubsystemSpace codomain, Mat m);

  const SubsystemSpace& domain() const { return dom_; }
  const SubsystemSpace& codomain() const { return cod_; }
  const Mat& mat() const { return m_; }
  Index rank() const { return rank_; }
  bool full_rank() const;

  // computational-basis truncation: |i> -> |i> for i < min(dims), else 0
  static PartialIsom truncation(SubsystemSpace domain, SubsystemSpace codomain);

private:
  SubsystemSpace dom_, cod_;
  Mat m_;
  Index rank_ = 0;
};

// ---- structural operations -------------------------------------------------

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b);
DensityOp tensor(const DensityOp& a, const DensityOp& b);
PureState tensor(const PureState& a, const PureState& b);

// reorder tensor factors; new_order must be a permutation of the labels
LabeledOperator permute(const LabeledOperator& m, const Labels& new_order);
PureState permute(const PureState& s, const Labels& new_order);
// reorder the rows of a matrix whose row index lives on `space`
Mat permute_rows(const SubsystemSpace& space, const Mat& x, const Labels& new_order);

LabeledOperator partial_trace(const LabeledOperator& m, const Labels& traced);
DensityOp partial_trace(const DensityOp& rho, const Labels& traced);
// reduced state of a pure vector, keeping `kept` in the order given
LabeledOperator reduced(const PureState& s, const Labels& kept);
LabeledOperator reduced(const SubsystemSpace& space, const Vec& v, const Labels& kept);

// identity on the labels of `full` not present in `part`, aligned to full's order
LabeledOperator embed(const LabeledOperator& part, const SubsystemSpace& full);

// Apply K (rows: out, cols: the `in_labels` factors) to the row index of x.
// The output factors replace the input factors at the position of the first input label.
struct RowApplied {
  SubsystemSpace space;
  Mat x;
};
// label order after replacing `in_labels` by `out_labels` at the first input position
Labels replaced_order(const SubsystemSpace& space, const Labels& in_labels, const Labels& out_labels);
RowApplied left_apply(const Mat& k, const SubsystemSpace& space, const Mat& x,
                      const Labels& in_labels, const SubsystemSpace& out);
// K M K† with K acting on `in_labels`
LabeledOperator sandwich(const Mat& k, const LabeledOperator& m, const Labels& in_labels,
                         const SubsystemSpace& out);
// local unitary conjugation (U ⊗ I) M (U ⊗ I)†
LabeledOperator conjugate(const Mat& u, const LabeledOperator& m, const Labels& labels);

// ---- spectral functionals ---------------------------------------------------

double trace_norm(const Mat& m);
double trace_norm(const LabeledOperator& m);
// || V diag(w) V† ||_1 computed through the Gram matrix of V
double trace_norm_lowrank(const Mat& v, const RVec& weights);
double trace_distance_pure(const Vec& a, const Vec& b);

double fidelity(const Mat& rho, const Mat& sigma);
double fidelity(const DensityOp& rho, const DensityOp& sigma);
double fidelity(const LabeledOperator& rho, const LabeledOperator& sigma);

Mat mat_power(const Mat& m, double p);
LabeledOperator mat_power(const LabeledOperator& m, double p);
LabeledOperator positive_part_projector(const LabeledOperator& rho, const LabeledOperator& sigma);
LabeledOperator pinch(const LabeledOperator& sigma, const LabeledOperator& rho);
std::vector<Mat> eigenprojectors(const Mat& sigma, double rel_tol = 1e-8);
int distinct_eigs(const Mat& sigma, double rel_tol = 1e-8);
int distinct_eigs(const LabeledOperator& sigma, double rel_tol = 1e-8);

PureState purify(const DensityOp& rho, const std::string& ref_label);
PureState mes(Index d, const std::string& la = "A", const std::string& lb = "A'");
DensityOp maximally_mixed(Index d, const std::string& label = "A");
DensityOp maximally_mixed(const SubsystemSpace& space);
LabeledOperator identity(const SubsystemSpace& space);

double xi(double eps);
LabeledOperator q_map(const LabeledOperator& sigma, const Labels& a_labels);

// n-fold tensor power with labels suffixed ".1" ... ".n", copies interleaved
SubsystemSpace power_space(const SubsystemSpace& s, int n);
DensityOp tensor_power(const DensityOp& rho, int n);
PureState tensor_power(const PureState& psi, int n);
Labels suffixed(const Labels& labels, int n);  // every label with every copy suffix

}  // namespace qdec
