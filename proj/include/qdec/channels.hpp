// Completely positive maps in Kraus form, their Choi states, the Theta functional
// and the named map families used by the protocols.
#pragma once

#include "qdec/qmat.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qdec {

enum class TpClass { cptp, cp_trace_nonincreasing, cp_general };
std::string to_string(TpClass c);

struct KrausMap {
  SubsystemSpace in_space;
  SubsystemSpace out_space;
  std::vector<Mat> kraus;  // each out x in
  TpClass tp_class = TpClass::cp_general;
  std::string name;

  KrausMap() = default;
  // tp_class is inferred from sum K†K
  KrausMap(SubsystemSpace in, SubsystemSpace out, std::vector<Mat> ops, std::string name = "");
  // declared class is validated (cptp requires sum K†K = I within 1e-9)
  KrausMap(SubsystemSpace in, SubsystemSpace out, std::vector<Mat> ops, TpClass declared, std::string name);

  Index din() const { return in_space.total_dim(); }
  Index dout() const { return out_space.total_dim(); }
  Mat kraus_sum() const;  // sum K†K
};

struct ChoiMatrix {
  LabeledOperator op;  // on out_space ⊗ primed copy of in_space
  std::string source;
};

struct ThetaReport {
  double theta = 0.0;
  DensityOp optimizer_theta_E;
  bool closed_form_used = true;
};

enum class Class1Verdict { yes_cptp, yes_trace_condition, unknown };
std::string to_string(Class1Verdict v);

struct Class1Report {
  Class1Verdict verdict = Class1Verdict::unknown;
  Class1Verdict certificate = Class1Verdict::unknown;  // before the Monte Carlo spot check
  bool mc_violation = false;
  double worst_excess_in_stderr = 0.0;  // max over sigma of (mean - ||sigma||_1)/stderr
};

// labels of the reference copy used by choi(): each input label with a trailing prime
Labels primed(const Labels& labels);

LabeledOperator apply(const KrausMap& t, const LabeledOperator& m);
DensityOp apply(const KrausMap& t, const DensityOp& rho);
// columns of a factor F (rho = F F†) pushed through the map; rho' = F' F'†
RowApplied apply_factor(const KrausMap& t, const SubsystemSpace& space, const Mat& f);

ChoiMatrix choi(const KrausMap& t);
KrausMap from_choi(const LabeledOperator& omega, const SubsystemSpace& in, const SubsystemSpace& out);
// omega^E = T(pi^A)
LabeledOperator choi_marginal(const KrausMap& t);
// Tr_{A'} omega^2 computed from the Kraus operators
Mat choi_square_marginal(const KrausMap& t);
ThetaReport theta(const KrausMap& t);

Class1Verdict class1_certificate(const KrausMap& t);
Class1Report is_class1(const KrausMap& t, std::uint64_t seed = 1, int n_haar = 500, int n_sigma = 5);

// named constructions
KrausMap identity_map(const SubsystemSpace& space);
KrausMap trace_map(const SubsystemSpace& space);
KrausMap partial_trace_map(const SubsystemSpace& space, const Labels& traced);
KrausMap depolarizing(const SubsystemSpace& space, double p);
KrausMap unitary_map(const SubsystemSpace& space, const Mat& u);
KrausMap scaled(const KrausMap& t, double factor);  // T -> factor * T
KrausMap t_w_map(const PartialIsom& w);
KrausMap compressive_map(const PartialIsom& w);
KrausMap isometry_map(const PartialIsom& w);  // rho -> W rho W†

struct MeasurementFamily {
  KrausMap map;               // BC -> X D
  std::vector<Mat> blocks;    // M_x : BC -> D
  Index j = 0;
};
// contiguous computational-basis blocks of size |D|; register X is the first output label
MeasurementFamily measurement_map(const SubsystemSpace& in, const SubsystemSpace& d_space,
                                  const std::string& x_label = "X");

std::vector<Mat> heisenberg_weyl(Index d);  // X^a Z^b, index k -> (a = k / d, b = k % d)
KrausMap randomizing_map(const SubsystemSpace& space, const std::vector<Mat>& family);

// t2 ∘ t1; t2 may act on a subset of t1's outputs
KrausMap compose(const KrausMap& t2, const KrausMap& t1);
KrausMap tensor(const KrausMap& a, const KrausMap& b);

struct TwoPositivityReport {
  bool holds = false;
  double min_eig = 0.0;
};
TwoPositivityReport two_positivity_check(const KrausMap& t, const LabeledOperator& sigma);

}  // namespace qdec
