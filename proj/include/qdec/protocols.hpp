// End-to-end protocols built from decoupling: Schumacher compression, FQSW, state
// merging and correlation destruction, plus the Uhlmann extension and the
// Fuchs–van de Graaf type inequalities they rely on.
//
// Inputs use fixed label names: "A" (Alice), "B" (Bob), "R" (reference).
#pragma once

#include "qdec/decouple.hpp"
#include "qdec/entropy.hpp"
#include "qdec/qmat.hpp"
#include "qdec/twirl.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace qdec {

// ---- vector arrangement helpers -----------------------------------------------

// v on `space` viewed as a (row labels) x (col labels) matrix, row-major
Mat arrange(const SubsystemSpace& space, const Vec& v, const Labels& rows, const Labels& cols);
Vec flatten(const Mat& m);  // row-major

// ---- Uhlmann -------------------------------------------------------------------

// isometry V (rows >= cols) maximizing Re Tr V† K
Mat polar_isometry(const Mat& k);

struct UhlmannResult {
  Mat v;                     // |C| x |B|
  double overlap = 0.0;      // |<Ψ| V ξ>|
  double eps_measured = 0.0; // ||ξ^common − Ψ^common||_1
  double error = 0.0;        // ||V·ξ − Ψ||_1
  double bound = 0.0;        // Ξ(eps)
  double refined_bound = 0.0;  // 2 sqrt(eps), asserted for subnormalized ξ
};

// from: ξ as |B| x |common|; to: Ψ as |C| x |common|. Rejects |B| > |C|.
UhlmannResult uhlmann_extend(const Mat& from, const Mat& to, double eps);
// labeled form; B = labels of xi outside `common`, C = labels of psi outside `common`
struct LabeledUhlmann {
  PartialIsom v;
  UhlmannResult report;
};
LabeledUhlmann uhlmann_extend(const SubsystemSpace& xi_space, const Vec& xi, const PureState& psi,
                              const Labels& common, double eps);

struct FuchsReport {
  double lower = 0.0;  // Tr ρ + Tr σ − 2F
  double tn = 0.0;     // ||ρ − σ||_1
  double upper = 0.0;  // sqrt((Tr ρ + Tr σ)^2 − 4F^2)
  bool holds = false;  // within 1e-9
};
FuchsReport fuchs_vdg_check(const LabeledOperator& rho, const LabeledOperator& sigma);

// ---- protocols -----------------------------------------------------------------

struct ProtocolOptions {
  double alpha = 1.5;
  DivergenceType dtype = DivergenceType::old;
  double delta1 = 0.1;
  double delta2 = 0.1;
  int witness_tries = 16;
  WitnessPolicy policy = WitnessPolicy::best_of;
};

struct ProtocolResult {
  std::string protocol;
  double measured_error = 0.0;
  double bound = 0.0;
  std::map<std::string, double> rates;        // bits per copy
  std::map<std::string, double> diagnostics;  // thresholds, measured conditions, ...
  int n = 1;
  RngSeed seed;
  std::map<std::string, Mat> witnesses;
  int witness_tries = 0;
  bool witness_anomaly = false;
};

// α̃ paired with α for the chosen divergence type on pure states (old: 1/α; sandwiched: α/(2α−1))
double dual_alpha(double alpha, DivergenceType t);

ProtocolResult schumacher_run(const PureState& psi_ar, int n, Index dim_b, std::uint64_t seed,
                              const ProtocolOptions& opt = {});
ProtocolResult fqsw_run(const PureState& psi_abr, int n, Index dim_a1, Index dim_a2, std::uint64_t seed,
                        const ProtocolOptions& opt = {});

struct MergeConfig {
  Index dim_a0 = 1;
  Index dim_a1 = 1;
  Index dim_e = 1;
  Index j() const;      // ceil(|E||A0|/|A1|)
  double zeta() const;  // |E||A0|/|A1|
  void validate() const;
};
ProtocolResult merge_run(const PureState& psi_abr, int n, const MergeConfig& cfg, std::uint64_t seed,
                         const ProtocolOptions& opt = {});

// dim_b = 0 means |A|^n
ProtocolResult destroy_run(const DensityOp& rho_ar, int n, Index m, std::uint64_t seed, Index dim_b = 0,
                           const ProtocolOptions& opt = {});

// rate expressions from the achievability statements, fed with the same α, δ and n
struct RateInputs {
  double h_tilde_a = 0.0;      // H_α̃(A)
  double h_a_given_r = 0.0;    // H_α(A|R)
  double dim_r = 1.0;          // Hilbert dimensions
  double dim_b = 1.0;
  double dim_e = 1.0;
  int n = 1;
  double delta1 = 0.1;
  double delta2 = 0.1;
};
double schumacher_theorem_rate(const RateInputs& in);
double fqsw_quantum_rate(const RateInputs& in);
double fqsw_entanglement_rate(const RateInputs& in);
double merge_entanglement_rate(const RateInputs& in);  // uses H_α̃(A|B) = −H_α(A|R)
double merge_classical_rate(const RateInputs& in);
double destroy_theorem_rate(const RateInputs& in);

}  // namespace qdec
