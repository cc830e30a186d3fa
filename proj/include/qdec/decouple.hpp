// One-shot decoupling: the Rényi upper bound on E_U ||T(U·ρ) − ω ⊗ ρ^R||_1, its
// Monte Carlo counterpart, simultaneous-witness search, the Hayashi projector
// lemmas and the classical-quantum generalization with its covering corollary.
#pragma once

#include "qdec/channels.hpp"
#include "qdec/entropy.hpp"
#include "qdec/qmat.hpp"
#include "qdec/twirl.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qdec {

struct DecouplingInstance {
  DensityOp rho_ar;                 // single copy
  Labels a_labels;                  // the A part of rho_ar; the rest is R
  KrausMap t;                       // on A (n = 1) or on the n-fold copy labels of A
  double alpha = 2.0;               // (1, 2]
  std::optional<DensityOp> sigma_r; // nullopt: optimized through the entropy module
  int n_copies = 1;
  DivergenceType dtype = DivergenceType::old;

  Labels r_labels() const;
  // throws on a bad alpha, mismatched spaces, or a map whose class-1 certificate is unknown
  void validate() const;
};

// 4 * 2^{c * exponent_sum}, c = (alpha - 1) / (2 alpha)
double decoupling_prefactor(double alpha);

struct BoundReport {
  double rhs = 0.0;
  // single shot: log nu of sigma_R; n copies: |R| log(n+1) with |R| the Hilbert dimension
  double log_nu_or_dimlog = 0.0;
  double d_alpha_term = 0.0;    // D_alpha(rho || 1 ⊗ sigma) or -n H_alpha(A|R)
  double theta = 0.0;
  double exponent = 0.0;        // sum of the three terms
  double exponent_per_copy = 0.0;
  Index r_dim = 1;
  bool vacuous = false;         // an infinite divergence made the bound +inf
  std::optional<McEstimate> lhs;
  double slack = 0.0;           // rhs - lhs.mean when lhs is present
  std::optional<DensityOp> sigma_used;
};

BoundReport thm1_rhs(const DecouplingInstance& inst);
BoundReport thm1_rhs_iid(const DecouplingInstance& inst);
// Θ of the map on A^n; tensor-power maps built from a single-copy map add up
double instance_theta(const DecouplingInstance& inst);

// state ρ^{⊗n} on the interleaved copy labels together with its A^n labels
struct CopiedInstance {
  DensityOp rho;
  Labels a_labels;
  Labels r_labels;
  KrausMap t;
};
CopiedInstance copied(const DecouplingInstance& inst);
// n-fold tensor power of a map written on single-copy labels
KrausMap map_power(const KrausMap& t, int n);

inline constexpr Index kMcDimCap = 4096;

// ||T(U·ρ) − ω ⊗ ρ^R||_1 for one unitary on A
double decoupling_error(const Mat& u, const CopiedInstance& ci);
// Haar estimate, or the exact 24-element Clifford average when A^n is a qubit and `clifford_exact`
McEstimate mc_lhs(const DecouplingInstance& inst, Index n_samples, std::uint64_t seed, bool clifford_exact = false);

// A generic decoupling condition on a (possibly pure) state given as a factor F (ρ = F F†):
// error(U) = ||T(U·ρ) − target||_1 with U acting on `a_labels`. The target is kept as a
// factor too (target = G G†), so large pure inputs never need a dense matrix.
struct DecouplingCondition {
  SubsystemSpace space;
  Mat factor;
  Labels a_labels;
  KrausMap t;
  SubsystemSpace target_space;
  Mat target_factor;
  double threshold = 0.0;
  std::string name;
  // sum_k K ⊗ conj(K); filled when the Kraus fan-out would make the output factor wider than tall
  Mat superop;
};
// default target ω^E ⊗ Tr_A ρ
DecouplingCondition make_condition(const SubsystemSpace& space, const Mat& factor, const Labels& a_labels,
                                   const KrausMap& t, double threshold, const std::string& name);
DecouplingCondition make_condition(const SubsystemSpace& space, const Mat& factor, const Labels& a_labels,
                                   const KrausMap& t, const SubsystemSpace& target_space,
                                   const Mat& target_factor, double threshold, const std::string& name);
double condition_error(const Mat& u, const DecouplingCondition& c);
// Tr over everything but `kept` of F F†, column by column
LabeledOperator reduced_factor(const SubsystemSpace& space, const Mat& factor, const Labels& kept);
// Kronecker product of two factors (all column pairs)
Mat kron_factor(const Mat& a, const Mat& b);
// || P P† − Q Q† ||_1 through whichever of the Gram or dense routes is smaller
double factor_difference_norm(const Mat& p, const Mat& q);

enum class WitnessPolicy { first_success, best_of };

struct WitnessResult {
  Mat unitary;
  std::vector<double> errors;
  std::vector<double> thresholds;
  int tries = 0;           // samples examined
  int chosen_index = -1;   // stream index of the returned unitary
  bool anomaly = false;    // no sample satisfied every condition
};

// Samples unitaries on the shared A system. first_success stops at the first U meeting
// every threshold; best_of examines all n_tries and keeps the one with the smallest
// worst error/threshold ratio.
WitnessResult witness_search(const std::vector<DecouplingCondition>& conds, int n_tries, std::uint64_t seed,
                             WitnessPolicy policy = WitnessPolicy::first_success);
// thresholds 4K 2^{c(|R_i| log(n+1) − n H_alpha(A|R_i) + Θ(T_i))}
WitnessResult corollary1_search(const std::vector<DecouplingInstance>& insts, int n_tries, std::uint64_t seed,
                                WitnessPolicy policy = WitnessPolicy::first_success);

// ---- Hayashi projector lemmas --------------------------------------------------

struct ProjectorPair {
  double zeta = 0.0;
  LabeledOperator pi;       // {M_sigma(rho) >= zeta sigma}
  LabeledOperator pi_hat;   // I - pi
};
ProjectorPair projector_pair(const LabeledOperator& rho, const LabeledOperator& sigma, double zeta);

struct HayashiReport {
  double norm_pi_rho = 0.0;    // ||Π ρ||_1
  double bound_first = 0.0;    // zeta^{(1-alpha)/2} sqrt(Q_alpha^old(rho||sigma))
  double second_lhs = 0.0;     // Tr σ^{-1} Π̂ ρ² Π̂ (inverse on the support)
  double bound_second = 0.0;   // nu_sigma zeta
  double slack_first() const { return bound_first - norm_pi_rho; }
  double slack_second() const { return bound_second - second_lhs; }
};
HayashiReport hayashi_bounds(const LabeledOperator& rho, const LabeledOperator& sigma, double zeta, double alpha);

struct ZetaChoice {
  double zeta = 0.0;
  double value = 0.0;  // x zeta^{(1-alpha)/2} + y zeta^{1/2}
};
ZetaChoice zeta_opt(double x, double y, double alpha);

// per-sample check of the proof's triangle split; returns (lhs, sum of the two parts)
struct TriangleSplit {
  double whole = 0.0;
  double part_pi = 0.0;
  double part_pi_hat = 0.0;
};
TriangleSplit triangle_split(const Mat& u, const DecouplingInstance& inst, const DensityOp& sigma_r, double zeta);

// ---- classical-quantum generalization -----------------------------------------

struct CqInstance {
  std::vector<double> p;
  std::vector<DensityOp> rho_x;   // on A ⊗ R, all on the same space
  Labels a_labels;                // may be empty (|A| = 1)
  Index m = 1;
  KrausMap t;                     // ignored when a_labels is empty
  double alpha = 2.0;
  std::optional<DensityOp> sigma_r;   // nullopt: rho^R
  std::optional<DensityOp> kappa_r;   // nullopt: rho^R
  DivergenceType dtype = DivergenceType::old;

  Labels r_labels() const;
  void validate() const;
};

struct CqBoundReport {
  double rhs = 0.0;
  double quantum_term = 0.0;    // zero when |A| = 1
  double classical_term = 0.0;  // zero when |X| = 1
  double d_alpha_xar = 0.0;
  double d_alpha_xr = 0.0;
  double log_nu_sigma = 0.0;
  double log_nu_kappa = 0.0;
  double theta = 0.0;
  std::optional<McEstimate> lhs;
  double slack = 0.0;
};

CqBoundReport thm1_2_rhs(const CqInstance& inst);
McEstimate mc_lhs_cq(const CqInstance& inst, Index n_samples, std::uint64_t seed);

// E ||(1/M) Σ ρ_{X_i} − ρ|| for a cq ensemble on R
struct CoveringInput {
  std::vector<double> p;
  std::vector<DensityOp> rho_x;
};
CqBoundReport covering_bound(const CoveringInput& cq, Index m, double alpha, const std::optional<DensityOp>& kappa_r,
                             Index n_samples, std::uint64_t seed, DivergenceType dtype = DivergenceType::old);
// exact expectation by enumerating all |X|^M draws (small cases only)
double covering_exact(const CoveringInput& cq, Index m);

}  // namespace qdec
