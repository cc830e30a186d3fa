// Rényi divergences (Petz "old" and sandwiched), conditional entropies with both
// arrow conventions, von Neumann quantities and duality / data-processing checks.
// Everything is in bits.
#pragma once

#include "qdec/channels.hpp"
#include "qdec/qmat.hpp"

#include <limits>
#include <optional>
#include <string>

namespace qdec {

enum class DivergenceType { old, sandwiched };
enum class Arrow { optimized, fixed_marginal };

std::string to_string(DivergenceType t);
std::string to_string(Arrow a);
DivergenceType parse_dtype(const std::string& s);

struct RenyiParams {
  double alpha = 2.0;
  DivergenceType dtype = DivergenceType::old;
  Arrow arrow = Arrow::optimized;

  double dual_alpha() const { return 1.0 / alpha; }
  // alpha in (0, 2]; throws otherwise
  void validate() const;
};

struct CondEntropyResult {
  double value = 0.0;
  std::optional<DensityOp> optimizer;  // on the conditioning labels, for the optimized arrow
  int iterations = 0;
  bool converged = true;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

bool support_contained(const Mat& rho, const Mat& sigma);

// Q_alpha; +inf when alpha > 1 and supp(rho) is not inside supp(sigma)
double q_alpha(const Mat& rho, const Mat& sigma, double alpha, DivergenceType t);
double q_alpha(const DensityOp& rho, const LabeledOperator& sigma, const RenyiParams& p);
// (1/(alpha-1)) log Q_alpha; alpha == 1 gives Tr rho (log rho - log sigma)
double d_alpha(const Mat& rho, const Mat& sigma, double alpha, DivergenceType t);
double d_alpha(const DensityOp& rho, const LabeledOperator& sigma, const RenyiParams& p);
double relative_entropy(const Mat& rho, const Mat& sigma);

double entropy_vn(const Mat& rho);
double renyi_entropy(const Mat& rho, double alpha);  // H_alpha(A) of a single system

CondEntropyResult h_cond(const DensityOp& rho, const Labels& cond, const RenyiParams& p);
// same without the (0, 2] guard; used by the duality partners
CondEntropyResult h_cond_unchecked(const DensityOp& rho, const Labels& cond, double alpha, DivergenceType t,
                                   Arrow arrow);

struct VonNeumannSuite {
  double h_a = 0.0;              // H(A)
  double h_a_given_b = 0.0;      // H(A|B)
  double i_ab_given_c = 0.0;     // I(A:B|C)
  double coherent_info = 0.0;    // I(A>B) = -H(A|B)
};
double cond_entropy_vn(const DensityOp& rho, const Labels& a, const Labels& b);
VonNeumannSuite von_neumann_suite(const DensityOp& rho, const Labels& a, const Labels& b, const Labels& c);

enum class DualityPairing {
  sand_fixed_old_opt,   // H~down_alpha(A|B) + Hbar_up_{1/alpha}(A|C)
  sand_opt_sand_opt,    // H~up_alpha(A|B) + H~up_beta(A|C), 1/alpha + 1/beta = 2
  old_fixed_old_fixed,  // Hbar_down_alpha(A|B) + Hbar_down_{2-alpha}(A|C)
  sand_opt_inverse,     // H~up_alpha(A|B) + H~up_{1/alpha}(A|C), not an identity
};
std::string to_string(DualityPairing p);

double duality_residual(const PureState& psi, const Labels& a, const Labels& b, const Labels& c, double alpha,
                        DualityPairing pairing);
// residual of the validated alpha*beta = 1 pairing; alpha in [0.5, 1) ∪ (1, 2]
double duality_check(const PureState& psi, const Labels& a, const Labels& b, const Labels& c, double alpha);
double duality_check(const DensityOp& psi, const Labels& a, const Labels& b, const Labels& c, double alpha);

struct DpiReport {
  bool holds = false;
  double before = 0.0;
  double after = 0.0;
};
DpiReport dpi_check(const DensityOp& rho, const LabeledOperator& sigma, const KrausMap& e, const RenyiParams& p);

}  // namespace qdec
