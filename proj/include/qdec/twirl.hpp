// Haar sampling, exact unitary-2-design moments and seeded Monte Carlo averaging.
//
// Sample i of any estimate is drawn from stream (master_seed, i), and the
// reduction runs in sample-index order, so results do not depend on how many
// worker threads were used.
#pragma once

#include "qdec/channels.hpp"
#include "qdec/qmat.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace qdec {

struct RngSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

std::mt19937_64 make_engine(RngSeed seed);

Mat sample_haar(Index dim, RngSeed seed);
Mat random_ginibre(Index rows, Index cols, RngSeed seed);
PureState random_pure_state(const SubsystemSpace& space, RngSeed seed);
// Ginibre-induced random state; rank 0 means full rank
DensityOp random_density(const SubsystemSpace& space, RngSeed seed, Index rank = 0);
// random PSD operator with trace drawn uniformly from (0, 1]
DensityOp random_subnormalized(const SubsystemSpace& space, RngSeed seed);

std::vector<Mat> clifford_group_qubit();

enum class EnsembleKind { haar, clifford_qubit, explicit_list };

struct UnitaryEnsemble {
  EnsembleKind kind = EnsembleKind::haar;
  Index dim = 1;
  std::vector<Mat> elements;  // clifford_qubit and explicit_list

  static UnitaryEnsemble haar(Index d);
  static UnitaryEnsemble clifford_qubit();
  static UnitaryEnsemble explicit_list(std::vector<Mat> us);

  bool finite() const { return kind != EnsembleKind::haar; }
  // sample i of a run keyed by master
  Mat draw(std::uint64_t master, std::uint64_t i) const;
  std::string name() const;
};

struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  Index n = 0;
  std::string ensemble;  // "haar", "clifford24-exact", ...
};

struct OpEstimate {
  Mat mean;
  Eigen::MatrixXd std_err;  // entrywise, real and imaginary parts combined
  Index n = 0;
};

int worker_count();  // QDEC_THREADS, else hardware concurrency
// fn(begin, end) over fixed chunks of `chunk` items; chunks are spread over workers
void parallel_chunks(Index n, Index chunk, const std::function<void(Index, Index)>& fn);

McEstimate mc_average(const std::function<double(const Mat&)>& f, const UnitaryEnsemble& ens, Index n,
                      std::uint64_t seed);
OpEstimate mc_average_op(const std::function<Mat(const Mat&)>& f, const UnitaryEnsemble& ens, Index n,
                         std::uint64_t seed);
// mean and standard error of f(0..n-1); f must derive its randomness from the index alone
McEstimate mc_indexed(const std::function<double(Index)>& f, Index n, const std::string& label);
// exact uniform average over a finite ensemble
double ensemble_average(const std::function<double(const Mat&)>& f, const UnitaryEnsemble& ens);
Mat ensemble_average_op(const std::function<Mat(const Mat&)>& f, const UnitaryEnsemble& ens);

// E_U (U ⊗ I) M (U ⊗ I)† = pi^A ⊗ Tr_A M
LabeledOperator twirl_moment1(const LabeledOperator& m, const Labels& a_labels);
// E_U (U σ U†)(X ⊗ W)(U σ† U†); x lives on the A labels, w on the remaining labels of sigma
LabeledOperator twirl_moment2(const LabeledOperator& sigma, const LabeledOperator& x, const LabeledOperator& w);
// direct evaluation of the integrand of twirl_moment2 for one unitary on A
LabeledOperator twirl_moment2_sample(const Mat& u, const LabeledOperator& sigma, const LabeledOperator& x,
                                     const LabeledOperator& w);

struct DeltaMoment {
  LabeledOperator exact;  // E{Δ Δ†}
  LabeledOperator upper;  // |A|^2/(|A|^2-1) Tr_A'(ω ω†) ⊗ Tr_A(σ σ†)
};
// Δ = T(U·σ) − ω^E ⊗ σ^R with T acting on its input labels inside sigma
DeltaMoment second_moment_delta(const KrausMap& t, const LabeledOperator& sigma);
LabeledOperator delta_sample(const Mat& u, const KrausMap& t, const LabeledOperator& sigma);

}  // namespace qdec
