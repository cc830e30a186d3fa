#include "helpers.hpp"
#include "../oracles.hpp"

#include "qdec/channels.hpp"
#include "qdec/entropy.hpp"

#include <cmath>

using namespace qtest;

namespace {

Mat random_diag_density(Index d, std::uint64_t seed) {
  std::mt19937_64 g = make_engine({seed, 3});
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Mat m = Mat::Zero(d, d);
  double s = 0;
  for (Index i = 0; i < d; ++i) s += (m(i, i) = u(g)).real();
  return m / s;
}

const DivergenceType kTypes[] = {DivergenceType::old, DivergenceType::sandwiched};

}  // namespace

TEST_SUITE("entropy") {
  TEST_CASE("q_alpha examples") {
    Mat r = random_density(SubsystemSpace({"A"}, {3}), {1, 0}).mat();
    for (DivergenceType t : kTypes)
      for (double a : {0.5, 1.5, 2.0}) CHECK(q_alpha(r, r, a, t) == doctest::Approx(1.0).epsilon(1e-10));
    for (double a : {0.5, 1.5, 2.0})
      CHECK(q_alpha(Mat(Mat::Identity(3, 3) / 3.0), Mat::Identity(3, 3), a, DivergenceType::old) ==
            doctest::Approx(std::pow(3.0, 1 - a)).epsilon(1e-12));
    for (std::uint64_t k = 0; k < 50; ++k) {
      Mat p = random_diag_density(3, k), q = random_diag_density(3, k + 1000);
      for (double a : {0.6, 1.4, 2.0}) {
        const double o = q_alpha(p, q, a, DivergenceType::old), s = q_alpha(p, q, a, DivergenceType::sandwiched);
        CHECK(std::abs(o - s) / o <= 1e-9);
      }
    }
  }

  TEST_CASE("support violations give the infinite sentinel above one") {
    CHECK(std::isinf(q_alpha(diag({0.5, 0.5}), diag({1, 0}), 1.5, DivergenceType::old)));
    CHECK(std::isinf(d_alpha(diag({0.5, 0.5}), diag({1, 0}), 2.0, DivergenceType::sandwiched)));
    CHECK(std::isfinite(d_alpha(diag({0.5, 0.5}), diag({1, 0}), 0.5, DivergenceType::old)));
  }

  TEST_CASE("d_alpha examples") {
    Mat r = random_density(SubsystemSpace({"A"}, {2}), {2, 0}).mat();
    for (DivergenceType t : kTypes)
      for (double a : {0.5, 1.0, 1.5, 2.0}) CHECK(std::abs(d_alpha(r, r, a, t)) < 1e-10);
    CHECK(d_alpha(diag({1, 0}), diag({0.5, 0.5}), 2.0, DivergenceType::old) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::uint64_t k = 0; k < 20; ++k) {
      Mat p = random_density(SubsystemSpace({"A"}, {2}), {k, 1}).mat();
      Mat q = random_density(SubsystemSpace({"A"}, {2}), {k, 2}).mat();
      const double d1 = relative_entropy(p, q);
      for (DivergenceType t : kTypes) CHECK(std::abs(d_alpha(p, q, 1 + 1e-5, t) - d1) < 1e-4);
      CHECK(d_alpha(p, q, 1.0, DivergenceType::old) == doctest::Approx(d1));
    }
  }

  TEST_CASE("divergences against the independent oracle") {
    for (std::uint64_t k = 0; k < 20; ++k) {
      Mat p = random_density(SubsystemSpace({"A"}, {3}), {k, 4}).mat();
      Mat q = random_density(SubsystemSpace({"A"}, {3}), {k, 5}).mat();
      for (double a : {0.5, 1.25, 2.0}) {
        CHECK(d_alpha(p, q, a, DivergenceType::old) == doctest::Approx(oracle::d_old(p, q, a)).epsilon(1e-9));
        CHECK(d_alpha(p, q, a, DivergenceType::sandwiched) == doctest::Approx(oracle::d_sand(p, q, a)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("divergence invariants") {
    for (std::uint64_t k = 0; k < 100; ++k) {
      Mat p = random_density(SubsystemSpace({"A"}, {2}), {k, 6}).mat();
      Mat q = random_density(SubsystemSpace({"A"}, {2}), {k, 7}).mat();
      for (DivergenceType t : kTypes) {
        double prev = -1e300;
        for (double a = 1.1; a <= 2.0 + 1e-12; a += 0.2) {
          const double d = d_alpha(p, q, a, t);
          CHECK(d >= -1e-9);
          CHECK(d >= prev - 1e-9);
          prev = d;
        }
      }
      for (double a : {1.2, 1.6, 2.0})
        CHECK(d_alpha(p, q, a, DivergenceType::sandwiched) <= d_alpha(p, q, a, DivergenceType::old) + 1e-9);
    }
  }

  TEST_CASE("conditional entropy examples") {
    LabeledOperator rb = random_density(SubsystemSpace({"B"}, {2}), {3, 0}).op();
    DensityOp prod(tensor(maximally_mixed(3, "A").op(), rb));
    for (double a : {0.5, 1.5, 2.0})
      CHECK(h_cond(prod, {"B"}, {a, DivergenceType::old, Arrow::optimized}).value ==
            doctest::Approx(std::log2(3.0)).epsilon(1e-8));

    DensityOp phi = mes(2, "A", "B").projector();
    for (double a : {1.25, 1.5, 2.0})
      CHECK(h_cond(phi, {"B"}, {a, DivergenceType::sandwiched, Arrow::fixed_marginal}).value ==
            doctest::Approx(-1.0).epsilon(1e-10));

    Vec v = Vec::Zero(4);
    v(1) = 1;
    DensityOp pp = PureState(SubsystemSpace({"A", "B"}, {2, 2}), v).projector();
    for (DivergenceType t : kTypes)
      for (Arrow ar : {Arrow::optimized, Arrow::fixed_marginal})
        CHECK(std::abs(h_cond(pp, {"B"}, {1.5, t, ar}).value) < 1e-8);

    CHECK_THROWS_AS(h_cond(phi, {"B"}, {2.5, DivergenceType::old, Arrow::optimized}), std::invalid_argument);
    CHECK_THROWS_AS(h_cond(phi, {"Z"}, {1.5, DivergenceType::old, Arrow::optimized}), std::invalid_argument);
  }

  TEST_CASE("optimizer reproduces the value and arrows are ordered") {
    SubsystemSpace s({"A", "B"}, {2, 2});
    for (std::uint64_t k = 0; k < 20; ++k) {
      DensityOp r = random_density(s, {k, 8});
      for (DivergenceType t : kTypes)
        for (double a : {0.7, 1.5, 2.0}) {
          CondEntropyResult up = h_cond(r, {"B"}, {a, t, Arrow::optimized});
          CondEntropyResult down = h_cond(r, {"B"}, {a, t, Arrow::fixed_marginal});
          CHECK(up.value >= down.value - 1e-9);
          REQUIRE(up.optimizer.has_value());
          Mat sig = oracle::kron(Mat::Identity(2, 2), up.optimizer->mat());
          const double back = -d_alpha(r.mat(), sig, a, t);
          CHECK(std::abs(back - up.value) < 1e-7);
          CHECK(up.optimizer->trace() == doctest::Approx(1.0));
        }
    }
  }

  TEST_CASE("optimized arrow matches the Bloch-ball grid oracle") {
    for (std::uint64_t k = 0; k < 4; ++k) {
      const Index da = 2 + static_cast<Index>(k % 2);
      DensityOp r = random_density(SubsystemSpace({"A", "B"}, {da, 2}), {k, 9});
      for (DivergenceType t : kTypes) {
        const double got = h_cond(r, {"B"}, {1.5, t, Arrow::optimized}).value;
        const double grid = oracle::h_up_bloch_grid(r.mat(), da, 1.5, t == DivergenceType::sandwiched);
        CHECK(std::abs(got - grid) <= 2e-3);
        CHECK(got >= grid - 1e-9);  // the grid can only do worse
      }
    }
  }

  TEST_CASE("von Neumann suite") {
    CHECK(entropy_vn(Mat(Mat::Identity(4, 4) / 4.0)) == doctest::Approx(2.0));
    DensityOp phi = mes(2, "A", "B").projector();
    CHECK(cond_entropy_vn(phi, {"A"}, {"B"}) == doctest::Approx(-1.0));
    DensityOp prod(tensor(tensor(random_density(SubsystemSpace({"A"}, {2}), {1, 1}).op(),
                                 random_density(SubsystemSpace({"B"}, {2}), {1, 2}).op()),
                          random_density(SubsystemSpace({"C"}, {2}), {1, 3}).op()));
    VonNeumannSuite vs = von_neumann_suite(prod, {"A"}, {"B"}, {"C"});
    CHECK(std::abs(vs.i_ab_given_c) < 1e-10);
    VonNeumannSuite vp = von_neumann_suite(DensityOp(tensor(phi.op(), maximally_mixed(2, "C").op())), {"A"}, {"B"}, {"C"});
    CHECK(vp.coherent_info == doctest::Approx(1.0));
    CHECK(vp.h_a == doctest::Approx(1.0));
  }

  TEST_CASE("duality") {
    SubsystemSpace abc({"A", "B", "C"}, {2, 2, 2});
    Vec v = Vec::Zero(8);
    v(0) = 1;
    PureState prod(abc, v);
    CHECK(std::abs(duality_check(prod, {"A"}, {"B"}, {"C"}, 1.5)) < 1e-8);
    PureState mesc = tensor(mes(2, "A", "B"), PureState(SubsystemSpace::single("C", 2), Vec::Unit(2, 0)));
    CHECK(std::abs(duality_check(mesc, {"A"}, {"B"}, {"C"}, 2.0)) < 1e-8);
    for (std::uint64_t k = 0; k < 10; ++k) {
      PureState psi = random_pure_state(abc, {k, 10});
      for (double a : {1.25, 2.0, 0.75}) CHECK(std::abs(duality_check(psi, {"A"}, {"B"}, {"C"}, a)) <= 1e-6);
      CHECK(std::abs(duality_residual(psi, {"A"}, {"B"}, {"C"}, 1.5, DualityPairing::sand_opt_sand_opt)) <= 1e-6);
      CHECK(std::abs(duality_residual(psi, {"A"}, {"B"}, {"C"}, 1.5, DualityPairing::old_fixed_old_fixed)) <= 1e-6);
    }
    DensityOp mixed = random_density(abc, {1, 11});
    CHECK_THROWS_AS(duality_check(mixed, {"A"}, {"B"}, {"C"}, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(duality_check(prod, {"A"}, {"B"}, {"C"}, 0.4), std::invalid_argument);
  }

  TEST_CASE("data processing") {
    SubsystemSpace a = SubsystemSpace::single("A", 2);
    DensityOp r = random_density(a, {5, 1});
    LabeledOperator q = random_density(a, {5, 2}).op();
    for (DivergenceType t : kTypes) {
      DpiReport same = dpi_check(r, q, identity_map(a), {1.5, t, Arrow::optimized});
      CHECK(same.holds);
      CHECK(same.after == doctest::Approx(same.before).epsilon(1e-10));
      DpiReport tr = dpi_check(r, q, trace_map(a), {1.5, t, Arrow::optimized});
      CHECK(tr.holds);
      CHECK(std::abs(tr.after) < 1e-10);
    }
    for (std::uint64_t k = 0; k < 100; ++k) {
      Mat iso = sample_haar(4, {k, 12}).leftCols(2);
      KrausMap e(a, SubsystemSpace::single("B", 2), {iso.topRows(2), iso.bottomRows(2)});
      DensityOp x = random_density(a, {k, 13});
      LabeledOperator y = random_density(a, {k, 14}).op();
      for (DivergenceType t : kTypes)
        for (double al : {0.5, 1.5, 2.0}) CHECK(dpi_check(x, y, e, {al, t, Arrow::optimized}).holds);
    }
    KrausMap half = depolarizing(a, 0.3);
    KrausMap not_tp(a, a, {Mat(Mat::Identity(2, 2) * 0.5)});
    CHECK_THROWS_AS(dpi_check(r, q, not_tp, {1.5, DivergenceType::old, Arrow::optimized}), std::invalid_argument);
    CHECK(dpi_check(r, q, half, {1.5, DivergenceType::old, Arrow::optimized}).holds);
  }
}
