#include "helpers.hpp"

#include "qdec/experiment.hpp"
#include "qdec/protocols.hpp"

#include <cmath>

using namespace qtest;

namespace {

// ρ^common = Xᵀ X̄ for a vector arranged as (outer) x (common)
Mat common_marginal(const Mat& x) { return x.transpose() * x.conjugate(); }

double pure_distance(const Vec& a, const Vec& b) { return trace_norm(Mat(a * a.adjoint() - b * b.adjoint())); }

PureState product_state(const SubsystemSpace& s) {
  Vec v = Vec::Zero(s.total_dim());
  v(0) = 1.0;
  return PureState(s, v);
}

RateInputs rate_inputs(const ProtocolResult& r, double dim_r, double dim_b, double dim_e) {
  RateInputs in;
  in.h_tilde_a = r.diagnostics.count("h_tilde_a") ? r.diagnostics.at("h_tilde_a") : 0.0;
  in.h_a_given_r = r.diagnostics.count("h_a_given_r") ? r.diagnostics.at("h_a_given_r") : 0.0;
  in.dim_r = dim_r;
  in.dim_b = dim_b;
  in.dim_e = dim_e;
  in.n = r.n;
  return in;
}

}  // namespace

TEST_SUITE("protocols") {
  TEST_CASE("uhlmann extension examples") {
    Mat psi = random_ginibre(3, 2, {1, 90});
    psi /= psi.norm();
    UhlmannResult same = uhlmann_extend(psi, psi, 0.0);
    CHECK(same.error < 1e-12);
    CHECK(std::abs(same.overlap - 1.0) < 1e-12);

    // same marginal on the common system, rotated outer basis
    Mat u = sample_haar(3, {2, 90});
    UhlmannResult rot = uhlmann_extend(u * psi, psi, 0.0);
    CHECK(rot.error <= 1e-9);
    CHECK(max_abs(rot.v * u * psi - psi) < 1e-9);

    CHECK_THROWS_AS(uhlmann_extend(random_ginibre(4, 2, {3, 90}), psi, 0.1), std::invalid_argument);
  }

  TEST_CASE("uhlmann extension bound") {
    for (double target : {0.01, 0.1})
      for (std::uint64_t s = 0; s < 40; ++s) {
        const Index dc = 2 + s % 2, db = 2;
        Mat to = random_ginibre(dc, 2, {s, 91});
        to /= to.norm();
        Mat from = sample_haar(db, {s, 92}) * to.topRows(db);
        from += 0.05 * target * random_ginibre(db, 2, {s, 93});
        const bool subnormalized = s % 2 == 1;
        from /= from.norm() * (subnormalized ? 1.05 : 1.0);
        const double eps = trace_norm(Mat(common_marginal(from) - common_marginal(to)));
        UhlmannResult r = uhlmann_extend(from, to, eps);
        CHECK(r.eps_measured == doctest::Approx(eps).epsilon(1e-9));
        Mat vx = r.v * from;
        const double err = pure_distance(flatten(vx), flatten(to));
        CHECK(r.error == doctest::Approx(err).epsilon(1e-9));
        CHECK(err <= xi(eps) + 1e-9);
        if (subnormalized) CHECK(err <= 2.0 * std::sqrt(eps) + 1e-9);
        CHECK(max_abs(r.v.adjoint() * r.v - Mat::Identity(db, db)) < 1e-10);
      }
  }

  TEST_CASE("fuchs-van de graaf") {
    SubsystemSpace q = SubsystemSpace::single("A", 2);
    LabeledOperator r = random_density(q, {1, 94}).op();
    FuchsReport same = fuchs_vdg_check(r, r);
    CHECK(same.holds);
    CHECK(std::abs(same.lower) < 1e-9);
    CHECK(std::abs(same.tn) < 1e-12);
    CHECK(std::abs(same.upper) < 1e-6);

    FuchsReport orth = fuchs_vdg_check(LabeledOperator(q, diag({1, 0})), LabeledOperator(q, diag({0, 1})));
    CHECK(orth.lower == doctest::Approx(2.0));
    CHECK(orth.tn == doctest::Approx(2.0));
    CHECK(orth.upper == doctest::Approx(2.0));
    CHECK(orth.holds);

    for (std::uint64_t s = 0; s < 200; ++s) {
      SubsystemSpace sp = SubsystemSpace::single("A", 2 + s % 3);
      FuchsReport f =
          fuchs_vdg_check(random_subnormalized(sp, {s, 95}).op(), random_subnormalized(sp, {s, 96}).op());
      CHECK(f.holds);
      CHECK(f.lower <= f.tn + 1e-9);
      CHECK(f.tn <= f.upper + 1e-9);
    }
  }

  TEST_CASE("schumacher examples") {
    const Fixture skew = load_fixture("skewed_source", 1);
    REQUIRE(skew.pure);
    for (int n : {1, 2, 3}) {
      ProtocolResult full = schumacher_run(*skew.pure, n, Index{1} << n, 5);
      CHECK(full.measured_error <= 1e-9);
      CHECK(full.measured_error <= full.bound);
    }

    PureState rank1 = product_state(SubsystemSpace({"A", "R"}, {2, 2}));
    ProtocolResult r1 = schumacher_run(rank1, 2, 1, 5);
    CHECK(r1.measured_error <= 1e-9);

    // maximally mixed marginal: one bit per copy cannot be squeezed into half a bit
    PureState phi = mes(2, "A", "R");
    ProtocolResult half = schumacher_run(phi, 4, 4, 5);
    CHECK(half.measured_error > 1.0);
    CHECK(half.measured_error <= half.bound);

    CHECK_THROWS_AS(schumacher_run(*skew.pure, 1, 4, 5), std::invalid_argument);
    CHECK_THROWS_AS(schumacher_run(*skew.pure, 13, 2, 5), std::invalid_argument);
  }

  TEST_CASE("schumacher error knee across the rate grid") {
    const Fixture skew = load_fixture("skewed_source", 1);
    double prev = kInf;
    for (Index b : {1, 2, 4, 8, 16}) {
      ProtocolResult r = schumacher_run(*skew.pure, 4, b, 7);
      CHECK(r.measured_error <= prev + 1e-9);
      CHECK(r.measured_error <= r.bound);
      prev = r.measured_error;
    }
    CHECK(prev <= 1e-9);
  }

  TEST_CASE("fqsw runs") {
    PureState prod = product_state(SubsystemSpace({"A", "B", "R"}, {2, 2, 2}));
    ProtocolResult p = fqsw_run(prod, 1, 1, 1, 3);
    CHECK(p.measured_error <= p.bound);
    CHECK(p.measured_error <= 1e-9);

    const Fixture ghz = load_fixture("ghz", 1);
    REQUIRE(ghz.pure);
    ProtocolResult g = fqsw_run(*ghz.pure, 2, 2, 2, 3);
    CHECK(g.measured_error <= g.bound);
    CHECK(g.diagnostics.count("eps_n"));
    CHECK(g.diagnostics.count("theta_n"));
    CHECK(g.bound == doctest::Approx(xi(g.diagnostics.at("eps_n")) + xi(g.diagnostics.at("theta_n"))));

    CHECK_THROWS_AS(fqsw_run(*ghz.pure, 1, 2, 2, 3), std::invalid_argument);
  }

  TEST_CASE("merge configuration") {
    MergeConfig c{2, 1, 4};
    CHECK(c.j() == 8);
    CHECK(c.zeta() == doctest::Approx(8.0));
    MergeConfig odd{3, 2, 1};
    CHECK(odd.j() == 2);
    CHECK(static_cast<double>(odd.j()) - odd.zeta() < 1.0);
    CHECK_THROWS_AS((MergeConfig{1, 4, 2}.validate()), std::invalid_argument);
  }

  TEST_CASE("merge runs") {
    const Fixture me = load_fixture("mes_ar_b", 1);
    REQUIRE(me.pure);
    // |A1| = |A0||E|: single outcome and an exactly uniform register
    ProtocolResult one = merge_run(*me.pure, 1, {1, 2, 2}, 4);
    CHECK(one.diagnostics.at("J") == 1.0);
    CHECK(one.diagnostics.at("omega_gap") < 1e-12);
    CHECK(one.diagnostics.at("omega_check_passed") == 1.0);

    for (MergeConfig cfg : {MergeConfig{2, 1, 2}, MergeConfig{2, 2, 2}, MergeConfig{1, 1, 2}}) {
      ProtocolResult r = merge_run(*me.pure, 1, cfg, 4);
      CHECK(r.measured_error <= r.bound);
      CHECK(r.diagnostics.at("omega_check_passed") == 1.0);
      CHECK(r.diagnostics.at("omega_gap") < r.diagnostics.at("two_over_zeta"));
      CHECK(r.diagnostics.at("measurement_completeness_defect") <= 1e-9);
      CHECK(r.rates.at("entanglement") ==
            doctest::Approx(std::log2(static_cast<double>(cfg.dim_a0)) - std::log2(static_cast<double>(cfg.dim_a1))));
      CHECK(r.rates.at("classical") == doctest::Approx(std::log2(static_cast<double>(cfg.j()))));
    }

    PureState trivial = product_state(SubsystemSpace({"A", "B", "R"}, {1, 2, 2}));
    ProtocolResult t = merge_run(trivial, 1, {1, 1, 1}, 4);
    CHECK(t.measured_error <= 1e-6);

    CHECK_THROWS_AS(merge_run(*me.pure, 1, {1, 1, 4}, 4), std::invalid_argument);
  }

  TEST_CASE("destroy runs") {
    DensityOp decoupled = tensor(maximally_mixed(2, "A"), random_density(SubsystemSpace::single("R", 2), {1, 97}));
    ProtocolResult d = destroy_run(decoupled, 1, 1, 3);
    CHECK(d.measured_error <= 1e-9);

    const Fixture cc = load_fixture("classical_correlated", 1);
    ProtocolResult full = destroy_run(cc.rho, 1, 4, 3);
    CHECK(full.measured_error <= 1e-9);
    CHECK(full.measured_error <= full.bound);

    double prev = kInf;
    for (Index m : {1, 2, 4, 8, 16}) {
      ProtocolResult r = destroy_run(cc.rho, 2, m, 3);
      CHECK(r.measured_error <= prev + 1e-9);
      CHECK(r.measured_error <= r.bound);
      CHECK(r.rates.at("randomness") == doctest::Approx(std::log2(static_cast<double>(m)) / 2.0));
      prev = r.measured_error;
    }
    CHECK_THROWS_AS(destroy_run(cc.rho, 1, 5, 3), std::invalid_argument);
  }

  TEST_CASE("rate bookkeeping") {
    const double alpha = 1.5, d1 = 0.1, d2 = 0.1;
    const Fixture skew = load_fixture("skewed_source", 1);
    const Mat rho_a = partial_trace(skew.pure->projector().op(), {"R"}).m;
    for (int n : {1, 2, 3}) {
      ProtocolResult s = schumacher_run(*skew.pure, n, Index{1} << n, 2);
      const double ht = renyi_entropy(rho_a, 1.0 / alpha);
      const double want = 2.0 * std::log2(n + 1.0) / n + ht + d1;
      CHECK(std::abs(s.rates.at("theorem_compression") - want) < 1e-12);
    }

    const Fixture ghz = load_fixture("ghz", 1);
    ProtocolResult f = fqsw_run(*ghz.pure, 2, 2, 2, 2);
    {
      const double ht = f.diagnostics.at("h_tilde_a"), hc = f.diagnostics.at("h_a_given_r");
      const double q = 0.5 * (ht - hc) + 3.0 * 2.0 * std::log2(3.0) / 4.0 + (d1 + d2) / 2.0;
      CHECK(std::abs(f.rates.at("theorem_quantum_communication") - q) < 1e-12);
      CHECK(std::abs(f.rates.at("theorem_entanglement_gain") - (q + hc - 2.0 * std::log2(3.0) / 2.0 - d2)) < 1e-12);
    }

    RateInputs in = rate_inputs(f, 2, 2, 3);
    in.n = 4;
    const double lg = std::log2(5.0);
    CHECK(std::abs(merge_entanglement_rate(in) - (-in.h_a_given_r + 2.0 * lg / 4.0 + d1)) < 1e-12);
    CHECK(std::abs(merge_classical_rate(in) - (in.h_tilde_a - in.h_a_given_r + (3.0 * 2.0 * lg + 2.0) / 4.0 + d1 + d2)) <
          1e-12);
    CHECK(std::abs(destroy_theorem_rate(in) - (in.h_tilde_a - in.h_a_given_r + 4.0 * 2.0 * lg / 4.0 + d1)) < 1e-12);
    CHECK(dual_alpha(1.5, DivergenceType::old) == doctest::Approx(2.0 / 3.0));
    CHECK(dual_alpha(1.5, DivergenceType::sandwiched) == doctest::Approx(0.75));
  }

  TEST_CASE("results are reproducible from the seed") {
    const Fixture ghz = load_fixture("ghz", 1);
    ProtocolResult a = fqsw_run(*ghz.pure, 2, 2, 2, 11), b = fqsw_run(*ghz.pure, 2, 2, 2, 11);
    CHECK(a.measured_error == b.measured_error);
    CHECK(a.bound == b.bound);
  }
}
