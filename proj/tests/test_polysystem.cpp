#include "pfhom/polysystem.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "doctest.h"
#include "pfhom/network.hpp"
#include "pfhom/rng.hpp"
#include "support/flow_oracle.hpp"

using namespace pfhom;
using doctest::Approx;

namespace {
const std::string kFixtures = PFHOM_FIXTURES;

Network case2() { return load_network(kFixtures + "/case2.json"); }
Network case2s() { return load_network(kFixtures + "/case2_sweep.json"); }
Network case3() { return load_network(kFixtures + "/case3.json"); }
Network case10() { return load_network(kFixtures + "/case10.json"); }

VecC random_point(int n, Rng& rng) {
  VecC x(n);
  for (int i = 0; i < n; ++i) x[i] = cplx(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
  return x;
}

std::vector<cplx> random_lambda(int n, Rng& rng) {
  std::vector<cplx> lam(n);
  for (auto& l : lam) l = cplx(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
  return lam;
}
}  // namespace

TEST_CASE("three bus system has the documented variable and equation layout") {
  ParamPolySystem sys = polynomialize(case3());
  CHECK(sys.n_vars() == 8);
  CHECK(sys.equations.size() == 8);
  CHECK(sys.params == std::vector<std::string>{"lam1", "lam2"});
  CHECK(sys.n_buses == 3);
  CHECK(sys.n_gens == 3);
  CHECK(sys.degrees() == std::vector<int>{1, 1, 2, 2, 2, 2, 2, 2});

  CHECK(sys.vars.name(0) == "slack_p");
  CHECK(sys.vars.name(1) == "slack_q");
  CHECK(sys.vars.name(2) == "q_1");
  CHECK(sys.vars.name(3) == "cos_1");
  CHECK(sys.vars.name(4) == "sin_1");
  CHECK(sys.vars.name(5) == "q_2");
  CHECK(sys.vars.name(6) == "cos_2");
  CHECK(sys.vars.name(7) == "sin_2");
  CHECK(sys.vars.find(VarKind::PvCos, 2) == 6);
  CHECK(sys.vars.find(VarKind::PvCos, 99) == -1);

  std::string d = sys.dump();
  CHECK(d.find("slack_p") != std::string::npos);
  CHECK(d.find("lam2") != std::string::npos);
}

TEST_CASE("solution count bounds are exact on the reference networks") {
  BoundsReport b3 = bounds(polynomialize(case3()));
  CHECK(b3.naive_cbb == 256);
  CHECK(b3.degree_product == 64);
  CHECK(b3.binomial == 6);

  BoundsReport b10 = bounds(polynomialize(case10()));
  CHECK(b10.naive_cbb == (1ull << 25));
  CHECK(b10.degree_product == (1ull << 23));
  CHECK(b10.binomial == 48620);

  BoundsReport b2 = bounds(polynomialize(case2()));
  CHECK(b2.naive_cbb == 16);
  CHECK(b2.degree_product == 4);
  CHECK(b2.binomial == 2);
}

TEST_CASE("parameters only enter through constant terms") {
  for (const auto& net : {case2s(), case3(), case10()}) {
    ParamPolySystem sys = polynomialize(net);
    bool any_param_term = false;
    for (const ParamPoly& eq : sys.equations) {
      for (const ParamTerm& t : eq.terms) {
        bool has_param = false;
        for (const cplx& c : t.coeff_per_param)
          if (c != cplx(0, 0)) has_param = true;
        if (!has_param) continue;
        any_param_term = true;
        CHECK(t.total_degree() == 0);
      }
    }
    CHECK(any_param_term);
  }
}

TEST_CASE("terms are sorted graded lex and free of zero coefficients") {
  ParamPolySystem sys = polynomialize(case10());
  for (const ParamPoly& eq : sys.equations) {
    CHECK(!eq.terms.empty());
    for (std::size_t i = 0; i < eq.terms.size(); ++i) {
      const ParamTerm& t = eq.terms[i];
      bool zero = t.coeff0 == cplx(0, 0);
      for (const cplx& c : t.coeff_per_param)
        if (c != cplx(0, 0)) zero = false;
      CHECK(!zero);
      CHECK(t.total_degree() <= eq.declared_degree);
      if (i > 0) {
        const ParamTerm& p = eq.terms[i - 1];
        bool ordered = p.total_degree() < t.total_degree() ||
                       (p.total_degree() == t.total_degree() && p.exps < t.exps);
        CHECK(ordered);
      }
    }
  }
}

TEST_CASE("two bus equations match the hand expansion") {
  // slack (V=1) -- j0.1 -- pq bus with load 1 + j0.
  // With V2 = e + i f and y = -10i the four equations reduce to
  //   -10 f - p,  10 (1-e) - q,  10 f + 1,  10 (e^2 - e + f^2).
  ParamPolySystem sys = polynomialize(case2());
  REQUIRE(sys.n_vars() == 4);
  REQUIRE(sys.n_params() == 0);
  FixedSystem fixed = instantiate(sys, std::span<const cplx>{});

  int ip = sys.vars.find(VarKind::SlackP, 1);
  int iq = sys.vars.find(VarKind::SlackQ, 1);
  int ie = sys.vars.find(VarKind::PqVre, 2);
  int iff = sys.vars.find(VarKind::PqVim, 2);
  REQUIRE(ip == 0);
  REQUIRE(iq == 1);
  REQUIRE(ie == 2);
  REQUIRE(iff == 3);

  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    VecC x = random_point(4, rng);
    cplx p = x[ip], q = x[iq], e = x[ie], f = x[iff];
    VecC r = fixed.eval(x);
    CHECK(std::abs(r[0] - (-10.0 * f - p)) < 1e-12);
    CHECK(std::abs(r[1] - (10.0 * (1.0 - e) - q)) < 1e-12);
    CHECK(std::abs(r[2] - (10.0 * f + 1.0)) < 1e-12);
    CHECK(std::abs(r[3] - 10.0 * (e * e - e + f * f)) < 1e-12);
  }
}

TEST_CASE("two bus closed form solutions are exact roots") {
  // f = -1/10, e = (1 +- sqrt(1 - 4 (f^2 + 0)))/2 ... e^2 - e + f^2 = 0.
  ParamPolySystem sys = polynomialize(case2());
  FixedSystem fixed = instantiate(sys, std::span<const cplx>{});

  double f = -0.1;
  for (double sgn : {1.0, -1.0}) {
    double e = 0.5 * (1.0 + sgn * std::sqrt(0.96));
    VecC x(4);
    x[0] = -10.0 * f;          // slack p
    x[1] = 10.0 * (1.0 - e);   // slack q
    x[2] = e;
    x[3] = f;
    CHECK(inf_norm(fixed.eval(x)) < 1e-13);
    if (sgn > 0) {
      // the operable high-voltage branch
      // |V|^2 = e^2 + f^2 = e at a root, so |V| = sqrt(e)
      CHECK(std::hypot(e, f) == Approx(std::sqrt(e)).epsilon(1e-14));
      CHECK(std::hypot(e, f) == Approx(0.9949361530051241).epsilon(1e-12));
      CHECK(x[0].real() == Approx(1.0));
    }
  }
}

TEST_CASE("fixed systems agree with the independent flow oracle") {
  Rng rng(2026);
  for (const auto& net : {case2(), case2s(), case3(), case10()}) {
    ParamPolySystem sys = polynomialize(net);
    for (int trial = 0; trial < 8; ++trial) {
      std::vector<cplx> lam = random_lambda(sys.n_params(), rng);
      FixedSystem fixed = instantiate(sys, lam);
      VecC x = random_point(sys.n_vars(), rng);
      VecC got = fixed.eval(x);
      std::vector<cplx> want = testing::flow_residuals(net, sys.vars, sys.params, x, lam);
      REQUIRE(static_cast<int>(want.size()) == sys.n_vars());
      for (int i = 0; i < sys.n_vars(); ++i) {
        double scale = std::max(1.0, std::abs(want[i]));
        CHECK(std::abs(got[i] - want[i]) / scale < 1e-12);
      }
      // eval_param_poly must agree with instantiate-then-eval
      for (int i = 0; i < sys.n_vars(); ++i) {
        cplx direct = eval_param_poly(sys.equations[i], x, lam);
        double scale = std::max(1.0, std::abs(direct));
        CHECK(std::abs(got[i] - direct) / scale < 1e-12);
      }
    }
  }
}

TEST_CASE("jacobian matches central differences") {
  Rng rng(7);
  ParamPolySystem sys = polynomialize(case3());
  std::vector<cplx> lam = random_lambda(2, rng);
  FixedSystem fixed = instantiate(sys, lam);
  VecC x = random_point(sys.n_vars(), rng);
  MatC J = fixed.jacobian(x);
  double h = 1e-6;
  for (int j = 0; j < sys.n_vars(); ++j) {
    VecC xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    VecC col = (fixed.eval(xp) - fixed.eval(xm)) / (2.0 * h);
    for (int i = 0; i < sys.n_vars(); ++i) {
      CHECK(std::abs(J(i, j) - col[i]) < 1e-6 * std::max(1.0, std::abs(col[i])));
    }
  }
}

TEST_CASE("parameter shifts move only the affected balance equation") {
  ParamPolySystem sys = polynomialize(case2s());
  REQUIRE(sys.params == std::vector<std::string>{"P"});
  Rng rng(5);
  VecC x = random_point(sys.n_vars(), rng);

  std::vector<cplx> lam0{cplx(0, 0)}, lam2{cplx(2, 0)};
  VecC r0 = instantiate(sys, lam0).eval(x);
  VecC r2 = instantiate(sys, lam2).eval(x);
  // injection unit is (-1, 0): active balance of bus 2 shifts by +lambda
  CHECK(std::abs((r2[2] - r0[2]) - cplx(2, 0)) < 1e-14);
  CHECK(std::abs(r2[0] - r0[0]) < 1e-14);
  CHECK(std::abs(r2[1] - r0[1]) < 1e-14);
  CHECK(std::abs(r2[3] - r0[3]) < 1e-14);
}

TEST_CASE("content hash is stable and sensitive") {
  ParamPolySystem a = polynomialize(case3());
  ParamPolySystem b = polynomialize(case3());
  CHECK(a.content_hash() == b.content_hash());

  Network changed = case3();
  for (Bus& b : changed.buses)
    if (b.id == 3) b.pload = 2.5;
  CHECK(polynomialize(changed).content_hash() != a.content_hash());
  CHECK(polynomialize(case10()).content_hash() != a.content_hash());
}

TEST_CASE("slack elimination reduces the system and back substitution is exact") {
  ParamPolySystem sys = polynomialize(case3());
  SlackElimination elim = eliminate_slack(sys);
  CHECK(elim.reduced.n_vars() == 6);
  CHECK(elim.reduced.equations.size() == 6);
  CHECK(elim.reduced.degrees() == std::vector<int>{2, 2, 2, 2, 2, 2});
  CHECK(elim.slack_p_index == 0);
  CHECK(elim.slack_q_index == 1);

  // degree product is unchanged by dropping the linear equations
  CHECK(bounds(sys).degree_product == 64);
  std::uint64_t red_prod = 1;
  for (int d : elim.reduced.degrees()) red_prod *= static_cast<std::uint64_t>(d);
  CHECK(red_prod == 64);

  Rng rng(11);
  FixedSystem full = instantiate(sys, std::vector<cplx>{cplx(0.3, 0.1), cplx(-0.2, 0.4)});
  std::vector<cplx> lam{cplx(0.3, 0.1), cplx(-0.2, 0.4)};
  FixedSystem red = instantiate(elim.reduced, lam);
  for (int trial = 0; trial < 10; ++trial) {
    VecC xr = random_point(6, rng);
    VecC xf = elim.expand(xr, lam);
    REQUIRE(xf.size() == 8);
    VecC rf = full.eval(xf);
    // slack rows are solved exactly by the back substitution
    CHECK(std::abs(rf[0]) < 1e-12 * std::max(1.0, std::abs(xf[0].real())));
    CHECK(std::abs(rf[1]) < 1e-12 * std::max(1.0, std::abs(xf[1].real())));
    // remaining rows coincide with the reduced system rows
    VecC rr = red.eval(xr);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(rf[i + 2] - rr[i]) < 1e-12);
  }
}

TEST_CASE("bus states report the operating point of a real solution") {
  Network net = case2();
  ParamPolySystem sys = polynomialize(net);
  double f = -0.1, e = 0.5 * (1.0 + std::sqrt(0.96));
  VecR x(4);
  x << -10.0 * f, 10.0 * (1.0 - e), e, f;
  auto states = bus_states(net, sys, x, std::span<const double>{});
  REQUIRE(states.size() == 2);
  CHECK(states[0].bus == 1);
  CHECK(states[0].vmag == Approx(1.0));
  CHECK(states[0].p == Approx(1.0));
  CHECK(states[1].bus == 2);
  CHECK(states[1].vmag == Approx(std::hypot(e, f)));
  CHECK(states[1].p == Approx(-1.0));  // load bus consumes
  CHECK(states[1].angle_deg < 0);
}
