#include "pfhom/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "pfhom/network.hpp"
#include "pfhom/polysystem.hpp"

using namespace pfhom;

namespace {
const std::string kFixtures = PFHOM_FIXTURES;

FixedSystem::Term term(std::vector<std::uint8_t> exps, cplx c) { return {std::move(exps), c}; }

/// x^2 + c = 0 in one variable.
FixedSystem univariate_quadratic(cplx c) {
  FixedSystem::Poly p;
  p.terms = {term({0}, c), term({2}, cplx(1, 0))};
  p.declared_degree = 2;
  return FixedSystem({p}, 1);
}

/// { x^2 - 2 = 0, y - x = 0 }.
FixedSystem mixed_degree_pair() {
  FixedSystem::Poly p0, p1;
  p0.terms = {term({0, 0}, cplx(-2, 0)), term({2, 0}, cplx(1, 0))};
  p0.declared_degree = 2;
  p1.terms = {term({1, 0}, cplx(-1, 0)), term({0, 1}, cplx(1, 0))};
  p1.declared_degree = 1;
  return FixedSystem({p0, p1}, 2);
}

std::vector<double> sorted_real_parts(const SolutionSet& set, int coord = 0) {
  std::vector<double> v;
  for (const auto& s : set.solutions) v.push_back(s.point[coord].real());
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace

TEST_CASE("total degree start has unit circle draws away from the real axis") {
  TotalDegreeStart st = make_total_degree_start({2, 3}, 99);
  CHECK(st.n_paths() == 6);
  REQUIRE(st.b.size() == 2);
  auto off_axis = [](cplx z) {
    double a = std::arg(z);
    return std::min(std::abs(a), std::numbers::pi - std::abs(a)) >= 0.01;
  };
  for (const cplx& b : st.b) {
    CHECK(std::abs(std::abs(b) - 1.0) < 1e-14);
    CHECK(off_axis(b));
  }
  CHECK(std::abs(std::abs(st.eta) - 1.0) < 1e-14);
  CHECK(off_axis(st.eta));

  // every decoded start point solves its equation x_i^{d_i} = b_i
  for (std::uint64_t idx = 0; idx < st.n_paths(); ++idx) {
    VecC x = st.start_point(idx);
    CHECK(std::abs(std::pow(x[0], 2) - st.b[0]) < 1e-13);
    CHECK(std::abs(std::pow(x[1], 3) - st.b[1]) < 1e-13);
  }
  // and the six decodes are pairwise distinct
  for (std::uint64_t i = 0; i < 6; ++i)
    for (std::uint64_t k = i + 1; k < 6; ++k)
      CHECK(inf_norm(st.start_point(i) - st.start_point(k)) > 0.1);
}

TEST_CASE("seeded draws are reproducible") {
  TotalDegreeStart a = make_total_degree_start({2, 2, 2}, 1234);
  TotalDegreeStart b = make_total_degree_start({2, 2, 2}, 1234);
  TotalDegreeStart c = make_total_degree_start({2, 2, 2}, 1235);
  for (int i = 0; i < 3; ++i) CHECK(a.b[i] == b.b[i]);
  CHECK(a.eta == b.eta);
  CHECK(a.b[0] != c.b[0]);
}

TEST_CASE("points_close uses a relative inf norm") {
  VecC a(2), b(2);
  a << cplx(1e6, 0), cplx(0, 0);
  b = a;
  b[0] += 5e-3;
  CHECK(points_close(a, b, 1e-8));
  b[0] += 2e-2;
  CHECK(!points_close(a, b, 1e-8));

  VecC c = VecC::Zero(2), d = VecC::Zero(2);
  d[1] = cplx(0, 5e-9);
  CHECK(points_close(c, d, 1e-8));
  d[1] = cplx(0, 2e-8);
  CHECK(!points_close(c, d, 1e-8));
}

TEST_CASE("both square roots of two are found") {
  FixedSystem sys = univariate_quadratic(cplx(-2, 0));
  SolutionSet set = solve_total_degree(sys, 7, TrackOptions{});
  CHECK(set.n_paths == 2);
  CHECK(set.n_converged == 2);
  CHECK(set.n_diverged == 0);
  CHECK(set.n_failed == 0);
  REQUIRE(set.solutions.size() == 2);
  auto roots = sorted_real_parts(set);
  const double r = std::sqrt(2.0);
  CHECK(std::abs(roots[0] + r) < 1e-10);
  CHECK(std::abs(roots[1] - r) < 1e-10);
  for (const auto& s : set.solutions) {
    CHECK(std::abs(s.point[0].imag()) < 1e-10);
    CHECK(s.residual < 1e-11);
    CHECK(!s.suspect_singular);
    CHECK(s.path_indices.size() == 1);
  }

  RealPartition part = classify_real(set, 1e-6, sys);
  CHECK(part.real_points.size() == 2);
  CHECK(part.nonreal_indices.empty());
}

TEST_CASE("complex conjugate roots are found and classified nonreal") {
  FixedSystem sys = univariate_quadratic(cplx(1, 0));  // x^2 = -1
  SolutionSet set = solve_total_degree(sys, 7, TrackOptions{});
  REQUIRE(set.solutions.size() == 2);
  std::vector<double> imags;
  for (const auto& s : set.solutions) {
    CHECK(std::abs(s.point[0].real()) < 1e-10);
    imags.push_back(s.point[0].imag());
  }
  std::sort(imags.begin(), imags.end());
  CHECK(std::abs(imags[0] + 1.0) < 1e-10);
  CHECK(std::abs(imags[1] - 1.0) < 1e-10);

  RealPartition part = classify_real(set, 1e-6, sys);
  CHECK(part.real_points.empty());
  CHECK(part.nonreal_indices.size() == 2);
}

TEST_CASE("a double root collapses to one suspect solution under merging") {
  FixedSystem sys = univariate_quadratic(cplx(0, 0));  // x^2 = 0
  TrackOptions opts;
  opts.dedup_tol = 1e-4;  // both paths land within O(1e-6) of the origin
  SolutionSet set = solve_total_degree(sys, 7, opts);
  CHECK(set.n_converged == 2);
  REQUIRE(set.solutions.size() == 1);
  CHECK(std::abs(set.solutions[0].point[0]) < 1e-4);
  CHECK(set.solutions[0].suspect_singular);
  CHECK(set.solutions[0].path_indices.size() == 2);
}

TEST_CASE("mixed degrees enumerate the right number of paths") {
  FixedSystem sys = mixed_degree_pair();
  CHECK(sys.degrees() == std::vector<int>{2, 1});
  SolutionSet set = solve_total_degree(sys, 21, TrackOptions{});
  CHECK(set.n_paths == 2);
  REQUIRE(set.solutions.size() == 2);
  const double r = std::sqrt(2.0);
  for (const auto& s : set.solutions) {
    CHECK(std::abs(s.point[0] - s.point[1]) < 1e-10);  // y = x
    CHECK(std::abs(std::abs(s.point[0].real()) - r) < 1e-10);
  }
  auto roots = sorted_real_parts(set);
  CHECK(std::abs(roots[0] + r) < 1e-10);
  CHECK(std::abs(roots[1] - r) < 1e-10);
}

TEST_CASE("a wildly divergent start is reported as diverged") {
  FixedSystem sys = univariate_quadratic(cplx(-2, 0));
  TotalDegreeStart st = make_total_degree_start(sys.degrees(), 7);
  TotalDegreeHomotopy hom(sys, st);
  VecC x0(1);
  x0[0] = cplx(1e9, 1e9);
  PathResult r = track_path(hom, x0, TrackOptions{});
  CHECK(r.status == PathStatus::Diverged);
}

TEST_CASE("refine polishes a perturbed root and reports a sane condition") {
  Network net = load_network(kFixtures + "/case2.json");
  FixedSystem sys = instantiate(polynomialize(net), std::span<const cplx>{});
  double e = 0.5 * (1.0 + std::sqrt(0.96)), f = -0.1;
  VecC x0(4);
  x0 << cplx(1.0 + 1e-3, -2e-4), cplx(10.0 * (1.0 - e) - 1e-3, 1e-4), cplx(e + 2e-3, 1e-3),
      cplx(f - 1e-3, -1e-3);
  RefineResult rr = refine(sys, x0, 1e-12);
  CHECK(rr.converged);
  CHECK(!rr.diverged);
  CHECK(!rr.suspect_singular);
  CHECK(rr.iters <= 8);
  CHECK(rr.residual < 1e-11);
  CHECK(rr.condition > 1.0);
  CHECK(rr.condition < 1e6);
  CHECK(std::abs(rr.x[2].real() - e) < 1e-10);
  CHECK(std::abs(rr.x[3].real() - f) < 1e-10);
  CHECK(std::abs(rr.x[2].imag()) < 1e-10);
}

TEST_CASE("endgame jump does not change the answer") {
  FixedSystem sys = mixed_degree_pair();
  TrackOptions with, without;
  without.endgame_jump = false;
  SolutionSet a = solve_total_degree(sys, 5, with);
  SolutionSet b = solve_total_degree(sys, 5, without);
  REQUIRE(a.solutions.size() == b.solutions.size());
  for (std::size_t i = 0; i < a.solutions.size(); ++i)
    CHECK(points_close(a.solutions[i].point, b.solutions[i].point, 1e-9));
}

TEST_CASE("three bus reduced system yields six finite solutions at a real parameter point") {
  Network net = load_network(kFixtures + "/case3.json");
  SlackElimination elim = eliminate_slack(polynomialize(net));
  std::vector<cplx> lam{cplx(0.5, 0), cplx(0.25, 0)};
  FixedSystem red = instantiate(elim.reduced, lam);

  SolutionSet set = solve_total_degree(red, 1, TrackOptions{});
  CHECK(set.n_paths == 64);
  CHECK(set.n_converged + set.n_diverged + set.n_failed == 64);
  CHECK(set.solutions.size() == 6);
  for (const auto& s : set.solutions) {
    CHECK(s.residual < 1e-9);
    CHECK(!s.suspect_singular);
  }

  // at this lightly loaded point every finite solution is real
  RealPartition part = classify_real(set, 1e-6, red);
  CHECK(part.real_points.size() == 6);

  // expanding a real reduced solution keeps the slack rows real and exact
  FixedSystem full = instantiate(polynomialize(net), lam);
  for (const VecR& xr : part.real_points) {
    VecC xf = elim.expand(xr.cast<cplx>(), lam);
    CHECK(std::abs(xf[0].imag()) < 1e-12);
    CHECK(std::abs(xf[1].imag()) < 1e-12);
    CHECK(inf_norm(full.eval(xf)) < 1e-8);
  }
}

TEST_CASE("tracking is deterministic across repeats and worker counts") {
  Network net = load_network(kFixtures + "/case3.json");
  SlackElimination elim = eliminate_slack(polynomialize(net));
  std::vector<cplx> lam{cplx(0.5, 0), cplx(0.25, 0)};
  FixedSystem red = instantiate(elim.reduced, lam);

  SolutionSet s1 = solve_total_degree(red, 42, TrackOptions{}, 1);
  SolutionSet s2 = solve_total_degree(red, 42, TrackOptions{}, 1);
  SolutionSet s4 = solve_total_degree(red, 42, TrackOptions{}, 4);

  REQUIRE(s1.solutions.size() == s2.solutions.size());
  REQUIRE(s1.solutions.size() == s4.solutions.size());
  for (std::size_t i = 0; i < s1.solutions.size(); ++i) {
    // bitwise identical endpoints and bookkeeping
    CHECK(s1.solutions[i].point == s2.solutions[i].point);
    CHECK(s1.solutions[i].point == s4.solutions[i].point);
    CHECK(s1.solutions[i].path_indices == s4.solutions[i].path_indices);
  }
  CHECK(s1.n_converged == s4.n_converged);
  CHECK(s1.n_diverged == s4.n_diverged);
  CHECK(s1.n_failed == s4.n_failed);

  SolutionSet s5 = solve_total_degree(red, 43, TrackOptions{}, 1);
  CHECK(s5.solutions.size() == s1.solutions.size());  // same count, different seed
}
