#include "pfhom/paramhom.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pfhom/network.hpp"
#include "pfhom/polysystem.hpp"
#include "support/flow_oracle.hpp"

using namespace pfhom;

namespace {
const std::string kFixtures = PFHOM_FIXTURES;

ParamPolySystem case3_system() { return polynomialize(load_network(kFixtures + "/case3.json")); }

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

StartCache& shared_cache() {
  // stage one is the expensive part; compute it once for the whole suite
  static StartCache c = solve_generic(case3_system(), 11, TrackOptions{}, 1);
  return c;
}
}  // namespace

TEST_CASE("cache serialization round trips exactly") {
  StartCache c;
  c.lambda_star = {cplx(0.25, -0.75), cplx(-0.125, 0.5)};
  VecC s1(2), s2(2);
  s1 << cplx(1.5, -2.25), cplx(0.0, 1.0);
  s2 << cplx(-0.5, 0.0), cplx(3.75, -0.875);
  c.solutions = {s1, s2};
  c.seed = 77;
  c.system_hash = 0xdeadbeefcafe1234ull;
  c.bound_used = 64;

  StartCache back = parse_cache(serialize_cache(c));
  CHECK(back.lambda_star == c.lambda_star);
  REQUIRE(back.solutions.size() == 2);
  CHECK(back.solutions[0] == c.solutions[0]);
  CHECK(back.solutions[1] == c.solutions[1]);
  CHECK(back.seed == 77);
  CHECK(back.system_hash == c.system_hash);
  CHECK(back.bound_used == 64);
}

TEST_CASE("cache parse rejects malformed input") {
  CHECK_THROWS_AS(parse_cache("{"), ParseError);
  CHECK_THROWS_AS(parse_cache("[]"), ParseError);
  CHECK_THROWS_AS(parse_cache("{\"lambda_star\":[]}"), ParseError);
  CHECK_THROWS_AS(
      parse_cache("{\"lambda_star\":[[0]],\"solutions\":[],\"seed\":1,\"system_hash\":1,"
                  "\"bound_used\":1}"),
      ParseError);
}

TEST_CASE("stage one finds six regular solutions at a generic parameter point") {
  const StartCache& c = shared_cache();
  CHECK(c.solutions.size() == 6);
  CHECK(c.seed == 11);
  CHECK(c.bound_used == 64);
  CHECK(c.system_hash == case3_system().content_hash());
  REQUIRE(c.lambda_star.size() == 2);
  for (const cplx& l : c.lambda_star) {
    CHECK(std::abs(l) <= 1.0);
    CHECK(l.imag() != 0.0);  // generic draws stay off the real axis
  }
  for (const VecC& s : c.solutions) CHECK(s.size() == 6);  // reduced variables
}

TEST_CASE("cache file save and load round trips") {
  std::string path = temp_path("pfhom_cache_test.json");
  save_cache(path, shared_cache());
  StartCache back = load_cache(path);
  CHECK(back.system_hash == shared_cache().system_hash);
  REQUIRE(back.solutions.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(back.solutions[i] == shared_cache().solutions[i]);
  std::filesystem::remove(path);
}

TEST_CASE("stage two lands on target solutions that satisfy the flow equations") {
  Network net = load_network(kFixtures + "/case3.json");
  ParamPolySystem sys = polynomialize(net);
  std::vector<cplx> lam{cplx(0.5, 0), cplx(0.25, 0)};
  SolutionSet set = track_to(sys, shared_cache(), lam, TrackOptions{});
  CHECK(set.n_paths == 6);
  CHECK(set.n_converged == 6);
  REQUIRE(set.solutions.size() == 6);
  for (const auto& s : set.solutions) {
    CHECK(s.point.size() == 8);  // expanded back to the full variable set
    CHECK(!s.suspect_singular);
    // verify against the independent oracle, not the instantiated system
    auto res = testing::flow_residuals(net, sys.vars, sys.params, s.point, lam);
    for (const cplx& r : res) CHECK(std::abs(r) < 1e-8);
  }
}

TEST_CASE("stage two agrees with a from-scratch total degree solve") {
  Network net = load_network(kFixtures + "/case3.json");
  ParamPolySystem sys = polynomialize(net);
  SlackElimination elim = eliminate_slack(sys);
  std::vector<cplx> lam{cplx(1.5, 0), cplx(2.0, 0)};

  SolutionSet via_cache = track_to(sys, shared_cache(), lam, TrackOptions{});
  SolutionSet direct = solve_total_degree(instantiate(elim.reduced, lam), 5, TrackOptions{});
  REQUIRE(via_cache.solutions.size() == direct.solutions.size());

  // same solution sets up to ordering
  for (const auto& d : direct.solutions) {
    VecC expanded = elim.expand(d.point, lam);
    bool found = false;
    for (const auto& v : via_cache.solutions)
      if (points_close(v.point, expanded, 1e-7)) found = true;
    CHECK(found);
  }
}

TEST_CASE("stage two rejects a cache built for a different system") {
  ParamPolySystem other = polynomialize(load_network(kFixtures + "/case2_sweep.json"));
  std::vector<cplx> lam{cplx(1.0, 0)};
  CHECK_THROWS_WITH_AS(track_to(other, shared_cache(), lam, TrackOptions{}),
                       doctest::Contains("different system"), ValidationError);
}

TEST_CASE("stage two validates the parameter count") {
  std::vector<cplx> lam{cplx(1.0, 0)};  // needs two
  CHECK_THROWS_AS(track_to(case3_system(), shared_cache(), lam, TrackOptions{}), ValidationError);
}

TEST_CASE("real solution counts vary across the parameter plane") {
  ParamPolySystem sys = case3_system();
  TrackOptions opts;
  auto count = [&](double l1, double l2) {
    std::vector<double> lam{l1, l2};
    return count_real(sys, shared_cache(), lam, 1e-6, opts).n_real;
  };
  CHECK(count(0.5, 0.25) == 6);
  CHECK(count(6.5, 5.5) == 2);    // only the stable pair survives out here
  CHECK(count(12.0, 11.0) == 0);  // past the feasibility boundary nothing is real
}

TEST_CASE("count_real keeps conjugate pairs together") {
  ParamPolySystem sys = case3_system();
  std::vector<double> lam{3.0, 1.0};
  CountRealResult r = count_real(sys, shared_cache(), lam, 1e-6, TrackOptions{});
  CHECK(r.set.solutions.size() == 6);
  CHECK((static_cast<int>(r.set.solutions.size()) - r.n_real) % 2 == 0);
  // nonreal solutions come in conjugate pairs
  for (int i : r.partition.nonreal_indices) {
    const VecC& p = r.set.solutions[i].point;
    VecC conj_p = p.conjugate();
    bool found = false;
    for (int k : r.partition.nonreal_indices)
      if (points_close(r.set.solutions[k].point, conj_p, 1e-6)) found = true;
    CHECK(found);
  }
}

TEST_CASE("checkpoint records and resumes path results") {
  std::string path = temp_path("pfhom_ckpt_test.bin");
  std::filesystem::remove(path);

  PathResult ok;
  ok.status = PathStatus::Converged;
  ok.endpoint = VecC(2);
  ok.endpoint << cplx(1.25, -0.5), cplx(0.0, 2.0);
  ok.final_residual = 1e-13;
  ok.steps = 17;
  ok.t_end = 1.0;
  ok.condition = 42.0;

  PathResult bad;
  bad.status = PathStatus::Diverged;
  bad.t_end = 0.875;
  bad.steps = 9;

  {
    Checkpoint ck(path, 0xabcull, 7, 64, 2);
    CHECK(ck.n_recorded() == 0);
    ck.record(3, ok);
    ck.record(5, bad);
    CHECK(ck.n_recorded() == 2);
  }
  {
    Checkpoint ck(path, 0xabcull, 7, 64, 2);
    CHECK(ck.n_recorded() == 2);
    PathResult r;
    REQUIRE(ck.lookup(3, r));
    CHECK(r.status == PathStatus::Converged);
    CHECK(r.endpoint == ok.endpoint);
    CHECK(r.final_residual == ok.final_residual);
    CHECK(r.steps == 17);
    CHECK(r.condition == 42.0);
    REQUIRE(ck.lookup(5, r));
    CHECK(r.status == PathStatus::Diverged);
    CHECK(r.t_end == 0.875);
    CHECK(!ck.lookup(4, r));
  }

  // wrong metadata must be rejected, not silently reused
  CHECK_THROWS_AS(Checkpoint(path, 0xabcull, 8, 64, 2), ValidationError);
  CHECK_THROWS_AS(Checkpoint(path, 0xabdull, 7, 64, 2), ValidationError);
  CHECK_THROWS_AS(Checkpoint(path, 0xabcull, 7, 32, 2), ValidationError);
  CHECK_THROWS_AS(Checkpoint(path, 0xabcull, 7, 64, 3), ValidationError);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint tolerates a truncated trailing record") {
  std::string path = temp_path("pfhom_ckpt_trunc.bin");
  std::filesystem::remove(path);
  PathResult ok;
  ok.status = PathStatus::Converged;
  ok.endpoint = VecC(2);
  ok.endpoint << cplx(1, 1), cplx(2, -2);
  ok.t_end = 1.0;
  {
    Checkpoint ck(path, 1, 2, 8, 2);
    ck.record(0, ok);
    ck.record(1, ok);
  }
  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 7);  // cut into the last record
  {
    Checkpoint ck(path, 1, 2, 8, 2);
    CHECK(ck.n_recorded() == 1);  // the damaged tail is dropped
    PathResult r;
    CHECK(ck.lookup(0, r));
    CHECK(!ck.lookup(1, r));
    ck.record(1, ok);  // and can be rewritten
  }
  {
    Checkpoint ck(path, 1, 2, 8, 2);
    CHECK(ck.n_recorded() == 2);
  }
  std::filesystem::remove(path);
}

TEST_CASE("stage one resumes from a checkpoint without retracking") {
  std::string path = temp_path("pfhom_ckpt_resume.bin");
  std::filesystem::remove(path);
  ParamPolySystem sys = case3_system();

  StartCache fresh;
  {
    Checkpoint ck(path, sys.content_hash(), 11, 64, 6);
    fresh = solve_generic(sys, 11, TrackOptions{}, 1, &ck);
    CHECK(ck.n_recorded() == 64);
  }
  {
    Checkpoint ck(path, sys.content_hash(), 11, 64, 6);
    StartCache resumed = solve_generic(sys, 11, TrackOptions{}, 1, &ck);
    REQUIRE(resumed.solutions.size() == fresh.solutions.size());
    for (std::size_t i = 0; i < fresh.solutions.size(); ++i)
      CHECK(resumed.solutions[i] == fresh.solutions[i]);  // bitwise, straight from the file
  }
  std::filesystem::remove(path);
}

TEST_CASE("gamma twist changes the route, not the destination") {
  ParamPolySystem sys = case3_system();
  std::vector<cplx> lam{cplx(2.0, 0), cplx(1.0, 0)};
  ParamHomOptions twist;
  twist.gamma_twist = true;
  twist.gamma_seed = 9;
  SolutionSet plain = track_to(sys, shared_cache(), lam, TrackOptions{});
  SolutionSet twisted = track_to(sys, shared_cache(), lam, TrackOptions{}, 1, twist);
  REQUIRE(plain.solutions.size() == twisted.solutions.size());
  for (const auto& p : plain.solutions) {
    bool found = false;
    for (const auto& t : twisted.solutions)
      if (points_close(p.point, t.point, 1e-7)) found = true;
    CHECK(found);
  }
}
