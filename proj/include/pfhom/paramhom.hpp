#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfhom/polysystem.hpp"
#include "pfhom/tracker.hpp"

namespace pfhom {

/// Stage one result: all isolated solutions at a random complex parameter
/// point, reusable as start points for any real parameter value. Solutions
/// are stored over the slack-eliminated variable set.
struct StartCache {
  std::vector<cplx> lambda_star;
  std::vector<VecC> solutions;
  std::uint64_t seed = 0;
  std::uint64_t system_hash = 0;  // content hash of the full system
  std::uint64_t bound_used = 0;   // start paths tracked to produce the cache
};

std::string serialize_cache(const StartCache& c);
StartCache parse_cache(const std::string& json_text);
void save_cache(const std::string& path, const StartCache& c);
StartCache load_cache(const std::string& path);

/// Append-only record file allowing a long stage-one run to resume at path
/// granularity. A partial trailing record (crash mid-write) is ignored.
class Checkpoint {
 public:
  Checkpoint(const std::string& path, std::uint64_t system_hash, std::uint64_t seed,
             std::uint64_t n_paths, int n_vars);
  ~Checkpoint();

  Checkpoint(const Checkpoint&) = delete;
  Checkpoint& operator=(const Checkpoint&) = delete;

  bool lookup(std::uint64_t idx, PathResult& out) const;
  void record(std::uint64_t idx, const PathResult& r);
  std::uint64_t n_recorded() const;

 private:
  struct Impl;
  Impl* impl_;
};

struct ParamHomOptions {
  /// Multiply the start-side term by a random unit-circle coefficient.
  bool gamma_twist = false;
  std::uint64_t gamma_seed = 0;
};

/// Coefficient homotopy between two parameter points of the same system:
/// H(x, s) = gamma * (1-s) * P(x, lambda_from) + s * P(x, lambda_to).
class ParamHomotopy : public Homotopy {
 public:
  ParamHomotopy(const ParamPolySystem& sys, std::span<const cplx> lambda_from,
                std::span<const cplx> lambda_to, const ParamHomOptions& opts = {});

  int dim() const override { return a_.n_vars(); }
  void eval(const VecC& x, double s, VecC& out) const override;
  void jacobian(const VecC& x, double s, MatC& out) const override;
  void dt(const VecC& x, double s, VecC& out) const override;
  void target_eval(const VecC& x, VecC& out) const override;
  void target_jacobian(const VecC& x, MatC& out) const override;

 private:
  FixedSystem a_, b_;
  cplx gamma_{1.0, 0.0};
};

/// Stage one: draw a random complex parameter point (component-wise from the
/// unit disk), eliminate the slack unknowns, and track every total-degree
/// start path. Throws if the solve looks degenerate (any suspect-singular
/// endpoint), since the cache must contain only regular isolated solutions.
StartCache solve_generic(const ParamPolySystem& sys, std::uint64_t seed, const TrackOptions& opts,
                         int workers = 1, Checkpoint* checkpoint = nullptr);

/// Stage two: move every cached solution from lambda_star to the target.
/// Returned solutions are expanded back to the full variable set.
SolutionSet track_to(const ParamPolySystem& sys, const StartCache& cache,
                     std::span<const cplx> lambda, const TrackOptions& opts, int workers = 1,
                     const ParamHomOptions& ph = {});

struct CountRealResult {
  int n_real = 0;
  SolutionSet set;         // full-variable solutions at the target
  RealPartition partition;
};

/// Count the real solutions at a real parameter point.
CountRealResult count_real(const ParamPolySystem& sys, const StartCache& cache,
                           std::span<const double> lambda, double tau_real,
                           const TrackOptions& opts, int workers = 1);

}  // namespace pfhom
