#pragma once

#include <cstdint>
#include <vector>

#include "pfhom/common.hpp"
#include "pfhom/polysystem.hpp"

namespace pfhom {

struct TrackOptions {
  double dt_init = 0.05;
  double dt_min = 1e-7;
  double dt_max = 0.1;
  double newton_tol = 1e-10;   // corrector residual, relative to 1 + |x|
  // Per-step corrector iterations. Kept small on purpose: a corrector that
  // walks far from the predicted point can hop onto a neighbouring path, so
  // steps that need more work than this are rejected and retried shorter.
  // The start snap, the endgame jump and the final polish use their own,
  // more generous budgets.
  int newton_max_iter = 3;
  double divergence_norm = 1e8;
  double endgame_t = 0.99;     // past this, steps are capped at 10*dt_min
  double refine_tol = 1e-12;   // final endpoint polish, relative to 1 + |x|
  double dedup_tol = 1e-8;     // relative inf-norm distance merging endpoints
  // When entering the endgame zone, try one direct Newton solve at t=1 before
  // falling back to capped stepping.
  bool endgame_jump = true;
};

/// Converged endpoints normally come from tracking all the way to s = 1; a
/// path that stalls inside the endgame zone may still converge through a
/// rescue polish onto a nearby target root, in which case it is marked
/// suspect_singular and t_end records where stepping stalled.
enum class PathStatus { Converged, Diverged, StepFailure };

struct PathResult {
  PathStatus status = PathStatus::StepFailure;
  VecC endpoint;               // meaningful only when converged
  double final_residual = 0;   // inf-norm of the target system at the endpoint
  int steps = 0;               // accepted predictor-corrector steps
  double t_end = 0;            // continuation time reached, in [0, 1]
  bool suspect_singular = false;
  double condition = 0;        // jacobian condition estimate at the endpoint
};

/// Continuation family H(x, s) with s running 0 -> 1 towards the target.
class Homotopy {
 public:
  virtual ~Homotopy() = default;
  virtual int dim() const = 0;
  virtual void eval(const VecC& x, double s, VecC& out) const = 0;
  virtual void jacobian(const VecC& x, double s, MatC& out) const = 0;
  /// dH/ds at (x, s).
  virtual void dt(const VecC& x, double s, VecC& out) const = 0;
  /// Residual of the s=1 target (used for the final polish).
  virtual void target_eval(const VecC& x, VecC& out) const = 0;
  virtual void target_jacobian(const VecC& x, MatC& out) const = 0;
};

/// Track one path from a root of H(., 0) to a root of H(., 1).
/// Euler predictor on the Davidenko system, Newton corrector at fixed s,
/// adaptive step halving/growing, divergence and singularity checks.
PathResult track_path(const Homotopy& h, const VecC& x0, const TrackOptions& opts);

/// Start system x_i^{d_i} = b_i whose roots are enumerable by index.
struct TotalDegreeStart {
  std::vector<int> degrees;
  std::vector<cplx> b;   // one random circle point per variable
  cplx eta;              // random coefficient multiplying the start system

  std::uint64_t n_paths() const;
  /// Mixed-radix decode: root number idx of the start system.
  VecC start_point(std::uint64_t idx) const;
};

/// Draw order from the seed: b_0 ... b_{n-1}, then eta; all on the unit
/// circle at least 0.01 rad away from the real axis.
TotalDegreeStart make_total_degree_start(const std::vector<int>& degrees, std::uint64_t seed);

class Rng;
/// Same draws, continuing an existing stream.
TotalDegreeStart make_total_degree_start(const std::vector<int>& degrees, Rng& rng);

/// H(x, s) = eta * (1-s) * (x^d - b) + s * P(x).
class TotalDegreeHomotopy : public Homotopy {
 public:
  TotalDegreeHomotopy(const FixedSystem& target, TotalDegreeStart start);

  int dim() const override { return target_->n_vars(); }
  void eval(const VecC& x, double s, VecC& out) const override;
  void jacobian(const VecC& x, double s, MatC& out) const override;
  void dt(const VecC& x, double s, VecC& out) const override;
  void target_eval(const VecC& x, VecC& out) const override;
  void target_jacobian(const VecC& x, MatC& out) const override;

  const TotalDegreeStart& start() const { return start_; }

 private:
  const FixedSystem* target_;
  TotalDegreeStart start_;
};

struct SolutionEntry {
  VecC point;
  double residual = 0;
  bool suspect_singular = false;
  double condition = 0;
  std::vector<int> path_indices;  // converged paths that landed here
};

struct SolutionSet {
  std::vector<SolutionEntry> solutions;
  std::uint64_t n_paths = 0;
  std::uint64_t n_converged = 0;
  std::uint64_t n_diverged = 0;
  std::uint64_t n_failed = 0;
};

/// Relative inf-norm closeness: |a-b| <= tol * max(1, |a|, |b|).
bool points_close(const VecC& a, const VecC& b, double tol);

/// Merge one converged endpoint into the set (first occurrence wins).
void merge_endpoint(SolutionSet& set, const PathResult& r, int path_index, double dedup_tol);

/// Newton polish on a fixed system. Convergence when the residual inf-norm
/// drops below tol * (1 + |x|).
struct RefineResult {
  VecC x;
  bool converged = false;
  bool diverged = false;
  int iters = 0;
  double residual = 0;
  double condition = 0;
  bool suspect_singular = false;
};

RefineResult refine(const FixedSystem& sys, const VecC& x0, double tol, int max_iter = 30,
                    double divergence_norm = 1e8);

/// Track every root of the total-degree start system to the target.
SolutionSet solve_total_degree(const FixedSystem& target, std::uint64_t seed,
                               const TrackOptions& opts, int workers = 1);

/// Split solutions into numerically real and truly complex ones. Real
/// candidates (max imaginary part below tau_real, strictly) are re-polished
/// on the target after zeroing their imaginary parts.
struct RealPartition {
  std::vector<VecR> real_points;
  std::vector<int> real_indices;     // into set.solutions
  std::vector<int> nonreal_indices;
};

RealPartition classify_real(const SolutionSet& set, double tau_real, const FixedSystem& target,
                            double refine_tol = 1e-12);

}  // namespace pfhom
