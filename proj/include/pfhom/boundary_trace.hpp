#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pfhom/paramhom.hpp"
#include "pfhom/polysystem.hpp"

namespace pfhom {

/// Fold characterization of the solution space boundary: power flow equations
/// plus a null vector condition on their jacobian,
///   phi(z) = [ P(x, lambda); P_x(x, lambda) v; v'v - 1 ],
/// over z = [x | v | swept lambda]. All entries are polynomials of degree at
/// most two, since the parameters only enter constant terms.
struct AugmentedSystem {
  FixedSystem phi;  // 2*nx + 1 equations over nz = 2*nx + n_swept variables
  int nx = 0;
  std::vector<std::string> swept;
  VarMap x_vars;

  int nz() const { return 2 * nx + static_cast<int>(swept.size()); }
};

AugmentedSystem build_augmented(const ParamPolySystem& sys, const std::vector<std::string>& swept,
                                const std::vector<std::pair<std::string, double>>& fixed);

/// Tangent of the fold curve at z: the right singular vector of the jacobian
/// of phi for its smallest singular value.
VecR fold_tangent(const AugmentedSystem& aug, const VecR& z);

/// Smallest singular value of the power flow jacobian block at z.
double fold_sigma_min(const AugmentedSystem& aug, const VecR& z);

struct InitialPointResult {
  bool found = false;
  VecR z;
  double phi_norm = 0;
  int iters = 0;
};

/// Gauss-Newton (least-norm steps) from a guess onto the fold set.
InitialPointResult find_initial_boundary_point(const AugmentedSystem& aug, const VecR& guess,
                                               double tol = 1e-10, int max_iter = 100);

/// Assemble a fold guess at a swept parameter point: the real solution whose
/// power flow jacobian is closest to singular, paired with the corresponding
/// singular direction.
VecR make_boundary_guess(const ParamPolySystem& sys, const StartCache& cache,
                         const std::vector<std::string>& swept,
                         const std::vector<std::pair<std::string, double>>& fixed,
                         const std::vector<double>& swept_values, double tau_real,
                         const TrackOptions& opts);

struct TracePoint {
  VecR z;
  std::vector<double> lambda;  // swept coordinates of the vertex
  double phi_inf = 0;          // residual of phi at the vertex
  double sigma_min = 0;        // smallest singular value of the power flow jacobian
};

struct TraceResult {
  std::vector<TracePoint> points;
  bool closed = false;
  bool failed = false;
  std::string message;
};

/// Pseudo-arclength continuation of the fold curve (two swept parameters):
/// tangent predictor of length eps, Newton corrector on phi plus the tangent
/// plane through the predicted point, tangent orientation kept consistent.
/// Stops closed when a vertex returns within eps of the start after at least
/// ten steps, or failed/open on step exhaustion.
TraceResult trace_boundary(const AugmentedSystem& aug, const VecR& z0, double eps, int max_steps,
                           int direction = +1);

/// CSV: step,<p1>,<p2>,phi_inf,sigma_min.
void write_trace_csv(const std::string& path, const AugmentedSystem& aug, const TraceResult& tr);

}  // namespace pfhom
