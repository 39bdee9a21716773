#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pfhom/paramhom.hpp"

namespace pfhom {

struct GridDim {
  std::string name;
  double min = 0, max = 0;
  int steps = 0;  // grid points, endpoints included
};

/// One or two swept parameters on a regular grid; every other system
/// parameter held at a fixed value.
struct ParameterGrid {
  std::vector<GridDim> swept;
  std::vector<std::pair<std::string, double>> fixed;

  static double value(const GridDim& d, int i);
};

/// Real-solution counts over the grid. Cells are indexed x + y * nx with x
/// along the first swept parameter; ny == 1 for one-dimensional sweeps.
struct CountGrid {
  ParameterGrid grid;
  int nx = 0, ny = 1;
  std::vector<int> counts;
  std::vector<int> diverged;
  std::vector<int> failed;
  /// Adjacent cell pairs (4-neighborhood) whose counts differ, as flat
  /// indices with a < b, ordered by (a, b).
  std::vector<std::pair<int, int>> boundary_edges;

  int flat(int x, int y) const { return x + y * nx; }
  std::vector<double> point(int x, int y) const;  // swept coordinates
};

CountGrid run_sweep(const ParamPolySystem& sys, const StartCache& cache,
                    const ParameterGrid& grid, int workers, double tau_real,
                    const TrackOptions& opts);

/// Bisect along the segment between two swept-space points with differing
/// real counts until the bracket is shorter than tol. A third count showing
/// up inside the bracket is flagged as an anomaly (finer structure between
/// the grid points).
struct EdgeRefinement {
  std::vector<double> point;  // midpoint of the final bracket
  int count_a = 0, count_b = 0;
  bool anomaly = false;
  int probes = 0;
};

EdgeRefinement refine_edge(const ParamPolySystem& sys, const StartCache& cache,
                           const ParameterGrid& grid, const std::vector<double>& pt_a,
                           const std::vector<double>& pt_b, double tol, double tau_real,
                           const TrackOptions& opts, int workers = 1);

/// Write {base}.counts.csv, {base}.counts.pgm and {base}.boundary.csv.
/// The portable graymap stores raw counts, one pixel per grid point, row 0 at
/// the minimum of the second swept parameter. refinements may be empty.
void emit_maps(const CountGrid& cg, const std::vector<EdgeRefinement>& refinements,
               const std::string& base_path);

}  // namespace pfhom
