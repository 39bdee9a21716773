#include "pfhom/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pfhom/parallel.hpp"
#include "pfhom/text_format.hpp"

namespace pfhom {

namespace {

/// Assignment of every system parameter given swept coordinates.
struct LambdaMapper {
  std::vector<double> base;          // fixed values, swept slots overwritten
  std::vector<int> swept_slots;      // parameter index per swept dimension

  std::vector<double> at(const std::vector<double>& swept_coords) const {
    std::vector<double> lam = base;
    for (std::size_t d = 0; d < swept_slots.size(); ++d)
      lam[swept_slots[d]] = swept_coords[d];
    return lam;
  }
};

LambdaMapper make_mapper(const ParamPolySystem& sys, const ParameterGrid& grid) {
  if (grid.swept.empty() || grid.swept.size() > 2)
    throw ValidationError("sweep: need one or two swept parameters");
  std::map<std::string, int> index;
  for (int i = 0; i < sys.n_params(); ++i) index[sys.params[i]] = i;

  LambdaMapper m;
  m.base.assign(sys.n_params(), 0.0);
  std::set<std::string> assigned;
  for (const GridDim& d : grid.swept) {
    auto it = index.find(d.name);
    if (it == index.end())
      throw ValidationError("sweep: unknown parameter \"" + d.name + "\"");
    if (!assigned.insert(d.name).second)
      throw ValidationError("sweep: parameter \"" + d.name + "\" swept twice");
    if (d.steps < 1) throw ValidationError("sweep: \"" + d.name + "\" needs at least one step");
    m.swept_slots.push_back(it->second);
  }
  for (const auto& [name, value] : grid.fixed) {
    auto it = index.find(name);
    if (it == index.end())
      throw ValidationError("sweep: unknown parameter \"" + name + "\"");
    if (!assigned.insert(name).second)
      throw ValidationError("sweep: parameter \"" + name + "\" assigned twice");
    m.base[it->second] = value;
  }
  for (int i = 0; i < sys.n_params(); ++i) {
    bool is_swept = std::find(m.swept_slots.begin(), m.swept_slots.end(), i) !=
                    m.swept_slots.end();
    if (!is_swept && !assigned.count(sys.params[i]))
      throw ValidationError("sweep: parameter \"" + sys.params[i] +
                            "\" is neither swept nor fixed");
  }
  return m;
}

}  // namespace

double ParameterGrid::value(const GridDim& d, int i) {
  if (d.steps <= 1) return d.min;
  return d.min + (d.max - d.min) * static_cast<double>(i) / static_cast<double>(d.steps - 1);
}

std::vector<double> CountGrid::point(int x, int y) const {
  std::vector<double> p;
  p.push_back(ParameterGrid::value(grid.swept[0], x));
  if (grid.swept.size() > 1) p.push_back(ParameterGrid::value(grid.swept[1], y));
  return p;
}

CountGrid run_sweep(const ParamPolySystem& sys, const StartCache& cache,
                    const ParameterGrid& grid, int workers, double tau_real,
                    const TrackOptions& opts) {
  LambdaMapper mapper = make_mapper(sys, grid);

  CountGrid cg;
  cg.grid = grid;
  cg.nx = grid.swept[0].steps;
  cg.ny = grid.swept.size() > 1 ? grid.swept[1].steps : 1;
  const std::uint64_t n = static_cast<std::uint64_t>(cg.nx) * cg.ny;
  cg.counts.assign(n, 0);
  cg.diverged.assign(n, 0);
  cg.failed.assign(n, 0);

  // One grid point per task; the paths inside a point run serially.
  parallel_for(n, workers, [&](std::uint64_t cell) {
    int x = static_cast<int>(cell % cg.nx);
    int y = static_cast<int>(cell / cg.nx);
    std::vector<double> lam = mapper.at(cg.point(x, y));
    CountRealResult r = count_real(sys, cache, lam, tau_real, opts, 1);
    cg.counts[cell] = r.n_real;
    cg.diverged[cell] = static_cast<int>(r.set.n_diverged);
    cg.failed[cell] = static_cast<int>(r.set.n_failed);
  });

  for (int y = 0; y < cg.ny; ++y) {
    for (int x = 0; x < cg.nx; ++x) {
      int a = cg.flat(x, y);
      if (x + 1 < cg.nx && cg.counts[a] != cg.counts[cg.flat(x + 1, y)])
        cg.boundary_edges.emplace_back(a, cg.flat(x + 1, y));
      if (y + 1 < cg.ny && cg.counts[a] != cg.counts[cg.flat(x, y + 1)])
        cg.boundary_edges.emplace_back(a, cg.flat(x, y + 1));
    }
  }
  std::sort(cg.boundary_edges.begin(), cg.boundary_edges.end());
  return cg;
}

EdgeRefinement refine_edge(const ParamPolySystem& sys, const StartCache& cache,
                           const ParameterGrid& grid, const std::vector<double>& pt_a,
                           const std::vector<double>& pt_b, double tol, double tau_real,
                           const TrackOptions& opts, int workers) {
  LambdaMapper mapper = make_mapper(sys, grid);
  if (pt_a.size() != grid.swept.size() || pt_b.size() != grid.swept.size())
    throw ValidationError("refine_edge: endpoint dimension mismatch");

  auto count_at = [&](const std::vector<double>& p) {
    return count_real(sys, cache, mapper.at(p), tau_real, opts, workers).n_real;
  };
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  auto midpoint = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
    return m;
  };

  EdgeRefinement out;
  std::vector<double> a = pt_a, b = pt_b;
  out.count_a = count_at(a);
  out.count_b = count_at(b);
  out.probes = 2;
  if (out.count_a == out.count_b)
    throw ValidationError("refine_edge: endpoints have the same real count");

  while (dist(a, b) > tol) {
    std::vector<double> m = midpoint(a, b);
    int cm = count_at(m);
    out.probes += 1;
    if (cm == out.count_a) {
      a = m;
    } else if (cm == out.count_b) {
      b = m;
    } else {
      // a third count inside the bracket: keep the half adjoining a
      out.anomaly = true;
      b = m;
      out.count_b = cm;
    }
  }
  out.point = midpoint(a, b);
  return out;
}

void emit_maps(const CountGrid& cg, const std::vector<EdgeRefinement>& refinements,
               const std::string& base_path) {
  const bool two_d = cg.grid.swept.size() > 1;
  const std::string& p1 = cg.grid.swept[0].name;
  const std::string p2 = two_d ? cg.grid.swept[1].name : "";

  {
    std::ofstream out(base_path + ".counts.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + base_path + ".counts.csv");
    if (two_d)
      out << "i,j," << p1 << "," << p2 << ",count,n_diverged,n_failed\n";
    else
      out << "i," << p1 << ",count,n_diverged,n_failed\n";
    for (int y = 0; y < cg.ny; ++y) {
      for (int x = 0; x < cg.nx; ++x) {
        int c = cg.flat(x, y);
        std::vector<double> pt = cg.point(x, y);
        out << x;
        if (two_d) out << "," << y;
        out << "," << fmt_double(pt[0]);
        if (two_d) out << "," << fmt_double(pt[1]);
        out << "," << cg.counts[c] << "," << cg.diverged[c] << "," << cg.failed[c] << "\n";
      }
    }
  }

  {
    std::ofstream out(base_path + ".counts.pgm", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + base_path + ".counts.pgm");
    int maxval = 1;
    for (int c : cg.counts) maxval = std::max(maxval, c);
    out << "P2\n" << cg.nx << " " << cg.ny << "\n" << maxval << "\n";
    for (int y = 0; y < cg.ny; ++y) {
      for (int x = 0; x < cg.nx; ++x) {
        out << cg.counts[cg.flat(x, y)];
        out << (x + 1 == cg.nx ? "\n" : " ");
      }
    }
  }

  {
    std::ofstream out(base_path + ".boundary.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + base_path + ".boundary.csv");
    if (two_d)
      out << "ia,ja,ib,jb," << p1 << "," << p2 << ",count_a,count_b,anomaly\n";
    else
      out << "ia,ib," << p1 << ",count_a,count_b,anomaly\n";
    for (std::size_t e = 0; e < cg.boundary_edges.size(); ++e) {
      auto [a, b] = cg.boundary_edges[e];
      int xa = a % cg.nx, ya = a / cg.nx, xb = b % cg.nx, yb = b / cg.nx;
      out << xa;
      if (two_d) out << "," << ya;
      out << "," << xb;
      if (two_d) out << "," << yb;
      if (e < refinements.size() && !refinements[e].point.empty()) {
        const EdgeRefinement& r = refinements[e];
        out << "," << fmt_double(r.point[0]);
        if (two_d) out << "," << fmt_double(r.point.size() > 1 ? r.point[1] : 0.0);
        out << "," << r.count_a << "," << r.count_b << "," << (r.anomaly ? 1 : 0);
      } else {
        // unrefined edge: midpoint of the two grid points, counts from the grid
        std::vector<double> pa = cg.point(xa, ya), pb = cg.point(xb, yb);
        out << "," << fmt_double(0.5 * (pa[0] + pb[0]));
        if (two_d) out << "," << fmt_double(0.5 * (pa[1] + pb[1]));
        out << "," << cg.counts[a] << "," << cg.counts[b] << ",";
      }
      out << "\n";
    }
  }
}

}  // namespace pfhom
