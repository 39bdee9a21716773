#include "pfhom/boundary_trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pfhom/text_format.hpp"

namespace pfhom {

namespace {

using ExpVec = std::vector<std::uint8_t>;

int exp_sum(const ExpVec& e) {
  int s = 0;
  for (auto v : e) s += v;
  return s;
}

struct GrlexCmp {
  bool operator()(const ExpVec& a, const ExpVec& b) const {
    int da = exp_sum(a), db = exp_sum(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

using TermMap = std::map<ExpVec, cplx, GrlexCmp>;

FixedSystem::Poly freeze(const TermMap& m, int degree) {
  FixedSystem::Poly p;
  p.declared_degree = degree;
  for (const auto& [e, c] : m) {
    if (c == cplx(0, 0)) continue;
    p.terms.push_back({e, c});
  }
  return p;
}

MatR real_jacobian(const AugmentedSystem& aug, const VecR& z) {
  VecC zc = z.cast<cplx>();
  MatC j;
  aug.phi.jacobian(zc, j);
  return j.real();
}

VecR real_eval(const AugmentedSystem& aug, const VecR& z) {
  VecC zc = z.cast<cplx>();
  VecC r;
  aug.phi.eval(zc, r);
  return r.real();
}

}  // namespace

AugmentedSystem build_augmented(const ParamPolySystem& sys, const std::vector<std::string>& swept,
                                const std::vector<std::pair<std::string, double>>& fixed) {
  if (swept.empty() || swept.size() > 2)
    throw ValidationError("augmented system: need one or two swept parameters");

  std::map<std::string, int> pindex;
  for (int i = 0; i < sys.n_params(); ++i) pindex[sys.params[i]] = i;

  std::vector<int> swept_idx;
  std::set<std::string> assigned;
  for (const std::string& name : swept) {
    auto it = pindex.find(name);
    if (it == pindex.end())
      throw ValidationError("augmented system: unknown parameter \"" + name + "\"");
    if (!assigned.insert(name).second)
      throw ValidationError("augmented system: parameter \"" + name + "\" listed twice");
    swept_idx.push_back(it->second);
  }
  std::vector<double> fixed_vals(sys.n_params(), 0.0);
  for (const auto& [name, value] : fixed) {
    auto it = pindex.find(name);
    if (it == pindex.end())
      throw ValidationError("augmented system: unknown parameter \"" + name + "\"");
    if (!assigned.insert(name).second)
      throw ValidationError("augmented system: parameter \"" + name + "\" assigned twice");
    fixed_vals[it->second] = value;
  }
  for (int i = 0; i < sys.n_params(); ++i)
    if (!assigned.count(sys.params[i]))
      throw ValidationError("augmented system: parameter \"" + sys.params[i] +
                            "\" is neither swept nor fixed");

  AugmentedSystem aug;
  aug.nx = sys.n_vars();
  aug.swept = swept;
  aug.x_vars = sys.vars;
  const int nx = aug.nx;
  const int ns = static_cast<int>(swept.size());
  const int nz = 2 * nx + ns;

  // Promote each equation to the z variables: fixed parameters fold into the
  // constant part, swept ones become degree-one factors.
  std::vector<TermMap> promoted(sys.equations.size());
  for (std::size_t e = 0; e < sys.equations.size(); ++e) {
    for (const ParamTerm& t : sys.equations[e].terms) {
      ExpVec base(nz, 0);
      std::copy(t.exps.begin(), t.exps.end(), base.begin());
      cplx c0 = t.coeff0;
      for (int p = 0; p < sys.n_params(); ++p) {
        bool is_swept = std::find(swept_idx.begin(), swept_idx.end(), p) != swept_idx.end();
        if (!is_swept) c0 += fixed_vals[p] * t.coeff_per_param[p];
      }
      promoted[e][base] += c0;
      for (int d = 0; d < ns; ++d) {
        const cplx& cp = t.coeff_per_param[swept_idx[d]];
        if (cp == cplx(0, 0)) continue;
        ExpVec ext = base;
        ext[2 * nx + d] += 1;
        promoted[e][ext] += cp;
      }
    }
  }

  std::vector<FixedSystem::Poly> eqs;
  eqs.reserve(2 * nx + 1);
  for (std::size_t e = 0; e < promoted.size(); ++e)
    eqs.push_back(freeze(promoted[e], sys.equations[e].declared_degree));

  // Jacobian rows: sum_j dP_e/dx_j * v_j.
  for (std::size_t e = 0; e < promoted.size(); ++e) {
    TermMap row;
    for (const auto& [exps, coeff] : promoted[e]) {
      for (int j = 0; j < nx; ++j) {
        if (exps[j] == 0) continue;
        ExpVec d = exps;
        d[j] -= 1;
        d[nx + j] += 1;  // times v_j
        row[d] += coeff * static_cast<double>(exps[j]);
      }
    }
    eqs.push_back(freeze(row, 2));
  }

  // Normalization v'v = 1.
  {
    TermMap norm;
    for (int j = 0; j < nx; ++j) {
      ExpVec e(nz, 0);
      e[nx + j] = 2;
      norm[e] += 1.0;
    }
    norm[ExpVec(nz, 0)] += -1.0;
    eqs.push_back(freeze(norm, 2));
  }

  aug.phi = FixedSystem(std::move(eqs), nz);
  return aug;
}

VecR fold_tangent(const AugmentedSystem& aug, const VecR& z) {
  MatR j = real_jacobian(aug, z);
  Eigen::JacobiSVD<MatR> svd(j, Eigen::ComputeFullV);
  return svd.matrixV().col(aug.nz() - 1);
}

double fold_sigma_min(const AugmentedSystem& aug, const VecR& z) {
  MatR j = real_jacobian(aug, z);
  MatR px = j.topLeftCorner(aug.nx, aug.nx);
  Eigen::JacobiSVD<MatR> svd(px);
  return svd.singularValues()(aug.nx - 1);
}

InitialPointResult find_initial_boundary_point(const AugmentedSystem& aug, const VecR& guess,
                                               double tol, int max_iter) {
  InitialPointResult out;
  out.z = guess;
  if (guess.size() != aug.nz())
    throw ValidationError("initial boundary point: guess has wrong dimension");
  for (int it = 0; it <= max_iter; ++it) {
    VecR r = real_eval(aug, out.z);
    out.phi_norm = r.cwiseAbs().maxCoeff();
    out.iters = it;
    if (out.phi_norm <= tol * (1.0 + out.z.cwiseAbs().maxCoeff())) {
      out.found = true;
      return out;
    }
    if (it == max_iter) break;
    MatR j = real_jacobian(aug, out.z);
    // least-norm Gauss-Newton step (the fold set is a curve, not a point)
    Eigen::CompleteOrthogonalDecomposition<MatR> cod(j);
    VecR step = cod.solve(r);
    out.z -= step;
    if (out.z.cwiseAbs().maxCoeff() > 1e8) return out;
  }
  return out;
}

VecR make_boundary_guess(const ParamPolySystem& sys, const StartCache& cache,
                         const std::vector<std::string>& swept,
                         const std::vector<std::pair<std::string, double>>& fixed,
                         const std::vector<double>& swept_values, double tau_real,
                         const TrackOptions& opts) {
  if (swept_values.size() != swept.size())
    throw ValidationError("boundary guess: swept value count mismatch");
  std::map<std::string, int> pindex;
  for (int i = 0; i < sys.n_params(); ++i) pindex[sys.params[i]] = i;
  std::vector<double> lam(sys.n_params(), 0.0);
  for (const auto& [name, value] : fixed) {
    auto it = pindex.find(name);
    if (it == pindex.end())
      throw ValidationError("boundary guess: unknown parameter \"" + name + "\"");
    lam[it->second] = value;
  }
  for (std::size_t d = 0; d < swept.size(); ++d) {
    auto it = pindex.find(swept[d]);
    if (it == pindex.end())
      throw ValidationError("boundary guess: unknown parameter \"" + swept[d] + "\"");
    lam[it->second] = swept_values[d];
  }

  CountRealResult cr = count_real(sys, cache, lam, tau_real, opts, 1);
  if (cr.partition.real_points.empty())
    throw ValidationError("boundary guess: no real solutions at the guess point");

  FixedSystem target = instantiate(sys, std::span<const double>(lam));
  double best = std::numeric_limits<double>::infinity();
  VecR best_x;
  VecR best_v;
  for (const VecR& x : cr.partition.real_points) {
    MatC jc;
    target.jacobian(x.cast<cplx>(), jc);
    MatR j = jc.real();
    Eigen::JacobiSVD<MatR> svd(j, Eigen::ComputeFullV);
    double smin = svd.singularValues()(j.cols() - 1);
    if (smin < best) {
      best = smin;
      best_x = x;
      best_v = svd.matrixV().col(j.cols() - 1);
    }
  }

  const int nx = sys.n_vars();
  VecR z(2 * nx + static_cast<int>(swept.size()));
  z.head(nx) = best_x;
  z.segment(nx, nx) = best_v;
  for (std::size_t d = 0; d < swept.size(); ++d)
    z[2 * nx + static_cast<int>(d)] = swept_values[d];
  return z;
}

namespace {

bool corrector(const AugmentedSystem& aug, const VecR& nu, const VecR& z_pred, VecR& z,
               double tol, int max_iter) {
  const int nz = aug.nz();
  z = z_pred;
  VecR g(nz);
  MatR jg(nz, nz);
  for (int it = 0; it < max_iter; ++it) {
    VecR r = real_eval(aug, z);
    g.head(nz - 1) = r;
    g[nz - 1] = nu.dot(z - z_pred);
    if (g.cwiseAbs().maxCoeff() <= tol * (1.0 + z.cwiseAbs().maxCoeff())) return true;
    jg.topRows(nz - 1) = real_jacobian(aug, z);
    jg.row(nz - 1) = nu.transpose();
    Eigen::PartialPivLU<MatR> lu(jg);
    if (!(lu.rcond() > 1e-14)) return false;
    z -= lu.solve(g);
    if (z.cwiseAbs().maxCoeff() > 1e8) return false;
  }
  VecR r = real_eval(aug, z);
  g.head(nz - 1) = r;
  g[nz - 1] = nu.dot(z - z_pred);
  return g.cwiseAbs().maxCoeff() <= tol * (1.0 + z.cwiseAbs().maxCoeff());
}

}  // namespace

TraceResult trace_boundary(const AugmentedSystem& aug, const VecR& z0, double eps, int max_steps,
                           int direction) {
  TraceResult tr;
  if (aug.swept.size() != 2) {
    tr.failed = true;
    tr.message = "tracing needs exactly two swept parameters";
    return tr;
  }
  if (eps <= 0) {
    tr.failed = true;
    tr.message = "step length must be positive";
    return tr;
  }

  InitialPointResult ip = find_initial_boundary_point(aug, z0);
  if (!ip.found) {
    tr.failed = true;
    tr.message = "could not converge onto the fold set from the start point";
    return tr;
  }
  VecR z = ip.z;
  VecR nu = fold_tangent(aug, z);
  if (direction < 0) nu = -nu;

  auto push_vertex = [&](const VecR& zv) {
    TracePoint p;
    p.z = zv;
    for (std::size_t d = 0; d < aug.swept.size(); ++d)
      p.lambda.push_back(zv[2 * aug.nx + static_cast<int>(d)]);
    p.phi_inf = real_eval(aug, zv).cwiseAbs().maxCoeff();
    p.sigma_min = fold_sigma_min(aug, zv);
    tr.points.push_back(std::move(p));
  };
  push_vertex(z);

  const double tol = 1e-10;
  for (int step = 0; step < max_steps; ++step) {
    double h = eps;
    VecR z_new;
    bool ok = false;
    while (h >= eps / 1024.0) {
      VecR z_pred = z + h * nu;
      if (corrector(aug, nu, z_pred, z_new, tol, 12)) {
        ok = true;
        break;
      }
      h *= 0.5;
    }
    if (!ok) {
      tr.failed = true;
      tr.message = "corrector failed along the fold curve";
      return tr;
    }
    VecR nu_new = fold_tangent(aug, z_new);
    if (nu_new.dot(nu) < 0) nu_new = -nu_new;
    z = z_new;
    nu = nu_new;
    push_vertex(z);
    if (static_cast<int>(tr.points.size()) - 1 >= 10 &&
        (z - tr.points.front().z).norm() < eps) {
      tr.closed = true;
      return tr;
    }
  }
  tr.message = "step budget exhausted before closure";
  return tr;
}

void write_trace_csv(const std::string& path, const AugmentedSystem& aug, const TraceResult& tr) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "step";
  for (const std::string& s : aug.swept) out << "," << s;
  out << ",phi_inf,sigma_min\n";
  const int nx = aug.nx;
  for (std::size_t i = 0; i < tr.points.size(); ++i) {
    const TracePoint& p = tr.points[i];
    out << i;
    for (std::size_t d = 0; d < aug.swept.size(); ++d)
      out << "," << fmt_double(p.z[2 * nx + static_cast<int>(d)]);
    out << "," << fmt_double(p.phi_inf) << "," << fmt_double(p.sigma_min) << "\n";
  }
}

}  // namespace pfhom
