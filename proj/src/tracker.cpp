#include "pfhom/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "pfhom/parallel.hpp"
#include "pfhom/rng.hpp"

namespace pfhom {

namespace {

constexpr double kRcondFloor = 1e-12;  // condition above 1e12 fails the step
constexpr int kSnapIters = 10;         // start snap and endgame jump budgets

struct NewtonOutcome {
  bool converged = false;
  bool diverged = false;
  int iters = 0;
  double residual = 0;
  double rcond = 1;
};

/// Newton iteration on H(., s) at fixed s.
NewtonOutcome newton_at(const Homotopy& h, VecC& x, double s, double tol, int max_iter,
                        double divergence_norm) {
  NewtonOutcome out;
  VecC r;
  MatC j;
  for (int it = 0; it < max_iter; ++it) {
    h.eval(x, s, r);
    out.residual = inf_norm(r);
    if (out.residual <= tol * (1.0 + inf_norm(x))) {
      out.converged = true;
      out.iters = it;
      return out;
    }
    h.jacobian(x, s, j);
    Eigen::PartialPivLU<MatC> lu(j);
    out.rcond = lu.rcond();
    if (!(out.rcond > kRcondFloor)) {
      out.iters = it;
      return out;  // numerically singular: corrector failure
    }
    x -= lu.solve(r);
    if (inf_norm(x) > divergence_norm) {
      out.diverged = true;
      out.iters = it + 1;
      return out;
    }
  }
  h.eval(x, s, r);
  out.residual = inf_norm(r);
  out.converged = out.residual <= tol * (1.0 + inf_norm(x));
  out.iters = max_iter;
  return out;
}

/// Final polish against the s=1 target; also estimates the endpoint condition.
RefineResult polish_target(const Homotopy& h, const VecC& x0, double tol, int max_iter,
                           double divergence_norm) {
  RefineResult out;
  out.x = x0;
  VecC r;
  MatC j;
  for (int it = 0; it <= max_iter; ++it) {
    h.target_eval(out.x, r);
    out.residual = inf_norm(r);
    h.target_jacobian(out.x, j);
    Eigen::PartialPivLU<MatC> lu(j);
    double rc = lu.rcond();
    out.condition = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (out.residual <= tol * (1.0 + inf_norm(out.x))) {
      out.converged = true;
      out.iters = it;
      out.suspect_singular = !(rc > kRcondFloor) || it > 12;
      return out;
    }
    if (it == max_iter) break;
    if (!(rc > kRcondFloor)) {
      out.suspect_singular = true;
      return out;  // cannot polish further
    }
    out.x -= lu.solve(r);
    if (inf_norm(out.x) > divergence_norm) {
      out.diverged = true;
      out.iters = it + 1;
      return out;
    }
  }
  out.iters = max_iter;
  return out;
}

}  // namespace

PathResult track_path(const Homotopy& h, const VecC& x0, const TrackOptions& opts) {
  PathResult res;
  VecC x = x0;
  double s = 0.0;
  double dt = opts.dt_init;
  int consecutive_ok = 0;
  bool jump_tried = false;

  // The start point must already solve H(., 0); snap it on with one corrector.
  {
    NewtonOutcome on = newton_at(h, x, 0.0, opts.newton_tol, kSnapIters, opts.divergence_norm);
    if (on.diverged) {
      res.status = PathStatus::Diverged;
      res.t_end = 0.0;
      return res;
    }
    if (!on.converged) {
      res.status = PathStatus::StepFailure;
      res.t_end = 0.0;
      return res;
    }
  }

  VecC ht, r;
  MatC j;
  while (s < 1.0) {
    if (inf_norm(x) > opts.divergence_norm) {
      res.status = PathStatus::Diverged;
      res.t_end = s;
      return res;
    }
    if (s >= opts.endgame_t && opts.endgame_jump && !jump_tried) {
      jump_tried = true;
      VecC xj = x;
      NewtonOutcome on = newton_at(h, xj, 1.0, opts.newton_tol, kSnapIters, opts.divergence_norm);
      // Only trust the jump when it stays in the neighbourhood of the path;
      // a far landing means Newton hopped to some other root.
      if (on.converged && inf_norm(xj - x) <= 0.05 * (1.0 + inf_norm(x))) {
        x = xj;
        s = 1.0;
        break;
      }
    }

    double dt_eff = std::min(dt, 1.0 - s);
    if (s >= opts.endgame_t) dt_eff = std::min(dt_eff, 10.0 * opts.dt_min);

    bool ok = false;
    VecC x_try;
    // Euler predictor on H_x dx/ds = -H_s.
    h.jacobian(x, s, j);
    Eigen::PartialPivLU<MatC> lu(j);
    if (lu.rcond() > kRcondFloor) {
      h.dt(x, s, ht);
      VecC dx = lu.solve(-ht);
      x_try = x + dt_eff * dx;
      if (inf_norm(x_try) > opts.divergence_norm) {
        res.status = PathStatus::Diverged;
        res.t_end = s;
        return res;
      }
      NewtonOutcome on = newton_at(h, x_try, s + dt_eff, opts.newton_tol, opts.newton_max_iter,
                                   opts.divergence_norm);
      if (on.diverged) {
        res.status = PathStatus::Diverged;
        res.t_end = s;
        return res;
      }
      ok = on.converged;
    }

    if (ok) {
      x = x_try;
      s += dt_eff;
      res.steps += 1;
      if (++consecutive_ok >= 3) {
        dt = std::min(dt * 1.5, opts.dt_max);
        consecutive_ok = 0;
      }
    } else {
      consecutive_ok = 0;
      dt *= 0.5;
      if (dt < opts.dt_min) {
        // Stalling inside the endgame zone is the signature of a singular
        // endpoint (the path velocity blows up as s -> 1). Try the target
        // polish from the stall point; accept only a genuine nearby root and
        // flag it, since the corrector could not follow the path all the way.
        if (s >= opts.endgame_t) {
          RefineResult pol = polish_target(h, x, opts.refine_tol, 30, opts.divergence_norm);
          if (pol.converged && inf_norm(pol.x - x) <= 0.05 * (1.0 + inf_norm(x))) {
            res.status = PathStatus::Converged;
            res.endpoint = pol.x;
            res.final_residual = pol.residual;
            res.suspect_singular = true;
            res.condition = pol.condition;
            res.t_end = s;
            return res;
          }
        }
        res.status = PathStatus::StepFailure;
        res.t_end = s;
        return res;
      }
    }
  }

  RefineResult pol = polish_target(h, x, opts.refine_tol, 30, opts.divergence_norm);
  res.t_end = 1.0;
  if (pol.diverged) {
    res.status = PathStatus::Diverged;
    return res;
  }
  if (!pol.converged) {
    res.status = PathStatus::StepFailure;
    res.final_residual = pol.residual;
    return res;
  }
  res.status = PathStatus::Converged;
  res.endpoint = pol.x;
  res.final_residual = pol.residual;
  res.suspect_singular = pol.suspect_singular;
  res.condition = pol.condition;
  return res;
}

std::uint64_t TotalDegreeStart::n_paths() const {
  std::uint64_t n = 1;
  for (int d : degrees) n *= static_cast<std::uint64_t>(d);
  return n;
}

VecC TotalDegreeStart::start_point(std::uint64_t idx) const {
  const int nv = static_cast<int>(degrees.size());
  VecC x(nv);
  for (int i = 0; i < nv; ++i) {
    const int d = degrees[i];
    const std::uint64_t r = idx % static_cast<std::uint64_t>(d);
    idx /= static_cast<std::uint64_t>(d);
    // principal d-th root of b_i times the r-th root of unity
    const double mag = std::pow(std::abs(b[i]), 1.0 / d);
    const double ang = (std::arg(b[i]) + 2.0 * std::numbers::pi * static_cast<double>(r)) / d;
    x[i] = cplx(mag * std::cos(ang), mag * std::sin(ang));
  }
  return x;
}

TotalDegreeStart make_total_degree_start(const std::vector<int>& degrees, Rng& rng) {
  for (int d : degrees)
    if (d < 1) throw ValidationError("total degree start: degrees must be at least 1");
  TotalDegreeStart st;
  st.degrees = degrees;
  st.b.reserve(degrees.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) st.b.push_back(rng.unit_circle_off_real(0.01));
  st.eta = rng.unit_circle_off_real(0.01);
  return st;
}

TotalDegreeStart make_total_degree_start(const std::vector<int>& degrees, std::uint64_t seed) {
  Rng rng(seed);
  return make_total_degree_start(degrees, rng);
}

TotalDegreeHomotopy::TotalDegreeHomotopy(const FixedSystem& target, TotalDegreeStart start)
    : target_(&target), start_(std::move(start)) {
  if (target.n_vars() != static_cast<int>(start_.degrees.size()) ||
      target.n_eqs() != static_cast<int>(start_.degrees.size()))
    throw ValidationError("total degree homotopy: start system size mismatch");
}

void TotalDegreeHomotopy::eval(const VecC& x, double s, VecC& out) const {
  target_->eval(x, out);
  const cplx w = start_.eta * (1.0 - s);
  for (int i = 0; i < dim(); ++i) {
    cplx q = std::pow(x[i], start_.degrees[i]) - start_.b[i];
    out[i] = w * q + s * out[i];
  }
}

void TotalDegreeHomotopy::jacobian(const VecC& x, double s, MatC& out) const {
  target_->jacobian(x, out);
  out *= s;
  const cplx w = start_.eta * (1.0 - s);
  for (int i = 0; i < dim(); ++i) {
    const int d = start_.degrees[i];
    out(i, i) += w * static_cast<double>(d) * std::pow(x[i], d - 1);
  }
}

void TotalDegreeHomotopy::dt(const VecC& x, double s, VecC& out) const {
  (void)s;
  target_->eval(x, out);
  for (int i = 0; i < dim(); ++i) {
    cplx q = std::pow(x[i], start_.degrees[i]) - start_.b[i];
    out[i] -= start_.eta * q;
  }
}

void TotalDegreeHomotopy::target_eval(const VecC& x, VecC& out) const { target_->eval(x, out); }

void TotalDegreeHomotopy::target_jacobian(const VecC& x, MatC& out) const {
  target_->jacobian(x, out);
}

bool points_close(const VecC& a, const VecC& b, double tol) {
  double scale = std::max(1.0, std::max(inf_norm(a), inf_norm(b)));
  return inf_norm(a - b) <= tol * scale;
}

void merge_endpoint(SolutionSet& set, const PathResult& r, int path_index, double dedup_tol) {
  for (SolutionEntry& s : set.solutions) {
    if (points_close(s.point, r.endpoint, dedup_tol)) {
      s.path_indices.push_back(path_index);
      s.suspect_singular = s.suspect_singular || r.suspect_singular || s.path_indices.size() > 1;
      return;
    }
  }
  SolutionEntry e;
  e.point = r.endpoint;
  e.residual = r.final_residual;
  e.suspect_singular = r.suspect_singular;
  e.condition = r.condition;
  e.path_indices = {path_index};
  set.solutions.push_back(std::move(e));
}

RefineResult refine(const FixedSystem& sys, const VecC& x0, double tol, int max_iter,
                    double divergence_norm) {
  RefineResult out;
  out.x = x0;
  VecC r;
  MatC j;
  for (int it = 0; it <= max_iter; ++it) {
    sys.eval(out.x, r);
    out.residual = inf_norm(r);
    sys.jacobian(out.x, j);
    Eigen::PartialPivLU<MatC> lu(j);
    double rc = lu.rcond();
    out.condition = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (out.residual <= tol * (1.0 + inf_norm(out.x))) {
      out.converged = true;
      out.iters = it;
      out.suspect_singular = !(rc > kRcondFloor) || it > 12;
      return out;
    }
    if (it == max_iter) break;
    if (!(rc > kRcondFloor)) {
      out.suspect_singular = true;
      return out;
    }
    out.x -= lu.solve(r);
    if (inf_norm(out.x) > divergence_norm) {
      out.diverged = true;
      out.iters = it + 1;
      return out;
    }
  }
  out.iters = max_iter;
  return out;
}

SolutionSet solve_total_degree(const FixedSystem& target, std::uint64_t seed,
                               const TrackOptions& opts, int workers) {
  TotalDegreeStart start = make_total_degree_start(target.degrees(), seed);
  TotalDegreeHomotopy hom(target, start);
  const std::uint64_t n = start.n_paths();

  std::vector<PathResult> results(n);
  parallel_for(n, workers, [&](std::uint64_t i) {
    results[i] = track_path(hom, start.start_point(i), opts);
  });

  SolutionSet set;
  set.n_paths = n;
  for (std::uint64_t i = 0; i < n; ++i) {
    const PathResult& r = results[i];
    switch (r.status) {
      case PathStatus::Converged:
        set.n_converged += 1;
        merge_endpoint(set, r, static_cast<int>(i), opts.dedup_tol);
        break;
      case PathStatus::Diverged: set.n_diverged += 1; break;
      case PathStatus::StepFailure: set.n_failed += 1; break;
    }
  }
  return set;
}

RealPartition classify_real(const SolutionSet& set, double tau_real, const FixedSystem& target,
                            double refine_tol) {
  RealPartition out;
  for (std::size_t i = 0; i < set.solutions.size(); ++i) {
    const VecC& p = set.solutions[i].point;
    double max_im = 0;
    for (Eigen::Index k = 0; k < p.size(); ++k) max_im = std::max(max_im, std::abs(p[k].imag()));
    if (max_im < tau_real) {
      VecC snapped = p.real().cast<cplx>();
      RefineResult rr = refine(target, snapped, refine_tol);
      out.real_points.push_back(rr.converged ? VecR(rr.x.real()) : VecR(p.real()));
      out.real_indices.push_back(static_cast<int>(i));
    } else {
      out.nonreal_indices.push_back(static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace pfhom
