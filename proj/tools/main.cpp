#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pfhom/boundary_trace.hpp"
#include "pfhom/network.hpp"
#include "pfhom/paramhom.hpp"
#include "pfhom/polysystem.hpp"
#include "pfhom/sweep.hpp"
#include "pfhom/text_format.hpp"
#include "pfhom/tracker.hpp"

namespace {

using namespace pfhom;

/// Failure of the numerics themselves (no convergence, no boundary, ...),
/// as opposed to bad input files or bad usage.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string network;
  std::uint64_t seed = 1;
  int workers = 1;
  double tau_real = 1e-6;
  TrackOptions track;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_track = true) {
  cmd->add_option("--network", a.network, "network JSON file")->required();
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--workers", a.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--tau-real", a.tau_real, "imaginary part threshold for real solutions");
  if (with_track) {
    cmd->add_option("--dt-init", a.track.dt_init, "initial continuation step");
    cmd->add_option("--dt-min", a.track.dt_min, "minimum continuation step");
    cmd->add_option("--dt-max", a.track.dt_max, "maximum continuation step");
    cmd->add_option("--newton-tol", a.track.newton_tol, "corrector tolerance");
    cmd->add_option("--divergence-norm", a.track.divergence_norm,
                    "norm beyond which a path counts as divergent");
    cmd->add_option("--endgame-t", a.track.endgame_t, "start of the capped-step end zone");
  }
}

std::pair<std::string, double> parse_fix(const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw CLI::ValidationError("--fix", "expected NAME=VALUE, got \"" + s + "\"");
  try {
    std::size_t used = 0;
    double v = std::stod(s.substr(eq + 1), &used);
    if (used != s.size() - eq - 1) throw std::invalid_argument("trailing characters");
    return {s.substr(0, eq), v};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--fix", "bad value in \"" + s + "\"");
  }
}

GridDim parse_sweep_spec(const std::string& s) {
  // NAME=MIN:MAX:STEPS
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw CLI::ValidationError("--sweep", "expected NAME=MIN:MAX:STEPS, got \"" + s + "\"");
  GridDim d;
  d.name = s.substr(0, eq);
  std::string rest = s.substr(eq + 1);
  auto c1 = rest.find(':');
  auto c2 = rest.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw CLI::ValidationError("--sweep", "expected NAME=MIN:MAX:STEPS, got \"" + s + "\"");
  try {
    d.min = std::stod(rest.substr(0, c1));
    d.max = std::stod(rest.substr(c1 + 1, c2 - c1 - 1));
    d.steps = std::stoi(rest.substr(c2 + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--sweep", "bad numbers in \"" + s + "\"");
  }
  if (d.steps < 1) throw CLI::ValidationError("--sweep", "STEPS must be at least 1");
  return d;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    out.push_back(std::stod(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    out.push_back(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<double> lambda_from_fixes(const ParamPolySystem& sys,
                                      const std::vector<std::pair<std::string, double>>& fixes) {
  std::vector<double> lam(sys.n_params(), 0.0);
  std::vector<bool> set(sys.n_params(), false);
  for (const auto& [name, value] : fixes) {
    bool hit = false;
    for (int i = 0; i < sys.n_params(); ++i) {
      if (sys.params[i] == name) {
        lam[i] = value;
        set[i] = true;
        hit = true;
      }
    }
    if (!hit) throw ValidationError("unknown parameter \"" + name + "\"");
  }
  for (int i = 0; i < sys.n_params(); ++i)
    if (!set[i]) throw ValidationError("parameter \"" + sys.params[i] + "\" needs --fix " +
                                       sys.params[i] + "=VALUE");
  return lam;
}

StartCache obtain_cache(const ParamPolySystem& sys, const std::string& cache_path,
                        const CommonArgs& a) {
  if (!cache_path.empty()) {
    StartCache c = load_cache(cache_path);
    if (c.system_hash != sys.content_hash())
      throw ValidationError("cache " + cache_path + " was built for a different system");
    return c;
  }
  return solve_generic(sys, a.seed, a.track, a.workers);
}

int cmd_bounds(const CommonArgs& a) {
  Network net = load_network(a.network);
  ParamPolySystem sys = polynomialize(net);
  BoundsReport br = bounds(sys);
  std::cout << "buses: " << sys.n_buses << "\n"
            << "generators: " << sys.n_gens << "\n"
            << "unknowns: " << sys.n_vars() << "\n"
            << "naive_cbb: " << br.naive_cbb << "\n"
            << "degree_product: " << br.degree_product << "\n"
            << "binomial: " << br.binomial << "\n";
  return 0;
}

int cmd_start(const CommonArgs& a, const std::string& out, const std::string& checkpoint_path) {
  Network net = load_network(a.network);
  ParamPolySystem sys = polynomialize(net);
  StartCache cache;
  if (!checkpoint_path.empty()) {
    SlackElimination elim = eliminate_slack(sys);
    std::uint64_t n_paths = 1;
    for (int d : elim.reduced.degrees()) n_paths *= static_cast<std::uint64_t>(d);
    Checkpoint ck(checkpoint_path, sys.content_hash(), a.seed, n_paths, elim.reduced.n_vars());
    std::cout << "checkpoint: " << ck.n_recorded() << "/" << n_paths << " paths already done\n";
    cache = solve_generic(sys, a.seed, a.track, a.workers, &ck);
  } else {
    cache = solve_generic(sys, a.seed, a.track, a.workers);
  }
  save_cache(out, cache);
  std::cout << "paths: " << cache.bound_used << "\n"
            << "solutions: " << cache.solutions.size() << "\n"
            << "lambda_star:";
  for (const cplx& l : cache.lambda_star)
    std::cout << " " << fmt_sig(l.real(), 6) << (l.imag() < 0 ? "-" : "+")
              << fmt_sig(std::abs(l.imag()), 6) << "i";
  std::cout << "\ncache: " << out << "\n";
  return 0;
}

int cmd_solve(const CommonArgs& a, const std::string& cache_path,
              const std::vector<std::pair<std::string, double>>& fixes, const std::string& out) {
  Network net = load_network(a.network);
  ParamPolySystem sys = polynomialize(net);
  std::vector<double> lam = lambda_from_fixes(sys, fixes);

  SolutionSet set;
  RealPartition part;
  if (sys.n_params() == 0 && cache_path.empty()) {
    FixedSystem target = instantiate(sys, std::span<const double>(lam));
    set = solve_total_degree(target, a.seed, a.track, a.workers);
    part = classify_real(set, a.tau_real, target, a.track.refine_tol);
  } else {
    StartCache cache = obtain_cache(sys, cache_path, a);
    CountRealResult cr = count_real(sys, cache, lam, a.tau_real, a.track, a.workers);
    set = std::move(cr.set);
    part = std::move(cr.partition);
  }

  std::cout << "solutions: " << set.solutions.size() << " (real " << part.real_points.size()
            << ", complex " << part.nonreal_indices.size() << ")\n"
            << "paths: " << set.n_paths << " converged " << set.n_converged << " diverged "
            << set.n_diverged << " failed " << set.n_failed << "\n";
  for (std::size_t k = 0; k < part.real_points.size(); ++k) {
    std::cout << "real solution " << k << ":\n";
    std::printf("  %-5s %-10s %-12s %-12s %-12s\n", "bus", "vmag", "angle_deg", "p", "q");
    for (const BusState& bs : bus_states(net, sys, part.real_points[k], lam))
      std::printf("  %-5d %-10.6f %-12.6f %-12.6f %-12.6f\n", bs.bus, bs.vmag, bs.angle_deg, bs.p,
                  bs.q);
  }
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << "[";
    for (std::size_t i = 0; i < set.solutions.size(); ++i) {
      const SolutionEntry& e = set.solutions[i];
      f << (i ? ",\n " : "\n ") << "{\"point\": [";
      for (Eigen::Index j = 0; j < e.point.size(); ++j)
        f << (j ? "," : "") << "[" << fmt_double(e.point[j].real()) << ","
          << fmt_double(e.point[j].imag()) << "]";
      bool is_real = false;
      for (int idx : part.real_indices)
        if (idx == static_cast<int>(i)) is_real = true;
      f << "], \"real\": " << (is_real ? "true" : "false")
        << ", \"residual\": " << fmt_double(e.residual) << ", \"suspect_singular\": "
        << (e.suspect_singular ? "true" : "false") << "}";
    }
    f << "\n]\n";
  }
  return 0;
}

int cmd_sweep(const CommonArgs& a, const std::string& cache_path,
              const std::vector<GridDim>& dims,
              const std::vector<std::pair<std::string, double>>& fixes, const std::string& out,
              double refine_tol) {
  Network net = load_network(a.network);
  ParamPolySystem sys = polynomialize(net);
  StartCache cache = obtain_cache(sys, cache_path, a);

  ParameterGrid grid;
  grid.swept = dims;
  grid.fixed = fixes;
  CountGrid cg = run_sweep(sys, cache, grid, a.workers, a.tau_real, a.track);

  std::vector<EdgeRefinement> refinements;
  if (refine_tol > 0) {
    refinements.reserve(cg.boundary_edges.size());
    for (const auto& [ea, eb] : cg.boundary_edges) {
      std::vector<double> pa = cg.point(ea % cg.nx, ea / cg.nx);
      std::vector<double> pb = cg.point(eb % cg.nx, eb / cg.nx);
      refinements.push_back(
          refine_edge(sys, cache, grid, pa, pb, refine_tol, a.tau_real, a.track, a.workers));
    }
  }
  emit_maps(cg, refinements, out);

  std::map<int, int> histo;
  for (int c : cg.counts) histo[c] += 1;
  std::cout << "grid: " << cg.nx << "x" << cg.ny << "\ncounts:";
  for (auto [c, n] : histo) std::cout << " " << c << "->" << n;
  std::cout << "\nboundary edges: " << cg.boundary_edges.size() << "\n";
  if (refine_tol > 0) std::cout << "refined: " << refinements.size() << "\n";
  std::cout << "maps: " << out << ".counts.csv " << out << ".counts.pgm " << out
            << ".boundary.csv\n";
  return 0;
}

int cmd_trace(const CommonArgs& a, const std::string& cache_path, const std::string& swept_arg,
              const std::string& guess_arg,
              const std::vector<std::pair<std::string, double>>& fixes, double eps, int max_steps,
              int direction, const std::string& out) {
  Network net = load_network(a.network);
  ParamPolySystem sys = polynomialize(net);
  StartCache cache = obtain_cache(sys, cache_path, a);

  std::vector<std::string> swept = split_names(swept_arg);
  std::vector<double> guess = parse_doubles(guess_arg);
  if (guess.size() != swept.size())
    throw ValidationError("--guess must list one value per swept parameter");

  AugmentedSystem aug = build_augmented(sys, swept, fixes);
  VecR z0 = make_boundary_guess(sys, cache, swept, fixes, guess, a.tau_real, a.track);
  TraceResult tr = trace_boundary(aug, z0, eps, max_steps, direction);
  if (!out.empty()) write_trace_csv(out, aug, tr);
  std::cout << "vertices: " << tr.points.size() << "\nclosed: " << (tr.closed ? "yes" : "no")
            << "\n";
  if (!tr.message.empty()) std::cout << "note: " << tr.message << "\n";
  if (tr.failed) throw NumericError("trace failed: " + tr.message);
  if (!tr.points.empty())
    std::cout << "start: " << fmt_sig(tr.points.front().lambda[0], 6) << ","
              << fmt_sig(tr.points.front().lambda[1], 6) << "\n";
  if (!out.empty()) std::cout << "trace: " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"power flow solution space explorer"};
  app.require_subcommand(1);

  CommonArgs bounds_args;
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "solution count bounds of a network");
  add_common(bounds_cmd, bounds_args, false);

  CommonArgs start_args;
  std::string start_out = "start_cache.json";
  std::string start_checkpoint;
  CLI::App* start_cmd =
      app.add_subcommand("start", "solve at a random complex parameter point (stage one)");
  add_common(start_cmd, start_args);
  start_cmd->add_option("--out", start_out, "cache file to write");
  start_cmd->add_option("--checkpoint", start_checkpoint, "resumable path record file");

  CommonArgs solve_args;
  std::string solve_cache, solve_out;
  std::vector<std::string> solve_fix;
  CLI::App* solve_cmd = app.add_subcommand("solve", "all solutions at a real parameter point");
  add_common(solve_cmd, solve_args);
  solve_cmd->add_option("--cache", solve_cache, "start cache from `start`");
  solve_cmd->add_option("--fix", solve_fix, "parameter value NAME=VALUE");
  solve_cmd->add_option("--out", solve_out, "write all solutions as JSON");

  CommonArgs sweep_args;
  std::string sweep_cache, sweep_out = "sweep";
  std::vector<std::string> sweep_spec, sweep_fix;
  double sweep_refine_tol = 0;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "real solution counts over a parameter grid");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--cache", sweep_cache, "start cache from `start`");
  sweep_cmd->add_option("--sweep", sweep_spec, "swept parameter NAME=MIN:MAX:STEPS")
      ->required()
      ->expected(1, 2);
  sweep_cmd->add_option("--fix", sweep_fix, "fixed parameter NAME=VALUE");
  sweep_cmd->add_option("--out", sweep_out, "output base path");
  sweep_cmd->add_option("--refine-tol", sweep_refine_tol,
                        "bisect boundary edges down to this width (0 = off)");

  CommonArgs trace_args;
  std::string trace_cache, trace_swept, trace_guess, trace_out = "trace.csv";
  std::vector<std::string> trace_fix;
  double trace_eps = 0.05;
  int trace_max_steps = 20000, trace_direction = 1;
  CLI::App* trace_cmd =
      app.add_subcommand("trace", "follow the solution space boundary curve");
  add_common(trace_cmd, trace_args);
  trace_cmd->add_option("--cache", trace_cache, "start cache from `start`");
  trace_cmd->add_option("--swept", trace_swept, "two curve parameters NAME,NAME")->required();
  trace_cmd->add_option("--guess", trace_guess, "initial swept values V1,V2")->required();
  trace_cmd->add_option("--fix", trace_fix, "fixed parameter NAME=VALUE");
  trace_cmd->add_option("--eps", trace_eps, "arclength step");
  trace_cmd->add_option("--max-steps", trace_max_steps, "vertex budget");
  trace_cmd->add_option("--direction", trace_direction, "initial direction (+1 or -1)");
  trace_cmd->add_option("--out", trace_out, "trace CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    auto fixes_of = [](const std::vector<std::string>& raw) {
      std::vector<std::pair<std::string, double>> out;
      out.reserve(raw.size());
      for (const std::string& s : raw) out.push_back(parse_fix(s));
      return out;
    };
    if (bounds_cmd->parsed()) return cmd_bounds(bounds_args);
    if (start_cmd->parsed()) return cmd_start(start_args, start_out, start_checkpoint);
    if (solve_cmd->parsed())
      return cmd_solve(solve_args, solve_cache, fixes_of(solve_fix), solve_out);
    if (sweep_cmd->parsed()) {
      std::vector<GridDim> dims;
      for (const std::string& s : sweep_spec) dims.push_back(parse_sweep_spec(s));
      return cmd_sweep(sweep_args, sweep_cache, dims, fixes_of(sweep_fix), sweep_out,
                       sweep_refine_tol);
    }
    if (trace_cmd->parsed())
      return cmd_trace(trace_args, trace_cache, trace_swept, trace_guess, fixes_of(trace_fix),
                       trace_eps, trace_max_steps, trace_direction, trace_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
