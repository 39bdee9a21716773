#include "pfhom/paramhom.hpp"

#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "pfhom/parallel.hpp"
#include "pfhom/rng.hpp"
#include "json.hpp"

namespace pfhom {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json cplx_to_json(const cplx& c) { return ordered_json::array({c.real(), c.imag()}); }

cplx cplx_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("cache: complex values must be [re, im] pairs");
  return cplx(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

std::string serialize_cache(const StartCache& c) {
  ordered_json root;
  root["lambda_star"] = ordered_json::array();
  for (const cplx& l : c.lambda_star) root["lambda_star"].push_back(cplx_to_json(l));
  root["solutions"] = ordered_json::array();
  for (const VecC& s : c.solutions) {
    ordered_json sol = ordered_json::array();
    for (Eigen::Index i = 0; i < s.size(); ++i) sol.push_back(cplx_to_json(s[i]));
    root["solutions"].push_back(std::move(sol));
  }
  root["seed"] = c.seed;
  root["system_hash"] = c.system_hash;
  root["bound_used"] = c.bound_used;
  return root.dump(1) + "\n";
}

StartCache parse_cache(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_object()) throw ParseError("cache: top level must be an object");
  for (const char* key : {"lambda_star", "solutions", "seed", "system_hash", "bound_used"})
    if (!root.contains(key)) throw ParseError(std::string("cache: missing \"") + key + "\"");

  StartCache c;
  for (const json& l : root["lambda_star"]) c.lambda_star.push_back(cplx_from_json(l));
  for (const json& s : root["solutions"]) {
    VecC v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[static_cast<Eigen::Index>(i)] = cplx_from_json(s[i]);
    c.solutions.push_back(std::move(v));
  }
  if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
    throw ParseError("cache: \"seed\" must be an integer");
  c.seed = root["seed"].get<std::uint64_t>();
  c.system_hash = root["system_hash"].get<std::uint64_t>();
  c.bound_used = root["bound_used"].get<std::uint64_t>();
  for (const VecC& s : c.solutions)
    if (s.size() != c.solutions.front().size())
      throw ParseError("cache: inconsistent solution lengths");
  return c;
}

void save_cache(const std::string& path, const StartCache& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write cache file: " + path);
  out << serialize_cache(c);
}

StartCache load_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open cache file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cache(ss.str());
}

// --- Checkpoint -------------------------------------------------------------

namespace {
constexpr char kCkMagic[8] = {'P', 'F', 'H', 'C', 'K', 'P', 'T', '1'};

struct CkHeader {
  char magic[8];
  std::uint32_t version;
  std::uint32_t n_vars;
  std::uint64_t system_hash;
  std::uint64_t seed;
  std::uint64_t n_paths;
};

struct CkRecordFixed {
  std::uint64_t idx;
  std::uint8_t status;
  std::uint8_t suspect;
  std::uint16_t reserved;
  std::uint32_t steps;
  double t_end;
  double residual;
  double condition;
};
}  // namespace

struct Checkpoint::Impl {
  std::string path;
  int n_vars = 0;
  std::unordered_map<std::uint64_t, PathResult> done;
  std::ofstream out;
  std::mutex mu;
};

Checkpoint::Checkpoint(const std::string& path, std::uint64_t system_hash, std::uint64_t seed,
                       std::uint64_t n_paths, int n_vars)
    : impl_(new Impl) {
  impl_->path = path;
  impl_->n_vars = n_vars;

  std::ifstream in(path, std::ios::binary);
  if (in) {
    CkHeader h{};
    if (in.read(reinterpret_cast<char*>(&h), sizeof h)) {
      if (std::memcmp(h.magic, kCkMagic, 8) != 0 || h.version != 1)
        throw ValidationError("checkpoint: not a checkpoint file: " + path);
      if (h.system_hash != system_hash || h.seed != seed || h.n_paths != n_paths ||
          h.n_vars != static_cast<std::uint32_t>(n_vars))
        throw ValidationError("checkpoint: file belongs to a different run: " + path);
      for (;;) {
        CkRecordFixed r{};
        if (!in.read(reinterpret_cast<char*>(&r), sizeof r)) break;  // clean EOF or partial tail
        PathResult pr;
        pr.status = static_cast<PathStatus>(r.status);
        pr.suspect_singular = r.suspect != 0;
        pr.steps = static_cast<int>(r.steps);
        pr.t_end = r.t_end;
        pr.final_residual = r.residual;
        pr.condition = r.condition;
        if (pr.status == PathStatus::Converged) {
          std::vector<double> buf(2 * static_cast<std::size_t>(n_vars));
          if (!in.read(reinterpret_cast<char*>(buf.data()),
                       static_cast<std::streamsize>(buf.size() * sizeof(double))))
            break;  // partial tail record
          pr.endpoint.resize(n_vars);
          for (int i = 0; i < n_vars; ++i) pr.endpoint[i] = cplx(buf[2 * i], buf[2 * i + 1]);
        }
        impl_->done[r.idx] = std::move(pr);
      }
    }
    in.close();
    impl_->out.open(path, std::ios::binary | std::ios::app);
  } else {
    impl_->out.open(path, std::ios::binary | std::ios::trunc);
    CkHeader h{};
    std::memcpy(h.magic, kCkMagic, 8);
    h.version = 1;
    h.n_vars = static_cast<std::uint32_t>(n_vars);
    h.system_hash = system_hash;
    h.seed = seed;
    h.n_paths = n_paths;
    impl_->out.write(reinterpret_cast<const char*>(&h), sizeof h);
    impl_->out.flush();
  }
  if (!impl_->out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
}

Checkpoint::~Checkpoint() { delete impl_; }

bool Checkpoint::lookup(std::uint64_t idx, PathResult& out) const {
  auto it = impl_->done.find(idx);
  if (it == impl_->done.end()) return false;
  out = it->second;
  return true;
}

void Checkpoint::record(std::uint64_t idx, const PathResult& r) {
  CkRecordFixed rec{};
  rec.idx = idx;
  rec.status = static_cast<std::uint8_t>(r.status);
  rec.suspect = r.suspect_singular ? 1 : 0;
  rec.steps = static_cast<std::uint32_t>(r.steps);
  rec.t_end = r.t_end;
  rec.residual = r.final_residual;
  rec.condition = r.condition;
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->out.write(reinterpret_cast<const char*>(&rec), sizeof rec);
  if (r.status == PathStatus::Converged) {
    std::vector<double> buf(2 * static_cast<std::size_t>(impl_->n_vars));
    for (int i = 0; i < impl_->n_vars; ++i) {
      buf[2 * i] = r.endpoint[i].real();
      buf[2 * i + 1] = r.endpoint[i].imag();
    }
    impl_->out.write(reinterpret_cast<const char*>(buf.data()),
                     static_cast<std::streamsize>(buf.size() * sizeof(double)));
  }
  impl_->out.flush();
  impl_->done[idx] = r;
}

std::uint64_t Checkpoint::n_recorded() const { return impl_->done.size(); }

// --- Parameter homotopy ------------------------------------------------------

ParamHomotopy::ParamHomotopy(const ParamPolySystem& sys, std::span<const cplx> lambda_from,
                             std::span<const cplx> lambda_to, const ParamHomOptions& opts)
    : a_(instantiate(sys, lambda_from)), b_(instantiate(sys, lambda_to)) {
  if (opts.gamma_twist) {
    Rng rng(opts.gamma_seed);
    gamma_ = rng.unit_circle_off_real(0.01);
  }
}

void ParamHomotopy::eval(const VecC& x, double s, VecC& out) const {
  VecC ra, rb;
  a_.eval(x, ra);
  b_.eval(x, rb);
  out = gamma_ * (1.0 - s) * ra + s * rb;
}

void ParamHomotopy::jacobian(const VecC& x, double s, MatC& out) const {
  MatC ja, jb;
  a_.jacobian(x, ja);
  b_.jacobian(x, jb);
  out = gamma_ * (1.0 - s) * ja + s * jb;
}

void ParamHomotopy::dt(const VecC& x, double s, VecC& out) const {
  (void)s;
  VecC ra, rb;
  a_.eval(x, ra);
  b_.eval(x, rb);
  out = rb - gamma_ * ra;
}

void ParamHomotopy::target_eval(const VecC& x, VecC& out) const { b_.eval(x, out); }

void ParamHomotopy::target_jacobian(const VecC& x, MatC& out) const { b_.jacobian(x, out); }

// --- Stage one / stage two ---------------------------------------------------

StartCache solve_generic(const ParamPolySystem& sys, std::uint64_t seed, const TrackOptions& opts,
                         int workers, Checkpoint* checkpoint) {
  Rng rng(seed);
  StartCache cache;
  cache.seed = seed;
  cache.system_hash = sys.content_hash();
  for (int p = 0; p < sys.n_params(); ++p) cache.lambda_star.push_back(rng.unit_disk());

  SlackElimination elim = eliminate_slack(sys);
  FixedSystem target = instantiate(elim.reduced, cache.lambda_star);
  TotalDegreeStart start = make_total_degree_start(target.degrees(), rng);
  TotalDegreeHomotopy hom(target, start);
  const std::uint64_t n = start.n_paths();
  cache.bound_used = n;

  std::vector<PathResult> results(n);
  parallel_for(n, workers, [&](std::uint64_t i) {
    if (checkpoint && checkpoint->lookup(i, results[i])) return;
    results[i] = track_path(hom, start.start_point(i), opts);
    if (checkpoint) checkpoint->record(i, results[i]);
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
  for (const SolutionEntry& e : set.solutions) {
    if (e.suspect_singular)
      throw ValidationError(
          "solve_generic: a suspect singular endpoint at the random parameter point; "
          "retry with a different seed");
    cache.solutions.push_back(e.point);
  }
  return cache;
}

SolutionSet track_to(const ParamPolySystem& sys, const StartCache& cache,
                     std::span<const cplx> lambda, const TrackOptions& opts, int workers,
                     const ParamHomOptions& ph) {
  if (cache.system_hash != sys.content_hash())
    throw ValidationError("track_to: start cache was built for a different system");
  if (static_cast<int>(lambda.size()) != sys.n_params())
    throw ValidationError("track_to: wrong number of parameter values");

  SlackElimination elim = eliminate_slack(sys);
  for (const VecC& s : cache.solutions)
    if (s.size() != elim.reduced.n_vars())
      throw ValidationError("track_to: cache solution length does not match the system");

  ParamHomotopy hom(elim.reduced, cache.lambda_star, lambda, ph);
  const std::uint64_t n = cache.solutions.size();
  std::vector<PathResult> results(n);
  parallel_for(n, workers, [&](std::uint64_t i) {
    results[i] = track_path(hom, cache.solutions[i], opts);
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
  for (SolutionEntry& e : set.solutions) e.point = elim.expand(e.point, lambda);
  return set;
}

CountRealResult count_real(const ParamPolySystem& sys, const StartCache& cache,
                           std::span<const double> lambda, double tau_real,
                           const TrackOptions& opts, int workers) {
  std::vector<cplx> lc(lambda.begin(), lambda.end());
  CountRealResult out;
  out.set = track_to(sys, cache, lc, opts, workers);
  FixedSystem target = instantiate(sys, lambda);
  out.partition = classify_real(out.set, tau_real, target, opts.refine_tol);
  out.n_real = static_cast<int>(out.partition.real_points.size());
  return out;
}

}  // namespace pfhom
