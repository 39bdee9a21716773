#include "pfhom/polysystem.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "pfhom/text_format.hpp"

namespace pfhom {

namespace {

using ExpVec = std::vector<std::uint8_t>;

int exp_sum(const ExpVec& e) {
  int s = 0;
  for (auto v : e) s += v;
  return s;
}

/// Graded lexicographic: lower total degree first, then elementwise.
bool grlex_less(const ExpVec& a, const ExpVec& b) {
  int da = exp_sum(a), db = exp_sum(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct GrlexCmp {
  bool operator()(const ExpVec& a, const ExpVec& b) const { return grlex_less(a, b); }
};

/// Linear form c0 + sum coeff_i * x_i over the system variables.
struct Lin {
  double c0 = 0.0;
  std::vector<std::pair<int, double>> terms;

  static Lin constant(double c) { return Lin{c, {}}; }
  static Lin var(int i, double scale = 1.0) { return Lin{0.0, {{i, scale}}}; }
};

/// Accumulates one equation's terms; coefficients affine in the parameters.
class PolyBuilder {
 public:
  PolyBuilder(int n_vars, int n_params) : nv_(n_vars), np_(n_params) {}

  void add(const ExpVec& mono, double val, int param = -1) {
    auto& acc = m_[mono];
    if (acc.cp.empty()) acc.cp.assign(np_, cplx(0, 0));
    if (param < 0)
      acc.c0 += val;
    else
      acc.cp[param] += val;
  }

  void add_const(double val, int param = -1) { add(ExpVec(nv_, 0), val, param); }

  void add_lin(const Lin& u, double scale, int param = -1) {
    if (u.c0 != 0.0) add_const(u.c0 * scale, param);
    for (auto [i, c] : u.terms) {
      ExpVec e(nv_, 0);
      e[i] = 1;
      add(e, c * scale, param);
    }
  }

  void add_product(const Lin& u, const Lin& v, double scale, int param = -1) {
    if (scale == 0.0) return;
    if (u.c0 != 0.0) add_lin(v, u.c0 * scale, param);
    for (auto [i, ci] : u.terms) {
      if (v.c0 != 0.0) {
        ExpVec e(nv_, 0);
        e[i] = 1;
        add(e, ci * v.c0 * scale, param);
      }
      for (auto [j, cj] : v.terms) {
        ExpVec e(nv_, 0);
        e[i] += 1;
        e[j] += 1;
        add(e, ci * cj * scale, param);
      }
    }
  }

  ParamPoly freeze(int declared_degree) const {
    ParamPoly p;
    p.declared_degree = declared_degree;
    for (const auto& [mono, acc] : m_) {
      bool all_zero = acc.c0 == cplx(0, 0);
      for (const cplx& c : acc.cp) all_zero = all_zero && c == cplx(0, 0);
      if (all_zero) continue;
      ParamTerm t;
      t.exps = mono;
      t.coeff0 = acc.c0;
      t.coeff_per_param = acc.cp;
      p.terms.push_back(std::move(t));
    }
    return p;
  }

 private:
  struct Accum {
    cplx c0{0, 0};
    std::vector<cplx> cp;
  };
  int nv_, np_;
  std::map<ExpVec, Accum, GrlexCmp> m_;
};

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

void fnv_u64(std::uint64_t& h, std::uint64_t v) { fnv_bytes(h, &v, sizeof v); }
void fnv_i32(std::uint64_t& h, std::int32_t v) { fnv_bytes(h, &v, sizeof v); }
void fnv_double(std::uint64_t& h, double v) { fnv_u64(h, std::bit_cast<std::uint64_t>(v)); }
void fnv_str(std::uint64_t& h, const std::string& s) {
  fnv_u64(h, s.size());
  fnv_bytes(h, s.data(), s.size());
}

std::string fmt_coeff(const cplx& c) {
  if (c.imag() == 0.0) return fmt_sig(c.real());
  return "(" + fmt_sig(c.real()) + (c.imag() < 0 ? "-" : "+") + fmt_sig(std::abs(c.imag())) + "i)";
}

}  // namespace

int VarMap::find(VarKind kind, int bus) const {
  for (int i = 0; i < size(); ++i)
    if (vars[i].kind == kind && (vars[i].bus == bus || bus < 0)) return i;
  return -1;
}

std::string VarMap::name(int i) const {
  const VarDesc& v = vars.at(i);
  switch (v.kind) {
    case VarKind::SlackP: return "slack_p";
    case VarKind::SlackQ: return "slack_q";
    case VarKind::PvQ: return "q_" + std::to_string(v.bus);
    case VarKind::PvCos: return "cos_" + std::to_string(v.bus);
    case VarKind::PvSin: return "sin_" + std::to_string(v.bus);
    case VarKind::PqVre: return "vre_" + std::to_string(v.bus);
    case VarKind::PqVim: return "vim_" + std::to_string(v.bus);
  }
  return "?";
}

int ParamTerm::total_degree() const { return exp_sum(exps); }

std::vector<int> ParamPolySystem::degrees() const {
  std::vector<int> d;
  d.reserve(equations.size());
  for (const ParamPoly& p : equations) d.push_back(p.declared_degree);
  return d;
}

std::uint64_t ParamPolySystem::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  fnv_str(h, "pfhom.sys.v1");
  fnv_u64(h, static_cast<std::uint64_t>(vars.size()));
  for (const VarDesc& v : vars.vars) {
    fnv_u64(h, static_cast<std::uint64_t>(v.kind));
    fnv_i32(h, v.bus);
  }
  fnv_u64(h, params.size());
  for (const std::string& p : params) fnv_str(h, p);
  fnv_i32(h, n_buses);
  fnv_i32(h, n_gens);
  fnv_u64(h, equations.size());
  for (const ParamPoly& eq : equations) {
    fnv_i32(h, eq.declared_degree);
    fnv_u64(h, eq.terms.size());
    for (const ParamTerm& t : eq.terms) {
      fnv_bytes(h, t.exps.data(), t.exps.size());
      fnv_double(h, t.coeff0.real());
      fnv_double(h, t.coeff0.imag());
      for (const cplx& c : t.coeff_per_param) {
        fnv_double(h, c.real());
        fnv_double(h, c.imag());
      }
    }
  }
  return h;
}

std::string ParamPolySystem::dump() const {
  std::ostringstream os;
  os << "vars:";
  for (int i = 0; i < vars.size(); ++i) os << " " << vars.name(i);
  os << "\nparams:";
  for (const std::string& p : params) os << " " << p;
  os << "\n";
  for (std::size_t e = 0; e < equations.size(); ++e) {
    const ParamPoly& eq = equations[e];
    os << "eq " << e << " [deg " << eq.declared_degree << "]:";
    bool first = true;
    for (const ParamTerm& t : eq.terms) {
      os << (first ? " " : " + ");
      first = false;
      bool has_param = false;
      for (const cplx& c : t.coeff_per_param)
        if (c != cplx(0, 0)) has_param = true;
      if (has_param) {
        os << "(" << fmt_coeff(t.coeff0);
        for (std::size_t p = 0; p < t.coeff_per_param.size(); ++p)
          if (t.coeff_per_param[p] != cplx(0, 0))
            os << " + " << fmt_coeff(t.coeff_per_param[p]) << "*" << params[p];
        os << ")";
      } else {
        os << fmt_coeff(t.coeff0);
      }
      for (int v = 0; v < vars.size(); ++v) {
        if (t.exps[v] == 0) continue;
        os << "*" << vars.name(v);
        if (t.exps[v] > 1) os << "^" << int(t.exps[v]);
      }
    }
    if (first) os << " 0";
    os << "\n";
  }
  return os.str();
}

ParamPolySystem polynomialize(const Network& net) {
  ParamPolySystem sys;
  sys.n_buses = net.bus_count();
  sys.n_gens = net.pv_count() + 1;
  sys.params = net.param_names();
  const int np = sys.n_params();

  const Bus& slack = net.slack();
  std::vector<const Bus*> others;
  for (const Bus& b : net.buses)
    if (b.kind != BusKind::Slack) others.push_back(&b);
  std::sort(others.begin(), others.end(), [](const Bus* a, const Bus* b) { return a->id < b->id; });

  // Parameter index per bus id.
  std::map<int, int> param_of_bus;
  {
    std::vector<const Bus*> with_inj;
    for (const Bus& b : net.buses)
      if (b.injection) with_inj.push_back(&b);
    std::sort(with_inj.begin(), with_inj.end(),
              [](const Bus* a, const Bus* b) { return a->id < b->id; });
    for (std::size_t i = 0; i < with_inj.size(); ++i)
      param_of_bus[with_inj[i]->id] = static_cast<int>(i);
  }

  sys.vars.vars.push_back({VarKind::SlackP, slack.id});
  sys.vars.vars.push_back({VarKind::SlackQ, slack.id});
  for (const Bus* b : others) {
    if (b->kind == BusKind::Pv) {
      sys.vars.vars.push_back({VarKind::PvQ, b->id});
      sys.vars.vars.push_back({VarKind::PvCos, b->id});
      sys.vars.vars.push_back({VarKind::PvSin, b->id});
    } else {
      sys.vars.vars.push_back({VarKind::PqVre, b->id});
      sys.vars.vars.push_back({VarKind::PqVim, b->id});
    }
  }
  const int nv = sys.vars.size();

  // Real and imaginary parts of each bus voltage as linear forms.
  std::map<int, std::pair<Lin, Lin>> volt;
  volt[slack.id] = {Lin::constant(slack.vset), Lin::constant(0.0)};
  for (const Bus* b : others) {
    if (b->kind == BusKind::Pv) {
      int ci = sys.vars.find(VarKind::PvCos, b->id);
      int si = sys.vars.find(VarKind::PvSin, b->id);
      volt[b->id] = {Lin::var(ci, b->vset), Lin::var(si, b->vset)};
    } else {
      int re = sys.vars.find(VarKind::PqVre, b->id);
      int im = sys.vars.find(VarKind::PqVim, b->id);
      volt[b->id] = {Lin::var(re), Lin::var(im)};
    }
  }

  // Power flowing from bus i into its branches:
  //   S_i = sum_k conj(y_ik) * (|V_i|^2 - V_i conj(V_k)),   y_ik = 1/(r+jx).
  // With V = e + jf and conj(y) = gr + j gi the factor in parentheses is
  // A - jB, so
  //   Re S_i = sum_k gr*A + gi*B,  Im S_i = sum_k gi*A - gr*B,
  //   A = e_i^2 + f_i^2 - e_i e_k - f_i f_k,  B = f_i e_k - e_i f_k.
  auto add_flow = [&](PolyBuilder& re_b, PolyBuilder& im_b, int i) {
    const auto& [ei, fi] = volt.at(i);
    for (const Branch& br : net.branches) {
      int k;
      if (br.from == i)
        k = br.to;
      else if (br.to == i)
        k = br.from;
      else
        continue;
      const double den = br.r * br.r + br.x * br.x;
      const double gr = br.r / den, gi = br.x / den;
      const auto& [ek, fk] = volt.at(k);
      // A contributions
      re_b.add_product(ei, ei, gr);
      re_b.add_product(fi, fi, gr);
      re_b.add_product(ei, ek, -gr);
      re_b.add_product(fi, fk, -gr);
      im_b.add_product(ei, ei, gi);
      im_b.add_product(fi, fi, gi);
      im_b.add_product(ei, ek, -gi);
      im_b.add_product(fi, fk, -gi);
      // B contributions
      re_b.add_product(fi, ek, gi);
      re_b.add_product(ei, fk, -gi);
      im_b.add_product(fi, ek, -gr);
      im_b.add_product(ei, fk, gr);
    }
  };

  // Slack balances: generation unknown, so Re S - slack_p + pload = 0.
  {
    PolyBuilder pb(nv, np), qb(nv, np);
    add_flow(pb, qb, slack.id);
    pb.add_lin(Lin::var(sys.vars.find(VarKind::SlackP, slack.id)), -1.0);
    pb.add_const(slack.pload);
    qb.add_lin(Lin::var(sys.vars.find(VarKind::SlackQ, slack.id)), -1.0);
    qb.add_const(slack.qload);
    sys.equations.push_back(pb.freeze(1));
    sys.equations.push_back(qb.freeze(1));
  }

  for (const Bus* b : others) {
    PolyBuilder pb(nv, np), qb(nv, np);
    add_flow(pb, qb, b->id);
    int pidx = b->injection ? param_of_bus.at(b->id) : -1;
    // Active balance: Re S - (pgen - pload) - lambda*unit_p = 0.
    pb.add_const(-(b->pgen - b->pload));
    if (pidx >= 0 && b->injection->unit_p != 0.0) pb.add_const(-b->injection->unit_p, pidx);
    sys.equations.push_back(pb.freeze(2));
    if (b->kind == BusKind::Pv) {
      // Reactive balance defines the generation unknown: Im S - q + qload = 0.
      qb.add_lin(Lin::var(sys.vars.find(VarKind::PvQ, b->id)), -1.0);
      qb.add_const(b->qload);
      sys.equations.push_back(qb.freeze(2));
      PolyBuilder tb(nv, np);
      tb.add_product(Lin::var(sys.vars.find(VarKind::PvCos, b->id)),
                     Lin::var(sys.vars.find(VarKind::PvCos, b->id)), 1.0);
      tb.add_product(Lin::var(sys.vars.find(VarKind::PvSin, b->id)),
                     Lin::var(sys.vars.find(VarKind::PvSin, b->id)), 1.0);
      tb.add_const(-1.0);
      sys.equations.push_back(tb.freeze(2));
    } else {
      // Reactive balance: Im S + qload - lambda*unit_q = 0.
      qb.add_const(b->qload);
      if (pidx >= 0 && b->injection->unit_q != 0.0) qb.add_const(-b->injection->unit_q, pidx);
      sys.equations.push_back(qb.freeze(2));
    }
  }

  return sys;
}

FixedSystem::CTerm FixedSystem::compile_term(const Term& t) {
  CTerm c;
  c.coeff = t.coeff;
  std::vector<int> idx;
  for (std::size_t v = 0; v < t.exps.size(); ++v)
    for (int r = 0; r < t.exps[v]; ++r) idx.push_back(static_cast<int>(v));
  if (idx.size() >= 1) c.a = idx[0];
  if (idx.size() >= 2) c.b = idx[1];
  if (idx.size() > 2) c.ext.assign(idx.begin() + 2, idx.end());
  return c;
}

FixedSystem::FixedSystem(std::vector<Poly> equations, int n_vars)
    : n_vars_(n_vars), eqs_(std::move(equations)) {
  compiled_.reserve(eqs_.size());
  for (const Poly& p : eqs_) {
    CPoly cp;
    cp.terms.reserve(p.terms.size());
    for (const Term& t : p.terms) cp.terms.push_back(compile_term(t));
    // Symbolic derivative per variable.
    std::map<int, std::vector<CTerm>> dmap;
    for (const Term& t : p.terms) {
      for (std::size_t v = 0; v < t.exps.size(); ++v) {
        if (t.exps[v] == 0) continue;
        Term d;
        d.exps = t.exps;
        d.exps[v] -= 1;
        d.coeff = t.coeff * static_cast<double>(t.exps[v]);
        dmap[static_cast<int>(v)].push_back(compile_term(d));
      }
    }
    for (auto& [v, terms] : dmap) cp.deriv.emplace_back(v, std::move(terms));
    compiled_.push_back(std::move(cp));
  }
}

std::vector<int> FixedSystem::degrees() const {
  std::vector<int> d;
  d.reserve(eqs_.size());
  for (const Poly& p : eqs_) d.push_back(p.declared_degree);
  return d;
}

void FixedSystem::eval(const VecC& x, VecC& out) const {
  out.resize(n_eqs());
  for (int e = 0; e < n_eqs(); ++e) {
    cplx acc(0, 0);
    for (const CTerm& t : compiled_[e].terms) {
      cplx v = t.coeff;
      if (t.a >= 0) v *= x[t.a];
      if (t.b >= 0) v *= x[t.b];
      for (int j : t.ext) v *= x[j];
      acc += v;
    }
    out[e] = acc;
  }
}

void FixedSystem::jacobian(const VecC& x, MatC& out) const {
  out.setZero(n_eqs(), n_vars_);
  for (int e = 0; e < n_eqs(); ++e) {
    for (const auto& [v, terms] : compiled_[e].deriv) {
      cplx acc(0, 0);
      for (const CTerm& t : terms) {
        cplx val = t.coeff;
        if (t.a >= 0) val *= x[t.a];
        if (t.b >= 0) val *= x[t.b];
        for (int j : t.ext) val *= x[j];
        acc += val;
      }
      out(e, v) = acc;
    }
  }
}

VecC FixedSystem::eval(const VecC& x) const {
  VecC out;
  eval(x, out);
  return out;
}

MatC FixedSystem::jacobian(const VecC& x) const {
  MatC out;
  jacobian(x, out);
  return out;
}

FixedSystem instantiate(const ParamPolySystem& sys, std::span<const cplx> lambda) {
  if (static_cast<int>(lambda.size()) != sys.n_params())
    throw ValidationError("instantiate: expected " + std::to_string(sys.n_params()) +
                          " parameter values, got " + std::to_string(lambda.size()));
  std::vector<FixedSystem::Poly> eqs;
  eqs.reserve(sys.equations.size());
  for (const ParamPoly& p : sys.equations) {
    FixedSystem::Poly fp;
    fp.declared_degree = p.declared_degree;
    fp.terms.reserve(p.terms.size());
    for (const ParamTerm& t : p.terms) {
      cplx c = t.coeff0;
      for (std::size_t i = 0; i < lambda.size(); ++i) c += lambda[i] * t.coeff_per_param[i];
      fp.terms.push_back({t.exps, c});
    }
    eqs.push_back(std::move(fp));
  }
  return FixedSystem(std::move(eqs), sys.n_vars());
}

FixedSystem instantiate(const ParamPolySystem& sys, std::span<const double> lambda) {
  std::vector<cplx> lc(lambda.begin(), lambda.end());
  return instantiate(sys, lc);
}

namespace {
std::uint64_t binomial_u64(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t res = 1;
  for (int i = 1; i <= k; ++i) {
    // exact at every step: res*(n-k+i) is divisible by i
    res = res * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return res;
}
}  // namespace

BoundsReport bounds(const ParamPolySystem& sys) {
  BoundsReport r;
  if (sys.n_vars() >= 64) throw ValidationError("bounds: system too large for 64-bit counts");
  r.naive_cbb = 1ULL << sys.n_vars();
  r.degree_product = 1;
  for (int d : sys.degrees()) r.degree_product *= static_cast<std::uint64_t>(d);
  const int N = sys.n_buses;
  r.binomial = binomial_u64(2 * N - 2, N - 1);
  return r;
}

cplx eval_param_poly(const ParamPoly& p, const VecC& x, std::span<const cplx> lambda) {
  cplx acc(0, 0);
  for (const ParamTerm& t : p.terms) {
    cplx c = t.coeff0;
    for (std::size_t i = 0; i < lambda.size(); ++i) c += lambda[i] * t.coeff_per_param[i];
    for (std::size_t v = 0; v < t.exps.size(); ++v)
      for (int r = 0; r < t.exps[v]; ++r) c *= x[static_cast<Eigen::Index>(v)];
    acc += c;
  }
  return acc;
}

SlackElimination eliminate_slack(const ParamPolySystem& full) {
  SlackElimination out;
  out.slack_p_index = full.vars.find(VarKind::SlackP, -1);
  out.slack_q_index = full.vars.find(VarKind::SlackQ, -1);
  if (out.slack_p_index < 0 || out.slack_q_index < 0)
    throw ValidationError("eliminate_slack: system has no slack variables");

  const int nv = full.n_vars();
  std::vector<int> new_index(nv, -1);
  int next = 0;
  for (int i = 0; i < nv; ++i) {
    if (i == out.slack_p_index || i == out.slack_q_index) continue;
    new_index[i] = next++;
  }
  const int nr = next;

  auto reduce_exps = [&](const ExpVec& e) {
    ExpVec r(nr, 0);
    for (int i = 0; i < nv; ++i) {
      if (new_index[i] < 0) {
        if (e[i] != 0) throw ValidationError("eliminate_slack: slack variable in kept equation");
      } else {
        r[new_index[i]] = e[i];
      }
    }
    return r;
  };

  // Find, for each slack variable, the single equation where it appears; it
  // must appear linearly with coefficient -1 and no parameter dependence.
  auto extract = [&](int var, int& eq_out) {
    eq_out = -1;
    for (std::size_t e = 0; e < full.equations.size(); ++e) {
      for (const ParamTerm& t : full.equations[e].terms) {
        if (t.exps[var] == 0) continue;
        if (eq_out >= 0 && eq_out != static_cast<int>(e))
          throw ValidationError("eliminate_slack: slack variable appears in several equations");
        if (t.total_degree() != 1 || t.coeff0 != cplx(-1, 0))
          throw ValidationError("eliminate_slack: slack variable does not appear as -1 * var");
        for (const cplx& c : t.coeff_per_param)
          if (c != cplx(0, 0))
            throw ValidationError("eliminate_slack: slack coefficient depends on a parameter");
        eq_out = static_cast<int>(e);
      }
    }
    if (eq_out < 0) throw ValidationError("eliminate_slack: slack variable is absent");
    // rhs: remaining terms of the equation, reindexed (var = sum of the rest).
    ParamPoly rhs;
    rhs.declared_degree = full.equations[eq_out].declared_degree;
    for (const ParamTerm& t : full.equations[eq_out].terms) {
      if (t.exps[var] != 0) continue;
      ParamTerm rt = t;
      rt.exps = reduce_exps(t.exps);
      rhs.terms.push_back(std::move(rt));
    }
    return rhs;
  };

  int p_eq = -1, q_eq = -1;
  out.slack_p_rhs = extract(out.slack_p_index, p_eq);
  out.slack_q_rhs = extract(out.slack_q_index, q_eq);

  ParamPolySystem& red = out.reduced;
  red.params = full.params;
  red.n_buses = full.n_buses;
  red.n_gens = full.n_gens;
  for (int i = 0; i < nv; ++i)
    if (new_index[i] >= 0) red.vars.vars.push_back(full.vars.vars[i]);
  for (std::size_t e = 0; e < full.equations.size(); ++e) {
    if (static_cast<int>(e) == p_eq || static_cast<int>(e) == q_eq) continue;
    ParamPoly rp;
    rp.declared_degree = full.equations[e].declared_degree;
    for (const ParamTerm& t : full.equations[e].terms) {
      ParamTerm rt = t;
      rt.exps = reduce_exps(t.exps);
      rp.terms.push_back(std::move(rt));
    }
    red.equations.push_back(std::move(rp));
  }
  return out;
}

VecC SlackElimination::expand(const VecC& x_reduced, std::span<const cplx> lambda) const {
  const int nr = static_cast<int>(x_reduced.size());
  VecC full(nr + 2);
  int src = 0;
  for (int i = 0; i < nr + 2; ++i) {
    if (i == slack_p_index || i == slack_q_index) continue;
    full[i] = x_reduced[src++];
  }
  full[slack_p_index] = eval_param_poly(slack_p_rhs, x_reduced, lambda);
  full[slack_q_index] = eval_param_poly(slack_q_rhs, x_reduced, lambda);
  return full;
}

std::vector<BusState> bus_states(const Network& net, const ParamPolySystem& sys, const VecR& x,
                                 std::span<const double> lambda) {
  const double rad2deg = 180.0 / std::numbers::pi;
  std::map<std::string, double> lam;
  for (int i = 0; i < sys.n_params(); ++i) lam[sys.params[i]] = lambda[i];

  std::vector<BusState> out;
  for (const Bus& b : net.buses) {
    BusState s;
    s.bus = b.id;
    double lp = 0.0, lq = 0.0;
    if (b.injection) {
      double l = lam.at(b.injection->param);
      lp = l * b.injection->unit_p;
      lq = l * b.injection->unit_q;
    }
    switch (b.kind) {
      case BusKind::Slack:
        s.vmag = b.vset;
        s.angle_deg = 0.0;
        s.p = x[sys.vars.find(VarKind::SlackP, b.id)] - b.pload;
        s.q = x[sys.vars.find(VarKind::SlackQ, b.id)] - b.qload;
        break;
      case BusKind::Pv: {
        double c = x[sys.vars.find(VarKind::PvCos, b.id)];
        double snv = x[sys.vars.find(VarKind::PvSin, b.id)];
        s.vmag = b.vset;
        s.angle_deg = std::atan2(snv, c) * rad2deg;
        s.p = b.pgen - b.pload + lp;
        s.q = x[sys.vars.find(VarKind::PvQ, b.id)] - b.qload;
        break;
      }
      case BusKind::Pq: {
        double re = x[sys.vars.find(VarKind::PqVre, b.id)];
        double im = x[sys.vars.find(VarKind::PqVim, b.id)];
        s.vmag = std::hypot(re, im);
        s.angle_deg = std::atan2(im, re) * rad2deg;
        s.p = b.pgen - b.pload + lp;
        s.q = -b.qload + lq;
        break;
      }
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace pfhom
