#pragma once

// Independent residual oracle used by the tests: evaluates the power balance
// equations through direct complex bus-voltage arithmetic, never through the
// expanded polynomial terms. Equation order mirrors the documented layout
// (slack active, slack reactive, then per non-slack bus ascending id).
//
// The polynomial system treats the Re/Im coordinates as independent variables
// that may themselves take complex values, so "conjugation" is replaced by
// coordinate mirroring: V = e + i f  ->  V~ = e - i f with e, f complex.
// For a real coordinate vector this reduces to ordinary conjugation.

#include <algorithm>
#include <complex>
#include <map>
#include <span>
#include <vector>

#include "pfhom/network.hpp"
#include "pfhom/polysystem.hpp"

namespace pfhom::testing {

inline std::vector<cplx> flow_residuals(const Network& net, const VarMap& vars,
                                        const std::vector<std::string>& params, const VecC& x,
                                        std::span<const cplx> lam) {
  std::map<std::string, cplx> lam_by_name;
  for (std::size_t i = 0; i < params.size(); ++i) lam_by_name[params[i]] = lam[i];

  std::map<int, cplx> volt, volt_m;
  for (const Bus& b : net.buses) {
    switch (b.kind) {
      case BusKind::Slack:
        volt[b.id] = cplx(b.vset, 0);
        volt_m[b.id] = cplx(b.vset, 0);
        break;
      case BusKind::Pv: {
        cplx c = x[vars.find(VarKind::PvCos, b.id)];
        cplx s = x[vars.find(VarKind::PvSin, b.id)];
        volt[b.id] = b.vset * (c + cplx(0, 1) * s);
        volt_m[b.id] = b.vset * (c - cplx(0, 1) * s);
        break;
      }
      case BusKind::Pq: {
        cplx e = x[vars.find(VarKind::PqVre, b.id)];
        cplx f = x[vars.find(VarKind::PqVim, b.id)];
        volt[b.id] = e + cplx(0, 1) * f;
        volt_m[b.id] = e - cplx(0, 1) * f;
        break;
      }
    }
  }

  // S_i = sum_k V_i (V_i - V_k)~ y~ over branches incident to i, and the
  // mirrored flow S~_i; then p = (S + S~)/2, q = (S - S~)/(2i).
  auto flow = [&](int i, bool mirrored) {
    cplx s(0, 0);
    for (const Branch& br : net.branches) {
      int k;
      if (br.from == i)
        k = br.to;
      else if (br.to == i)
        k = br.from;
      else
        continue;
      cplx y = 1.0 / cplx(br.r, br.x);
      cplx ym(y.real(), -y.imag());
      if (!mirrored)
        s += volt.at(i) * (volt_m.at(i) - volt_m.at(k)) * ym;
      else
        s += volt_m.at(i) * (volt.at(i) - volt.at(k)) * y;
    }
    return s;
  };
  auto p_of = [&](int i) { return 0.5 * (flow(i, false) + flow(i, true)); };
  auto q_of = [&](int i) { return (flow(i, false) - flow(i, true)) / cplx(0, 2); };

  const Bus& slack = net.slack();
  std::vector<const Bus*> others;
  for (const Bus& b : net.buses)
    if (b.kind != BusKind::Slack) others.push_back(&b);
  std::sort(others.begin(), others.end(), [](const Bus* a, const Bus* b) { return a->id < b->id; });

  std::vector<cplx> out;
  out.push_back(p_of(slack.id) - x[vars.find(VarKind::SlackP, slack.id)] + slack.pload);
  out.push_back(q_of(slack.id) - x[vars.find(VarKind::SlackQ, slack.id)] + slack.qload);
  for (const Bus* b : others) {
    cplx lp(0, 0), lq(0, 0);
    if (b->injection) {
      cplx l = lam_by_name.at(b->injection->param);
      lp = l * b->injection->unit_p;
      lq = l * b->injection->unit_q;
    }
    out.push_back(p_of(b->id) - (b->pgen - b->pload) - lp);
    if (b->kind == BusKind::Pv) {
      out.push_back(q_of(b->id) - x[vars.find(VarKind::PvQ, b->id)] + b->qload);
      cplx c = x[vars.find(VarKind::PvCos, b->id)];
      cplx s = x[vars.find(VarKind::PvSin, b->id)];
      out.push_back(c * c + s * s - 1.0);
    } else {
      out.push_back(q_of(b->id) + b->qload - lq);
    }
  }
  return out;
}

}  // namespace pfhom::testing
