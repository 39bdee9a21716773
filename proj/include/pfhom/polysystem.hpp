#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pfhom/common.hpp"
#include "pfhom/network.hpp"

namespace pfhom {

/// Role of one real unknown in the polynomialized power flow system.
enum class VarKind : std::uint8_t {
  SlackP,  // slack active generation
  SlackQ,  // slack reactive generation
  PvQ,     // pv bus reactive generation
  PvCos,   // cos of pv bus angle
  PvSin,   // sin of pv bus angle
  PqVre,   // real part of pq bus voltage
  PqVim,   // imag part of pq bus voltage
};

struct VarDesc {
  VarKind kind;
  int bus;
  bool operator==(const VarDesc&) const = default;
};

/// Ordered mapping between system variables and bus quantities.
struct VarMap {
  std::vector<VarDesc> vars;

  int size() const { return static_cast<int>(vars.size()); }
  int find(VarKind kind, int bus) const;
  std::string name(int i) const;
};

/// One monomial term whose coefficient is affine in the sweep parameters:
/// coeff(lambda) = coeff0 + sum_p lambda_p * coeff_per_param[p].
struct ParamTerm {
  std::vector<std::uint8_t> exps;  // dense exponents over all variables
  cplx coeff0;
  std::vector<cplx> coeff_per_param;

  int total_degree() const;
};

struct ParamPoly {
  std::vector<ParamTerm> terms;  // sorted graded-lex ascending
  int declared_degree = 0;       // structural degree, used for start systems and bounds
};

/// Square polynomial system with coefficients affine in the parameters.
/// The parameters only ever shift constant terms, so the solution structure
/// at infinity does not move with lambda.
struct ParamPolySystem {
  VarMap vars;
  std::vector<std::string> params;
  std::vector<ParamPoly> equations;
  int n_buses = 0;
  int n_gens = 0;  // slack plus pv buses

  int n_vars() const { return vars.size(); }
  int n_params() const { return static_cast<int>(params.size()); }
  std::vector<int> degrees() const;

  /// Structural fingerprint (variables, parameters, terms, coefficients).
  std::uint64_t content_hash() const;

  /// Human-readable listing of variables, parameters and equations.
  std::string dump() const;
};

/// Build the square polynomial system of a network in rectangular form.
/// Variable order: slack_p, slack_q, then per non-slack bus ascending id
/// (pv: q, cos, sin; pq: vre, vim). Equation order: slack active, slack
/// reactive, then per non-slack bus ascending id (active balance, reactive
/// balance, plus the trig identity on pv buses).
ParamPolySystem polynomialize(const Network& net);

/// Fixed-coefficient square system ready for evaluation.
class FixedSystem {
 public:
  struct Term {
    std::vector<std::uint8_t> exps;
    cplx coeff;
  };
  struct Poly {
    std::vector<Term> terms;
    int declared_degree = 0;
  };

  FixedSystem() = default;
  FixedSystem(std::vector<Poly> equations, int n_vars);

  int n_vars() const { return n_vars_; }
  int n_eqs() const { return static_cast<int>(eqs_.size()); }
  std::vector<int> degrees() const;
  const std::vector<Poly>& equations() const { return eqs_; }

  void eval(const VecC& x, VecC& out) const;
  void jacobian(const VecC& x, MatC& out) const;
  VecC eval(const VecC& x) const;
  MatC jacobian(const VecC& x) const;

 private:
  struct CTerm {
    cplx coeff;
    int a = -1, b = -1;  // var indices, -1 for absent; degree > 2 spills to ext
    std::vector<int> ext;
  };
  struct CPoly {
    std::vector<CTerm> terms;
    // derivative terms grouped per variable
    std::vector<std::pair<int, std::vector<CTerm>>> deriv;
  };

  static CTerm compile_term(const Term& t);

  int n_vars_ = 0;
  std::vector<Poly> eqs_;
  std::vector<CPoly> compiled_;
};

/// Substitute parameter values into the affine coefficients.
FixedSystem instantiate(const ParamPolySystem& sys, std::span<const cplx> lambda);
FixedSystem instantiate(const ParamPolySystem& sys, std::span<const double> lambda);

/// Upper bounds on the number of isolated solutions.
struct BoundsReport {
  std::uint64_t naive_cbb = 0;      // 2^(number of unknowns)
  std::uint64_t degree_product = 0; // product of structural equation degrees
  std::uint64_t binomial = 0;       // C(2N-2, N-1) for an N bus network
};

BoundsReport bounds(const ParamPolySystem& sys);

/// The slack unknowns appear linearly, each in exactly one equation; dropping
/// those two equations yields an equivalent system in two fewer unknowns.
struct SlackElimination {
  ParamPolySystem reduced;
  int slack_p_index = -1;  // positions in the full variable map
  int slack_q_index = -1;
  ParamPoly slack_p_rhs;   // over reduced variables
  ParamPoly slack_q_rhs;

  /// Recover the full-length solution vector from a reduced one.
  VecC expand(const VecC& x_reduced, std::span<const cplx> lambda) const;
};

SlackElimination eliminate_slack(const ParamPolySystem& full);

/// Evaluate a parametric polynomial at a point (helper for back substitution).
cplx eval_param_poly(const ParamPoly& p, const VecC& x, std::span<const cplx> lambda);

/// Per-bus quantities recovered from a real solution vector.
struct BusState {
  int bus = 0;
  double vmag = 0, angle_deg = 0, p = 0, q = 0;
};

std::vector<BusState> bus_states(const Network& net, const ParamPolySystem& sys, const VecR& x,
                                 std::span<const double> lambda);

}  // namespace pfhom
