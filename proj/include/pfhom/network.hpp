#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pfhom/common.hpp"

namespace pfhom {

enum class BusKind { Slack, Pv, Pq };

std::string to_string(BusKind k);

/// Parameterized injection attached to a bus: the bus receives
/// lambda * unit_p active and lambda * unit_q reactive power, where lambda is
/// the named sweep parameter. unit_q is ignored on pv buses (their reactive
/// output is an unknown).
struct Injection {
  std::string param;
  double unit_p = 0.0;
  double unit_q = 0.0;

  bool operator==(const Injection&) const = default;
};

struct Bus {
  int id = 0;
  BusKind kind = BusKind::Pq;
  double vset = 0.0;  // voltage magnitude set-point, slack and pv only
  double pgen = 0.0;  // fixed active generation
  double pload = 0.0;
  double qload = 0.0;
  std::optional<Injection> injection;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;

  bool operator==(const Branch&) const = default;
};

/// Per-unit network on a common MVA base. All powers and impedances are in
/// per unit; buses are keyed by their integer id.
struct Network {
  double base_mva = 0.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;

  bool operator==(const Network&) const = default;

  int bus_count() const { return static_cast<int>(buses.size()); }
  int pv_count() const;
  int pq_count() const;
  /// Buses carrying a parameterized injection.
  int injection_count() const;

  const Bus* find_bus(int id) const;
  const Bus& slack() const;

  /// Series admittance 1/(r + jx) of the branch joining buses j and k,
  /// exactly zero when no branch joins them.
  cplx branch_admittance(int j, int k) const;

  /// Parameter names ordered by ascending id of the bus carrying them.
  std::vector<std::string> param_names() const;
};

/// Parse and validate a network from JSON text.
/// Throws ParseError for malformed JSON, ValidationError for model violations.
Network parse_network(const std::string& json_text);

/// Convenience: read the file and parse. IO failures throw std::runtime_error.
Network load_network(const std::string& path);

/// Serialize back to JSON. parse_network(serialize_network(n)) == n.
std::string serialize_network(const Network& n);

}  // namespace pfhom
