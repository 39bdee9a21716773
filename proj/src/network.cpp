#include "pfhom/network.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pfhom/text_format.hpp"
#include "json.hpp"

namespace pfhom {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void require_keys(const json& obj, const std::set<std::string>& allowed, const char* what) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ValidationError(std::string("unknown key \"") + it.key() + "\" in " + what);
  }
}

double get_number(const json& obj, const char* key, const char* what) {
  auto it = obj.find(key);
  if (it == obj.end()) return 0.0;
  if (!it->is_number())
    throw ValidationError(std::string(what) + ": \"" + key + "\" must be a number");
  return it->get<double>();
}

BusKind parse_kind(const std::string& s, int bus_id) {
  if (s == "slack") return BusKind::Slack;
  if (s == "pv") return BusKind::Pv;
  if (s == "pq") return BusKind::Pq;
  throw ValidationError("bus " + std::to_string(bus_id) + ": unknown kind \"" + s + "\"");
}

}  // namespace

std::string to_string(BusKind k) {
  switch (k) {
    case BusKind::Slack: return "slack";
    case BusKind::Pv: return "pv";
    case BusKind::Pq: return "pq";
  }
  return "?";
}

int Network::pv_count() const {
  return static_cast<int>(std::count_if(buses.begin(), buses.end(),
                                        [](const Bus& b) { return b.kind == BusKind::Pv; }));
}

int Network::pq_count() const {
  return static_cast<int>(std::count_if(buses.begin(), buses.end(),
                                        [](const Bus& b) { return b.kind == BusKind::Pq; }));
}

int Network::injection_count() const {
  return static_cast<int>(std::count_if(buses.begin(), buses.end(),
                                        [](const Bus& b) { return b.injection.has_value(); }));
}

const Bus* Network::find_bus(int id) const {
  for (const Bus& b : buses)
    if (b.id == id) return &b;
  return nullptr;
}

const Bus& Network::slack() const {
  for (const Bus& b : buses)
    if (b.kind == BusKind::Slack) return b;
  throw ValidationError("network has no slack bus");
}

cplx Network::branch_admittance(int j, int k) const {
  for (const Branch& br : branches) {
    if ((br.from == j && br.to == k) || (br.from == k && br.to == j))
      return 1.0 / cplx(br.r, br.x);
  }
  return cplx(0.0, 0.0);
}

std::vector<std::string> Network::param_names() const {
  std::vector<const Bus*> with_inj;
  for (const Bus& b : buses)
    if (b.injection) with_inj.push_back(&b);
  std::sort(with_inj.begin(), with_inj.end(),
            [](const Bus* a, const Bus* b) { return a->id < b->id; });
  std::vector<std::string> names;
  names.reserve(with_inj.size());
  for (const Bus* b : with_inj) names.push_back(b->injection->param);
  return names;
}

Network parse_network(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_object()) throw ValidationError("top level must be a JSON object");
  require_keys(root, {"base_mva", "buses", "branches"}, "network");

  Network n;
  n.base_mva = get_number(root, "base_mva", "network");
  if (!(n.base_mva > 0.0)) throw ValidationError("base_mva must be a positive number");

  auto buses_it = root.find("buses");
  if (buses_it == root.end() || !buses_it->is_array())
    throw ValidationError("network: \"buses\" must be an array");
  for (const json& jb : *buses_it) {
    if (!jb.is_object()) throw ValidationError("bus entries must be objects");
    require_keys(jb, {"id", "kind", "vset", "pgen", "pload", "qload", "injection"}, "bus");
    Bus b;
    auto id_it = jb.find("id");
    if (id_it == jb.end() || !id_it->is_number_integer())
      throw ValidationError("bus: \"id\" must be an integer");
    b.id = id_it->get<int>();
    if (b.id <= 0) throw ValidationError("bus " + std::to_string(b.id) + ": id must be positive");
    auto kind_it = jb.find("kind");
    if (kind_it == jb.end() || !kind_it->is_string())
      throw ValidationError("bus " + std::to_string(b.id) + ": \"kind\" must be a string");
    b.kind = parse_kind(kind_it->get<std::string>(), b.id);
    b.vset = get_number(jb, "vset", "bus");
    b.pgen = get_number(jb, "pgen", "bus");
    b.pload = get_number(jb, "pload", "bus");
    b.qload = get_number(jb, "qload", "bus");
    if (auto inj_it = jb.find("injection"); inj_it != jb.end()) {
      if (!inj_it->is_object())
        throw ValidationError("bus " + std::to_string(b.id) + ": \"injection\" must be an object");
      require_keys(*inj_it, {"param", "unit_p", "unit_q"}, "injection");
      Injection inj;
      auto p_it = inj_it->find("param");
      if (p_it == inj_it->end() || !p_it->is_string() || p_it->get<std::string>().empty())
        throw ValidationError("bus " + std::to_string(b.id) +
                              ": injection \"param\" must be a non-empty string");
      inj.param = p_it->get<std::string>();
      inj.unit_p = get_number(*inj_it, "unit_p", "injection");
      inj.unit_q = get_number(*inj_it, "unit_q", "injection");
      b.injection = inj;
    }
    n.buses.push_back(std::move(b));
  }

  auto branches_it = root.find("branches");
  if (branches_it == root.end() || !branches_it->is_array())
    throw ValidationError("network: \"branches\" must be an array");
  for (const json& jb : *branches_it) {
    if (!jb.is_object()) throw ValidationError("branch entries must be objects");
    require_keys(jb, {"from", "to", "r", "x"}, "branch");
    Branch br;
    auto from_it = jb.find("from");
    auto to_it = jb.find("to");
    if (from_it == jb.end() || !from_it->is_number_integer() || to_it == jb.end() ||
        !to_it->is_number_integer())
      throw ValidationError("branch: \"from\" and \"to\" must be integers");
    br.from = from_it->get<int>();
    br.to = to_it->get<int>();
    br.r = get_number(jb, "r", "branch");
    br.x = get_number(jb, "x", "branch");
    n.branches.push_back(br);
  }

  // Model rules.
  std::set<int> seen_ids;
  int n_slack = 0;
  std::set<std::string> seen_params;
  for (const Bus& b : n.buses) {
    if (!seen_ids.insert(b.id).second)
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    if (b.kind == BusKind::Slack) ++n_slack;
    if ((b.kind == BusKind::Slack || b.kind == BusKind::Pv) && !(b.vset > 0.0))
      throw ValidationError("bus " + std::to_string(b.id) + ": " + to_string(b.kind) +
                            " bus needs a positive vset");
    if (b.injection) {
      if (b.kind == BusKind::Slack)
        throw ValidationError("bus " + std::to_string(b.id) +
                              ": slack bus cannot carry an injection");
      if (!seen_params.insert(b.injection->param).second)
        throw ValidationError("duplicate injection parameter \"" + b.injection->param + "\"");
    }
  }
  if (n_slack != 1)
    throw ValidationError("network must have exactly one slack bus, found " +
                          std::to_string(n_slack));
  for (const Branch& br : n.branches) {
    if (!seen_ids.count(br.from) || !seen_ids.count(br.to))
      throw ValidationError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                            " references an unknown bus");
    if (br.from == br.to)
      throw ValidationError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                            " is a self loop");
    if (br.r == 0.0 && br.x == 0.0)
      throw ValidationError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                            " has zero impedance");
  }
  std::set<std::pair<int, int>> seen_branches;
  for (const Branch& br : n.branches) {
    auto key = std::minmax(br.from, br.to);
    if (!seen_branches.insert(key).second)
      throw ValidationError("duplicate branch " + std::to_string(key.first) + "-" +
                            std::to_string(key.second));
  }

  // Connectivity from the slack bus.
  if (!n.buses.empty()) {
    std::set<int> reached{n.slack().id};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const Branch& br : n.branches) {
        bool f = reached.count(br.from), t = reached.count(br.to);
        if (f != t) {
          reached.insert(f ? br.to : br.from);
          grew = true;
        }
      }
    }
    for (const Bus& b : n.buses)
      if (!reached.count(b.id))
        throw ValidationError("bus " + std::to_string(b.id) + " is not connected to the slack bus");
  }
  return n;
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open network file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string serialize_network(const Network& n) {
  ordered_json root;
  root["base_mva"] = n.base_mva;
  root["buses"] = ordered_json::array();
  for (const Bus& b : n.buses) {
    ordered_json jb;
    jb["id"] = b.id;
    jb["kind"] = to_string(b.kind);
    if (b.vset != 0.0) jb["vset"] = b.vset;
    if (b.pgen != 0.0) jb["pgen"] = b.pgen;
    if (b.pload != 0.0) jb["pload"] = b.pload;
    if (b.qload != 0.0) jb["qload"] = b.qload;
    if (b.injection) {
      ordered_json ji;
      ji["param"] = b.injection->param;
      if (b.injection->unit_p != 0.0) ji["unit_p"] = b.injection->unit_p;
      if (b.injection->unit_q != 0.0) ji["unit_q"] = b.injection->unit_q;
      jb["injection"] = ji;
    }
    root["buses"].push_back(jb);
  }
  root["branches"] = ordered_json::array();
  for (const Branch& br : n.branches) {
    ordered_json jb;
    jb["from"] = br.from;
    jb["to"] = br.to;
    if (br.r != 0.0) jb["r"] = br.r;
    if (br.x != 0.0) jb["x"] = br.x;
    root["branches"].push_back(jb);
  }
  return root.dump(2) + "\n";
}

}  // namespace pfhom
