#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core_types.hpp"
#include "error.hpp"
#include "tchakaloff.hpp"

namespace mgineq::io {

using nlohmann::json;

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_number(ExtReal v) { return format_number(v.value()); }

inline double parse_number(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "not a number: '" + s + "'");
  }
  if (used != s.size() || std::isnan(v)) throw Error(ErrorCode::ParseError, "not a number: '" + s + "'");
  return v;
}

namespace detail {

inline const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw Error(ErrorCode::ParseError, std::string("missing field '") + name + "'");
  return j.at(name);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, where + " must be a number");
  return j.get<double>();
}

inline std::size_t index(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw Error(ErrorCode::ParseError, where + " must be a nonnegative integer");
  return j.get<std::size_t>();
}

inline ExtReal ext_value(const json& j, const std::string& where) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "-inf") return ExtReal::neg_inf();
    if (s == "inf" || s == "+inf") return ExtReal::pos_inf();
    throw Error(ErrorCode::ParseError, where + " must be a number or \"-inf\"");
  }
  return number(j, where);
}

inline json ext_json(ExtReal v) {
  if (v.is_neg_inf()) return "-inf";
  if (v.is_pos_inf()) return "inf";
  return v.value();
}

}  // namespace detail

inline json label_to_json(const StateLabel& l) {
  if (!l.has_coords()) return l.name;
  if (l.coords.size() == 1) return l.coords[0];
  return l.coords;
}

inline StateLabel label_from_json(const json& j, const std::string& where) {
  if (j.is_string()) return StateLabel::named(j.get<std::string>());
  if (j.is_number()) return StateLabel::at(j.get<double>());
  if (j.is_array()) {
    std::vector<double> c;
    for (const auto& e : j) c.push_back(detail::number(e, where));
    if (c.empty()) throw Error(ErrorCode::ParseError, where + " has an empty coordinate list");
    return StateLabel::at(std::move(c));
  }
  throw Error(ErrorCode::ParseError, where + " must be a string, number or number array");
}

inline json problem_to_json(const ProblemSpec& spec) {
  json j;
  j["states"] = json::array();
  for (const auto& l : spec.state_labels) j["states"].push_back(label_to_json(l));
  j["increments"] = spec.increments.values();
  j["transition"] = json::array();
  for (std::size_t z = 0; z < spec.transition.num_states(); ++z) {
    if (spec.transition.absorbing(z))
      j["transition"].push_back("absorbing");
    else
      j["transition"].push_back(spec.transition.row(z));
  }
  j["payoff"] = json::array();
  for (ExtReal v : spec.payoff) j["payoff"].push_back(detail::ext_json(v));
  j["z0"] = spec.initial_state;
  if (!spec.ties.empty()) {
    j["ties"] = json::array();
    for (const Tie& t : spec.ties) j["ties"].push_back(json::array({t.state, t.anchor, t.factor}));
  }
  return j;
}

inline ProblemSpec problem_from_json(const json& j) {
  ProblemSpec spec;
  const json& states = detail::field(j, "states");
  if (!states.is_array()) throw Error(ErrorCode::ParseError, "'states' must be an array");
  for (std::size_t i = 0; i < states.size(); ++i)
    spec.state_labels.push_back(label_from_json(states[i], "states[" + std::to_string(i) + "]"));

  const json& incs = detail::field(j, "increments");
  if (!incs.is_array()) throw Error(ErrorCode::ParseError, "'increments' must be an array");
  std::vector<double> d;
  for (std::size_t i = 0; i < incs.size(); ++i) d.push_back(detail::number(incs[i], "increments[" + std::to_string(i) + "]"));
  spec.increments = IncrementGrid(std::move(d));

  const json& tr = detail::field(j, "transition");
  if (!tr.is_array()) throw Error(ErrorCode::ParseError, "'transition' must be an array");
  spec.transition = TransitionTable(tr.size(), spec.increments.size());
  for (std::size_t z = 0; z < tr.size(); ++z) {
    std::string where = "transition[" + std::to_string(z) + "]";
    if (tr[z].is_string() && tr[z].get<std::string>() == "absorbing") {
      spec.transition.set_absorbing(z);
      continue;
    }
    if (!tr[z].is_array()) throw Error(ErrorCode::ParseError, where + " must be an array or \"absorbing\"");
    std::vector<TransitionTable::StateId> row;
    for (std::size_t k = 0; k < tr[z].size(); ++k) {
      std::size_t w = detail::index(tr[z][k], where + "[" + std::to_string(k) + "]");
      if (w > std::numeric_limits<TransitionTable::StateId>::max())
        throw Error(ErrorCode::IndexOutOfRange, where + " has an out-of-range state", z);
      row.push_back(static_cast<TransitionTable::StateId>(w));
    }
    spec.transition.set_row(z, std::move(row));
  }

  const json& pay = detail::field(j, "payoff");
  if (!pay.is_array()) throw Error(ErrorCode::ParseError, "'payoff' must be an array");
  for (std::size_t i = 0; i < pay.size(); ++i) spec.payoff.push_back(detail::ext_value(pay[i], "payoff[" + std::to_string(i) + "]"));

  spec.initial_state = detail::index(detail::field(j, "z0"), "z0");

  if (j.contains("ties")) {
    const json& ties = j.at("ties");
    if (!ties.is_array()) throw Error(ErrorCode::ParseError, "'ties' must be an array");
    for (std::size_t i = 0; i < ties.size(); ++i) {
      std::string where = "ties[" + std::to_string(i) + "]";
      if (!ties[i].is_array() || ties[i].size() != 3) throw Error(ErrorCode::ParseError, where + " must be [state, anchor, factor]");
      spec.ties.push_back(Tie{detail::index(ties[i][0], where), detail::index(ties[i][1], where), detail::number(ties[i][2], where)});
    }
  }
  return spec;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  out << text;
}

inline ProblemSpec read_problem(const std::string& path) { return problem_from_json(read_json_file(path)); }

inline void write_problem(const std::string& path, const ProblemSpec& spec) {
  write_text_file(path, problem_to_json(spec).dump() + "\n");
}

// ---- martingale trees ----

inline MartingaleTree tree_from_json(const json& j) {
  MartingaleTree tree;
  std::size_t n = detail::index(detail::field(j, "n"), "n");
  std::size_t T = detail::index(detail::field(j, "T"), "T");
  const json& x0 = detail::field(j, "x0");
  if (!x0.is_array()) throw Error(ErrorCode::ParseError, "'x0' must be an array");
  std::vector<double> root;
  for (const auto& e : x0) root.push_back(detail::number(e, "x0"));
  if (root.size() != n) throw Error(ErrorCode::InvalidTree, "'x0' must have n entries");
  tree = MartingaleTree::with_root(std::move(root));
  auto add = [&](auto&& self, std::size_t parent, const json& node, const std::string& where) -> void {
    if (!node.contains("children")) return;
    const json& kids = node.at("children");
    if (!kids.is_array()) throw Error(ErrorCode::ParseError, where + ".children must be an array");
    for (std::size_t i = 0; i < kids.size(); ++i) {
      std::string w = where + ".children[" + std::to_string(i) + "]";
      double weight = detail::number(detail::field(kids[i], "w"), w + ".w");
      const json& xj = detail::field(kids[i], "x");
      if (!xj.is_array()) throw Error(ErrorCode::ParseError, w + ".x must be an array");
      std::vector<double> x;
      for (const auto& e : xj) x.push_back(detail::number(e, w + ".x"));
      std::size_t id = tree.add_child(parent, weight, std::move(x));
      self(self, id, kids[i], w);
    }
  };
  add(add, 0, j, "tree");
  tree.n = n;
  tree.T = T;
  validate_tree(tree);
  return tree;
}

inline json tree_to_json(const MartingaleTree& tree) {
  auto node_json = [&](auto&& self, std::size_t v) -> json {
    json out = json::array();
    for (std::size_t c : tree.nodes[v].children) {
      json child;
      child["w"] = tree.nodes[c].w;
      child["x"] = tree.nodes[c].x;
      child["children"] = self(self, c);
      out.push_back(std::move(child));
    }
    return out;
  };
  json j;
  j["n"] = tree.n;
  j["T"] = tree.T;
  j["x0"] = tree.nodes[0].x;
  j["children"] = node_json(node_json, 0);
  return j;
}

// ---- CSV ----

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string values_csv(const ProblemSpec& spec, const GridFn& u) {
  std::ostringstream out;
  out << "state_index,label,value\n";
  for (std::size_t z = 0; z < u.size(); ++z)
    out << z << ',' << csv_quote(to_string(spec.state_labels[z])) << ',' << format_number(u[z]) << '\n';
  return out.str();
}

// Reads a state_index,label,value table (or a JSON array of values).
inline GridFn read_values(const std::string& path, std::size_t n_states) {
  GridFn out(n_states, ExtReal::neg_inf());
  std::vector<char> seen(n_states, 0);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    json j = read_json_file(path);
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "candidate JSON must be an array of values");
    if (j.size() != n_states) throw Error(ErrorCode::LengthMismatch, "candidate has the wrong number of values");
    for (std::size_t i = 0; i < j.size(); ++i) out[i] = detail::ext_value(j[i], "candidate[" + std::to_string(i) + "]");
    return out;
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "'" + path + "' is empty");
  std::vector<std::string> head = csv_split(line);
  std::size_t ci = head.size(), cv = head.size();
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (head[i] == "state_index") ci = i;
    if (head[i] == "value") cv = i;
  }
  if (ci == head.size() || cv == head.size()) throw Error(ErrorCode::ParseError, "missing column 'state_index' or 'value'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = csv_split(line);
    if (cells.size() != head.size()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + " has the wrong number of cells");
    std::size_t z = static_cast<std::size_t>(parse_number(cells[ci]));
    if (z >= n_states) throw Error(ErrorCode::IndexOutOfRange, "line " + std::to_string(lineno) + " names a missing state");
    out[z] = parse_number(cells[cv]);
    seen[z] = 1;
  }
  for (std::size_t z = 0; z < n_states; ++z)
    if (!seen[z]) throw Error(ErrorCode::LengthMismatch, "candidate lacks a value for state " + std::to_string(z), z);
  return out;
}

}  // namespace mgineq::io
