#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "baladin/netio/network.hpp"

namespace baladin::netio {

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;

struct Matrix {
  int line = 0;                          // line of the `mpc.X = [` header
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;
};

struct CaseBlocks {
  std::map<std::string, Matrix> matrices;
  std::map<std::string, std::pair<int, double>> scalars;
  std::map<std::string, int> strings;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string_view strip_comment(std::string_view s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\'') in_str = !in_str;
    if (!in_str && s[i] == '%') return s.substr(0, i);
  }
  return s;
}

inline double parse_number(std::string_view tok, int line) {
  std::string t(tok);
  if (t == "Inf" || t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-Inf" || t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (!t.empty() && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw ParseError(line, "invalid number '" + t + "'");
  return v;
}

/// Splits the body of a matrix literal into numeric rows; rows end at ';' or newline.
inline void append_matrix_text(Matrix& m, std::vector<double>& cur, std::string_view body, int line) {
  std::size_t i = 0;
  auto flush = [&] {
    if (!cur.empty()) {
      m.rows.push_back(std::move(cur));
      m.row_lines.push_back(line);
      cur.clear();
    }
  };
  while (i < body.size()) {
    char c = body[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
    } else if (c == ';') {
      flush();
      ++i;
    } else {
      std::size_t j = i;
      while (j < body.size() && !std::isspace(static_cast<unsigned char>(body[j])) && body[j] != ',' &&
             body[j] != ';')
        ++j;
      cur.push_back(parse_number(body.substr(i, j - i), line));
      i = j;
    }
  }
  flush();
}

inline CaseBlocks scan(std::istream& in) {
  CaseBlocks out;
  std::string raw;
  int line = 0;
  Matrix* open = nullptr;
  std::string open_name;
  std::vector<double> cur;

  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = trim(strip_comment(raw));
    if (s.empty()) continue;

    if (open) {
      auto close = s.find(']');
      std::string_view body = s.substr(0, close);
      append_matrix_text(*open, cur, body, line);
      if (close != std::string_view::npos) {
        if (!cur.empty()) throw ParseError(line, "internal row buffer");
        std::string_view rest = trim(s.substr(close + 1));
        if (!(rest.empty() || rest == ";")) throw ParseError(line, "unexpected text after ']'");
        open = nullptr;
      }
      continue;
    }

    if (s.rfind("function", 0) == 0) continue;
    if (s.rfind("mpc.", 0) != 0) throw ParseError(line, "unexpected statement '" + std::string(s) + "'");

    auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "missing '='");
    std::string name(trim(s.substr(4, eq - 4)));
    if (name.empty()) throw ParseError(line, "missing field name");
    std::string_view rhs = trim(s.substr(eq + 1));
    if (rhs.empty()) throw ParseError(line, "missing value for mpc." + name);

    if (rhs.front() == '[') {
      if (out.matrices.count(name)) throw ParseError(line, "duplicate block mpc." + name);
      Matrix& m = out.matrices[name];
      m.line = line;
      rhs.remove_prefix(1);
      auto close = rhs.find(']');
      append_matrix_text(m, cur, rhs.substr(0, close), line);
      if (close != std::string_view::npos) {
        std::string_view rest = trim(rhs.substr(close + 1));
        if (!(rest.empty() || rest == ";")) throw ParseError(line, "unexpected text after ']'");
      } else {
        open = &m;
        open_name = name;
      }
    } else if (rhs.front() == '\'') {
      auto end = rhs.find('\'', 1);
      if (end == std::string_view::npos) throw ParseError(line, "unterminated string");
      out.strings[name] = line;
    } else if (rhs.front() == '{') {
      throw ParseError(line, "cell arrays are not supported (mpc." + name + ")");
    } else {
      if (rhs.back() == ';') rhs.remove_suffix(1);
      out.scalars[name] = {line, parse_number(trim(rhs), line)};
    }
  }
  if (open) throw ParseError(line, "unterminated matrix mpc." + open_name);
  return out;
}

inline const Matrix& require(const CaseBlocks& b, const std::string& name) {
  auto it = b.matrices.find(name);
  if (it == b.matrices.end()) throw SemanticError("mpc." + name, "required block missing");
  return it->second;
}

inline void require_cols(const Matrix& m, std::size_t n, const std::string& name) {
  for (std::size_t r = 0; r < m.rows.size(); ++r)
    if (m.rows[r].size() < n)
      throw ParseError(m.row_lines[r], "mpc." + name + " row has " + std::to_string(m.rows[r].size()) +
                                           " columns, expected at least " + std::to_string(n));
}

inline int as_int(double v, int line, const char* what) {
  if (v != std::floor(v)) throw ParseError(line, std::string(what) + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace detail

/**
 * Parses a MATPOWER version-2 case into a validated per-unit PowerNetwork.
 *
 * @throws ParseError on malformed text, SemanticError on invalid content.
 */
inline PowerNetwork parse_matpower(std::istream& in) {
  using namespace detail;
  CaseBlocks blk = scan(in);

  static const char* known[] = {"bus", "gen", "branch", "gencost"};
  for (const auto& [name, m] : blk.matrices) {
    bool ok = false;
    for (const char* k : known) ok = ok || name == k;
    if (!ok) throw SemanticError("mpc." + name, "unsupported block");
  }
  for (const auto& [name, v] : blk.scalars)
    if (name != "baseMVA") throw SemanticError("mpc." + name, "unsupported field");
  for (const auto& [name, l] : blk.strings)
    if (name != "version") throw SemanticError("mpc." + name, "unsupported field");

  auto base_it = blk.scalars.find("baseMVA");
  if (base_it == blk.scalars.end()) throw SemanticError("mpc.baseMVA", "required field missing");

  const Matrix& bus = require(blk, "bus");
  const Matrix& gen = require(blk, "gen");
  const Matrix& branch = require(blk, "branch");
  const Matrix& gencost = require(blk, "gencost");
  require_cols(bus, 13, "bus");
  require_cols(gen, 10, "gen");
  require_cols(branch, 11, "branch");
  require_cols(gencost, 4, "gencost");

  PowerNetwork net;
  net.base_mva = base_it->second.second;
  const double base = net.base_mva;
  if (!(base > 0.0)) throw SemanticError("mpc.baseMVA", "must be positive");

  for (std::size_t r = 0; r < bus.rows.size(); ++r) {
    const auto& row = bus.rows[r];
    const int line = bus.row_lines[r];
    Bus b;
    b.id = as_int(row[0], line, "bus id");
    int type = as_int(row[1], line, "bus type");
    switch (type) {
      case 1: b.type = BusType::PQ; break;
      case 2: b.type = BusType::PV; break;
      case 3: b.type = BusType::Slack; break;
      case 4: throw SemanticError("bus " + std::to_string(b.id), "isolated bus type 4 is not supported");
      default: throw SemanticError("bus " + std::to_string(b.id), "unknown bus type " + std::to_string(type));
    }
    b.p_load = row[2] / base;
    b.q_load = row[3] / base;
    b.g_shunt = row[4] / base;
    b.b_shunt = row[5] / base;
    b.v_max = row[11];
    b.v_min = row[12];
    net.buses.push_back(b);
  }

  const bool cost_rows_match = gencost.rows.size() == gen.rows.size();
  if (gencost.rows.size() == 2 * gen.rows.size() && !gen.rows.empty())
    throw SemanticError("mpc.gencost", "reactive power cost rows are not supported");
  if (!cost_rows_match)
    throw SemanticError("mpc.gencost", "row count " + std::to_string(gencost.rows.size()) +
                                           " does not match generator count " + std::to_string(gen.rows.size()));

  for (std::size_t r = 0; r < gen.rows.size(); ++r) {
    const auto& row = gen.rows[r];
    const int line = gen.row_lines[r];
    const auto& crow = gencost.rows[r];
    const int cline = gencost.row_lines[r];
    const std::string crec = "gencost row " + std::to_string(r + 1);
    int model = as_int(crow[0], cline, "cost model");
    if (model == 1) throw SemanticError(crec, "piecewise-linear cost is not supported");
    if (model != 2) throw SemanticError(crec, "unknown cost model " + std::to_string(model));
    int n = as_int(crow[3], cline, "cost term count");
    if (n < 0 || n > 3) throw SemanticError(crec, "polynomial degree above 2 is not supported");
    if (crow.size() < static_cast<std::size_t>(4 + n))
      throw ParseError(cline, "gencost row has fewer coefficients than declared");

    const int status = as_int(row[7], line, "gen status");
    if (status <= 0) continue;

    // coefficients are listed highest degree first
    double c[3] = {0.0, 0.0, 0.0};  // c[k] multiplies P^k
    for (int k = 0; k < n; ++k) c[n - 1 - k] = crow[4 + k];

    Generator g;
    g.bus = as_int(row[0], line, "gen bus");
    g.q_max = row[3] / base;
    g.q_min = row[4] / base;
    g.p_max = row[8] / base;
    g.p_min = row[9] / base;
    g.cost_a2 = c[2] * base * base;
    g.cost_a1 = c[1] * base;
    g.cost_a0 = c[0];
    net.generators.push_back(g);
  }

  for (std::size_t r = 0; r < branch.rows.size(); ++r) {
    const auto& row = branch.rows[r];
    const int line = branch.row_lines[r];
    const int status = as_int(row[10], line, "branch status");
    if (status <= 0) continue;
    Branch br;
    br.from = as_int(row[0], line, "from bus");
    br.to = as_int(row[1], line, "to bus");
    br.r = row[2];
    br.x = row[3];
    br.b_charging = row[4];
    double rate_a = row[5];
    if (rate_a > 0.0 && std::isfinite(rate_a)) br.s_max = rate_a / base;
    br.tap = row[8] == 0.0 ? 1.0 : row[8];
    br.shift = row[9] * kPi / 180.0;
    if (row.size() >= 13) {
      double amin = row[11];
      double amax = row[12];
      // MATPOWER treats 0/0 and |angle| >= 360 as unconstrained
      bool unbounded = (amin == 0.0 && amax == 0.0);
      if (!unbounded) {
        br.angle_min = amin <= -360.0 ? -kHalfPi : std::max(amin * kPi / 180.0, -kHalfPi);
        br.angle_max = amax >= 360.0 ? kHalfPi : std::min(amax * kPi / 180.0, kHalfPi);
      }
    }
    net.branches.push_back(br);
  }

  validate(net);
  return net;
}

inline PowerNetwork parse_matpower(const std::string& text) {
  std::istringstream in(text);
  return parse_matpower(in);
}

/// Raised when a case file cannot be opened.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& path) : std::runtime_error("cannot open '" + path + "'"), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline PowerNetwork load_matpower(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path);
  return parse_matpower(in);
}

}  // namespace baladin::netio
