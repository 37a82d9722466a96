#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ocfem/kkt.hpp"
#include "ocfem/problem.hpp"

namespace ocfem {

enum class RunMode { solve, certify, study, alpha_sweep };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::solve:
      return "solve";
    case RunMode::certify:
      return "certify";
    case RunMode::study:
      return "study";
    default:
      return "sweep-alpha";
  }
}

/// Everything a run needs: the problem, the mode, mesh levels, solver knobs,
/// and artifact destination.
struct RunConfig {
  ProblemSpec problem;
  RunMode mode = RunMode::solve;
  int level = 0;                       // solve / certify / sweep-alpha
  int level_lo = 0;                    // study
  int level_hi = 0;
  int reference_level = 0;
  PdasConfig pdas;
  std::string output_dir = "out";
  std::optional<double> C_q;
  std::vector<double> alphas;          // sweep-alpha
  std::string source_text;             // raw config bytes, hashed into the manifest
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_double(const std::string& tok, int line) {
  const std::string t = trim(tok);
  if (t == "inf" || t == "+inf") return infinity;
  if (t == "-inf") return -infinity;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError("line " + std::to_string(line) + ": malformed number '" + t + "'");
  return v;
}

inline int parse_int(const std::string& tok, int line) {
  const std::string t = trim(tok);
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError("line " + std::to_string(line) + ": malformed integer '" + t + "'");
  return static_cast<int>(v);
}

inline std::vector<double> parse_double_list(const std::string& tok, int line) {
  std::vector<double> out;
  std::stringstream ss(tok);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, line));
  if (out.empty())
    throw ConfigError("line " + std::to_string(line) + ": expected a comma-separated list");
  return out;
}

/// "A..B" inclusive level range.
inline std::pair<int, int> parse_level_range(const std::string& tok, int line) {
  const std::string t = trim(tok);
  const size_t dots = t.find("..");
  if (dots == std::string::npos)
    throw ConfigError("line " + std::to_string(line) + ": expected a range 'A..B', got '" + t +
                      "'");
  return {parse_int(t.substr(0, dots), line), parse_int(t.substr(dots + 2), line)};
}

inline ScalarField parse_field(const std::string& tok, int line) {
  const std::string t = trim(tok);
  if (t == "pyramid_lower") return pyramid_lower_field();
  if (t.rfind("constant:", 0) == 0) return constant_field(parse_double(t.substr(9), line));
  if (t == "inf" || t == "+inf") return constant_field(infinity);
  if (t == "-inf") return constant_field(-infinity);
  // bare numbers double as constants
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (!t.empty() && end == t.c_str() + t.size()) return constant_field(v);
  throw ConfigError("line " + std::to_string(line) + ": unknown field '" + t +
                    "'; built-ins: constant:<value>, pyramid_lower, inf, -inf");
}

inline ConstraintRegion parse_region(const std::string& tok, int line) {
  const std::string t = trim(tok);
  if (t == "none" || t == "empty") return ConstraintRegion::make_empty();
  if (t == "whole_domain") return ConstraintRegion::make_whole_domain();
  if (t.rfind("polygon:", 0) == 0) {
    std::vector<Vec2> verts;
    std::stringstream ss(t.substr(8));
    std::string pairtok;
    while (std::getline(ss, pairtok, ';')) {
      const size_t comma = pairtok.find(',');
      if (comma == std::string::npos)
        throw ConfigError("line " + std::to_string(line) +
                          ": polygon vertices must be 'x,y' pairs separated by ';'");
      verts.push_back({parse_double(pairtok.substr(0, comma), line),
                       parse_double(pairtok.substr(comma + 1), line)});
    }
    try {
      return ConstraintRegion::make_polygon(verts);
    } catch (const InvalidArgument& e) {
      throw ConfigError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  throw ConfigError("line " + std::to_string(line) + ": unknown region '" + t +
                    "'; options: none, whole_domain, polygon:x,y;x,y;...");
}

}  // namespace detail

/// Parses the flat key=value configuration dialect. '#' starts a comment,
/// blank lines are ignored, keys may appear once.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, int> seen;  // key -> line

  std::string nonlinearity_name;
  std::vector<double> poly_coeffs;
  std::optional<double> poly_r, poly_M;
  int nonlinearity_line = 0;

  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = detail::trim(raw);
    if (stripped.empty()) continue;

    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line) + ": empty key");
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key +
                        "' (first on line " + std::to_string(seen[key]) + ")");
    seen[key] = line;

    if (key == "nonlinearity") {
      nonlinearity_name = value;
      nonlinearity_line = line;
    } else if (key == "poly_coeffs") {
      poly_coeffs = detail::parse_double_list(value, line);
    } else if (key == "poly_r") {
      poly_r = detail::parse_double(value, line);
    } else if (key == "poly_M") {
      poly_M = detail::parse_double(value, line);
    } else if (key == "alpha") {
      cfg.problem.alpha = detail::parse_double(value, line);
    } else if (key == "y0") {
      cfg.problem.y0 = detail::parse_field(value, line);
    } else if (key == "y_lower") {
      cfg.problem.y_lower = detail::parse_field(value, line);
    } else if (key == "y_upper") {
      cfg.problem.y_upper = detail::parse_field(value, line);
    } else if (key == "u_lower") {
      cfg.problem.u_lower = detail::parse_double(value, line);
    } else if (key == "u_upper") {
      cfg.problem.u_upper = detail::parse_double(value, line);
    } else if (key == "region") {
      cfg.problem.region = detail::parse_region(value, line);
    } else if (key == "quad_order") {
      cfg.problem.quad_order = detail::parse_int(value, line);
    } else if (key == "mode") {
      if (value == "solve")
        cfg.mode = RunMode::solve;
      else if (value == "certify")
        cfg.mode = RunMode::certify;
      else if (value == "study")
        cfg.mode = RunMode::study;
      else if (value == "sweep_alpha" || value == "sweep-alpha")
        cfg.mode = RunMode::alpha_sweep;
      else
        throw ConfigError("line " + std::to_string(line) + ": unknown mode '" + value +
                          "'; options: solve, certify, study, sweep-alpha");
    } else if (key == "level") {
      cfg.level = detail::parse_int(value, line);
    } else if (key == "levels") {
      const auto [lo, hi] = detail::parse_level_range(value, line);
      cfg.level_lo = lo;
      cfg.level_hi = hi;
    } else if (key == "reference_level") {
      cfg.reference_level = detail::parse_int(value, line);
    } else if (key == "alphas") {
      cfg.alphas = detail::parse_double_list(value, line);
    } else if (key == "output_dir") {
      if (value.empty())
        throw ConfigError("line " + std::to_string(line) + ": output_dir must not be empty");
      cfg.output_dir = value;
    } else if (key == "C_q") {
      cfg.C_q = detail::parse_double(value, line);
    } else if (key == "tol_kkt") {
      cfg.pdas.tol_kkt = detail::parse_double(value, line);
    } else if (key == "max_outer") {
      cfg.pdas.max_outer = detail::parse_int(value, line);
    } else if (key == "max_newton_inner") {
      cfg.pdas.max_newton_inner = detail::parse_int(value, line);
    } else if (key == "c_pdas") {
      cfg.pdas.c_pdas = detail::parse_double(value, line);
    } else {
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }

  for (const char* required : {"nonlinearity", "alpha", "y0"})
    if (!seen.count(required))
      throw ConfigError(std::string("missing required key '") + required + "'");

  if (nonlinearity_name == "linear") {
    cfg.problem.phi = make_linear();
  } else if (nonlinearity_name == "cubic") {
    cfg.problem.phi = make_cubic();
  } else if (nonlinearity_name == "linear_cubic") {
    cfg.problem.phi = make_linear_cubic();
  } else if (nonlinearity_name == "polynomial") {
    if (poly_coeffs.empty() || !poly_r || !poly_M)
      throw ConfigError("line " + std::to_string(nonlinearity_line) +
                        ": polynomial nonlinearity needs poly_coeffs, poly_r and poly_M");
    cfg.problem.phi = make_polynomial(poly_coeffs, *poly_r, *poly_M);
  } else {
    throw ConfigError("line " + std::to_string(nonlinearity_line) +
                      ": unknown nonlinearity '" + nonlinearity_name +
                      "'; catalog: linear, cubic, linear_cubic, polynomial");
  }

  try {
    cfg.problem.validate();
    cfg.pdas.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  cfg.source_text = text;
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace ocfem
