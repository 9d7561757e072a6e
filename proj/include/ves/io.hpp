#pragma once

// Grid CSV files and structure specifications.
//
// CSV layout: header `x,y,re,im,mask`, one row per node with y outer and x
// inner, values printed with 17 significant digits. Real fields are written
// with im = 0.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ves/algebra.hpp"
#include "ves/seedlang.hpp"

namespace ves {

namespace detail {

inline void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace detail

inline std::string to_csv(const ComplexGridField& f) {
  const GridSpec& g = f.spec();
  std::string out = "x,y,re,im,mask\n";
  out.reserve(g.size() * 96);
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const bool ok = f.valid(i, j);
      const cplx v = ok ? f(i, j) : cplx{};
      detail::append_g17(out, g.x(i));
      out += ',';
      detail::append_g17(out, g.y(j));
      out += ',';
      detail::append_g17(out, v.real());
      out += ',';
      detail::append_g17(out, v.imag());
      out += ok ? ",1\n" : ",0\n";
    }
  }
  return out;
}

inline std::string to_csv(const RealGridField& f) { return to_csv(to_complex(f)); }

template <class T>
void write_csv(const std::string& path, const GridField<T>& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  os << to_csv(f);
  if (!os) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

/// Parses the CSV layout back; the grid is reconstructed from the x and y
/// columns and must be uniform.
inline ComplexGridField parse_csv(std::istream& in, const std::string& name = "<csv>") {
  auto fail = [&](const std::string& what) -> void { throw Error(ErrorKind::io, name + ": " + what); };
  std::string line;
  if (!std::getline(in, line)) fail("empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,re,im,mask") fail("bad header '" + line + "'");

  struct Row {
    double x, y, re, im;
    int mask;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Row r{};
    std::istringstream ls(line);
    std::string cell;
    double vals[4];
    for (double& v : vals) {
      if (!std::getline(ls, cell, ',')) fail("line " + std::to_string(lineno) + ": too few columns");
      try {
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail("line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (!std::getline(ls, cell) || (cell != "0" && cell != "1")) {
      fail("line " + std::to_string(lineno) + ": mask must be 0 or 1");
    }
    r.x = vals[0];
    r.y = vals[1];
    r.re = vals[2];
    r.im = vals[3];
    r.mask = cell == "1";
    rows.push_back(r);
  }
  if (rows.empty()) fail("no data rows");
  std::size_t nx = 1;
  while (nx < rows.size() && rows[nx].y == rows[0].y) ++nx;
  if (rows.size() % nx != 0) fail("row count is not a multiple of the row length");
  const std::size_t ny = rows.size() / nx;
  if (nx < 5 || ny < 5) fail("grid smaller than 5 x 5");
  const GridSpec g(rows.front().x, rows[nx - 1].x, rows.front().y, rows.back().y, nx, ny);
  ComplexGridField f(g);
  const double tol = 1e-9;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const Row& r = rows[j * nx + i];
      if (std::abs(r.x - g.x(i)) > tol * (1.0 + std::abs(g.x(i))) ||
          std::abs(r.y - g.y(j)) > tol * (1.0 + std::abs(g.y(j)))) {
        fail("node (" + std::to_string(i) + ", " + std::to_string(j) + ") is off the uniform grid");
      }
      f(i, j) = cplx(r.re, r.im);
      f.set_valid(i, j, r.mask != 0);
    }
  }
  return f;
}

inline ComplexGridField read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read '" + path + "'");
  return parse_csv(in, path);
}

/// Real field from a CSV; a nonzero imaginary column is rejected.
inline RealGridField read_real_csv(const std::string& path) {
  const ComplexGridField c = read_csv(path);
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c.valid(k) && c[k].imag() != 0.0) throw Error(ErrorKind::io, path + ": expected a real field");
  }
  return real_part(c);
}

// ---------------------------------------------------------------------------
// Structure specifications

/// Where a structure comes from.
///   named:   delta_family (delta), constant (alpha, beta; default lambda = i),
///            custom_lambda (expr in x, y with Im > 0)
///   sampled: alpha and beta CSV files on one grid
struct StructureSpec {
  std::string kind = "named";
  std::string name = "delta_family";
  seed::ParamMap params;
  std::string expr;
  std::string alpha_file, beta_file;
};

inline constexpr const char* kDefaultCustomLambda = "x + 1i";

/// Closed-form structure from lambda(x, y) given as an expression; partials
/// come from dual-number evaluation in each variable.
inline EllipticStructure custom_lambda_structure(const std::string& text, const seed::ParamMap& params = {}) {
  std::vector<std::string> names;
  for (const auto& [k, v] : params) names.push_back(k);
  auto expr = std::make_shared<const seed::Expr>(seed::parse(text, seed::ParseOptions{{"x", "y"}, names}));
  if (auto missing = seed::unbound_parameters(*expr, params); !missing.empty()) {
    throw Error(ErrorKind::usage, "unbound parameter '" + missing.front() + "'");
  }
  return EllipticStructure::from_lambda(
      "custom_lambda(" + text + ")",
      [expr, params](double x, double y) -> std::optional<std::array<cplx, 3>> {
        const cplx vars[2] = {cplx(x, 0.0), cplx(y, 0.0)};
        try {
          const seed::DualComplex dx = seed::evaluate_dual(*expr, vars, 0, params);
          const seed::DualComplex dy = seed::evaluate_dual(*expr, vars, 1, params);
          return std::array<cplx, 3>{dx.value, dx.deriv, dy.deriv};
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::singular || e.kind() == ErrorKind::domain) return std::nullopt;
          throw;
        }
      });
}

inline double real_param(const seed::ParamMap& params, const std::string& name, double fallback) {
  auto it = params.find(name);
  if (it == params.end()) return fallback;
  if (it->second.imag() != 0.0) throw Error(ErrorKind::usage, "parameter '" + name + "' must be real");
  return it->second.real();
}

inline EllipticStructure make_structure(const StructureSpec& spec) {
  if (spec.kind == "sampled") {
    if (spec.alpha_file.empty() || spec.beta_file.empty()) {
      throw Error(ErrorKind::usage, "sampled structure needs files.alpha and files.beta");
    }
    return EllipticStructure::sampled("sampled(" + spec.alpha_file + ", " + spec.beta_file + ")",
                                      read_real_csv(spec.alpha_file), read_real_csv(spec.beta_file));
  }
  if (spec.kind != "named") throw Error(ErrorKind::usage, "structure kind must be 'named' or 'sampled'");
  if (spec.name == "delta_family" || spec.name == "delta") {
    return delta_family_structure(real_param(spec.params, "delta", 1.0));
  }
  if (spec.name == "constant") {
    return constant_structure(real_param(spec.params, "alpha", 1.0), real_param(spec.params, "beta", 0.0));
  }
  if (spec.name == "custom_lambda" || spec.name == "custom") {
    seed::ParamMap rest = spec.params;
    return custom_lambda_structure(spec.expr.empty() ? kDefaultCustomLambda : spec.expr, rest);
  }
  throw Error(ErrorKind::usage, "unknown structure '" + spec.name + "' (known: delta_family, constant, custom_lambda)");
}

}  // namespace ves
