#pragma once

// The Burgers transform: lambda = h(y - lambda x) solved pointwise by damped
// Newton iteration and continued column by column away from the y-axis.
// Produces lambda, the characteristic Jacobian J = 1 + h'(w0) x with
// w0 = y - lambda x, exact partials lambda_y = h'(w0) / J and
// lambda_x = -lambda lambda_y, and the mask of the Burgers domain {J != 0}.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "ves/seedlang.hpp"
#include "ves/spectral.hpp"

namespace ves {

/// A holomorphic seed: returns (h(w), h'(w)).
struct Seed {
  std::string description;
  std::function<seed::DualComplex(cplx)> fn;

  cplx h(cplx w) const { return fn(w).value; }
  cplx dh(cplx w) const { return fn(w).deriv; }
};

namespace detail {

inline cplx param_or(const seed::ParamMap& params, const char* name, cplx fallback) {
  auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

}  // namespace detail

/// Seed from an expression in w; its derivative comes from dual numbers.
inline Seed expression_seed(const std::string& text, const seed::ParamMap& params = {}) {
  std::vector<std::string> names;
  for (const auto& [k, v] : params) names.push_back(k);
  auto expr = std::make_shared<const seed::Expr>(seed::parse_seed(text, names));
  return Seed{"expr(" + text + ")", [expr, params](cplx w) { return seed::eval_seed_dual(*expr, w, params); }};
}

/// Built-in seeds:
///   delta   h(w) = w + i delta         (delta > 0, default 1)
///   affine  h(w) = a w + b             (defaults a = 1, b = i)
///   exp     h(w) = i exp(c w)          (default c = 1)
inline Seed builtin_seed(const std::string& name, const seed::ParamMap& params = {}) {
  std::ostringstream os;
  if (name == "delta") {
    const cplx d = detail::param_or(params, "delta", 1.0);
    if (d.imag() != 0.0 || !(d.real() > 0.0)) throw Error(ErrorKind::usage, "delta seed needs real delta > 0");
    os << "delta(delta=" << d.real() << ")";
    const double delta = d.real();
    return Seed{os.str(), [delta](cplx w) { return seed::DualComplex(w + cplx(0.0, delta), 1.0); }};
  }
  if (name == "affine") {
    const cplx a = detail::param_or(params, "a", 1.0), b = detail::param_or(params, "b", I);
    os << "affine(a=" << a << ", b=" << b << ")";
    return Seed{os.str(), [a, b](cplx w) { return seed::DualComplex(a * w + b, a); }};
  }
  if (name == "exp") {
    const cplx c = detail::param_or(params, "c", 1.0);
    os << "exp(c=" << c << ")";
    return Seed{os.str(), [c](cplx w) {
                  const cplx e = I * std::exp(c * w);
                  return seed::DualComplex(e, c * e);
                }};
  }
  throw Error(ErrorKind::usage, "unknown seed '" + name + "' (known: delta, affine, exp)");
}

inline bool is_builtin_seed(const std::string& name) { return name == "delta" || name == "affine" || name == "exp"; }

/// Built-in name or expression.
inline Seed make_seed(const std::string& name_or_expr, const seed::ParamMap& params = {}) {
  return is_builtin_seed(name_or_expr) ? builtin_seed(name_or_expr, params) : expression_seed(name_or_expr, params);
}

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
  double j_min = 1e-8;
  int max_halvings = 20;
};

struct BurgersPoint {
  cplx lambda;
  cplx J;
  int iterations = 0;
};

/// Newton on F(lambda) = lambda - h(y - lambda x), F' = 1 + x h'(y - lambda x) = J.
/// Steps are halved (up to max_halvings times) while |F| would grow.
inline BurgersPoint burgers_solve_point(const Seed& s, double x, double y, cplx initial,
                                        const NewtonOptions& opt = {}) {
  auto residual = [&](cplx lam, cplx* J) {
    const seed::DualComplex hw = s.fn(cplx(y, 0.0) - lam * x);
    if (J) *J = 1.0 + hw.deriv * x;
    return lam - hw.value;
  };
  auto where = [&] {
    std::ostringstream os;
    os << " at (" << x << ", " << y << ")";
    return os.str();
  };

  cplx lam = initial;
  cplx J;
  cplx F = residual(lam, &J);
  int it = 0;
  while (std::abs(F) > opt.tol) {
    if (it >= opt.max_iter) throw Error(ErrorKind::numerical, "no convergence" + where());
    if (std::abs(J) < opt.j_min) throw Error(ErrorKind::numerical, "near-shock: |J| < J_min" + where());
    const cplx step = -F / J;
    double t = 1.0;
    cplx next = lam + step, Jn;
    cplx Fn = residual(next, &Jn);
    for (int k = 0; k < opt.max_halvings && !(std::abs(Fn) < std::abs(F)); ++k) {
      t *= 0.5;
      next = lam + t * step;
      Fn = residual(next, &Jn);
    }
    if (!(std::abs(Fn) < std::abs(F))) throw Error(ErrorKind::numerical, "no convergence (stalled)" + where());
    lam = next;
    F = Fn;
    J = Jn;
    ++it;
  }
  if (std::abs(J) < opt.j_min) throw Error(ErrorKind::numerical, "near-shock: |J| < J_min" + where());
  if (!(lam.imag() > 0.0)) throw Error(ErrorKind::degenerate, "ellipticity lost" + where());
  return {lam, J, it};
}

enum class MaskReason : std::uint8_t { ok, near_shock, no_convergence, ellipticity_lost, singular_seed, shadowed };

inline const char* to_string(MaskReason r) {
  switch (r) {
    case MaskReason::ok: return "ok";
    case MaskReason::near_shock: return "near_shock";
    case MaskReason::no_convergence: return "no_convergence";
    case MaskReason::ellipticity_lost: return "ellipticity_lost";
    case MaskReason::singular_seed: return "singular_seed";
    case MaskReason::shadowed: return "shadowed";
  }
  return "unknown";
}

struct BurgersSolution {
  ComplexGridField lambda, J, w0, lambda_x, lambda_y;
  GridField<int> iterations;
  GridField<MaskReason> reasons;
  std::string seed_description;
  std::size_t start_column = 0;

  const GridSpec& grid() const { return lambda.spec(); }

  SpectralField spectral() const { return SpectralField(lambda, Provenance::from_burgers, lambda_x, lambda_y); }

  std::map<std::string, std::size_t> reason_counts() const {
    std::map<std::string, std::size_t> out;
    for (std::size_t k = 0; k < reasons.size(); ++k) ++out[to_string(reasons[k])];
    return out;
  }
};

/// Continuation from the start column (the y-axis unless another column is
/// given) outward in +x, then in -x. Each point starts Newton from its inward
/// neighbour; once a point in a row fails, every point further out in that
/// row is masked as shadowed.
inline BurgersSolution burgers_field(const Seed& s, const GridSpec& grid, const NewtonOptions& opt = {},
                                     std::optional<std::size_t> start_column = std::nullopt) {
  if (!start_column) start_column = grid.axis_column();
  if (!start_column || *start_column >= grid.nx()) {
    throw Error(ErrorKind::usage, "no initial column: grid does not contain x = 0 and no transversal was declared");
  }
  BurgersSolution out;
  out.lambda = out.J = out.w0 = out.lambda_x = out.lambda_y = ComplexGridField(grid);
  out.iterations = GridField<int>(grid, 0);
  out.reasons = GridField<MaskReason>(grid, MaskReason::ok);
  out.seed_description = s.description;
  out.start_column = *start_column;

  auto mark = [&](std::size_t i, std::size_t j, MaskReason r) {
    out.reasons(i, j) = r;
    for (auto* f : {&out.lambda, &out.J, &out.w0, &out.lambda_x, &out.lambda_y}) f->set_valid(i, j, false);
    out.iterations.set_valid(i, j, false);
  };

  auto solve = [&](std::size_t i, std::size_t j, std::optional<cplx> initial) {
    const double x = grid.x(i), y = grid.y(j);
    try {
      if (!initial) initial = s.h(cplx(y, 0.0));
      const BurgersPoint p = burgers_solve_point(s, x, y, *initial, opt);
      const cplx w0 = cplx(y, 0.0) - p.lambda * x;
      const cplx ly = s.dh(w0) / p.J;
      out.lambda(i, j) = p.lambda;
      out.J(i, j) = p.J;
      out.w0(i, j) = w0;
      out.lambda_y(i, j) = ly;
      out.lambda_x(i, j) = -p.lambda * ly;
      out.iterations(i, j) = p.iterations;
    } catch (const Error& e) {
      const std::string what = e.what();
      MaskReason r = MaskReason::no_convergence;
      if (e.kind() == ErrorKind::singular || e.kind() == ErrorKind::domain) {
        r = MaskReason::singular_seed;
      } else if (e.kind() == ErrorKind::degenerate) {
        r = MaskReason::ellipticity_lost;
      } else if (what.rfind("near-shock", 0) == 0) {
        r = MaskReason::near_shock;
      }
      mark(i, j, r);
    }
  };

  const std::size_t a = *start_column;
  for (std::size_t j = 0; j < grid.ny(); ++j) solve(a, j, std::nullopt);
  for (std::size_t i = a + 1; i < grid.nx(); ++i) {
    for (std::size_t j = 0; j < grid.ny(); ++j) {
      if (out.lambda.valid(i - 1, j)) {
        solve(i, j, out.lambda(i - 1, j));
      } else {
        mark(i, j, MaskReason::shadowed);
      }
    }
  }
  for (std::size_t i = a; i-- > 0;) {
    for (std::size_t j = 0; j < grid.ny(); ++j) {
      if (out.lambda.valid(i + 1, j)) {
        solve(i, j, out.lambda(i + 1, j));
      } else {
        mark(i, j, MaskReason::shadowed);
      }
    }
  }
  return out;
}

/// max |lambda - h(y - lambda x)| over unmasked points, recomputed from the
/// stored lambda.
inline double burgers_self_residual(const Seed& s, const BurgersSolution& sol) {
  double m = 0.0;
  const GridSpec& g = sol.grid();
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      if (!sol.lambda.valid(i, j)) continue;
      const cplx lam = sol.lambda(i, j);
      m = std::max(m, std::abs(lam - s.h(cplx(g.y(j), 0.0) - lam * g.x(i))));
    }
  }
  return m;
}

/// Point provider for off-grid lambda: continues from (0, y) to (x, y) in
/// `steps` equal increments of x, reusing each solution as the next guess.
inline LambdaProvider burgers_provider(Seed s, NewtonOptions opt = {}, int steps = 16) {
  return [s = std::move(s), opt, steps](double x, double y) {
    cplx lam = s.h(cplx(y, 0.0));
    BurgersPoint p{lam, 1.0, 0};
    for (int k = 1; k <= steps; ++k) {
      const double xk = x * static_cast<double>(k) / static_cast<double>(steps);
      p = burgers_solve_point(s, xk, y, lam, opt);
      lam = p.lambda;
    }
    const cplx w0 = cplx(y, 0.0) - lam * x;
    const cplx ly = s.dh(w0) / p.J;
    return LambdaPoint{lam, -lam * ly, ly};
  };
}

}  // namespace ves
