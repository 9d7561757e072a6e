#pragma once

// Reduction of the rigid variable-algebra Vekua equation
//
//   f_x + lambda f_y + 2 A f + 2 B conj(f) = 2 F
//
// to the standard Vekua equation f_xibar + A' f + B' conj(f) = F' in the
// canonical coordinate, with A' = 2A/Phi, B' = 2B/Phi, F' = 2F/Phi. The
// reduced coefficients stay indexed by the (x, y) grid.

#include <functional>
#include <optional>
#include <sstream>
#include <string>

#include "ves/canonical.hpp"
#include "ves/seedlang.hpp"

namespace ves {

struct VekuaProblem {
  SpectralField lambda;
  ComplexGridField A, B, F;  // A_lambda, B_lambda, F_lambda
};

/// Raised when reduction is attempted on a structure that is not rigid.
class RefusalError : public Error {
 public:
  RefusalError(double max_rho_T, double tolerance)
      : Error(ErrorKind::refusal, message(max_rho_T, tolerance)), max_rho_T_(max_rho_T), tolerance_(tolerance) {}

  double max_rho_T() const { return max_rho_T_; }
  double tolerance() const { return tolerance_; }

 private:
  static std::string message(double rho, double tol) {
    std::ostringstream os;
    os << "reduction refused: structure is not rigid (max rho_T = " << rho << ", tolerance = " << tol << ")";
    return os.str();
  }
  double max_rho_T_, tolerance_;
};

struct ReducedVekua {
  ComplexGridField A_prime, B_prime, F_prime;
  CanonicalChart chart;
  std::size_t phi_zero_count = 0;  // points masked with reason Phi_zero
  double max_rho_T = 0.0;
};

/// |Phi| below this (at a point with spectral value lambda) is treated as zero.
inline double phi_zero_threshold(cplx lambda) { return 1e-10 * (1.0 + std::abs(lambda)); }

inline ReducedVekua reduce(const VekuaProblem& problem, const CanonicalChart& chart, int order = 2,
                           std::optional<double> tolerance = std::nullopt) {
  const TransportDiagnostics d = transport_residual(problem.lambda, order);
  const double tol = tolerance.value_or(rigidity_tolerance(problem.lambda.grid()));
  if (!rigid_verdict(d, tol)) throw RefusalError(d.max_rho_T, tol);
  problem.A.check_same_grid(chart.phi);

  ReducedVekua out;
  out.chart = chart;
  out.max_rho_T = d.max_rho_T;
  const GridSpec& g = chart.grid();
  out.A_prime = out.B_prime = out.F_prime = ComplexGridField(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    bool ok = chart.phi.valid(k) && problem.A.valid(k) && problem.B.valid(k) && problem.F.valid(k);
    if (ok && std::abs(chart.phi[k]) < phi_zero_threshold(chart.lambda.lambda[k])) {
      ok = false;
      ++out.phi_zero_count;
    }
    if (!ok) {
      for (auto* f : {&out.A_prime, &out.B_prime, &out.F_prime}) f->set_valid(k, false);
      continue;
    }
    const cplx phi = chart.phi[k];
    out.A_prime[k] = 2.0 * problem.A[k] / phi;
    out.B_prime[k] = 2.0 * problem.B[k] / phi;
    out.F_prime[k] = 2.0 * problem.F[k] / phi;
  }
  return out;
}

struct XiDerivatives {
  ComplexGridField f_xi, f_xibar;
};

/// Solves f_x = f_xi xi_x + f_xibar conj(xi)_x, f_y = f_xi xi_y + f_xibar conj(xi)_y
/// pointwise. Points whose system determinant falls below 1e-12 are masked
/// as chart-singular.
inline XiDerivatives wirtinger_in_xi(const ComplexGridField& fx, const ComplexGridField& fy,
                                     const CanonicalChart& chart) {
  const GridSpec& g = chart.grid();
  XiDerivatives out{ComplexGridField(g), ComplexGridField(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(fx.valid(k) && fy.valid(k) && chart.xi_x.valid(k))) {
      out.f_xi.set_valid(k, false);
      out.f_xibar.set_valid(k, false);
      continue;
    }
    const cplx a = chart.xi_x[k], b = std::conj(chart.xi_x[k]);
    const cplx c = chart.xi_y[k], d = std::conj(chart.xi_y[k]);
    const cplx det = a * d - b * c;
    if (std::abs(det) < 1e-12) {
      out.f_xi.set_valid(k, false);
      out.f_xibar.set_valid(k, false);
      continue;
    }
    out.f_xi[k] = (fx[k] * d - b * fy[k]) / det;
    out.f_xibar[k] = (a * fy[k] - c * fx[k]) / det;
  }
  return out;
}

inline XiDerivatives wirtinger_in_xi(const ComplexGridField& f, const CanonicalChart& chart, int order = 2) {
  return wirtinger_in_xi(partial_x(f, order), partial_y(f, order), chart);
}

/// A sampled solution candidate, optionally with exact partials.
struct PassengerField {
  ComplexGridField f;
  std::optional<ComplexGridField> fx, fy;
  std::string generator;
};

/// f = g(xi) for g an expression in w; partials g'(xi) xi_x and g'(xi) xi_y.
inline PassengerField holomorphic_passenger(const CanonicalChart& chart, const seed::Expr& g,
                                            const seed::ParamMap& params = {}) {
  const GridSpec& grid = chart.grid();
  PassengerField out{ComplexGridField(grid), ComplexGridField(grid), ComplexGridField(grid), "g(xi) = " + g.source};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!chart.xi.valid(k)) {
      out.f.set_valid(k, false);
      out.fx->set_valid(k, false);
      out.fy->set_valid(k, false);
      continue;
    }
    const seed::DualComplex v = seed::eval_seed_dual(g, chart.xi[k], params);
    out.f[k] = v.value;
    if (chart.xi_x.valid(k)) {
      (*out.fx)[k] = v.deriv * chart.xi_x[k];
      (*out.fy)[k] = v.deriv * chart.xi_y[k];
    } else {
      out.fx->set_valid(k, false);
      out.fy->set_valid(k, false);
    }
  }
  return out;
}

/// f = conj(xi), with partials conj(xi_x), conj(xi_y).
inline PassengerField conjugate_xi_passenger(const CanonicalChart& chart) {
  return {map(chart.xi, [](cplx v) { return std::conj(v); }),
          map(chart.xi_x, [](cplx v) { return std::conj(v); }),
          map(chart.xi_y, [](cplx v) { return std::conj(v); }), "conj(xi)"};
}

struct XiJet {
  cplx f, f_xi, f_xibar;
};

/// f = fn(xi, conj xi) with its partials in xi and conj(xi); x and y partials
/// follow from the chain rule through the chart.
template <class Fn>
PassengerField passenger_from_xi(const CanonicalChart& chart, Fn&& fn, std::string generator) {
  const GridSpec& g = chart.grid();
  PassengerField out{ComplexGridField(g), ComplexGridField(g), ComplexGridField(g), std::move(generator)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(chart.xi.valid(k) && chart.xi_x.valid(k))) {
      out.f.set_valid(k, false);
      out.fx->set_valid(k, false);
      out.fy->set_valid(k, false);
      continue;
    }
    const XiJet j = fn(chart.xi[k]);
    out.f[k] = j.f;
    (*out.fx)[k] = j.f_xi * chart.xi_x[k] + j.f_xibar * std::conj(chart.xi_x[k]);
    (*out.fy)[k] = j.f_xi * chart.xi_y[k] + j.f_xibar * std::conj(chart.xi_y[k]);
  }
  return out;
}

/// F := (f_x + lambda f_y)/2 + A f + B conj(f), from the exact partials of f
/// when present, else central differences. f then solves the problem by
/// construction.
inline VekuaProblem manufacture(const SpectralField& lam, const ComplexGridField& A, const ComplexGridField& B,
                                const PassengerField& f, int order = 2) {
  const ComplexGridField fx = f.fx ? *f.fx : partial_x(f.f, order);
  const ComplexGridField fy = f.fy ? *f.fy : partial_y(f.f, order);
  const GridSpec& g = lam.grid();
  ComplexGridField F(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(fx.valid(k) && fy.valid(k) && A.valid(k) && B.valid(k) && lam.lambda.valid(k))) {
      F.set_valid(k, false);
      continue;
    }
    F[k] = 0.5 * (fx[k] + lam.lambda[k] * fy[k]) + A[k] * f.f[k] + B[k] * std::conj(f.f[k]);
  }
  return {lam, A, B, std::move(F)};
}

/// |f_xibar + A' f + B' conj(f) - F'| with f_xibar from central differences of
/// f pushed through the 2x2 chain-rule solve.
inline ResidualReport reduced_residual(const ComplexGridField& f, const ReducedVekua& reduced, int order = 2) {
  const XiDerivatives d = wirtinger_in_xi(f, reduced.chart, order);
  ComplexGridField r(f.spec());
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(d.f_xibar.valid(k) && reduced.A_prime.valid(k))) {
      r.set_valid(k, false);
      continue;
    }
    r[k] = d.f_xibar[k] + reduced.A_prime[k] * f[k] + reduced.B_prime[k] * std::conj(f[k]) - reduced.F_prime[k];
  }
  r.restrict_to(eroded(reduced.chart.xi, kResidualMargin));
  if (r.valid_count() == 0) throw Error(ErrorKind::usage, "empty unmasked region");
  ResidualReport rep{std::move(r), {}};
  rep.norms = norms(rep.residual);
  return rep;
}

/// max over the x = 0 column of |g(y) - f(0, y)|.
inline double passenger_axis_identity(const ComplexGridField& f, const std::function<cplx(double)>& g) {
  const GridSpec& grid = f.spec();
  const auto col = grid.axis_column();
  if (!col) throw Error(ErrorKind::usage, "axis absent: grid has no x = 0 column");
  double m = 0.0;
  for (std::size_t j = 0; j < grid.ny(); ++j) {
    if (!f.valid(*col, j)) continue;
    m = std::max(m, std::abs(g(grid.y(j)) - f(*col, j)));
  }
  return m;
}

inline double passenger_axis_identity(const ComplexGridField& f, const seed::Expr& g,
                                      const seed::ParamMap& params = {}) {
  return passenger_axis_identity(f, [&](double y) { return seed::eval_seed(g, cplx(y, 0.0), params); });
}

/// Samples g_j given at the axis nodes y_j in grid order.
inline double passenger_axis_identity(const ComplexGridField& f, std::span<const cplx> g_samples) {
  if (g_samples.size() != f.ny()) throw Error(ErrorKind::usage, "axis samples do not match the grid");
  const GridSpec& grid = f.spec();
  return passenger_axis_identity(f, [&](double y) {
    const auto j = static_cast<std::size_t>(std::llround((y - grid.y_min()) / grid.hy()));
    return g_samples[j];
  });
}

struct CoefficientBoundReport {
  double c1 = 0.0;            // min Im lambda on the compact region
  std::optional<double> C;    // max |J| (Burgers fields)
  double min_abs_phi = 0.0;
  double bound_factor = 0.0;  // C / (2 c1), or 1 / min |Phi| without J
  double ratio_A_max = 0.0, ratio_A_rms = 0.0;  // ||A'|| / ||2A||
  double ratio_B_max = 0.0, ratio_B_rms = 0.0;
  std::size_t points = 0;
  bool holds = false;
};

/// Lower bound on |Phi| over the interior `margin` cells inside the valid
/// region, and the measured amplification ||A'|| / ||2A_lambda||.
inline CoefficientBoundReport coefficient_bound_report(const ReducedVekua& reduced, const VekuaProblem& problem,
                                                       std::size_t margin, const ComplexGridField* J = nullptr) {
  const ComplexGridField region = eroded(reduced.A_prime, margin);
  CoefficientBoundReport rep;
  rep.c1 = std::numeric_limits<double>::infinity();
  rep.min_abs_phi = std::numeric_limits<double>::infinity();
  double maxJ = 0.0;
  double a_num_max = 0, a_den_max = 0, b_num_max = 0, b_den_max = 0;
  double a_num_sq = 0, a_den_sq = 0, b_num_sq = 0, b_den_sq = 0;
  for (std::size_t k = 0; k < region.size(); ++k) {
    if (!region.valid(k)) continue;
    ++rep.points;
    rep.c1 = std::min(rep.c1, reduced.chart.lambda.lambda[k].imag());
    rep.min_abs_phi = std::min(rep.min_abs_phi, std::abs(reduced.chart.phi[k]));
    if (J) maxJ = std::max(maxJ, std::abs((*J)[k]));
    const double an = std::abs(reduced.A_prime[k]), ad = std::abs(2.0 * problem.A[k]);
    const double bn = std::abs(reduced.B_prime[k]), bd = std::abs(2.0 * problem.B[k]);
    a_num_max = std::max(a_num_max, an);
    a_den_max = std::max(a_den_max, ad);
    b_num_max = std::max(b_num_max, bn);
    b_den_max = std::max(b_den_max, bd);
    a_num_sq += an * an;
    a_den_sq += ad * ad;
    b_num_sq += bn * bn;
    b_den_sq += bd * bd;
  }
  if (rep.points == 0) throw Error(ErrorKind::usage, "empty region");
  if (J) {
    rep.C = maxJ;
    rep.bound_factor = maxJ / (2.0 * rep.c1);
  } else {
    rep.bound_factor = 1.0 / rep.min_abs_phi;
  }
  auto ratio = [](double n, double d) { return d > 0.0 ? n / d : 0.0; };
  rep.ratio_A_max = ratio(a_num_max, a_den_max);
  rep.ratio_A_rms = ratio(std::sqrt(a_num_sq), std::sqrt(a_den_sq));
  rep.ratio_B_max = ratio(b_num_max, b_den_max);
  rep.ratio_B_rms = ratio(std::sqrt(b_num_sq), std::sqrt(b_den_sq));
  const double limit = rep.bound_factor * (1.0 + 1e-12);
  rep.holds = rep.ratio_A_max <= limit && rep.ratio_A_rms <= limit && rep.ratio_B_max <= limit &&
              rep.ratio_B_rms <= limit;
  return rep;
}

}  // namespace ves
