#pragma once

// The canonical coordinate xi = y - lambda x, the characteristic Jacobian
// Phi = conj(xi)_x + lambda conj(xi)_y in its definition and factored forms,
// the real Jacobian of (x, y) -> (p, q) = (Re xi, Im xi), Newton inversion of
// xi and an empirical injectivity scan.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ves/burgers.hpp"
#include "ves/spectral.hpp"

namespace ves {

struct CanonicalChart {
  SpectralField lambda;
  ComplexGridField xi;
  RealGridField p, q;
  ComplexGridField xi_x, xi_y;  // -lambda - x lambda_x, 1 - x lambda_y
  ComplexGridField phi;         // (lambda - conj lambda) - x (conj(lambda)_x + lambda conj(lambda)_y)
  RealGridField jac_det;        // Re[-(i/2)(1 - x lambda_y) Phi]
  double max_jac_imag = 0.0;    // largest |Im| discarded from jac_det
  bool analytic = false;        // built from exact lambda partials

  const GridSpec& grid() const { return xi.spec(); }
};

/// xi, p, q by arithmetic; Phi from its definition using the lambda partials
/// (exact when attached, central differences otherwise).
inline CanonicalChart build_chart(const SpectralField& lam, int order = 2) {
  const GridSpec& g = lam.grid();
  CanonicalChart c;
  c.lambda = lam;
  c.analytic = lam.has_partials();
  const ComplexGridField lx = lam.dx(order), ly = lam.dy(order);
  c.xi = ComplexGridField(g);
  c.p = c.q = c.jac_det = RealGridField(g);
  c.xi_x = c.xi_y = c.phi = ComplexGridField(g);
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (!lam.lambda.valid(k)) {
        for (auto* f : {&c.xi, &c.xi_x, &c.xi_y, &c.phi}) f->set_valid(k, false);
        for (auto* f : {&c.p, &c.q, &c.jac_det}) f->set_valid(k, false);
        continue;
      }
      const double x = g.x(i), y = g.y(j);
      const cplx l = lam.lambda[k];
      c.xi[k] = y - l * x;
      c.p[k] = y - x * l.real();
      c.q[k] = -x * l.imag();
      if (!(lx.valid(k) && ly.valid(k))) {
        for (auto* f : {&c.xi_x, &c.xi_y, &c.phi}) f->set_valid(k, false);
        c.jac_det.set_valid(k, false);
        continue;
      }
      c.xi_x[k] = -l - x * lx[k];
      c.xi_y[k] = 1.0 - x * ly[k];
      c.phi[k] = (l - std::conj(l)) - x * (std::conj(lx[k]) + l * std::conj(ly[k]));
      const cplx det = -0.5 * I * (1.0 - x * ly[k]) * c.phi[k];
      c.jac_det[k] = det.real();
      c.max_jac_imag = std::max(c.max_jac_imag, std::abs(det.imag()));
    }
  }
  return c;
}

/// Phi straight from its definition with every derivative a central
/// difference of conj(xi).
inline ComplexGridField phi_definition_fd(const CanonicalChart& chart, int order = 2) {
  const ComplexGridField xib = map(chart.xi, [](cplx v) { return std::conj(v); });
  const auto bx = partial_x(xib, order), by = partial_y(xib, order);
  return zip(zip(bx, by, [](cplx a, cplx b) { return std::array<cplx, 2>{a, b}; }), chart.lambda.lambda,
             [](const std::array<cplx, 2>& d, cplx l) { return d[0] + l * d[1]; });
}

struct FactoredPhi {
  ComplexGridField phi;
  bool non_rigid_warning = false;
  double max_rho_T = 0.0;
  double tolerance = 0.0;
};

/// Phi = 2i Im(lambda) (1 - x conj(lambda_y)). Valid under rigidity only; a
/// structure whose transport defect exceeds the tolerance is flagged.
inline FactoredPhi phi_factored(const SpectralField& lam, int order = 2, std::optional<double> tolerance = std::nullopt) {
  FactoredPhi out;
  const TransportDiagnostics d = transport_residual(lam, order);
  out.tolerance = tolerance.value_or(rigidity_tolerance(lam.grid()));
  out.max_rho_T = d.max_rho_T;
  out.non_rigid_warning = !rigid_verdict(d, out.tolerance);
  const ComplexGridField ly = lam.dy(order);
  const GridSpec& g = lam.grid();
  out.phi = ComplexGridField(g);
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (!(lam.lambda.valid(k) && ly.valid(k))) {
        out.phi.set_valid(k, false);
        continue;
      }
      out.phi[k] = 2.0 * I * lam.lambda[k].imag() * (1.0 - g.x(i) * std::conj(ly[k]));
    }
  }
  return out;
}

/// Phi = 2i Im(lambda) / conj(J) on a Burgers solution.
inline ComplexGridField phi_burgers(const BurgersSolution& sol) {
  return zip(sol.lambda, sol.J, [](cplx l, cplx J) { return 2.0 * I * l.imag() / std::conj(J); });
}

/// Im(lambda) / |J|^2, the real Jacobian on a Burgers solution.
inline RealGridField jacobian_burgers(const BurgersSolution& sol) {
  return zip(sol.lambda, sol.J, [](cplx l, cplx J) { return l.imag() / std::norm(J); });
}

/// Central-difference determinant of d(p, q)/d(x, y).
inline RealGridField jacobian_fd(const CanonicalChart& chart, int order = 2) {
  const auto px = partial_x(chart.p, order), py = partial_y(chart.p, order);
  const auto qx = partial_x(chart.q, order), qy = partial_y(chart.q, order);
  RealGridField out(chart.grid());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(px.valid(k) && py.valid(k) && qx.valid(k) && qy.valid(k))) {
      out.set_valid(k, false);
      continue;
    }
    out[k] = px[k] * qy[k] - py[k] * qx[k];
  }
  return out;
}

struct JacobianReport {
  RealGridField fd_det;
  double max_fd_vs_formula = 0.0;
  std::optional<double> max_fd_vs_burgers;
  std::optional<double> max_formula_vs_burgers;
  double min_det = 0.0;
  double max_imag = 0.0;
  std::size_t zero_set_mismatches = 0;
  std::size_t points = 0;
};

/// Compares the FD determinant, -(i/2)(1 - x lambda_y) Phi and, on Burgers
/// fields, Im(lambda)/|J|^2, and checks pointwise that
/// (|det| < eps) <=> (|Phi| < 2 eps / max(1, |1 - x lambda_y|)).
inline JacobianReport jacobian_check(const CanonicalChart& chart, const BurgersSolution* burgers = nullptr,
                                     int order = 2, double eps = 1e-10) {
  JacobianReport rep;
  rep.fd_det = jacobian_fd(chart, order);
  rep.fd_det.restrict_to(eroded(chart.xi, kResidualMargin));
  rep.max_fd_vs_formula = norms(difference(rep.fd_det, chart.jac_det)).max;
  rep.max_imag = chart.max_jac_imag;
  if (burgers) {
    const RealGridField jb = jacobian_burgers(*burgers);
    rep.max_fd_vs_burgers = norms(difference(rep.fd_det, jb)).max;
    rep.max_formula_vs_burgers = norms(relative_difference(chart.jac_det, jb)).max;
  }
  rep.min_det = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < chart.jac_det.size(); ++k) {
    if (!chart.jac_det.valid(k)) continue;
    ++rep.points;
    rep.min_det = std::min(rep.min_det, chart.jac_det[k]);
    const double one_minus = std::abs(chart.xi_y[k]);
    const bool det_small = std::abs(chart.jac_det[k]) < eps;
    const bool phi_small = std::abs(chart.phi[k]) < 2.0 * eps / std::max(1.0, one_minus);
    if (det_small != phi_small) ++rep.zero_set_mismatches;
  }
  return rep;
}

struct InversionResult {
  double x = 0.0, y = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

/// Damped 2D Newton on (p, q) with the exact Jacobian built from
/// xi_x = -lambda - x lambda_x and xi_y = 1 - x lambda_y.
inline InversionResult invert_xi(const LambdaProvider& provider, cplx target, double x0, double y0,
                                 double tol = 1e-12, int max_iter = 50) {
  auto eval = [&](double x, double y, LambdaPoint* out) -> std::optional<cplx> {
    try {
      *out = provider(x, y);
      return cplx(y, 0.0) - out->lambda * x - target;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  double x = x0, y = y0;
  LambdaPoint lp;
  auto r = eval(x, y, &lp);
  if (!r) throw Error(ErrorKind::domain, "inversion failed: initial guess outside the chart's domain");
  int it = 0;
  while (std::abs(*r) > tol) {
    if (it >= max_iter) throw Error(ErrorKind::numerical, "inversion failed: Newton did not converge");
    const cplx xx = -lp.lambda - x * lp.lambda_x;
    const cplx xy = 1.0 - x * lp.lambda_y;
    const double a = xx.real(), b = xy.real(), c = xx.imag(), d = xy.imag();
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-12) throw Error(ErrorKind::singular, "near-singular chart");
    const double dx = -(d * r->real() - b * r->imag()) / det;
    const double dy = -(-c * r->real() + a * r->imag()) / det;
    double t = 1.0;
    LambdaPoint next_lp;
    auto next = eval(x + dx, y + dy, &next_lp);
    for (int k = 0; k < 20 && !(next && std::abs(*next) < std::abs(*r)); ++k) {
      t *= 0.5;
      next = eval(x + t * dx, y + t * dy, &next_lp);
    }
    if (!(next && std::abs(*next) < std::abs(*r))) {
      throw Error(ErrorKind::numerical, "inversion failed: no decrease after step halving");
    }
    x += t * dx;
    y += t * dy;
    r = next;
    lp = next_lp;
    ++it;
  }
  return {x, y, it, std::abs(*r)};
}

struct Collision {
  double x1, y1, x2, y2;
  double distance;
};

struct InjectivityReport {
  std::vector<Collision> pairs;  // first max_reported pairs in index order
  std::size_t total_collisions = 0;
  bool injective_on_sample = true;
  double bucket_tol = 0.0;
};

/// Smallest singular value of the FD Jacobian of (p, q), minimized over the
/// grid, times min(hx, hy) / 4. A pair of points at least three cells apart
/// cannot land this close unless the map folds.
inline double default_bucket_tol(const CanonicalChart& chart) {
  const auto px = partial_x(chart.p), py = partial_y(chart.p);
  const auto qx = partial_x(chart.q), qy = partial_y(chart.q);
  double smin = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (std::size_t k = 0; k < px.size(); ++k) {
    if (chart.xi.valid(k)) scale = std::max(scale, std::abs(chart.xi[k]));
    if (!(px.valid(k) && py.valid(k) && qx.valid(k) && qy.valid(k))) continue;
    const double s = px[k] * px[k] + py[k] * py[k] + qx[k] * qx[k] + qy[k] * qy[k];
    const double d = px[k] * qy[k] - py[k] * qx[k];
    const double disc = std::sqrt(std::max(0.0, s * s - 4.0 * d * d));
    smin = std::min(smin, std::sqrt(std::max(0.0, 0.5 * (s - disc))));
  }
  const GridSpec& g = chart.grid();
  const double floor = 1e-12 * (1.0 + scale);
  if (!std::isfinite(smin)) return floor;
  return std::max(0.25 * std::min(g.hx(), g.hy()) * smin, floor);
}

/// Spatial hash of xi with buckets of size bucket_tol; reports pairs of
/// samples more than two cells apart whose xi values lie within bucket_tol.
/// This is a statement about the sample only.
inline InjectivityReport injectivity_scan(const ComplexGridField& xi, double bucket_tol, std::size_t max_reported = 1000) {
  if (!(bucket_tol > 0.0)) throw Error(ErrorKind::usage, "bucket_tol must be positive");
  InjectivityReport rep;
  rep.bucket_tol = bucket_tol;
  const GridSpec& g = xi.spec();
  struct KeyHash {
    std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const {
      return std::hash<std::int64_t>()(k.first) * 1000003u ^ std::hash<std::int64_t>()(k.second);
    }
  };
  auto key_of = [bucket_tol](cplx v) {
    return std::pair<std::int64_t, std::int64_t>{static_cast<std::int64_t>(std::floor(v.real() / bucket_tol)),
                                                  static_cast<std::int64_t>(std::floor(v.imag() / bucket_tol))};
  };
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>, KeyHash> buckets;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (xi.valid(k)) buckets[key_of(xi[k])].push_back(k);
  }
  std::vector<std::size_t> near;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (!xi.valid(k)) continue;
    const auto [bx, by] = key_of(xi[k]);
    near.clear();
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find({bx + dx, by + dy});
        if (it == buckets.end()) continue;
        for (std::size_t m : it->second) {
          if (m > k) near.push_back(m);
        }
      }
    }
    std::sort(near.begin(), near.end());
    const std::size_t ik = k % g.nx(), jk = k / g.nx();
    for (std::size_t m : near) {
      const std::size_t im = m % g.nx(), jm = m / g.nx();
      const std::size_t di = ik > im ? ik - im : im - ik, dj = jk > jm ? jk - jm : jm - jk;
      if (std::max(di, dj) <= 2) continue;
      const double dist = std::abs(xi[k] - xi[m]);
      if (!(dist < bucket_tol)) continue;
      ++rep.total_collisions;
      if (rep.pairs.size() < max_reported) rep.pairs.push_back({g.x(ik), g.y(jk), g.x(im), g.y(jm), dist});
    }
  }
  rep.injective_on_sample = rep.total_collisions == 0;
  return rep;
}

inline InjectivityReport injectivity_scan(const CanonicalChart& chart, std::optional<double> bucket_tol = std::nullopt) {
  return injectivity_scan(chart.xi, bucket_tol.value_or(default_bucket_tol(chart)));
}

}  // namespace ves
