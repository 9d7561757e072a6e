#pragma once

// The transport picture: the spectral parameter lambda, the transport map
// U + V i -> U + V lambda, and the residuals that measure the transport law
// lambda_x + lambda lambda_y = G_lambda and the universal intertwining
// 2 (dbar W)_lambda = (W_lambda)_x + lambda (W_lambda)_y.

#include <functional>
#include <optional>
#include <sstream>
#include <string>

#include "ves/algebra.hpp"

namespace ves {

enum class Provenance { from_structure, from_burgers, user_supplied };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::from_structure: return "from_structure";
    case Provenance::from_burgers: return "from_burgers";
    case Provenance::user_supplied: return "user_supplied";
  }
  return "unknown";
}

/// lambda sampled on a grid, Im lambda > 0 wherever valid. Exact partials
/// are attached when the source can supply them.
struct SpectralField {
  ComplexGridField lambda;
  std::optional<ComplexGridField> lambda_x, lambda_y;
  Provenance provenance = Provenance::user_supplied;

  SpectralField() = default;

  explicit SpectralField(ComplexGridField lam, Provenance prov = Provenance::user_supplied,
                         std::optional<ComplexGridField> lx = std::nullopt,
                         std::optional<ComplexGridField> ly = std::nullopt)
      : lambda(std::move(lam)), lambda_x(std::move(lx)), lambda_y(std::move(ly)), provenance(prov) {
    for (std::size_t k = 0; k < lambda.size(); ++k) {
      if (lambda.valid(k) && !(lambda[k].imag() > 0.0)) {
        std::ostringstream os;
        os << "ellipticity violated: Im lambda = " << lambda[k].imag() << " at (" << grid().x(k % grid().nx())
           << ", " << grid().y(k / grid().nx()) << ")";
        throw Error(ErrorKind::degenerate, os.str());
      }
    }
    if (lambda_x) lambda_x->check_same_grid(lambda);
    if (lambda_y) lambda_y->check_same_grid(lambda);
  }

  const GridSpec& grid() const { return lambda.spec(); }
  bool has_partials() const { return lambda_x.has_value() && lambda_y.has_value(); }

  /// Exact partials if attached, central differences otherwise.
  ComplexGridField dx(int order = 2) const { return lambda_x ? *lambda_x : partial_x(lambda, order); }
  ComplexGridField dy(int order = 2) const { return lambda_y ? *lambda_y : partial_y(lambda, order); }
};

/// lambda = (-beta + i sqrt(Delta)) / 2. When the samples carry exact
/// partials, lambda_x = -(alpha_x + beta_x lambda) / (2 lambda + beta) and
/// likewise for y are attached.
inline SpectralField lambda_from_structure(const StructureSamples& s) {
  const GridSpec& g = s.grid();
  ComplexGridField lam(g);
  std::optional<ComplexGridField> lx, ly;
  if (s.analytic) {
    lx.emplace(g);
    ly.emplace(g);
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!s.alpha.valid(k)) {
      lam.set_valid(k, false);
      if (lx) {
        lx->set_valid(k, false);
        ly->set_valid(k, false);
      }
      continue;
    }
    require_elliptic(s.alpha[k], s.beta[k]);
    lam[k] = spectral_root(s.alpha[k], s.beta[k]);
    if (lx) {
      const cplx denom = 2.0 * lam[k] + s.beta[k];
      (*lx)[k] = -(s.alpha_x[k] + s.beta_x[k] * lam[k]) / denom;
      (*ly)[k] = -(s.alpha_y[k] + s.beta_y[k] * lam[k]) / denom;
    }
  }
  return SpectralField(std::move(lam), Provenance::from_structure, std::move(lx), std::move(ly));
}

inline SpectralField lambda_from_structure(const EllipticStructure& structure, const GridSpec& grid,
                                           int fd_order = 2) {
  return lambda_from_structure(structure.sample(grid, fd_order));
}

/// Vieta: beta = -2 Re lambda, alpha = |lambda|^2.
inline EllipticStructure structure_from_lambda(const ComplexGridField& lambda) {
  RealGridField alpha(lambda.spec()), beta(lambda.spec());
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!lambda.valid(k)) {
      alpha.set_valid(k, false);
      beta.set_valid(k, false);
      continue;
    }
    if (!(lambda[k].imag() > 0.0)) throw Error(ErrorKind::degenerate, "ellipticity violated: Im lambda <= 0");
    alpha[k] = std::norm(lambda[k]);
    beta[k] = -2.0 * lambda[k].real();
  }
  return EllipticStructure::sampled("from_lambda", std::move(alpha), std::move(beta));
}

/// W_lambda = U + V lambda. Throws if lambda is not a root of the section's
/// structure polynomial.
inline ComplexGridField transport(const AlgebraSection& w, const ComplexGridField& lambda) {
  w.u.check_same_grid(lambda);
  const StructureSamples& s = *w.structure;
  ComplexGridField out(w.grid());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(w.u.valid(k) && w.v.valid(k) && lambda.valid(k))) {
      out.set_valid(k, false);
      continue;
    }
    const cplx l = lambda[k];
    if (std::abs(l * l + s.beta[k] * l + s.alpha[k]) > 1e-10 * (1.0 + std::norm(l))) {
      throw Error(ErrorKind::usage, "structure mismatch: lambda is not a root of the section's structure");
    }
    out[k] = w.u[k] + w.v[k] * l;
  }
  return out;
}

/// Inverse of the transport map at one point: V = Im f / Im lambda,
/// U = Re f - V Re lambda.
inline AlgebraElement transport_inverse(cplx f, cplx lambda) {
  const double v = f.imag() / lambda.imag();
  return {f.real() - v * lambda.real(), v};
}

struct TransportDiagnostics {
  ComplexGridField T;    // lambda_x + lambda lambda_y
  RealGridField rho_T;   // |T| / (Im lambda)^2
  double max_rho_T = 0.0;
  double rms_rho_T = 0.0;
  double max_abs_T = 0.0;
  bool analytic = false;  // exact partials were used
};

/// Number of cells kept clear of mask boundaries when reducing residuals.
inline constexpr std::size_t kResidualMargin = 2;

inline TransportDiagnostics transport_residual(const SpectralField& lam, int order = 2) {
  TransportDiagnostics d;
  d.analytic = lam.has_partials();
  const auto lx = lam.dx(order);
  const auto ly = lam.dy(order);
  d.T = zip(lx, zip(ly, lam.lambda, [](cplx a, cplx l) { return l * a; }),
            [](cplx a, cplx b) { return a + b; });
  d.T.restrict_to(eroded(lam.lambda, kResidualMargin));
  d.rho_T = zip(d.T, lam.lambda, [](cplx t, cplx l) { return std::abs(t) / (l.imag() * l.imag()); });
  const Norms n = norms(d.rho_T);
  d.max_rho_T = n.max;
  d.rms_rho_T = n.rms;
  d.max_abs_T = norms(d.T).max;
  return d;
}

inline bool rigid_verdict(const TransportDiagnostics& d, double tolerance) { return d.max_rho_T < tolerance; }

struct ResidualReport {
  ComplexGridField residual;
  Norms norms;
};

/// 2 (dbar W)_lambda - [(W_lambda)_x + lambda (W_lambda)_y], both sides with
/// the same stencil. Holds for every section over every structure.
inline ResidualReport intertwining_residual(const AlgebraSection& w, int order = 2) {
  const SpectralField lam = lambda_from_structure(*w.structure);
  const CrDecomposition cr = cr_apply(w, order);
  const ComplexGridField lhs =
      zip(zip(cr.p, cr.q, [](double p, double q) { return cplx(p, q); }), lam.lambda,
          [](cplx pq, cplx l) { return pq.real() + pq.imag() * l; });
  const ComplexGridField f = transport(w, lam.lambda);
  const auto fx = partial_x(f, order), fy = partial_y(f, order);
  const ComplexGridField rhs =
      zip(fx, zip(fy, lam.lambda, [](cplx a, cplx l) { return l * a; }), [](cplx a, cplx b) { return a + b; });
  ResidualReport r{zip(lhs, rhs, [](cplx a, cplx b) { return a - b; }), {}};
  r.residual.restrict_to(eroded(w.u, kResidualMargin));
  r.norms = norms(r.residual);
  return r;
}

/// [f_x + (lambda f)_y] - [f_x + lambda f_y + lambda_y f], every derivative a
/// central difference.
inline ResidualReport divergence_form_residual(const ComplexGridField& f, const SpectralField& lam, int order = 2) {
  f.check_same_grid(lam.lambda);
  const auto lf = zip(lam.lambda, f, [](cplx l, cplx v) { return l * v; });
  const auto lf_y = partial_y(lf, order);
  const auto f_y = partial_y(f, order);
  const auto l_y = partial_y(lam.lambda, order);
  ComplexGridField r(f.spec());
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(lf_y.valid(k) && f_y.valid(k) && l_y.valid(k))) {
      r.set_valid(k, false);
      continue;
    }
    r[k] = lf_y[k] - (lam.lambda[k] * f_y[k] + l_y[k] * f[k]);
  }
  ResidualReport rep{std::move(r), {}};
  rep.norms = norms(rep.residual);
  return rep;
}

/// FD(lambda_x + lambda lambda_y) against the spectral image G0 + G1 lambda
/// of the obstruction.
inline ResidualReport transport_law_residual(const StructureSamples& s, int order = 2) {
  const SpectralField lam = lambda_from_structure(s);
  const auto lx = partial_x(lam.lambda, order), ly = partial_y(lam.lambda, order);
  const ObstructionField G = obstruction_field(s);
  ComplexGridField r(s.grid());
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(lx.valid(k) && ly.valid(k) && G.g0.valid(k))) {
      r.set_valid(k, false);
      continue;
    }
    const cplx l = lam.lambda[k];
    r[k] = lx[k] + l * ly[k] - (G.g0[k] + G.g1[k] * l);
  }
  r.restrict_to(eroded(lam.lambda, kResidualMargin));
  ResidualReport rep{std::move(r), {}};
  rep.norms = norms(rep.residual);
  return rep;
}

/// lambda with its first partials at one point.
struct LambdaPoint {
  cplx lambda, lambda_x, lambda_y;
};

/// Point evaluation of lambda and exact partials; throws outside the domain.
using LambdaProvider = std::function<LambdaPoint(double, double)>;

/// Provider backed by a closed-form structure carrying exact partials.
inline LambdaProvider lambda_provider(const EllipticStructure& structure) {
  return [structure](double x, double y) {
    const StructurePoint p = structure.at(x, y);
    if (!p.partials) throw Error(ErrorKind::usage, "structure has no exact partials");
    const cplx lam = spectral_root(p.alpha, p.beta);
    const cplx denom = 2.0 * lam + p.beta;
    return LambdaPoint{lam, -(p.partials->alpha_x + p.partials->beta_x * lam) / denom,
                       -(p.partials->alpha_y + p.partials->beta_y * lam) / denom};
  };
}

}  // namespace ves
