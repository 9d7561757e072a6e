#pragma once

// The Poincare disk picture: the Cayley transform lambda <-> mu, the
// Cauchy-Riemann to Beltrami conversion, self-dilatation and the disk form
// of the canonical coordinate.

#include <optional>

#include "ves/spectral.hpp"

namespace ves {

/// |mu| at or above this is treated as the degenerate boundary |mu| = 1.
inline constexpr double kUnitDiskGuard = 1.0 - 1e-10;

inline cplx cayley(cplx lambda) {
  if (!(lambda.imag() > 0.0)) throw Error(ErrorKind::degenerate, "not in upper half-plane");
  return (lambda - I) / (lambda + I);
}

/// Same map written as -(1 + i lambda) / (1 - i lambda).
inline cplx cayley_alt(cplx lambda) {
  if (!(lambda.imag() > 0.0)) throw Error(ErrorKind::degenerate, "not in upper half-plane");
  return -(1.0 + I * lambda) / (1.0 - I * lambda);
}

inline cplx cayley_inv(cplx mu) {
  if (!(std::abs(mu) < kUnitDiskGuard)) throw Error(ErrorKind::degenerate, "outside unit disk");
  return I * (1.0 + mu) / (1.0 - mu);
}

/// mu on a grid, |mu| < 1 wherever valid. Exact Wirtinger derivatives are
/// attached when they were propagated from exact lambda partials.
struct BeltramiField {
  ComplexGridField mu;
  std::optional<ComplexGridField> mu_z, mu_zbar;

  BeltramiField() = default;
  explicit BeltramiField(ComplexGridField m, std::optional<ComplexGridField> mz = std::nullopt,
                         std::optional<ComplexGridField> mzb = std::nullopt)
      : mu(std::move(m)), mu_z(std::move(mz)), mu_zbar(std::move(mzb)) {
    for (std::size_t k = 0; k < mu.size(); ++k) {
      if (mu.valid(k) && !(std::abs(mu[k]) < kUnitDiskGuard)) {
        throw Error(ErrorKind::degenerate, "outside unit disk: |mu| >= 1");
      }
    }
  }

  const GridSpec& grid() const { return mu.spec(); }
};

/// mu = (lambda - i) / (lambda + i). With exact lambda partials,
/// mu_z = -2i lambda_z / (1 - i lambda)^2 and likewise for zbar.
inline BeltramiField cayley(const SpectralField& lam) {
  ComplexGridField mu = map(lam.lambda, [](cplx l) { return cayley(l); });
  if (!lam.has_partials()) return BeltramiField(std::move(mu));
  ComplexGridField mz(lam.grid()), mzb(lam.grid());
  for (std::size_t k = 0; k < mz.size(); ++k) {
    if (!(lam.lambda.valid(k) && lam.lambda_x->valid(k) && lam.lambda_y->valid(k))) {
      mz.set_valid(k, false);
      mzb.set_valid(k, false);
      continue;
    }
    const cplx l = lam.lambda[k], lx = (*lam.lambda_x)[k], ly = (*lam.lambda_y)[k];
    const cplx d = -2.0 * I / ((1.0 - I * l) * (1.0 - I * l));
    mz[k] = d * 0.5 * (lx - I * ly);
    mzb[k] = d * 0.5 * (lx + I * ly);
  }
  return BeltramiField(std::move(mu), std::move(mz), std::move(mzb));
}

inline SpectralField cayley_inv(const ComplexGridField& mu) {
  return SpectralField(map(mu, [](cplx m) { return cayley_inv(m); }), Provenance::user_supplied);
}

inline SpectralField cayley_inv(const BeltramiField& mu) { return cayley_inv(mu.mu); }

/// [f_x + lambda f_y] - (1 - i lambda)(f_zbar - mu f_z), one stencil for both
/// sides.
inline ResidualReport cr_beltrami_residual(const ComplexGridField& f, const SpectralField& lam, int order = 2) {
  f.check_same_grid(lam.lambda);
  const auto fx = partial_x(f, order), fy = partial_y(f, order);
  const Wirtinger w = wirtinger(f, order);
  ComplexGridField r(f.spec());
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(fx.valid(k) && fy.valid(k) && lam.lambda.valid(k))) {
      r.set_valid(k, false);
      continue;
    }
    const cplx l = lam.lambda[k];
    const cplx mu = cayley(l);
    r[k] = fx[k] + l * fy[k] - (1.0 - I * l) * (w.d_zbar[k] - mu * w.d_z[k]);
  }
  ResidualReport rep{std::move(r), {}};
  rep.norms = norms(rep.residual);
  return rep;
}

struct SelfDilatationReport {
  RealGridField residual;     // |mu_zbar - mu mu_z|
  RealGridField normalized;   // residual |1 - i lambda|^3 / (2 (Im lambda)^2)
  double max_residual = 0.0;
  double max_normalized = 0.0;
  bool analytic = false;
};

/// |mu_zbar - mu mu_z| pointwise. The normalized defect rescales by
/// |1 - i lambda|^3 / (2 (Im lambda)^2), which turns it into the transport
/// defect |T| / (Im lambda)^2 when derivatives are exact.
inline SelfDilatationReport self_dilatation_residual(const BeltramiField& mu, int order = 2,
                                                     bool prefer_exact = true) {
  SelfDilatationReport rep;
  ComplexGridField mz, mzb;
  if (prefer_exact && mu.mu_z && mu.mu_zbar) {
    mz = *mu.mu_z;
    mzb = *mu.mu_zbar;
    rep.analytic = true;
  } else {
    Wirtinger w = wirtinger(mu.mu, order);
    mz = std::move(w.d_z);
    mzb = std::move(w.d_zbar);
  }
  rep.residual = RealGridField(mu.grid());
  rep.normalized = RealGridField(mu.grid());
  for (std::size_t k = 0; k < mz.size(); ++k) {
    if (!(mz.valid(k) && mzb.valid(k) && mu.mu.valid(k))) {
      rep.residual.set_valid(k, false);
      rep.normalized.set_valid(k, false);
      continue;
    }
    const cplx m = mu.mu[k];
    const double r = std::abs(mzb[k] - m * mz[k]);
    const cplx l = cayley_inv(m);
    rep.residual[k] = r;
    rep.normalized[k] = r * std::pow(std::abs(1.0 - I * l), 3) / (2.0 * l.imag() * l.imag());
  }
  rep.residual.restrict_to(eroded(mu.mu, kResidualMargin));
  rep.normalized.restrict_to(rep.residual);
  rep.max_residual = norms(rep.residual).max;
  rep.max_normalized = norms(rep.normalized).max;
  return rep;
}

/// xi = -i (z + mu zbar) / (1 - mu) with z = x + i y. Pure arithmetic.
inline ComplexGridField xi_disk_form(const ComplexGridField& mu) {
  const GridSpec& g = mu.spec();
  ComplexGridField xi(g);
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      if (!mu.valid(i, j)) {
        xi.set_valid(i, j, false);
        continue;
      }
      const cplx m = mu(i, j);
      if (!(std::abs(m) < kUnitDiskGuard)) throw Error(ErrorKind::degenerate, "outside unit disk: |mu| >= 1");
      const cplx z(g.x(i), g.y(j));
      xi(i, j) = -I * (z + m * std::conj(z)) / (1.0 - m);
    }
  }
  return xi;
}

}  // namespace ves
