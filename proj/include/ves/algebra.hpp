#pragma once

// The fiber algebra R[X]/(X^2 + beta X + alpha) attached to each point of a
// variable elliptic structure, its Cauchy-Riemann operator and the
// obstruction G = i_x + i i_y of the moving generator.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "ves/numerics.hpp"

namespace ves {

/// W = u + v i in the fiber over one point.
struct AlgebraElement {
  double u = 0.0;
  double v = 0.0;

  bool operator==(const AlgebraElement&) const = default;
};

inline double discriminant(double alpha, double beta) { return 4.0 * alpha - beta * beta; }

inline void require_elliptic(double alpha, double beta) {
  if (!(discriminant(alpha, beta) > 0.0)) {
    std::ostringstream os;
    os << "degenerate fiber: 4*alpha - beta^2 = " << discriminant(alpha, beta)
       << " (alpha=" << alpha << ", beta=" << beta << ")";
    throw Error(ErrorKind::degenerate, os.str());
  }
}

/// Product reduced with i^2 = -beta i - alpha.
inline AlgebraElement alg_mul(AlgebraElement w, AlgebraElement t, double alpha, double beta) {
  require_elliptic(alpha, beta);
  const double vv = w.v * t.v;
  return {w.u * t.u - alpha * vv, w.u * t.v + w.v * t.u - beta * vv};
}

/// Conjugation induced by the other root -beta - i.
inline AlgebraElement alg_conj(AlgebraElement w, double beta) { return {w.u - beta * w.v, -w.v}; }

/// N(W) = W conj(W) = u^2 - beta u v + alpha v^2.
inline double alg_norm(AlgebraElement w, double alpha, double beta) {
  require_elliptic(alpha, beta);
  return w.u * w.u - beta * w.u * w.v + alpha * w.v * w.v;
}

inline AlgebraElement alg_inv(AlgebraElement w, double alpha, double beta) {
  if (w.u == 0.0 && w.v == 0.0) throw Error(ErrorKind::singular, "not invertible: zero element");
  const double n = alg_norm(w, alpha, beta);
  const AlgebraElement c = alg_conj(w, beta);
  return {c.u / n, c.v / n};
}

/// The upper-half-plane root of X^2 + beta X + alpha.
inline cplx spectral_root(double alpha, double beta) {
  return {-0.5 * beta, 0.5 * std::sqrt(discriminant(alpha, beta))};
}

/// Rigidity verdict threshold on the normalized defect for a grid of
/// spacing h: max(10 h^2, 1e-8).
inline double rigidity_tolerance(const GridSpec& grid) {
  const double h = grid.h();
  return std::max(10.0 * h * h, 1e-8);
}

// ---------------------------------------------------------------------------
// Structures

struct StructurePartials {
  double alpha_x = 0.0, alpha_y = 0.0, beta_x = 0.0, beta_y = 0.0;
};

struct StructurePoint {
  double alpha = 1.0;
  double beta = 0.0;
  std::optional<StructurePartials> partials;
};

/// (alpha, beta) and their first partials sampled on one grid. `analytic`
/// records whether the partials are exact or finite differences.
struct StructureSamples {
  RealGridField alpha, beta;
  RealGridField alpha_x, alpha_y, beta_x, beta_y;
  bool analytic = false;

  const GridSpec& grid() const { return alpha.spec(); }
};

/// A variable elliptic structure, either as a closed-form evaluator or as
/// samples on a fixed grid.
class EllipticStructure {
 public:
  /// Returns nullopt outside the structure's domain.
  using Evaluator = std::function<std::optional<StructurePoint>(double, double)>;

  static EllipticStructure closed_form(std::string description, Evaluator fn) {
    EllipticStructure s;
    s.description_ = std::move(description);
    s.evaluator_ = std::move(fn);
    return s;
  }

  /// Sampled structure; ellipticity is checked on every valid sample here.
  static EllipticStructure sampled(std::string description, RealGridField alpha, RealGridField beta) {
    alpha.check_same_grid(beta);
    alpha.restrict_to(beta);
    beta.restrict_to(alpha);
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      if (alpha.valid(k)) require_elliptic(alpha[k], beta[k]);
    }
    EllipticStructure s;
    s.description_ = std::move(description);
    s.samples_ = std::make_shared<std::pair<RealGridField, RealGridField>>(std::move(alpha), std::move(beta));
    return s;
  }

  /// alpha, beta and (when the closed form is differentiable) exact partials,
  /// given lambda(x, y) with its partials. alpha = |lambda|^2,
  /// beta = -2 Re lambda.
  static EllipticStructure from_lambda(
      std::string description,
      std::function<std::optional<std::array<cplx, 3>>(double, double)> lambda_fn) {
    return closed_form(std::move(description),
                       [fn = std::move(lambda_fn)](double x, double y) -> std::optional<StructurePoint> {
                         auto l = fn(x, y);
                         if (!l) return std::nullopt;
                         const cplx lam = (*l)[0], lx = (*l)[1], ly = (*l)[2];
                         StructurePoint p;
                         p.alpha = std::norm(lam);
                         p.beta = -2.0 * lam.real();
                         p.partials = StructurePartials{2.0 * (std::conj(lam) * lx).real(),
                                                        2.0 * (std::conj(lam) * ly).real(),
                                                        -2.0 * lx.real(), -2.0 * ly.real()};
                         return p;
                       });
  }

  const std::string& description() const { return description_; }
  bool is_sampled() const { return samples_ != nullptr; }

  const GridSpec& sample_grid() const {
    if (!samples_) throw Error(ErrorKind::usage, "closed-form structure has no sample grid");
    return samples_->first.spec();
  }

  /// Point evaluation; outside the domain is an error, as is Delta <= 0.
  StructurePoint at(double x, double y) const {
    if (!evaluator_) throw Error(ErrorKind::usage, "sampled structure has no point evaluator");
    auto p = evaluator_(x, y);
    if (!p) {
      std::ostringstream os;
      os << "structure '" << description_ << "' evaluated outside its domain at (" << x << ", " << y << ")";
      throw Error(ErrorKind::domain, os.str());
    }
    require_elliptic(p->alpha, p->beta);
    return *p;
  }

  /// Sample on a grid. Nodes outside the domain are masked; Delta <= 0 at a
  /// node inside the domain is an error. Missing partials fall back to
  /// central differences of the requested order.
  StructureSamples sample(const GridSpec& grid, int fd_order = 2) const {
    StructureSamples s;
    if (samples_) {
      if (!(samples_->first.spec() == grid)) {
        throw Error(ErrorKind::usage, "sampled structure requested on a different grid");
      }
      s.alpha = samples_->first;
      s.beta = samples_->second;
    } else {
      s.alpha = RealGridField(grid);
      s.beta = RealGridField(grid);
      s.alpha_x = s.alpha_y = s.beta_x = s.beta_y = RealGridField(grid);
      bool all_analytic = true;
      for (std::size_t j = 0; j < grid.ny(); ++j) {
        for (std::size_t i = 0; i < grid.nx(); ++i) {
          auto p = evaluator_(grid.x(i), grid.y(j));
          if (!p) {
            for (auto* f : {&s.alpha, &s.beta, &s.alpha_x, &s.alpha_y, &s.beta_x, &s.beta_y}) {
              f->set_valid(i, j, false);
            }
            continue;
          }
          require_elliptic(p->alpha, p->beta);
          s.alpha(i, j) = p->alpha;
          s.beta(i, j) = p->beta;
          if (p->partials) {
            s.alpha_x(i, j) = p->partials->alpha_x;
            s.alpha_y(i, j) = p->partials->alpha_y;
            s.beta_x(i, j) = p->partials->beta_x;
            s.beta_y(i, j) = p->partials->beta_y;
          } else {
            all_analytic = false;
          }
        }
      }
      if (all_analytic) {
        s.analytic = true;
        return s;
      }
    }
    s.alpha_x = partial_x(s.alpha, fd_order);
    s.alpha_y = partial_y(s.alpha, fd_order);
    s.beta_x = partial_x(s.beta, fd_order);
    s.beta_y = partial_y(s.beta, fd_order);
    s.analytic = false;
    return s;
  }

 private:
  std::string description_;
  Evaluator evaluator_;
  std::shared_ptr<const std::pair<RealGridField, RealGridField>> samples_;
};

/// alpha, beta constant.
inline EllipticStructure constant_structure(double alpha, double beta) {
  require_elliptic(alpha, beta);
  std::ostringstream os;
  os << "constant(alpha=" << alpha << ", beta=" << beta << ")";
  return EllipticStructure::closed_form(os.str(), [alpha, beta](double, double) {
    return std::optional<StructurePoint>(StructurePoint{alpha, beta, StructurePartials{}});
  });
}

/// lambda = (y + i delta) / (1 + x) on {x > -1}.
inline EllipticStructure delta_family_structure(double delta) {
  if (!(delta > 0.0)) throw Error(ErrorKind::usage, "delta family needs delta > 0");
  std::ostringstream os;
  os << "delta_family(delta=" << delta << ")";
  return EllipticStructure::from_lambda(os.str(), [delta](double x, double y) -> std::optional<std::array<cplx, 3>> {
    if (!(x > -1.0)) return std::nullopt;
    const double s = 1.0 + x;
    const cplx lam = cplx(y, delta) / s;
    return std::array<cplx, 3>{lam, -lam / s, cplx(1.0 / s, 0.0)};
  });
}

// ---------------------------------------------------------------------------
// Sections and the Cauchy-Riemann operator

/// A-valued section W = U + V i over sampled structure data.
struct AlgebraSection {
  RealGridField u, v;
  std::shared_ptr<const StructureSamples> structure;

  AlgebraSection(RealGridField u_field, RealGridField v_field, std::shared_ptr<const StructureSamples> s)
      : u(std::move(u_field)), v(std::move(v_field)), structure(std::move(s)) {
    u.check_same_grid(v);
    if (!structure) throw Error(ErrorKind::usage, "section without structure");
    u.check_same_grid(structure->alpha);
  }

  const GridSpec& grid() const { return u.spec(); }
};

/// Section from a closed form (x, y) -> (U, V).
template <class Fn>
AlgebraSection make_section(std::shared_ptr<const StructureSamples> s, Fn&& fn) {
  const GridSpec& g = s->grid();
  RealGridField u(g), v(g);
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const AlgebraElement w = fn(g.x(i), g.y(j));
      u(i, j) = w.u;
      v(i, j) = w.v;
    }
  }
  u.restrict_to(s->alpha);
  v.restrict_to(s->alpha);
  return {std::move(u), std::move(v), std::move(s)};
}

/// Pointwise product of two sections over the same structure.
inline AlgebraSection section_product(const AlgebraSection& w, const AlgebraSection& t) {
  w.u.check_same_grid(t.u);
  const StructureSamples& s = *w.structure;
  RealGridField u(w.grid()), v(w.grid());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(w.u.valid(k) && w.v.valid(k) && t.u.valid(k) && t.v.valid(k) && s.alpha.valid(k))) {
      u.set_valid(k, false);
      v.set_valid(k, false);
      continue;
    }
    const AlgebraElement p = alg_mul({w.u[k], w.v[k]}, {t.u[k], t.v[k]}, s.alpha[k], s.beta[k]);
    u[k] = p.u;
    v[k] = p.v;
  }
  return {std::move(u), std::move(v), w.structure};
}

/// G = G0 + G1 i.
struct ObstructionField {
  RealGridField g0, g1;
};

/// G = [(-alpha_x + beta_y alpha) + (-beta_x + beta_y beta - alpha_y) i] / (beta + 2 i),
/// with the division done in the algebra. N(beta + 2i) = Delta > 0.
inline ObstructionField obstruction_field(const StructureSamples& s) {
  const GridSpec& g = s.grid();
  ObstructionField out{RealGridField(g), RealGridField(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(s.alpha.valid(k) && s.alpha_x.valid(k) && s.alpha_y.valid(k) && s.beta_x.valid(k) &&
          s.beta_y.valid(k))) {
      out.g0.set_valid(k, false);
      out.g1.set_valid(k, false);
      continue;
    }
    const double a = s.alpha[k], b = s.beta[k];
    const AlgebraElement num{-s.alpha_x[k] + s.beta_y[k] * a,
                             -s.beta_x[k] + s.beta_y[k] * b - s.alpha_y[k]};
    const AlgebraElement G = alg_mul(num, alg_inv({b, 2.0}, a, b), a, b);
    out.g0[k] = G.u;
    out.g1[k] = G.v;
  }
  return out;
}

inline ObstructionField obstruction_field(const EllipticStructure& structure, const GridSpec& grid,
                                          int fd_order = 2) {
  return obstruction_field(structure.sample(grid, fd_order));
}

/// Components of 2 dbar W = (U_x - alpha V_y + V G0) + (V_x + U_y - beta V_y + V G1) i,
/// with principal and V G parts kept apart.
struct CrDecomposition {
  RealGridField p, q;                   // full components
  RealGridField principal0, principal1;  // U_x - alpha V_y, V_x + U_y - beta V_y
  RealGridField vg0, vg1;                // V G0, V G1
};

inline CrDecomposition cr_apply(const AlgebraSection& w, int order = 2) {
  const StructureSamples& s = *w.structure;
  const ObstructionField G = obstruction_field(s);
  const auto ux = partial_x(w.u, order), uy = partial_y(w.u, order);
  const auto vx = partial_x(w.v, order), vy = partial_y(w.v, order);
  const GridSpec& g = w.grid();
  CrDecomposition out{RealGridField(g), RealGridField(g), RealGridField(g),
                      RealGridField(g), RealGridField(g), RealGridField(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const bool ok = ux.valid(k) && uy.valid(k) && vx.valid(k) && vy.valid(k) && G.g0.valid(k);
    for (auto* f : {&out.p, &out.q, &out.principal0, &out.principal1, &out.vg0, &out.vg1}) {
      f->set_valid(k, ok);
    }
    if (!ok) continue;
    out.principal0[k] = ux[k] - s.alpha[k] * vy[k];
    out.principal1[k] = vx[k] + uy[k] - s.beta[k] * vy[k];
    out.vg0[k] = w.v[k] * G.g0[k];
    out.vg1[k] = w.v[k] * G.g1[k];
    out.p[k] = out.principal0[k] + out.vg0[k];
    out.q[k] = out.principal1[k] + out.vg1[k];
  }
  return out;
}

/// Max-norm over the interior of 2 dbar(WT) - 2 (dbar W) T - 2 W (dbar T),
/// measured in Euclidean (u, v) components.
struct LeibnizResidual {
  RealGridField residual;
  Norms norms;
};

inline LeibnizResidual leibniz_residual(const AlgebraSection& w, const AlgebraSection& t, int order = 2) {
  const StructureSamples& s = *w.structure;
  const auto lhs = cr_apply(section_product(w, t), order);
  const auto dw = cr_apply(w, order);
  const auto dt = cr_apply(t, order);
  RealGridField r(w.grid());
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(lhs.p.valid(k) && dw.p.valid(k) && dt.p.valid(k))) {
      r.set_valid(k, false);
      continue;
    }
    const double a = s.alpha[k], b = s.beta[k];
    const AlgebraElement x = alg_mul({dw.p[k], dw.q[k]}, {t.u[k], t.v[k]}, a, b);
    const AlgebraElement y = alg_mul({w.u[k], w.v[k]}, {dt.p[k], dt.q[k]}, a, b);
    r[k] = std::hypot(lhs.p[k] - x.u - y.u, lhs.q[k] - x.v - y.v);
  }
  Norms n = norms(r);
  return {std::move(r), n};
}

struct HomogeneityReport {
  double max_abs_g = 0.0;        // max sqrt(G0^2 + G1^2)
  double max_normalized = 0.0;   // max |G0 + G1 lambda| / (Im lambda)^2
  double tolerance = 0.0;
  bool rigid = false;
};

/// Pairs max |G| with the rigidity verdict: the structure is declared rigid
/// when |G_lambda| / (Im lambda)^2 stays below `tolerance` everywhere.
inline HomogeneityReport homogeneity_check(const StructureSamples& s, double tolerance) {
  const ObstructionField G = obstruction_field(s);
  HomogeneityReport rep;
  rep.tolerance = tolerance;
  for (std::size_t k = 0; k < G.g0.size(); ++k) {
    if (!G.g0.valid(k)) continue;
    const cplx lam = spectral_root(s.alpha[k], s.beta[k]);
    rep.max_abs_g = std::max(rep.max_abs_g, std::hypot(G.g0[k], G.g1[k]));
    const double im = lam.imag();
    rep.max_normalized = std::max(rep.max_normalized, std::abs(G.g0[k] + G.g1[k] * lam) / (im * im));
  }
  rep.rigid = rep.max_normalized < tolerance;
  return rep;
}

inline HomogeneityReport homogeneity_check(const EllipticStructure& structure, const GridSpec& grid,
                                           int fd_order = 2) {
  return homogeneity_check(structure.sample(grid, fd_order), rigidity_tolerance(grid));
}

}  // namespace ves
