#pragma once

// Rectangular grids, sampled fields with validity masks, central finite
// differences and Wirtinger derivatives, residual norms and observed
// convergence orders.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ves/error.hpp"

namespace ves {

using cplx = std::complex<double>;

inline constexpr cplx I{0.0, 1.0};

/// Uniform rectangular grid, endpoints included.
class GridSpec {
 public:
  GridSpec() = default;

  GridSpec(double x_min, double x_max, double y_min, double y_max,
           std::size_t nx, std::size_t ny)
      : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max),
        nx_(nx), ny_(ny) {
    if (!(x_min < x_max) || !(y_min < y_max)) {
      throw Error(ErrorKind::usage, "grid: bounds must satisfy min < max");
    }
    if (nx < 5 || ny < 5) {
      throw Error(ErrorKind::usage, "grid: nx and ny must be at least 5");
    }
    hx_ = (x_max - x_min) / static_cast<double>(nx - 1);
    hy_ = (y_max - y_min) / static_cast<double>(ny - 1);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double h() const { return std::max(hx_, hy_); }

  // Nodes are computed from the index rather than accumulated so that
  // symmetric grids produce exactly symmetric coordinates.
  double x(std::size_t i) const {
    return i + 1 == nx_ ? x_max_ : x_min_ + static_cast<double>(i) * hx_;
  }
  double y(std::size_t j) const {
    return j + 1 == ny_ ? y_max_ : y_min_ + static_cast<double>(j) * hy_;
  }

  std::size_t index(std::size_t i, std::size_t j) const { return j * nx_ + i; }

  /// Grid with every spacing divided by 2^levels over the same rectangle.
  GridSpec refined(int levels = 1) const {
    std::size_t nx = nx_, ny = ny_;
    for (int k = 0; k < levels; ++k) {
      nx = 2 * (nx - 1) + 1;
      ny = 2 * (ny - 1) + 1;
    }
    return {x_min_, x_max_, y_min_, y_max_, nx, ny};
  }

  /// Column whose abscissa is 0 (to within a tiny fraction of hx), if any.
  std::optional<std::size_t> axis_column() const {
    for (std::size_t i = 0; i < nx_; ++i) {
      if (std::abs(x(i)) <= 1e-9 * hx_) return i;
    }
    return std::nullopt;
  }

  bool operator==(const GridSpec&) const = default;

 private:
  double x_min_ = 0.0, x_max_ = 1.0, y_min_ = 0.0, y_max_ = 1.0;
  std::size_t nx_ = 5, ny_ = 5;
  double hx_ = 0.25, hy_ = 0.25;
};

/// Values sampled on a GridSpec together with a validity mask
/// (1 = valid sample). Storage is row-major with y outer, x inner.
template <class T>
class GridField {
 public:
  using value_type = T;

  GridField() = default;

  explicit GridField(const GridSpec& spec, T fill = T{})
      : spec_(spec), values_(spec.size(), fill), mask_(spec.size(), 1) {}

  const GridSpec& spec() const { return spec_; }
  std::size_t nx() const { return spec_.nx(); }
  std::size_t ny() const { return spec_.ny(); }
  std::size_t size() const { return values_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return values_[spec_.index(i, j)]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return values_[spec_.index(i, j)];
  }
  T& operator[](std::size_t k) { return values_[k]; }
  const T& operator[](std::size_t k) const { return values_[k]; }

  bool valid(std::size_t i, std::size_t j) const { return mask_[spec_.index(i, j)] != 0; }
  bool valid(std::size_t k) const { return mask_[k] != 0; }
  void set_valid(std::size_t i, std::size_t j, bool v) { mask_[spec_.index(i, j)] = v ? 1 : 0; }
  void set_valid(std::size_t k, bool v) { mask_[k] = v ? 1 : 0; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::span<std::uint8_t> mask() { return mask_; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
  }

  /// AND another mask into this one.
  template <class U>
  void restrict_to(const GridField<U>& other) {
    check_same_grid(other);
    auto om = other.mask();
    for (std::size_t k = 0; k < mask_.size(); ++k) mask_[k] &= om[k];
  }

  template <class U>
  void check_same_grid(const GridField<U>& other) const {
    if (!(spec_ == other.spec())) {
      throw Error(ErrorKind::usage, "fields are defined on different grids");
    }
  }

 private:
  GridSpec spec_;
  std::vector<T> values_;
  std::vector<std::uint8_t> mask_;
};

using RealGridField = GridField<double>;
using ComplexGridField = GridField<cplx>;

/// Sample fn(x, y) at every node; nodes where fn returns nullopt are masked.
template <class Fn>
auto sample(const GridSpec& spec, Fn&& fn) {
  using R = typename std::invoke_result_t<Fn, double, double>::value_type;
  GridField<R> out(spec);
  for (std::size_t j = 0; j < spec.ny(); ++j) {
    for (std::size_t i = 0; i < spec.nx(); ++i) {
      auto v = fn(spec.x(i), spec.y(j));
      if (v) {
        out(i, j) = *v;
      } else {
        out.set_valid(i, j, false);
      }
    }
  }
  return out;
}

/// Sample a total function fn(x, y) at every node.
template <class Fn>
auto sample_all(const GridSpec& spec, Fn&& fn) {
  using R = std::invoke_result_t<Fn, double, double>;
  GridField<R> out(spec);
  for (std::size_t j = 0; j < spec.ny(); ++j) {
    for (std::size_t i = 0; i < spec.nx(); ++i) out(i, j) = fn(spec.x(i), spec.y(j));
  }
  return out;
}

/// Pointwise map; masked points stay masked and keep a default value.
template <class T, class Fn>
auto map(const GridField<T>& a, Fn&& fn) {
  using R = std::invoke_result_t<Fn, const T&>;
  GridField<R> out(a.spec());
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.valid(k)) {
      out[k] = fn(a[k]);
    } else {
      out.set_valid(k, false);
    }
  }
  return out;
}

/// Pointwise binary combination; the result mask is the AND of both masks.
template <class A, class B, class Fn>
auto zip(const GridField<A>& a, const GridField<B>& b, Fn&& fn) {
  a.check_same_grid(b);
  using R = std::invoke_result_t<Fn, const A&, const B&>;
  GridField<R> out(a.spec());
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.valid(k) && b.valid(k)) {
      out[k] = fn(a[k], b[k]);
    } else {
      out.set_valid(k, false);
    }
  }
  return out;
}

inline ComplexGridField to_complex(const RealGridField& f) {
  return map(f, [](double v) { return cplx(v, 0.0); });
}

inline RealGridField real_part(const ComplexGridField& f) {
  return map(f, [](const cplx& v) { return v.real(); });
}

inline RealGridField imag_part(const ComplexGridField& f) {
  return map(f, [](const cplx& v) { return v.imag(); });
}

/// Mask out every point within `cells` (Chebyshev distance) of a masked
/// point or of the grid edge.
template <class T>
GridField<T> eroded(const GridField<T>& f, std::size_t cells) {
  GridField<T> out = f;
  if (cells == 0) return out;
  const std::size_t nx = f.nx(), ny = f.ny();
  // Separable: a point survives a pass if the whole window along that axis is
  // valid and inside the grid.
  std::vector<std::uint8_t> row(f.size(), 0);
  auto src = f.mask();
  for (std::size_t j = 0; j < ny; ++j) {
    std::size_t run = 0;  // consecutive valid points ending at i
    std::vector<std::size_t> runs(nx);
    for (std::size_t i = 0; i < nx; ++i) {
      run = src[j * nx + i] ? run + 1 : 0;
      runs[i] = run;
    }
    for (std::size_t i = cells; i + cells < nx; ++i) row[j * nx + i] = runs[i + cells] >= 2 * cells + 1;
  }
  auto dst = out.mask();
  for (std::size_t i = 0; i < nx; ++i) {
    std::size_t run = 0;
    std::vector<std::size_t> runs(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      run = row[j * nx + i] ? run + 1 : 0;
      runs[j] = run;
    }
    for (std::size_t j = 0; j < ny; ++j) {
      dst[j * nx + i] = j >= cells && j + cells < ny && runs[j + cells] >= 2 * cells + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences

/// Half-width of the central stencil of the given order.
inline std::size_t stencil_margin(int order) {
  if (order == 2) return 1;
  if (order == 4) return 2;
  throw Error(ErrorKind::usage, "finite-difference order must be 2 or 4");
}

namespace detail {

template <class T>
GridField<T> central_difference(const GridField<T>& f, int order, bool along_x) {
  const std::size_t m = stencil_margin(order);
  const std::size_t n = along_x ? f.nx() : f.ny();
  if (n < 2 * m + 1) throw Error(ErrorKind::underresolved, "grid underresolved");
  const double h = along_x ? f.spec().hx() : f.spec().hy();

  GridField<T> out(f.spec());
  for (std::size_t j = 0; j < f.ny(); ++j) {
    for (std::size_t i = 0; i < f.nx(); ++i) {
      const std::size_t pos = along_x ? i : j;
      if (pos < m || pos + m >= n) {
        out.set_valid(i, j, false);
        continue;
      }
      auto at = [&](std::ptrdiff_t off) -> std::size_t {
        return along_x ? f.spec().index(i + off, j) : f.spec().index(i, j + off);
      };
      bool ok = true;
      for (std::ptrdiff_t off = -static_cast<std::ptrdiff_t>(m); off <= static_cast<std::ptrdiff_t>(m); ++off) {
        ok = ok && f.valid(at(off));
      }
      if (!ok) {
        out.set_valid(i, j, false);
        continue;
      }
      if (order == 2) {
        out(i, j) = (f[at(1)] - f[at(-1)]) / (2.0 * h);
      } else {
        out(i, j) = (8.0 * (f[at(1)] - f[at(-1)]) - (f[at(2)] - f[at(-2)])) / (12.0 * h);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Central-difference d/dx. Boundary layers of the stencil half-width and any
/// point whose stencil touches a masked sample are masked, never one-sided.
template <class T>
GridField<T> partial_x(const GridField<T>& f, int order = 2) {
  return detail::central_difference(f, order, true);
}

template <class T>
GridField<T> partial_y(const GridField<T>& f, int order = 2) {
  return detail::central_difference(f, order, false);
}

struct Wirtinger {
  ComplexGridField d_z;     // (d/dx - i d/dy) / 2
  ComplexGridField d_zbar;  // (d/dx + i d/dy) / 2
};

inline Wirtinger wirtinger(const ComplexGridField& f, int order = 2) {
  auto fx = partial_x(f, order);
  auto fy = partial_y(f, order);
  return {zip(fx, fy, [](cplx a, cplx b) { return 0.5 * (a - I * b); }),
          zip(fx, fy, [](cplx a, cplx b) { return 0.5 * (a + I * b); })};
}

// ---------------------------------------------------------------------------
// Norms and convergence

struct Norms {
  double max = 0.0;
  double rms = 0.0;
  std::size_t count = 0;
};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const cplx& v) { return std::abs(v); }

/// Max and RMS of |f| over valid points, accumulated sequentially.
template <class T>
Norms norms(const GridField<T>& f) {
  Norms n;
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!f.valid(k)) continue;
    const double a = magnitude(f[k]);
    n.max = std::max(n.max, a);
    sum_sq += a * a;
    ++n.count;
  }
  if (n.count > 0) n.rms = std::sqrt(sum_sq / static_cast<double>(n.count));
  return n;
}

/// Pointwise |a - b| on the common valid set.
template <class T>
RealGridField difference(const GridField<T>& a, const GridField<T>& b) {
  return zip(a, b, [](const T& u, const T& v) { return magnitude(u - v); });
}

/// Pointwise |a - b| / max(|b|, floor) on the common valid set.
template <class T>
RealGridField relative_difference(const GridField<T>& a, const GridField<T>& b,
                                  double floor = 1e-300) {
  return zip(a, b, [floor](const T& u, const T& v) {
    return magnitude(u - v) / std::max(magnitude(v), floor);
  });
}

/// Least-squares slope of log(norm) against log(h).
inline double convergence_order(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 2) {
    throw Error(ErrorKind::usage, "convergence_order needs at least two samples");
  }
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!(samples[k].second > 0.0) || !std::isfinite(samples[k].second)) {
      throw Error(ErrorKind::numerical, "exact or invalid residual");
    }
    if (!(samples[k].first > 0.0) ||
        (k > 0 && !(samples[k].first < samples[k - 1].first))) {
      throw Error(ErrorKind::usage, "convergence_order needs strictly decreasing h");
    }
  }
  double mx = 0.0, my = 0.0;
  for (const auto& [h, e] : samples) {
    mx += std::log(h);
    my += std::log(e);
  }
  mx /= static_cast<double>(samples.size());
  my /= static_cast<double>(samples.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [h, e] : samples) {
    const double dx = std::log(h) - mx;
    sxy += dx * (std::log(e) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline double convergence_order(const std::vector<std::pair<double, double>>& samples) {
  return convergence_order(std::span<const std::pair<double, double>>(samples));
}

}  // namespace ves
