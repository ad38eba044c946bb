#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "intervene/errors.hpp"

namespace intervene {

/// Closed interval [lo, hi] of reals.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double x, double tol = 1e-12) const { return x >= lo - tol && x <= hi + tol; }
};

inline std::string format_point(std::span<const double> p) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k) os << ", ";
    os << p[k];
  }
  os << ')';
  return os.str();
}

/// [x]_lo^hi = min(max(x, lo), hi).
inline double clamp(double x, double lo, double hi) {
  if (lo > hi) throw PreconditionError("clamp: lower bound exceeds upper bound");
  return std::min(std::max(x, lo), hi);
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

enum class FDScheme { central, right_sided, left_sided };

/// Step and boundary convention for finite differences. The scheme is chosen
/// per evaluation point: within `step` of the lower bound a right-sided
/// stencil is used (this also yields the right partial derivative at the
/// minimal intervention action), within `step` of the upper bound a
/// left-sided one, central otherwise. All stencils are second order.
struct FDSpec {
  double step = 1e-5;

  FDScheme scheme_at(double x, const Interval& b) const {
    if (x - b.lo < step) return FDScheme::right_sided;
    if (b.hi - x < step) return FDScheme::left_sided;
    return FDScheme::central;
  }
  /// Step of the outer difference when second derivatives are taken by
  /// nesting two finite differences.
  double nested_step() const { return std::sqrt(step); }
  void validate() const {
    if (!(step > 0.0)) throw PreconditionError("FDSpec: step must be positive");
  }
};

namespace detail {

template <class F>
double probe(const F& f, std::vector<double>& p) {
  try {
    return f(std::span<const double>(p));
  } catch (const std::exception& e) {
    throw DataError("function oracle failed at probe point " + format_point(p) + ": " + e.what());
  }
}

} // namespace detail

/// Finite-difference estimate of df/dx_dim at `point`, honouring `bounds` for
/// the stencil choice. `f` is called with a span of the probe coordinates.
template <class F>
double partial_derivative(const F& f, std::span<const double> point, std::size_t dim,
                          std::span<const Interval> bounds, const FDSpec& spec = {}) {
  spec.validate();
  if (dim >= point.size() || bounds.size() != point.size())
    throw PreconditionError("partial_derivative: dimension mismatch");
  for (std::size_t k = 0; k < point.size(); ++k)
    if (!bounds[k].contains(point[k]))
      throw PreconditionError("partial_derivative: point " + format_point(point) +
                              " outside bounds in coordinate " + std::to_string(k));

  const double h = spec.step;
  const double x = point[dim];
  std::vector<double> p(point.begin(), point.end());
  auto at = [&](double offset) {
    p[dim] = x + offset;
    return detail::probe(f, p);
  };

  switch (spec.scheme_at(x, bounds[dim])) {
  case FDScheme::right_sided:
    return (-3.0 * at(0.0) + 4.0 * at(h) - at(2.0 * h)) / (2.0 * h);
  case FDScheme::left_sided:
    return (3.0 * at(0.0) - 4.0 * at(-h) + at(-2.0 * h)) / (2.0 * h);
  case FDScheme::central:
  default:
    return (at(h) - at(-h)) / (2.0 * h);
  }
}

/// d2f/(dx_outer dx_inner) by nested differences; the outer step is sqrt(h).
template <class F>
double second_partial(const F& f, std::span<const double> point, std::size_t outer,
                      std::size_t inner, std::span<const Interval> bounds, const FDSpec& spec = {}) {
  auto first = [&](std::span<const double> q) { return partial_derivative(f, q, inner, bounds, spec); };
  return partial_derivative(first, point, outer, bounds, FDSpec{spec.nested_step()});
}

// ---------------------------------------------------------------------------
// Grid maximizer
// ---------------------------------------------------------------------------

struct GridSpec {
  std::size_t resolution = 101;   ///< points per axis
  std::size_t refine_rounds = 2;
  double shrink = 0.1;            ///< box width multiplier per refinement round

  static GridSpec defaults_for(std::size_t dims) {
    GridSpec g;
    g.resolution = dims <= 2 ? 101 : 21;
    return g;
  }
  void validate() const {
    if (resolution < 2) throw PreconditionError("GridSpec: resolution must be at least 2");
    if (!(shrink > 0.0 && shrink < 1.0)) throw PreconditionError("GridSpec: shrink must lie in (0, 1)");
  }
};

struct ArgmaxResult {
  std::vector<double> point;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// `n` equally spaced points covering [lo, hi], endpoints exact.
inline std::vector<double> linspace(const Interval& iv, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = iv.lo;
    return v;
  }
  for (std::size_t k = 0; k < n; ++k)
    v[k] = iv.lo + iv.width() * static_cast<double>(k) / static_cast<double>(n - 1);
  v.back() = iv.hi;
  return v;
}

/// Exhaustive maximization over the Cartesian product of `axes` (each sorted
/// ascending). Ties go to the smallest row-major index, which is the
/// lexicographically smallest point. Throws on non-finite values.
template <class F>
ArgmaxResult argmax_over_axes(const F& f, const std::vector<std::vector<double>>& axes) {
  ArgmaxResult best;
  best.value = -INFINITY;
  const std::size_t dims = axes.size();
  std::size_t total = 1;
  for (const auto& ax : axes) {
    if (ax.empty()) throw PreconditionError("argmax: empty axis");
    total *= ax.size();
  }
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> p(dims);
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (std::size_t d = 0; d < dims; ++d) p[d] = axes[d][idx[d]];
    const double v = f(std::span<const double>(p));
    if (!std::isfinite(v)) throw DataError("argmax: non-finite value at grid point " + format_point(p));
    if (v > best.value) {
      best.value = v;
      best.point = p;
    }
    for (std::size_t d = dims; d-- > 0;) {
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
    }
  }
  best.evaluations = total;
  return best;
}

/// Grid search over `box` followed by `spec.refine_rounds` re-grids of a box
/// shrunk around the incumbent. A refined point only replaces the incumbent
/// when strictly better, so the value never decreases.
template <class F>
ArgmaxResult grid_argmax(const F& f, std::span<const Interval> box, const GridSpec& spec) {
  spec.validate();
  std::vector<Interval> current(box.begin(), box.end());
  for (const auto& iv : current)
    if (iv.lo > iv.hi) throw PreconditionError("grid_argmax: inverted interval in box");

  auto grid_axes = [&](const std::vector<Interval>& b) {
    std::vector<std::vector<double>> axes;
    axes.reserve(b.size());
    for (const auto& iv : b) axes.push_back(iv.lo == iv.hi ? std::vector<double>{iv.lo} : linspace(iv, spec.resolution));
    return axes;
  };

  ArgmaxResult best = argmax_over_axes(f, grid_axes(current));
  for (std::size_t round = 0; round < spec.refine_rounds; ++round) {
    for (std::size_t d = 0; d < current.size(); ++d) {
      const double half = 0.5 * current[d].width() * spec.shrink;
      current[d] = Interval{std::max(box[d].lo, best.point[d] - half), std::min(box[d].hi, best.point[d] + half)};
    }
    ArgmaxResult r = argmax_over_axes(f, grid_axes(current));
    best.evaluations += r.evaluations;
    if (r.value > best.value) {
      best.value = r.value;
      best.point = std::move(r.point);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Low-discrepancy sampling
// ---------------------------------------------------------------------------

/// Radical inverse of `index` in `base` (van der Corput / Halton coordinate).
inline double radical_inverse(std::size_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

/// Point `index` of the Halton sequence in [0,1)^dims.
inline std::vector<double> halton_point(std::size_t index, std::size_t dims) {
  static constexpr unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                        43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (dims > std::size(primes)) throw PreconditionError("halton_point: too many dimensions");
  std::vector<double> p(dims);
  for (std::size_t d = 0; d < dims; ++d) p[d] = radical_inverse(index, primes[d]);
  return p;
}

} // namespace intervene
