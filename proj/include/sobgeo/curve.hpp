#pragma once

#include <utility>

#include "sobgeo/errors.hpp"
#include "sobgeo/grid.hpp"
#include "sobgeo/types.hpp"

namespace sobgeo {

// Default immersion floor, relative to the mean speed |f_theta|.
template <typename S>
inline constexpr S default_immersion_floor = static_cast<S>(1e-8);

// A sampled closed curve f: S^1 -> R^d (d >= 2) with the discrete immersion
// property |f_theta| > floor * mean|f_theta| enforced at construction.
// Stores the spectral derivative and speed, which every downstream geometric
// quantity reuses; the loop itself is immutable.
template <typename S>
class ImmersedLoop {
 public:
  ImmersedLoop(PeriodicGrid<S> grid, TangentField<S> points,
               S immersion_floor = default_immersion_floor<S>)
      : grid_(std::move(grid)), points_(std::move(points)) {
    if (points_.rows() != grid_.n()) {
      throw ValidationError("ImmersedLoop: points do not match grid size");
    }
    if (points_.cols() < 2) {
      throw ValidationError("ImmersedLoop: ambient dimension must be >= 2");
    }
    if (!points_.allFinite()) {
      throw ValidationError("ImmersedLoop: points contain non-finite values");
    }
    f_theta_ = grid_.diff(points_);
    sqrt_g_ = f_theta_.rowwise().norm();
    const S mean_speed = sqrt_g_.mean();
    const S floor = immersion_floor * mean_speed;
    if (!(sqrt_g_.minCoeff() > floor)) {
      throw ImmersionError("ImmersedLoop: speed |f_theta| at or below the immersion floor");
    }
  }

  const PeriodicGrid<S>& grid() const { return grid_; }
  const TangentField<S>& points() const { return points_; }
  Index n() const { return grid_.n(); }
  Index dim() const { return points_.cols(); }

  const TangentField<S>& f_theta() const { return f_theta_; }
  const ScalarField<S>& sqrt_g() const { return sqrt_g_; }

 private:
  PeriodicGrid<S> grid_;
  TangentField<S> points_;
  TangentField<S> f_theta_;
  ScalarField<S> sqrt_g_;
};

template <typename S>
void check_field(const ImmersedLoop<S>& f, const TangentField<S>& h) {
  if (h.rows() != f.n() || h.cols() != f.dim()) {
    throw ValidationError("tangent field does not match the loop's grid or dimension");
  }
}

// g = |f_theta|^2, the pull-back metric coefficient.
template <typename S>
ScalarField<S> pullback_metric(const ImmersedLoop<S>& f) {
  return f.sqrt_g().array().square();
}

// sqrt_g = |f_theta|, the volume density against dtheta.
template <typename S>
ScalarField<S> volume_density(const ImmersedLoop<S>& f) {
  return f.sqrt_g();
}

template <typename S>
S total_length(const ImmersedLoop<S>& f) {
  return f.grid().quadrature(f.sqrt_g());
}

// Unit tangent v = f_theta / |f_theta|.
template <typename S>
TangentField<S> unit_tangent(const ImmersedLoop<S>& f) {
  return f.f_theta().array().colwise() / f.sqrt_g().array();
}

// d_s h = (d_theta h) / sqrt_g, the arclength derivative.
template <typename S>
TangentField<S> arclength_derivative(const ImmersedLoop<S>& f, const TangentField<S>& h) {
  check_field(f, h);
  return TangentField<S>(f.grid().diff(h).array().colwise() / f.sqrt_g().array());
}
template <typename S>
ScalarField<S> arclength_derivative(const ImmersedLoop<S>& f, const ScalarField<S>& u) {
  return ScalarField<S>(f.grid().diff(u).array() / f.sqrt_g().array());
}

template <typename S>
struct ProjectionResult {
  ScalarField<S> tangential_coeff;  // coefficient of h^T against f_theta
  TangentField<S> normal;           // h - <h,v> v
};

// Pointwise split h = coeff * f_theta + h_normal.
template <typename S>
ProjectionResult<S> project(const ImmersedLoop<S>& f, const TangentField<S>& h) {
  check_field(f, h);
  const TangentField<S> v = unit_tangent(f);
  const ScalarField<S> along = (h.array() * v.array()).rowwise().sum();
  ProjectionResult<S> out;
  out.tangential_coeff = along.array() / f.sqrt_g().array();
  out.normal = h - TangentField<S>(v.array().colwise() * along.array());
  return out;
}

// Normal part only (the common case in the geodesic terms).
template <typename S>
TangentField<S> normal_part(const ImmersedLoop<S>& f, const TangentField<S>& h) {
  check_field(f, h);
  const TangentField<S> v = unit_tangent(f);
  const ScalarField<S> along = (h.array() * v.array()).rowwise().sum();
  return h - TangentField<S>(v.array().colwise() * along.array());
}

// Vector-valued curvature H = (d_s d_s f)^perp.  Analytically normal already;
// the explicit projection removes the spectral-size tangential residue.
template <typename S>
TangentField<S> curvature(const ImmersedLoop<S>& f) {
  const TangentField<S> ds_f = arclength_derivative(f, f.points());
  const TangentField<S> ds_ds_f = arclength_derivative(f, ds_f);
  return normal_part(f, ds_ds_f);
}

// Everything downstream geometry needs, in one pass.
template <typename S>
struct MetricData {
  ScalarField<S> g;
  ScalarField<S> sqrt_g;
  TangentField<S> v;
  TangentField<S> H;
};

template <typename S>
MetricData<S> metric_data(const ImmersedLoop<S>& f) {
  MetricData<S> md;
  md.g = pullback_metric(f);
  md.sqrt_g = f.sqrt_g();
  md.v = unit_tangent(f);
  md.H = curvature(f);
  return md;
}

// First variation of g in direction m: 2 <d_theta m, d_theta f> pointwise.
template <typename S>
ScalarField<S> metric_variation(const ImmersedLoop<S>& f, const TangentField<S>& m) {
  check_field(f, m);
  const TangentField<S> m_theta = f.grid().diff(m);
  return S(2) * (m_theta.array() * f.f_theta().array()).rowwise().sum();
}

// First variation of the density sqrt_g in direction m: <d_s m, v> * sqrt_g
// (equivalently <d_theta m, v>).
template <typename S>
ScalarField<S> volume_variation(const ImmersedLoop<S>& f, const TangentField<S>& m) {
  check_field(f, m);
  const TangentField<S> m_theta = f.grid().diff(m);
  const TangentField<S> v = unit_tangent(f);
  return (m_theta.array() * v.array()).rowwise().sum();
}

}  // namespace sobgeo
