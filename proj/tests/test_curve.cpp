// Immersed loops: pullback metric, arclength calculus, normal projection,
// curvature and the first variations of metric and volume density.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <sobgeo/curve.hpp>
#include <sobgeo/random_fields.hpp>

using sobgeo::ImmersedLoop;
using sobgeo::Index;
using sobgeo::PeriodicGrid;
using sobgeo::ScalarField;
using sobgeo::TangentField;

namespace {
constexpr double kPi = 3.14159265358979323846;

TangentField<double> circle_points(const PeriodicGrid<double>& grid, double r = 1.0) {
  TangentField<double> pts(grid.n(), 2);
  pts.col(0) = r * grid.theta().array().cos();
  pts.col(1) = r * grid.theta().array().sin();
  return pts;
}

TangentField<double> ellipse_points(const PeriodicGrid<double>& grid) {
  TangentField<double> pts(grid.n(), 2);
  pts.col(0) = 2.0 * grid.theta().array().cos();
  pts.col(1) = grid.theta().array().sin();
  return pts;
}

double max_abs(const TangentField<double>& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("pullback metric of circles and ellipses") {
  const PeriodicGrid<double> grid(65);
  const ImmersedLoop<double> unit(grid, circle_points(grid));
  CHECK((sobgeo::pullback_metric(unit).array() - 1.0).abs().maxCoeff() <= 1e-12);

  const ImmersedLoop<double> two(grid, circle_points(grid, 2.0));
  CHECK((sobgeo::pullback_metric(two).array() - 4.0).abs().maxCoeff() <= 1e-12);

  const ImmersedLoop<double> ell(grid, ellipse_points(grid));
  const ScalarField<double> expected =
      (4.0 * grid.theta().array().sin().square() + grid.theta().array().cos().square())
          .matrix();
  CHECK((sobgeo::pullback_metric(ell) - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("total length of circles and the ellipse") {
  const PeriodicGrid<double> grid(65);
  const ImmersedLoop<double> unit(grid, circle_points(grid));
  CHECK(std::abs(sobgeo::total_length(unit) - 2.0 * kPi) <= 1e-12);

  const ImmersedLoop<double> three(grid, circle_points(grid, 3.0));
  CHECK(std::abs(sobgeo::total_length(three) - 6.0 * kPi) <= 1e-11);

  // High-resolution rectangle rule on the closed-form speed as the reference.
  const PeriodicGrid<double> fine(4097);
  const ScalarField<double> speed =
      (4.0 * fine.theta().array().sin().square() + fine.theta().array().cos().square())
          .sqrt()
          .matrix();
  const double ref = fine.quadrature(speed);
  const ImmersedLoop<double> ell(grid, ellipse_points(grid));
  CHECK(std::abs(sobgeo::total_length(ell) - ref) <= 1e-9);
}

TEST_CASE("arclength derivative on circles") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> unit(grid, circle_points(grid));

  TangentField<double> expected(grid.n(), 2);
  expected.col(0) = -grid.theta().array().sin();
  expected.col(1) = grid.theta().array().cos();
  CHECK(max_abs(sobgeo::arclength_derivative(unit, unit.points()) - expected) <= 1e-11);

  const TangentField<double> c = TangentField<double>::Constant(grid.n(), 2, 1.5);
  CHECK(max_abs(sobgeo::arclength_derivative(unit, c)) <= 1e-12);

  // On the radius-2 circle d/ds f = f_theta / |f_theta| is still the unit tangent.
  const ImmersedLoop<double> two(grid, circle_points(grid, 2.0));
  CHECK(max_abs(sobgeo::arclength_derivative(two, two.points()) - expected) <= 1e-11);
  CHECK(max_abs(sobgeo::arclength_derivative(two, two.points()) -
                sobgeo::unit_tangent(two)) <= 1e-12);
}

TEST_CASE("normal projection removes exactly the tangential part") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> unit(grid, circle_points(grid));
  const TangentField<double> v = sobgeo::unit_tangent(unit);

  // A purely tangential field projects to zero.
  CHECK(max_abs(sobgeo::project(unit, v).normal) <= 1e-12);

  // A radial field on the circle is already normal.
  const auto radial = sobgeo::project(unit, unit.points());
  CHECK(radial.tangential_coeff.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(max_abs(radial.normal - unit.points()) <= 1e-12);

  // Closed form for a constant field on the unit circle.
  const TangentField<double> e0 =
      TangentField<double>::Ones(grid.n(), 2).array().colwise() *
      Eigen::ArrayXd::Ones(grid.n());
  TangentField<double> h = TangentField<double>::Zero(grid.n(), 2);
  h.col(0).setOnes();
  TangentField<double> expected(grid.n(), 2);
  expected.col(0) = 1.0 - grid.theta().array().sin().square();
  expected.col(1) = grid.theta().array().sin() * grid.theta().array().cos();
  CHECK(max_abs(sobgeo::normal_part(unit, h) - expected) <= 1e-12);
}

TEST_CASE("projection decomposition reconstructs the field") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> loop = sobgeo::random_loop(grid, 2, 21u);
  const TangentField<double> h = sobgeo::random_tangent_field(grid, 2, 22u);
  const auto pr = sobgeo::project(loop, h);
  const TangentField<double> rebuilt =
      pr.normal +
      TangentField<double>(loop.f_theta().array().colwise() * pr.tangential_coeff.array());
  CHECK(max_abs(rebuilt - h) <= 1e-12);

  // The normal part is pointwise orthogonal to the tangent.
  const TangentField<double> v = sobgeo::unit_tangent(loop);
  const ScalarField<double> dots = (pr.normal.array() * v.array()).rowwise().sum();
  CHECK(dots.cwiseAbs().maxCoeff() <= 1e-12);

  // Projecting twice changes nothing.
  CHECK(max_abs(sobgeo::normal_part(loop, pr.normal) - pr.normal) <= 1e-12);
}

TEST_CASE("curvature of circles") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> unit(grid, circle_points(grid));
  CHECK(max_abs(sobgeo::curvature(unit) + unit.points()) <= 1e-10);

  const ImmersedLoop<double> three(grid, circle_points(grid, 3.0));
  const ScalarField<double> norms =
      sobgeo::curvature(three).rowwise().norm();
  CHECK((norms.array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("curvature of the ellipse matches the plane-curve formula") {
  const PeriodicGrid<double> grid(129);
  const ImmersedLoop<double> ell(grid, ellipse_points(grid));
  const Eigen::ArrayXd s2 = grid.theta().array().sin().square();
  const Eigen::ArrayXd g = 4.0 * s2 + grid.theta().array().cos().square();
  TangentField<double> expected(grid.n(), 2);
  expected.col(0) = -2.0 * grid.theta().array().cos() / g.square();
  expected.col(1) = -4.0 * grid.theta().array().sin() / g.square();
  CHECK(max_abs(sobgeo::curvature(ell) - expected) <= 1e-8);
}

TEST_CASE("curvature is normal") {
  const PeriodicGrid<double> grid(65);
  const ImmersedLoop<double> loop = sobgeo::random_loop(grid, 2, 23u);
  const TangentField<double> v = sobgeo::unit_tangent(loop);
  const ScalarField<double> dots =
      (sobgeo::curvature(loop).array() * v.array()).rowwise().sum();
  CHECK(dots.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("curvature commutes with grid rotations") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> loop = sobgeo::random_loop(grid, 2, 24u);
  const Index shift = 5;
  TangentField<double> rolled(grid.n(), 2);
  for (Index j = 0; j < grid.n(); ++j) {
    rolled.row(j) = loop.points().row((j + shift) % grid.n());
  }
  const ImmersedLoop<double> shifted(grid, rolled);
  const TangentField<double> h = sobgeo::curvature(loop);
  const TangentField<double> hs = sobgeo::curvature(shifted);
  for (Index j = 0; j < grid.n(); ++j) {
    CHECK((hs.row(j) - h.row((j + shift) % grid.n())).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("curvature commutes with ambient rotations") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> loop = sobgeo::random_loop(grid, 2, 25u);
  Eigen::Matrix2d R;
  const double a = 0.6;
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  const ImmersedLoop<double> rotated(grid, loop.points() * R.transpose());
  CHECK(max_abs(sobgeo::curvature(rotated) -
                TangentField<double>(sobgeo::curvature(loop) * R.transpose())) <= 1e-12);
}

TEST_CASE("metric variation is linear in the direction and exact for quadratic data") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> unit(grid, circle_points(grid));

  const TangentField<double> zero = TangentField<double>::Zero(grid.n(), 2);
  CHECK(sobgeo::metric_variation(unit, zero).cwiseAbs().maxCoeff() == 0.0);

  // Radial variation of the unit circle: d/de |(1+e) f_theta|^2 at e = 0 is 2.
  const ScalarField<double> radial = sobgeo::metric_variation(unit, unit.points());
  CHECK((radial.array() - 2.0).abs().maxCoeff() <= 1e-11);

  // The pullback metric is quadratic in the loop, so the centered difference
  // reproduces the derivative exactly at every step size (no O(eps^2) term).
  const ImmersedLoop<double> loop = sobgeo::random_loop(grid, 2, 26u);
  const TangentField<double> m = sobgeo::random_tangent_field(grid, 2, 27u, 0.5);
  const ScalarField<double> analytic = sobgeo::metric_variation(loop, m);
  for (const double eps : {1e-2, 1e-3, 1e-4}) {
    const ImmersedLoop<double> plus(grid, loop.points() + eps * m);
    const ImmersedLoop<double> minus(grid, loop.points() - eps * m);
    const ScalarField<double> fd =
        (sobgeo::pullback_metric(plus) - sobgeo::pullback_metric(minus)) / (2.0 * eps);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("volume variation matches a second-order finite difference") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> unit(grid, circle_points(grid));

  const TangentField<double> zero = TangentField<double>::Zero(grid.n(), 2);
  CHECK(sobgeo::volume_variation(unit, zero).cwiseAbs().maxCoeff() == 0.0);

  // Radial variation of the unit circle grows the density at unit rate.
  const ScalarField<double> radial = sobgeo::volume_variation(unit, unit.points());
  CHECK((radial - unit.sqrt_g()).cwiseAbs().maxCoeff() <= 1e-11);

  const ImmersedLoop<double> loop = sobgeo::random_loop(grid, 2, 28u);
  const TangentField<double> m = sobgeo::random_tangent_field(grid, 2, 29u, 0.5);
  const ScalarField<double> analytic = sobgeo::volume_variation(loop, m);
  auto residual = [&](double eps) {
    const ImmersedLoop<double> plus(grid, loop.points() + eps * m);
    const ImmersedLoop<double> minus(grid, loop.points() - eps * m);
    const ScalarField<double> fd =
        (sobgeo::volume_density(plus) - sobgeo::volume_density(minus)) / (2.0 * eps);
    return (analytic - fd).cwiseAbs().maxCoeff();
  };
  const double r2 = residual(1e-2);
  const double r3 = residual(1e-3);
  const double slope = std::log10(r2 / r3);
  CHECK(slope >= 1.8);
  CHECK(slope <= 2.2);
  CHECK(residual(1e-4) <= 1e-7);
}

TEST_CASE("normal variations change the metric through the curvature") {
  // For a pointwise-normal direction m the metric variation reduces to
  // -2 <m, f_theta_theta>; the tangential transport term drops out.  The
  // identity holds up to the spectral tail of the product <m, f_theta>, hence
  // the generous resolution.
  const PeriodicGrid<double> grid(129);
  const ImmersedLoop<double> loop = sobgeo::random_loop(grid, 2, 30u);
  const TangentField<double> m =
      sobgeo::normal_part(loop, sobgeo::random_tangent_field(grid, 2, 31u, 0.3));
  const ScalarField<double> lhs = sobgeo::metric_variation(loop, m);
  const TangentField<double> ftt = loop.grid().diff(loop.f_theta());
  const ScalarField<double> rhs = -2.0 * (m.array() * ftt.array()).rowwise().sum();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("immersion defects are rejected") {
  const PeriodicGrid<double> grid(33);
  const TangentField<double> collapsed = TangentField<double>::Constant(grid.n(), 2, 1.0);
  CHECK_THROWS_AS(ImmersedLoop<double>(grid, collapsed), sobgeo::ImmersionError);

  // A perfectly fine circle fails an absurdly demanding floor.
  CHECK_THROWS_AS(ImmersedLoop<double>(grid, circle_points(grid), 2.0),
                  sobgeo::ImmersionError);
  CHECK_NOTHROW(ImmersedLoop<double>(grid, circle_points(grid), 0.5));
}

TEST_CASE("shape mismatches are rejected") {
  const PeriodicGrid<double> grid(33);
  const ImmersedLoop<double> unit(grid, circle_points(grid));
  const TangentField<double> wrong_rows = TangentField<double>::Zero(grid.n() - 1, 2);
  const TangentField<double> wrong_cols = TangentField<double>::Zero(grid.n(), 3);
  CHECK_THROWS_AS(sobgeo::arclength_derivative(unit, wrong_rows),
                  sobgeo::ValidationError);
  CHECK_THROWS_AS(sobgeo::project(unit, wrong_cols), sobgeo::ValidationError);
  CHECK_THROWS_AS(sobgeo::metric_variation(unit, wrong_rows), sobgeo::ValidationError);
}
