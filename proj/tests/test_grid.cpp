// Periodic grid: spectral differentiation, quadrature, interpolation,
// resampling and Fourier diagnostics.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <sobgeo/grid.hpp>
#include <sobgeo/random_fields.hpp>

using sobgeo::Index;
using sobgeo::PeriodicGrid;
using sobgeo::ScalarField;
using sobgeo::Vector;

namespace {
constexpr double kPi = 3.14159265358979323846;

double max_abs(const Vector<double>& v) { return v.cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("construction rejects even or too-small node counts") {
  CHECK_THROWS_AS(PeriodicGrid<double>(32), sobgeo::ValidationError);
  CHECK_THROWS_AS(PeriodicGrid<double>(7), sobgeo::ValidationError);
  CHECK_THROWS_AS(PeriodicGrid<double>(0), sobgeo::ValidationError);
  CHECK_NOTHROW(PeriodicGrid<double>(9));
}

TEST_CASE("node layout and spacing") {
  const PeriodicGrid<double> grid(33);
  CHECK(grid.n() == 33);
  CHECK(grid.max_mode() == 16);
  CHECK(grid.spacing() == doctest::Approx(2.0 * kPi / 33.0).epsilon(1e-15));
  CHECK(grid.theta()(0) == 0.0);
  CHECK(grid.theta()(32) == doctest::Approx(2.0 * kPi * 32.0 / 33.0).epsilon(1e-15));
}

TEST_CASE("differentiation is exact on low trigonometric modes") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = grid.theta().array().sin();
  const ScalarField<double> du = grid.theta().array().cos();
  CHECK(max_abs(grid.diff(u) - du) <= 1e-12);

  const ScalarField<double> u5 = (5.0 * grid.theta().array()).sin();
  const ScalarField<double> du5 = 5.0 * (5.0 * grid.theta().array()).cos();
  CHECK(max_abs(grid.diff(u5) - du5) <= 1e-11);
}

TEST_CASE("derivative of a constant vanishes") {
  const PeriodicGrid<double> grid(17);
  const ScalarField<double> u = ScalarField<double>::Constant(17, 3.25);
  CHECK(max_abs(grid.diff(u)) <= 1e-13);
}

TEST_CASE("differentiation is exact for every representable mode") {
  const PeriodicGrid<double> grid(21);
  for (Index k = 1; k <= grid.max_mode(); ++k) {
    const double kk = static_cast<double>(k);
    const ScalarField<double> c = (kk * grid.theta().array()).cos();
    const ScalarField<double> s = (kk * grid.theta().array()).sin();
    CHECK(max_abs(grid.diff(c) + kk * s) <= 1e-11);
    CHECK(max_abs(grid.diff(s) - kk * c) <= 1e-11);
  }
}

TEST_CASE("differentiation matrix is exactly antisymmetric") {
  const PeriodicGrid<double> grid(33);
  const auto& D = grid.diff_matrix();
  CHECK((D + D.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense derivative agrees with the Fourier round-trip derivative") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 71u);
  CHECK(max_abs(grid.diff(u) - grid.diff_dft(u)) <= 1e-12);
}

TEST_CASE("integration by parts holds to rounding") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 5u);
  const ScalarField<double> v = sobgeo::random_scalar_field(grid, 6u);
  const double lhs = grid.quadrature((u.array() * grid.diff(v).array()).matrix());
  const double rhs = -grid.quadrature((v.array() * grid.diff(u).array()).matrix());
  const double scale = std::max(std::abs(lhs), 1.0);
  CHECK(std::abs(lhs - rhs) / scale <= 1e-12);
}

TEST_CASE("quadrature integrates constants and trigonometric squares exactly") {
  const PeriodicGrid<double> grid(33);
  CHECK(std::abs(grid.quadrature(ScalarField<double>::Ones(33)) - 2.0 * kPi) <= 1e-13);
  const ScalarField<double> c2 = grid.theta().array().cos().square();
  CHECK(std::abs(grid.quadrature(c2) - kPi) <= 1e-13);
}

TEST_CASE("quadrature is spectrally accurate on analytic data") {
  // exp(sin(theta)) has rapidly decaying Fourier coefficients, so the n = 65
  // rectangle rule already agrees with a much finer one to near rounding.
  const PeriodicGrid<double> coarse(65);
  const PeriodicGrid<double> fine(4097);
  const double q65 = coarse.quadrature(coarse.theta().array().sin().exp().matrix());
  const double qref = fine.quadrature(fine.theta().array().sin().exp().matrix());
  CHECK(std::abs(q65 - qref) / std::abs(qref) <= 1e-10);
}

TEST_CASE("interpolation reproduces nodal values") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 9u);
  for (Index j = 0; j < grid.n(); j += 5) {
    CHECK(std::abs(grid.interpolate(u, grid.theta()(j)) - u(j)) <= 1e-11);
  }
}

TEST_CASE("interpolation is exact on band-limited data between nodes") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = (3.0 * grid.theta().array()).cos();
  for (const double x : {0.1, 1.7, 4.0, 6.1}) {
    CHECK(std::abs(grid.interpolate(u, x) - std::cos(3.0 * x)) <= 1e-11);
  }
}

TEST_CASE("resampling along the identity is the identity") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 12u);
  const ScalarField<double> phi = grid.theta();
  CHECK(max_abs(grid.resample(u, phi) - u) <= 1e-11);
}

TEST_CASE("resampling along a grid rotation is a cyclic shift") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 13u);
  const Index shift = 7;
  const ScalarField<double> phi =
      grid.theta().array() + static_cast<double>(shift) * grid.spacing();
  const ScalarField<double> rotated = grid.resample(u, phi);
  for (Index j = 0; j < grid.n(); ++j) {
    CHECK(std::abs(rotated(j) - u((j + shift) % grid.n())) <= 1e-12);
  }
}

TEST_CASE("resampling commutes with differentiation under grid rotations") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 14u);
  const ScalarField<double> phi = grid.theta().array() + 4.0 * grid.spacing();
  const ScalarField<double> a = grid.diff(grid.resample(u, phi));
  const ScalarField<double> b = grid.resample(grid.diff(u), phi);
  CHECK(max_abs(a - b) <= 1e-11);
}

TEST_CASE("resampling along a smooth reparametrisation matches the closed form") {
  const PeriodicGrid<double> grid(129);
  const ScalarField<double> u = grid.theta().array().cos();
  const ScalarField<double> phi =
      grid.theta().array() + 0.3 * grid.theta().array().sin();
  const ScalarField<double> expected = phi.array().cos();
  CHECK(max_abs(grid.resample(u, phi) - expected) <= 1e-10);
}

TEST_CASE("resampling validates that the map is an orientation-preserving circle map") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 15u);
  // Strong enough sine component to destroy monotonicity.
  const ScalarField<double> bad =
      grid.theta().array() + 1.5 * grid.theta().array().sin();
  CHECK_THROWS_AS(grid.resample(u, bad), sobgeo::ValidationError);
}

TEST_CASE("fourier coefficients reconstruct the field") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 16u);
  const auto [a, b] = grid.fourier_coefficients(u);
  ScalarField<double> rec = ScalarField<double>::Constant(grid.n(), a(0));
  for (Index k = 1; k <= grid.max_mode(); ++k) {
    rec += (a(k) * (static_cast<double>(k) * grid.theta().array()).cos() +
            b(k) * (static_cast<double>(k) * grid.theta().array()).sin())
               .matrix();
  }
  CHECK(max_abs(rec - u) <= 1e-12);
}

TEST_CASE("quadrature of the square matches the Parseval sum") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = sobgeo::random_scalar_field(grid, 17u);
  const double lhs = grid.quadrature(u.array().square().matrix());
  const double rhs = 2.0 * kPi * grid.fourier_total_energy(u);
  CHECK(std::abs(lhs - rhs) / std::abs(rhs) <= 1e-12);
}

TEST_CASE("tail energy isolates the high modes") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = (3.0 * grid.theta().array()).sin();

  // All energy of sin(3 theta) sits at mode 3.
  CHECK(grid.fourier_tail_energy(u, 5) <= 1e-24);
  CHECK(std::abs(grid.fourier_tail_energy(u, 3) - 0.5) <= 1e-13);
  CHECK(std::abs(grid.fourier_tail_energy(u, 0) - grid.fourier_total_energy(u)) <=
        1e-14);

  const ScalarField<double> zero = ScalarField<double>::Zero(grid.n());
  CHECK(grid.fourier_tail_energy(zero, 4) == 0.0);

  CHECK_THROWS_AS(grid.fourier_tail_energy(u, grid.max_mode() + 1),
                  sobgeo::ValidationError);
}

TEST_CASE("tail energy of a constant is carried entirely by the zero mode") {
  const PeriodicGrid<double> grid(17);
  const ScalarField<double> u = ScalarField<double>::Constant(17, 2.0);
  CHECK(std::abs(grid.fourier_tail_energy(u, 0) - 4.0) <= 1e-13);
  CHECK(grid.fourier_tail_energy(u, 1) <= 1e-26);
}

TEST_CASE("field length mismatches are rejected") {
  const PeriodicGrid<double> grid(33);
  const ScalarField<double> u = ScalarField<double>::Zero(32);
  CHECK_THROWS_AS(grid.diff(u), sobgeo::ValidationError);
  CHECK_THROWS_AS(grid.quadrature(u), sobgeo::ValidationError);
}
