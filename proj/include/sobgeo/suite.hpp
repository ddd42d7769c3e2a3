#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sobgeo/curve.hpp"
#include "sobgeo/epdiff.hpp"
#include "sobgeo/errors.hpp"
#include "sobgeo/geodesic.hpp"
#include "sobgeo/grid.hpp"
#include "sobgeo/operator.hpp"
#include "sobgeo/random_fields.hpp"
#include "sobgeo/types.hpp"
#include "sobgeo/variation.hpp"

namespace sobgeo {

struct SuiteConfig {
  Index n = 33;                 // odd
  Index d = 2;
  double p = 1.5;
  OperatorFamily family = OperatorFamily::standard;
  std::uint64_t seed = 12345;
  double immersion_floor = default_immersion_floor<double>;
};

enum class CheckStatus { pass, fail, skip };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::skip;
  double measured = 0;   // pass iff measured <= threshold
  double threshold = 0;
  std::string note;
};

inline const char* check_status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    default: return "skip";
  }
}

inline bool suite_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (r.status == CheckStatus::fail) return false;
  }
  return true;
}

namespace suite_detail {

using D = double;

// Thrown by a check body when its stated precondition does not apply to the
// configured run (wrong ambient dimension, family without that code path, ...).
struct PreconditionNotMet {
  std::string reason;
};

inline TangentField<D> loop_points(const PeriodicGrid<D>& grid, Index d,
                                   std::uint64_t seed) {
  TangentField<D> pts = TangentField<D>::Zero(grid.n(), d);
  pts.col(0) = grid.theta().array().cos();
  pts.col(1) = grid.theta().array().sin();
  pts += random_tangent_field(grid, d, seed, 0.12, 3);
  return pts;
}

inline Matrix<D> rotation2d(D angle) {
  Matrix<D> r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

}  // namespace suite_detail

// Every module's invariant battery at desk scale.  A check whose geometric
// precondition cannot be realized under the configured immersion floor
// reports `skip` with the reason, never a silent pass.
inline std::vector<CheckResult> run_suite(const SuiteConfig& cfg) {
  using suite_detail::loop_points;
  using suite_detail::rotation2d;
  if (cfg.n < 9 || cfg.n % 2 == 0) {
    throw ValidationError("suite: n must be odd and at least 9");
  }
  if (cfg.d < 2) throw ValidationError("suite: ambient dimension must be >= 2");
  OperatorSpec<double>{cfg.p, cfg.family}.validate();

  std::vector<CheckResult> out;
  auto run = [&out](const std::string& name, double threshold,
                    const std::function<double()>& body) {
    CheckResult r;
    r.name = name;
    r.threshold = threshold;
    try {
      r.measured = body();
      r.status = r.measured <= threshold ? CheckStatus::pass : CheckStatus::fail;
    } catch (const ImmersionError& e) {
      r.status = CheckStatus::skip;
      r.note = std::string("precondition not met: ") + e.what();
    } catch (const suite_detail::PreconditionNotMet& e) {
      r.status = CheckStatus::skip;
      r.note = "not applicable: " + e.reason;
    } catch (const Error& e) {
      r.status = CheckStatus::fail;
      r.note = e.what();
    }
    out.push_back(std::move(r));
  };

  const PeriodicGrid<double> grid(cfg.n);
  const OperatorSpec<double> spec{cfg.p, cfg.family};
  const double floor = cfg.immersion_floor;
  auto make_loop = [&](std::uint64_t salt) {
    return ImmersedLoop<double>(grid, loop_points(grid, cfg.d, cfg.seed + salt), floor);
  };

  // --- grid ---------------------------------------------------------------
  run("grid-differentiates-band-limited-data-exactly", 1e-11, [&] {
    const Vector<double> u = (3.0 * grid.theta()).array().sin();
    const Vector<double> du_true = 3.0 * (3.0 * grid.theta()).array().cos();
    return (grid.diff(u) - du_true).cwiseAbs().maxCoeff();
  });
  run("grid-differentiation-matrix-is-antisymmetric", 1e-15, [&] {
    return (grid.diff_matrix() + grid.diff_matrix().transpose()).cwiseAbs().maxCoeff();
  });
  run("grid-quadrature-integrates-trigonometric-squares", 1e-12, [&] {
    const Vector<double> u = (5.0 * grid.theta()).array().cos().square();
    return std::abs(grid.quadrature(u) - EIGEN_PI);
  });
  run("grid-interpolation-reproduces-nodal-values", 1e-11, [&] {
    const Vector<double> u = random_scalar_field(grid, cfg.seed + 1);
    double worst = 0;
    for (Index j = 0; j < grid.n(); j += 3) {
      worst = std::max(worst, std::abs(grid.interpolate(u, grid.theta()(j)) - u(j)));
    }
    return worst;
  });
  run("grid-quadrature-matches-parseval-sum", 1e-11, [&] {
    const Vector<double> u = random_scalar_field(grid, cfg.seed + 2);
    const double lhs = grid.quadrature(Vector<double>(u.array().square().matrix()));
    const double rhs = 2.0 * EIGEN_PI * grid.fourier_total_energy(u);
    return std::abs(lhs - rhs) / std::abs(lhs);
  });

  // --- curve geometry -------------------------------------------------------
  run("curve-unit-tangent-has-unit-norm", 1e-12, [&] {
    const auto f = make_loop(3);
    return (unit_tangent(f).rowwise().norm().array() - 1.0).abs().maxCoeff();
  });
  run("curve-normal-projection-is-orthogonal-and-idempotent", 1e-12, [&] {
    const auto f = make_loop(4);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 5);
    const TangentField<double> hn = normal_part(f, h);
    const TangentField<double> v = unit_tangent(f);
    const double ortho = (hn.array() * v.array()).rowwise().sum().abs().maxCoeff();
    const double idem = (normal_part(f, hn) - hn).cwiseAbs().maxCoeff();
    return std::max(ortho, idem);
  });
  run("curve-curvature-commutes-with-rotations", 1e-11, [&] {
    if (cfg.d != 2) throw suite_detail::PreconditionNotMet{"planar rotation check needs d = 2"};
    const auto f = make_loop(6);
    const Matrix<double> r = rotation2d(0.7);
    const ImmersedLoop<double> fr(grid, f.points() * r.transpose(), floor);
    return (curvature(fr) - curvature(f) * r.transpose()).cwiseAbs().maxCoeff();
  });

  // --- operator -------------------------------------------------------------
  run("operator-circle-spectrum-matches-multipliers", 1e-9, [&] {
    TangentField<double> circle(grid.n(), 2);
    circle.col(0) = grid.theta().array().cos();
    circle.col(1) = grid.theta().array().sin();
    const ImmersedLoop<double> f(grid, circle, floor);
    const WeightedOperator<double> op = assemble(f, spec);
    // sobolev_multipliers already carries the power p; mode nu appears with
    // multiplicity 2 except nu = 0.  Compare sorted lists (A's eigenvalues,
    // not A^p's: divide the power back out by comparing against mult^(1/p)
    // would lose precision, so compare lambda^p against the multipliers).
    const Vector<double> mult = sobolev_multipliers(grid, spec);
    Vector<double> theory(grid.n());
    theory(0) = mult(0);
    for (Index nu = 1, k = 1; nu <= grid.max_mode(); ++nu, k += 2) {
      theory(k) = mult(nu);
      theory(k + 1) = mult(nu);
    }
    std::sort(theory.data(), theory.data() + theory.size());
    Vector<double> lambda_p = op.eigenvalues().array().pow(spec.p);
    std::sort(lambda_p.data(), lambda_p.data() + lambda_p.size());
    return ((lambda_p - theory).cwiseAbs().array() / theory.array()).maxCoeff();
  });
  run("operator-metric-is-symmetric", 1e-11, [&] {
    const auto f = make_loop(7);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 8);
    const TangentField<double> k = random_tangent_field(grid, cfg.d, cfg.seed + 9);
    const WeightedOperator<double> op = assemble(f, spec);
    const double ghk = op.metric_inner(h, k);
    const double gkh = op.metric_inner(k, h);
    return std::abs(ghk - gkh) / std::max(std::abs(ghk), 1e-30);
  });
  run("operator-metric-dominates-weighted-l2", 0.0, [&] {
    const auto f = make_loop(10);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 11);
    const WeightedOperator<double> op = assemble(f, spec);
    const double g = op.metric_inner(h, h);
    const Vector<double> w = op.weight();
    const double l2 = ((h.array().square().rowwise().sum()) * w.array()).sum();
    const double lower = cfg.family == OperatorFamily::standard
                             ? 1.0
                             : std::pow(op.vol(), -3.0 * spec.p);
    const double required = (1.0 - 1e-9) * lower * l2;
    return (required - g) / std::max(required, 1e-30);
  });
  run("operator-fractional-powers-form-a-semigroup", 1e-9, [&] {
    const auto f = make_loop(12);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 13);
    const WeightedOperator<double> op = assemble(f, spec);
    const TangentField<double> two_step = op.apply_power(0.7, op.apply_power(0.8, h));
    const TangentField<double> one_step = op.apply_power(1.5, h);
    return (two_step - one_step).cwiseAbs().maxCoeff() / one_step.cwiseAbs().maxCoeff();
  });
  run("operator-zeroth-power-is-identity", 1e-12, [&] {
    const auto f = make_loop(14);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 15);
    const WeightedOperator<double> op = assemble(f, spec);
    return (op.apply_power(0.0, h) - h).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff();
  });

  // --- operator variation -----------------------------------------------------
  run("variation-spectral-derivative-matches-finite-differences", 1e-6, [&] {
    const auto f = make_loop(16);
    const TangentField<double> m = random_tangent_field(grid, cfg.d, cfg.seed + 17);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 18);
    const WeightedOperator<double> op = assemble(f, spec);
    const TangentField<double> exact = derivative_P_spectral(op, f, m, h);
    const TangentField<double> fd = derivative_P(f, spec, m, h, -1.0, true);
    return (exact - fd).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff();
  });
  run("variation-adjoint-satisfies-the-defining-duality", 1e-6, [&] {
    const auto f = make_loop(19);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 20);
    const TangentField<double> k = random_tangent_field(grid, cfg.d, cfg.seed + 21);
    TangentField<double> m = normal_part(f, random_tangent_field(grid, cfg.d, cfg.seed + 22));
    const WeightedOperator<double> op = assemble(f, spec);
    const AdjointResult<double> adj = adjoint_normal_spectral(op, f, h, k);
    const Vector<double> w = op.weight();
    const double lhs =
        ((adj.value.array() * m.array()).rowwise().sum() * w.array()).sum();
    const TangentField<double> dph = derivative_P(f, spec, m, h, -1.0, true);
    const double rhs = ((dph.array() * k.array()).rowwise().sum() * w.array()).sum();
    return std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-30);
  });
  run("variation-closed-form-adjoint-matches-spectral-adjoint", 1e-10, [&] {
    if (cfg.family != OperatorFamily::standard) {
      throw suite_detail::PreconditionNotMet{"closed form exists for the standard family"};
    }
    const auto f = make_loop(23);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 24);
    const TangentField<double> k = random_tangent_field(grid, cfg.d, cfg.seed + 25);
    const OperatorSpec<double> ispec{2.0, OperatorFamily::standard};
    const WeightedOperator<double> op = assemble(f, ispec);
    const TangentField<double> a = adjoint_normal_spectral(op, f, h, k).value;
    const TangentField<double> b = adjoint_normal_closed_form(f, ispec, h, k).value;
    return (a - b).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
  });
  run("variation-adjoint-swap-gap-matches-identity", 1e-10, [&] {
    const auto f = make_loop(26);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 27);
    const TangentField<double> k = random_tangent_field(grid, cfg.d, cfg.seed + 28);
    const WeightedOperator<double> op = assemble(f, spec);
    const TangentField<double> ahk = adjoint_normal_spectral(op, f, h, k).value;
    const TangentField<double> akh = adjoint_normal_spectral(op, f, k, h).value;
    const TangentField<double> gap = adjoint_normal_swap_gap(op, f, h, k);
    return (ahk - akh - gap).cwiseAbs().maxCoeff() /
           std::max(gap.cwiseAbs().maxCoeff(), 1e-30);
  });

  // --- geodesic engine --------------------------------------------------------
  run("geodesic-spray-is-quadratic-in-the-velocity", 1e-11, [&] {
    const auto f = make_loop(29);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 30);
    const WeightedOperator<double> op = assemble(f, spec);
    const TangentField<double> base = spray_eval(f, op, h).acceleration;
    double worst = 0;
    for (const double lam : {-1.0, 2.0}) {
      const TangentField<double> scaled = spray_eval(f, op, TangentField<double>(lam * h)).acceleration;
      worst = std::max(worst, (scaled - lam * lam * base).cwiseAbs().maxCoeff() /
                                  base.cwiseAbs().maxCoeff());
    }
    return worst;
  });
  run("geodesic-spray-commutes-with-rotations", 1e-10, [&] {
    if (cfg.d != 2) throw suite_detail::PreconditionNotMet{"planar rotation check needs d = 2"};
    const auto f = make_loop(31);
    const TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 32);
    const Matrix<double> r = rotation2d(1.1);
    const ImmersedLoop<double> fr(grid, f.points() * r.transpose(), floor);
    const WeightedOperator<double> op = assemble(f, spec);
    const WeightedOperator<double> opr = assemble(fr, spec);
    const TangentField<double> lhs = spray_eval(fr, opr, TangentField<double>(h * r.transpose())).acceleration;
    const TangentField<double> rhs = spray_eval(f, op, h).acceleration * r.transpose();
    return (lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff();
  });
  run("geodesic-energy-is-conserved-along-short-flows", 1e-8, [&] {
    if (cfg.p < 1.0) throw suite_detail::PreconditionNotMet{"loop geodesics require p >= 1"};
    // Conservation property of the discretized flow; pinned to a resolution
    // where the products of the band-limited test data are fully resolved,
    // independent of the configured grid.
    const PeriodicGrid<double> g65(65);
    const ImmersedLoop<double> f(g65, loop_points(g65, cfg.d, cfg.seed + 33), floor);
    TangentField<double> h =
        normal_part(f, random_tangent_field(g65, cfg.d, cfg.seed + 34, 0.3));
    const ExpResult<double> r = exp_map(f, h, spec, 0.2, 50);
    if (r.status != ExpStatus::ok) throw ImmersionError("flow left the immersion chart");
    return r.energy_drift;
  });
  run("geodesic-flow-is-time-reversible", 1e-6, [&] {
    if (cfg.p < 1.0) throw suite_detail::PreconditionNotMet{"loop geodesics require p >= 1"};
    const auto f = make_loop(35);
    TangentField<double> h = random_tangent_field(grid, cfg.d, cfg.seed + 36, 0.3);
    const ExpResult<double> fwd = exp_map(f, h, spec, 0.3, 30);
    if (fwd.status != ExpStatus::ok) throw ImmersionError("flow left the immersion chart");
    const ImmersedLoop<double> fend(grid, fwd.endpoint().points, floor);
    const ExpResult<double> back =
        exp_map(fend, TangentField<double>(-fwd.endpoint().velocity), spec, 0.3, 30);
    if (back.status != ExpStatus::ok) throw ImmersionError("flow left the immersion chart");
    return (back.endpoint().points - f.points()).cwiseAbs().maxCoeff() /
           f.points().cwiseAbs().maxCoeff();
  });

  // --- diffeomorphism bridge ---------------------------------------------------
  run("epdiff-lagrangian-and-eulerian-solutions-agree", 1e-8, [&] {
    const PeriodicGrid<double> g65(65);
    const ScalarField<double> u0 = 0.2 * g65.theta().array().sin();
    const OperatorSpec<double> dspec{1.0, OperatorFamily::standard};
    return lagrangian_vs_eulerian(g65, u0, dspec, 0.1, 50).sup_gap;
  });
  run("epdiff-eulerian-flow-commutes-with-rotations", 1e-10, [&] {
    const PeriodicGrid<double> g(65);
    const OperatorSpec<double> dspec{1.0, OperatorFamily::standard};
    const ScalarField<double> u0 = 0.2 * g.theta().array().sin();
    const Index shift = 9;
    ScalarField<double> u0s(g.n());
    for (Index j = 0; j < g.n(); ++j) u0s(j) = u0((j + shift) % g.n());
    EulerianOptions<double> opt;
    opt.record_every = 50;
    const auto a = epdiff_solve(g, u0, dspec, 0.1, 50, opt);
    const auto b = epdiff_solve(g, u0s, dspec, 0.1, 50, opt);
    ScalarField<double> a_shifted(g.n());
    for (Index j = 0; j < g.n(); ++j) a_shifted(j) = a.fields.back()((j + shift) % g.n());
    return (b.fields.back() - a_shifted).cwiseAbs().maxCoeff();
  });
  run("epdiff-multiplier-matrix-matches-dense-operator-on-flat-density", 1e-10, [&] {
    const OperatorSpec<double> dspec{cfg.p, cfg.family};
    const ScalarField<double> u = random_scalar_field(grid, cfg.seed + 37);
    const ScalarField<double> ones = ScalarField<double>::Ones(grid.n());
    const WeightedOperator<double> op = assemble_from_density(grid, ones, dspec);
    const EulerianOperator<double> mul = make_eulerian_operator(grid, dspec);
    const Vector<double> a = op.apply(u);
    const Vector<double> b = mul.P * u;
    return (a - b).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
  });

  return out;
}

}  // namespace sobgeo
