#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "sobgeo/errors.hpp"
#include "sobgeo/grid.hpp"
#include "sobgeo/operator.hpp"
#include "sobgeo/types.hpp"
#include "sobgeo/variation.hpp"

namespace sobgeo {

// ---------------------------------------------------------------------------
// Orientation-preserving circle diffeomorphisms phi(theta) = theta + psi(theta).
// ---------------------------------------------------------------------------

template <typename S>
class CircleDiffeo {
 public:
  CircleDiffeo(PeriodicGrid<S> grid, ScalarField<S> displacement,
               S floor = static_cast<S>(1e-8))
      : grid_(std::move(grid)), psi_(std::move(displacement)) {
    if (psi_.rows() != grid_.n()) {
      throw ValidationError("CircleDiffeo: displacement does not match grid");
    }
    if (!psi_.allFinite()) throw ValidationError("CircleDiffeo: displacement not finite");
    dphi_ = (grid_.diff(psi_).array() + S(1)).matrix();
    if (!(dphi_.minCoeff() > floor)) {
      throw ImmersionError("CircleDiffeo: phi' at or below zero (map not invertible)");
    }
  }

  static CircleDiffeo identity(const PeriodicGrid<S>& grid) {
    return CircleDiffeo(grid, ScalarField<S>::Zero(grid.n()));
  }

  const PeriodicGrid<S>& grid() const { return grid_; }
  const ScalarField<S>& displacement() const { return psi_; }
  const ScalarField<S>& derivative() const { return dphi_; }  // phi' = 1 + psi'
  ScalarField<S> phi() const { return grid_.theta() + psi_; }

  // u composed with phi: (u o phi)(theta_j), through band-limited interpolation.
  ScalarField<S> act(const ScalarField<S>& u) const {
    ScalarField<S> out(grid_.n());
    const ScalarField<S> ph = phi();
    for (Index j = 0; j < grid_.n(); ++j) out(j) = grid_.interpolate(u, ph(j));
    return out;
  }

  // Nodal values of phi^-1, by safeguarded Newton on phi(y) = theta_j.
  CircleDiffeo inverse() const {
    const Index n = grid_.n();
    const ScalarField<S> dpsi = grid_.diff(psi_);
    ScalarField<S> inv_disp(n);
    for (Index j = 0; j < n; ++j) {
      const S x = grid_.theta()(j);
      S y = x;
      bool done = false;
      for (int it = 0; it < 80; ++it) {
        const S res = y + grid_.interpolate(psi_, y) - x;
        if (std::abs(res) < static_cast<S>(1e-14) * (S(1) + std::abs(x))) {
          done = true;
          break;
        }
        const S slope = S(1) + grid_.interpolate(dpsi, y);
        S step = res / slope;
        const S cap = static_cast<S>(1.5);
        if (std::abs(step) > cap) step = step > S(0) ? cap : -cap;
        y -= step;
      }
      if (!done) throw ConvergenceError("CircleDiffeo::inverse: Newton did not converge");
      inv_disp(j) = y - x;
    }
    return CircleDiffeo(grid_, inv_disp);
  }

 private:
  PeriodicGrid<S> grid_;
  ScalarField<S> psi_;
  ScalarField<S> dphi_;
};

// ---------------------------------------------------------------------------
// Lagrangian geodesics on the diffeomorphism group.
// ---------------------------------------------------------------------------

template <typename S>
struct DiffeoState {
  ScalarField<S> displacement;  // psi, with phi = id + psi
  ScalarField<S> velocity;      // phi_t at the nodes
};

template <typename S>
struct DiffeoSprayEval {
  ScalarField<S> acceleration;
  S energy;
};

// Right-reduced geodesic spray on Diff(S^1) for G_phi(w,w) = int (P_phi w) w ds:
//   phi_tt = -P^-1( 2 (P phi_t) (d_theta phi_t) / phi' + (d_{phi_t} P) phi_t ).
// In one dimension the normal bundle is trivial, so the curvature and adjoint
// terms of the general spray vanish identically and this form is exact for
// every order p >= 1/2.
template <typename S>
DiffeoSprayEval<S> diffeo_spray_eval(const PeriodicGrid<S>& grid,
                                     const ScalarField<S>& psi,
                                     const ScalarField<S>& w,
                                     const OperatorSpec<S>& spec) {
  const ScalarField<S> sigma = (grid.diff(psi).array() + S(1)).matrix();
  if (!(sigma.minCoeff() > static_cast<S>(1e-8))) {
    throw ImmersionError("diffeomorphism path: phi' reached zero (particle crossing)");
  }
  const WeightedOperator<S> op = assemble_from_density(grid, sigma, spec);
  const ScalarField<S> pw = op.apply(w);
  const ScalarField<S> dw = grid.diff(w);  // = d/dt phi' along the flow
  const Vector<S> dpw = derivative_P_spectral_density(op, dw, w);
  const ScalarField<S> rhs =
      (S(2) * pw.array() * dw.array() / sigma.array()).matrix() + dpw;
  DiffeoSprayEval<S> out;
  out.acceleration = -op.apply_inverse(rhs);
  out.energy = op.metric_inner(w, w);
  return out;
}

template <typename S>
struct DiffeoExpResult {
  ExpStatus status = ExpStatus::ok;
  std::vector<S> times;
  std::vector<DiffeoState<S>> states;
  std::vector<S> energies;
  S failure_time = S(-1);
  S energy_initial = S(0);
  S energy_drift = S(0);
  bool energy_warning = false;
  std::vector<S> step_times;
  std::vector<S> step_energies;

  const DiffeoState<S>& endpoint() const { return states.back(); }
};

template <typename S>
DiffeoExpResult<S> diffeo_exp_map(const PeriodicGrid<S>& grid,
                                  const ScalarField<S>& psi0,
                                  const ScalarField<S>& w0,
                                  const OperatorSpec<S>& spec, S horizon, Index steps,
                                  Index record_every = 1,
                                  S warn_drift = static_cast<S>(1e-6)) {
  spec.validate_for_diffeo_geodesics();
  if (steps < 1) throw ValidationError("diffeo_exp_map: steps must be positive");
  if (psi0.rows() != grid.n() || w0.rows() != grid.n()) {
    throw ValidationError("diffeo_exp_map: fields do not match grid");
  }
  CircleDiffeo<S>(grid, psi0);  // validate the initial map
  const S dt = horizon / static_cast<S>(steps);

  DiffeoExpResult<S> result;
  ScalarField<S> psi = psi0, w = w0;
  auto record = [&](S t, S energy) {
    result.times.push_back(t);
    result.states.push_back({psi, w});
    result.energies.push_back(energy);
  };

  Index i = 0;
  bool recorded_current = false;
  try {
    for (i = 0; i < steps; ++i) {
      const S t = horizon * static_cast<S>(i) / static_cast<S>(steps);
      const auto s1 = diffeo_spray_eval(grid, psi, w, spec);
      result.step_times.push_back(t);
      result.step_energies.push_back(s1.energy);
      recorded_current = false;
      if (i % record_every == 0) {
        record(t, s1.energy);
        recorded_current = true;
      }
      const ScalarField<S> k1p = w;
      const ScalarField<S> k2p = w + (dt / S(2)) * s1.acceleration;
      const ScalarField<S> psi2 = psi + (dt / S(2)) * k1p;
      const auto s2 = diffeo_spray_eval(grid, psi2, k2p, spec);
      const ScalarField<S> k3p = w + (dt / S(2)) * s2.acceleration;
      const ScalarField<S> psi3 = psi + (dt / S(2)) * k2p;
      const auto s3 = diffeo_spray_eval(grid, psi3, k3p, spec);
      const ScalarField<S> k4p = w + dt * s3.acceleration;
      const ScalarField<S> psi4 = psi + dt * k3p;
      const auto s4 = diffeo_spray_eval(grid, psi4, k4p, spec);
      psi += (dt / S(6)) * (k1p + S(2) * k2p + S(2) * k3p + k4p);
      w += (dt / S(6)) * (s1.acceleration + S(2) * s2.acceleration +
                          S(2) * s3.acceleration + s4.acceleration);
    }
    const ScalarField<S> sigma_end = (grid.diff(psi).array() + S(1)).matrix();
    if (!(sigma_end.minCoeff() > static_cast<S>(1e-8))) {
      throw ImmersionError("diffeomorphism path: phi' reached zero (particle crossing)");
    }
    const S e_end =
        assemble_from_density(grid, sigma_end, spec).metric_inner(w, w);
    result.step_times.push_back(horizon);
    result.step_energies.push_back(e_end);
    record(horizon, e_end);
  } catch (const ImmersionError&) {
    result.status = ExpStatus::immersion_lost;
    result.failure_time = horizon * static_cast<S>(i) / static_cast<S>(steps);
    if (!recorded_current && !result.step_times.empty() &&
        result.step_times.back() == result.failure_time) {
      record(result.failure_time, result.step_energies.back());
    }
    if (result.states.empty()) {
      throw ImmersionError("diffeo_exp_map: initial map already degenerate");
    }
  }

  result.energy_initial = result.step_energies.empty() ? S(0) : result.step_energies.front();
  S drift = S(0);
  for (const S e : result.step_energies) {
    drift = std::max(drift, std::abs(e - result.energy_initial));
  }
  if (result.energy_initial > static_cast<S>(1e-30)) drift /= result.energy_initial;
  result.energy_drift = drift;
  result.energy_warning = drift > warn_drift;
  return result;
}

// ---------------------------------------------------------------------------
// Eulerian form on the Lie algebra: m_t + u m_theta + 2 u_theta m = 0, m = P u.
// Built from explicit Fourier multiplier matrices, deliberately independent of
// the weighted-operator path above (it is the cross-check for that path).
// ---------------------------------------------------------------------------

// Multiplier of the inertia operator at mode nu.
template <typename S>
Vector<S> sobolev_multipliers(const PeriodicGrid<S>& grid, const OperatorSpec<S>& spec) {
  const Index m = grid.max_mode();
  Vector<S> mult(m + 1);
  const S two_pi = S(2) * S(EIGEN_PI);
  for (Index nu = 0; nu <= m; ++nu) {
    const S nn = static_cast<S>(nu) * static_cast<S>(nu);
    const S base = spec.family == OperatorFamily::standard
                       ? S(1) + nn
                       : S(1) / (two_pi * two_pi * two_pi) + nn / two_pi;
    mult(nu) = std::pow(base, spec.p);
  }
  return mult;
}

// Dense symmetric circulant realizing u_hat(nu) -> mult(nu) u_hat(nu):
//   M_jk = (1/n) [ mult_0 + 2 sum_nu mult_nu cos(nu (theta_j - theta_k)) ].
template <typename S>
Matrix<S> multiplier_matrix(const PeriodicGrid<S>& grid, const Vector<S>& mult) {
  const Index n = grid.n();
  if (mult.size() != grid.max_mode() + 1) {
    throw ValidationError("multiplier_matrix: wrong multiplier count");
  }
  Matrix<S> M(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k <= j; ++k) {
      S acc = mult(0);
      const S dthjk = grid.theta()(j) - grid.theta()(k);
      for (Index nu = 1; nu <= grid.max_mode(); ++nu) {
        acc += S(2) * mult(nu) * std::cos(static_cast<S>(nu) * dthjk);
      }
      M(j, k) = acc / static_cast<S>(n);
      M(k, j) = M(j, k);
    }
  }
  return M;
}

template <typename S>
struct EulerianOperator {
  Matrix<S> P;      // inertia operator
  Matrix<S> P_inv;  // its inverse multiplier
};

template <typename S>
EulerianOperator<S> make_eulerian_operator(const PeriodicGrid<S>& grid,
                                           const OperatorSpec<S>& spec) {
  const Vector<S> mult = sobolev_multipliers(grid, spec);
  return {multiplier_matrix(grid, mult),
          multiplier_matrix(grid, Vector<S>(mult.cwiseInverse()))};
}

// Velocity/momentum pair on the Lie algebra, m = P u by construction.
template <typename S>
struct EulerianState {
  ScalarField<S> u;
  ScalarField<S> m;
};

template <typename S>
EulerianState<S> eulerian_state(const EulerianOperator<S>& op, const ScalarField<S>& u) {
  return {u, op.P * u};
}

template <typename S>
ScalarField<S> eulerian_rhs(const PeriodicGrid<S>& grid, const EulerianOperator<S>& op,
                            const ScalarField<S>& u) {
  const ScalarField<S> m = op.P * u;
  const ScalarField<S> flux =
      (u.array() * grid.diff(m).array() + S(2) * grid.diff(u).array() * m.array())
          .matrix();
  return -(op.P_inv * flux);
}

// One classical RK4 step of m_t + u m_theta + 2 u_theta m = 0 in u-form.
template <typename S>
ScalarField<S> epdiff_step(const PeriodicGrid<S>& grid, const EulerianOperator<S>& op,
                           const ScalarField<S>& u, S dt) {
  const ScalarField<S> k1 = eulerian_rhs(grid, op, u);
  const ScalarField<S> k2 = eulerian_rhs(grid, op, ScalarField<S>(u + (dt / S(2)) * k1));
  const ScalarField<S> k3 = eulerian_rhs(grid, op, ScalarField<S>(u + (dt / S(2)) * k2));
  const ScalarField<S> k4 = eulerian_rhs(grid, op, ScalarField<S>(u + dt * k3));
  return u + (dt / S(6)) * (k1 + S(2) * k2 + S(2) * k3 + k4);
}

template <typename S>
struct EulerianOptions {
  Index record_every = 1;
  bool filter = false;            // damp the top sixth of the spectrum each step
  S blowup_guard = static_cast<S>(1e6);
};

template <typename S>
struct EulerianResult {
  std::vector<S> times;
  std::vector<ScalarField<S>> fields;  // u(t)
  std::vector<S> energies;             // quadrature(u * P u)
  S energy_initial = S(0);
  S energy_drift = S(0);
};

template <typename S>
ScalarField<S> spectral_filter(const PeriodicGrid<S>& grid, const ScalarField<S>& u) {
  auto [a, b] = grid.fourier_coefficients(u);
  const Index m = grid.max_mode();
  const Index cut = (5 * m) / 6;
  ScalarField<S> out = ScalarField<S>::Constant(grid.n(), a(0));
  for (Index k = 1; k <= m; ++k) {
    S damp = S(1);
    if (k > cut && m > cut) {
      const S x = static_cast<S>(k - cut) / static_cast<S>(m - cut);
      damp = std::exp(S(-36) * x * x * x * x);
    }
    out += damp * (a(k) * (static_cast<S>(k) * grid.theta()).array().cos() +
                   b(k) * (static_cast<S>(k) * grid.theta()).array().sin())
                      .matrix();
  }
  return out;
}

// Fixed-step RK4 for u_t = -P^-1( u (P u)_theta + 2 u_theta (P u) ).
template <typename S>
EulerianResult<S> epdiff_solve(const PeriodicGrid<S>& grid, const ScalarField<S>& u0,
                               const OperatorSpec<S>& spec, S horizon, Index steps,
                               const EulerianOptions<S>& opt = {}) {
  spec.validate_for_diffeo_geodesics();
  if (u0.rows() != grid.n()) throw ValidationError("epdiff_solve: field does not match grid");
  if (steps < 1) throw ValidationError("epdiff_solve: steps must be positive");
  const EulerianOperator<S> op = make_eulerian_operator(grid, spec);
  const S dt = horizon / static_cast<S>(steps);

  auto energy = [&](const ScalarField<S>& u) {
    return grid.quadrature(ScalarField<S>((u.array() * (op.P * u).array()).matrix()));
  };

  EulerianResult<S> result;
  ScalarField<S> u = u0;
  auto record = [&](S t) {
    result.times.push_back(t);
    result.fields.push_back(u);
    result.energies.push_back(energy(u));
  };
  result.energy_initial = energy(u);

  S drift = S(0);
  for (Index i = 0; i < steps; ++i) {
    if (i % opt.record_every == 0) record(horizon * static_cast<S>(i) / static_cast<S>(steps));
    u = epdiff_step(grid, op, u, dt);
    if (opt.filter) u = spectral_filter(grid, u);
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > opt.blowup_guard) {
      throw ConvergenceError("epdiff_solve: solution blew up (resolution exhausted?)");
    }
    drift = std::max(drift, std::abs(energy(u) - result.energy_initial));
  }
  record(horizon);
  result.energy_drift = result.energy_initial > static_cast<S>(1e-30)
                            ? drift / result.energy_initial
                            : drift;
  return result;
}

// ---------------------------------------------------------------------------
// The two descriptions of the same geodesic, compared at the endpoint.
// ---------------------------------------------------------------------------

template <typename S>
struct EPDiffComparison {
  ScalarField<S> u_lagrangian;  // phi_t o phi^-1 at the horizon
  ScalarField<S> u_eulerian;
  S sup_gap = S(0);             // max nodal |difference|
  S energy_gap = S(0);          // relative gap of the two conserved energies
  S lagrangian_drift = S(0);
  S eulerian_drift = S(0);
};

template <typename S>
EPDiffComparison<S> lagrangian_vs_eulerian(const PeriodicGrid<S>& grid,
                                           const ScalarField<S>& u0,
                                           const OperatorSpec<S>& spec, S horizon,
                                           Index steps) {
  const ScalarField<S> psi0 = ScalarField<S>::Zero(grid.n());
  const DiffeoExpResult<S> lag =
      diffeo_exp_map(grid, psi0, u0, spec, horizon, steps, steps);
  if (lag.status != ExpStatus::ok) {
    throw ConvergenceError("lagrangian_vs_eulerian: flow lost invertibility");
  }
  EulerianOptions<S> eopt;
  eopt.record_every = steps;
  const EulerianResult<S> eul = epdiff_solve(grid, u0, spec, horizon, steps, eopt);

  const CircleDiffeo<S> phi(grid, lag.endpoint().displacement);
  EPDiffComparison<S> cmp;
  cmp.u_lagrangian = phi.inverse().act(lag.endpoint().velocity);
  cmp.u_eulerian = eul.fields.back();
  cmp.sup_gap = (cmp.u_lagrangian - cmp.u_eulerian).cwiseAbs().maxCoeff();
  cmp.lagrangian_drift = lag.energy_drift;
  cmp.eulerian_drift = eul.energy_drift;
  const S e0 = std::max(lag.energy_initial, static_cast<S>(1e-30));
  cmp.energy_gap = std::abs(lag.step_energies.back() - eul.energies.back()) / e0;
  return cmp;
}

}  // namespace sobgeo
