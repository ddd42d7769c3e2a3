#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "sobgeo/curve.hpp"
#include "sobgeo/errors.hpp"
#include "sobgeo/operator.hpp"
#include "sobgeo/types.hpp"
#include "sobgeo/variation.hpp"

namespace sobgeo {

template <typename S>
struct GeodesicState {
  TangentField<S> points;
  TangentField<S> velocity;
};

template <typename S>
struct Trajectory {
  std::vector<S> times;
  std::vector<GeodesicState<S>> states;
  std::vector<S> energies;        // G_f(f_t, f_t) at the recorded times
  std::vector<S> tail_fractions;  // high-mode share of the velocity energy
  S step = S(0);
};

template <typename S>
struct ExpResult {
  ExpStatus status = ExpStatus::ok;
  Trajectory<S> trajectory;     // recorded samples (always includes t = 0)
  S failure_time = S(-1);       // time of the step where immersion failed
  S energy_initial = S(0);
  S energy_drift = S(0);        // max relative deviation of G(f_t,f_t) over all steps
  bool energy_warning = false;  // drift above the warn threshold
  std::vector<S> step_times;    // per-step energy monitor (finer than `trajectory`)
  std::vector<S> step_energies;

  const GeodesicState<S>& endpoint() const { return trajectory.states.back(); }
};

// Fraction of the velocity's Fourier energy at or above `cutoff` (0 means the
// default n/3 rule), summed over ambient components.
template <typename S>
S velocity_tail_fraction(const PeriodicGrid<S>& grid, const TangentField<S>& u,
                         Index cutoff = 0) {
  if (cutoff <= 0) cutoff = grid.n() / 3 + 1;
  S tail = S(0), total = S(0);
  for (Index c = 0; c < u.cols(); ++c) {
    tail += grid.fourier_tail_energy(Vector<S>(u.col(c)), cutoff);
    total += grid.fourier_total_energy(Vector<S>(u.col(c)));
  }
  return tail / std::max(total, std::numeric_limits<S>::min());
}

// ---------------------------------------------------------------------------
// The geodesic spray.
// ---------------------------------------------------------------------------

template <typename S>
struct SprayEval {
  TangentField<S> acceleration;
  S energy;  // G_f(m, m) at the evaluation point
};

// Second-order geodesic vector field of G(h,k) = int <P h, k> ds, solved for
// the acceleration:
//   f_tt = 1/2 P^-1( Adj(dP)(f_t,f_t)^perp - 2 <P f_t, d_s f_t> v - <P f_t, f_t> H )
//          - P^-1( (d_{f_t} P) f_t + <d_s f_t, v> P f_t ).
template <typename S>
SprayEval<S> spray_eval(const ImmersedLoop<S>& f, const WeightedOperator<S>& op,
                        const TangentField<S>& m) {
  const MetricData<S> geo = metric_data(f);
  const TangentField<S> pm = op.apply(m);
  const TangentField<S> dsm =
      (f.grid().diff(m).array().colwise() / f.sqrt_g().array()).matrix();

  const ScalarField<S> pm_dot_dsm = (pm.array() * dsm.array()).rowwise().sum();
  const ScalarField<S> pm_dot_m = (pm.array() * m.array()).rowwise().sum();
  const ScalarField<S> dsm_dot_v = (dsm.array() * geo.v.array()).rowwise().sum();

  const TangentField<S> adj = adjoint_normal_spectral(op, f, m, m).value;
  const TangentField<S> dpm = derivative_P_spectral(op, f, m, m);

  TangentField<S> rhs =
      S(0.5) * (adj - S(2) * TangentField<S>(geo.v.array().colwise() * pm_dot_dsm.array()) -
                TangentField<S>(geo.H.array().colwise() * pm_dot_m.array())) -
      dpm - TangentField<S>(pm.array().colwise() * dsm_dot_v.array());

  SprayEval<S> out;
  out.acceleration = op.apply_inverse(rhs);
  out.energy = (pm_dot_m.array() * op.weight().array()).sum();
  return out;
}

// Convenience wrapper assembling the loop and operator from raw points.
template <typename S>
SprayEval<S> spray_eval(const PeriodicGrid<S>& grid, const TangentField<S>& points,
                        const TangentField<S>& m, const OperatorSpec<S>& spec) {
  const ImmersedLoop<S> f(grid, points);
  return spray_eval(f, assemble(f, spec), m);
}

// ---------------------------------------------------------------------------
// Exponential map: fixed-step classical RK4 on (f, f_t).
// ---------------------------------------------------------------------------

template <typename S>
struct ExpOptions {
  Index record_every = 1;      // trajectory sampling stride, in steps
  bool stale_operator = false; // freeze the geometry at each step start (demo mode)
  S warn_drift = static_cast<S>(1e-6);
  Index tail_cutoff = 0;       // 0: n/3 rule
  S immersion_floor = default_immersion_floor<S>;  // for the intermediate loops
};

template <typename S>
ExpResult<S> exp_map(const ImmersedLoop<S>& f0, const TangentField<S>& u0,
                     const OperatorSpec<S>& spec, S horizon, Index steps,
                     const ExpOptions<S>& opt = {}) {
  check_field(f0, u0);
  spec.validate_for_immersion_geodesics();
  if (steps < 1) throw ValidationError("exp_map: steps must be positive");
  if (!std::isfinite(static_cast<double>(horizon))) {
    throw ValidationError("exp_map: horizon must be finite");
  }
  const PeriodicGrid<S>& grid = f0.grid();
  const S dt = horizon / static_cast<S>(steps);

  ExpResult<S> result;
  result.trajectory.step = dt;
  TangentField<S> pts = f0.points();
  TangentField<S> vel = u0;

  auto record = [&](S t, S energy) {
    result.trajectory.times.push_back(t);
    result.trajectory.states.push_back({pts, vel});
    result.trajectory.energies.push_back(energy);
    result.trajectory.tail_fractions.push_back(
        velocity_tail_fraction(grid, vel, opt.tail_cutoff));
  };

  // Evaluates the spray at (p, m); the stale mode reuses the step-start
  // geometry for stages 2..4, which is exactly the shortcut that breaks
  // energy conservation.
  std::optional<ImmersedLoop<S>> frozen_loop;
  std::optional<WeightedOperator<S>> frozen_op;
  auto eval = [&](const TangentField<S>& p, const TangentField<S>& m, bool stage_one) {
    if (!p.allFinite() || !m.allFinite()) {
      throw ImmersionError("geodesic flow left the immersible chart (blow-up)");
    }
    if (stage_one || !opt.stale_operator) {
      ImmersedLoop<S> floc(grid, p, opt.immersion_floor);
      WeightedOperator<S> oploc = assemble(floc, spec);
      if (stage_one && opt.stale_operator) {
        frozen_loop.emplace(floc);
        frozen_op.emplace(oploc);
      }
      return spray_eval(floc, oploc, m);
    }
    return spray_eval(*frozen_loop, *frozen_op, m);
  };

  S last_energy = S(0);
  bool recorded_current = false;
  Index i = 0;
  try {
    for (i = 0; i < steps; ++i) {
      const S t = horizon * static_cast<S>(i) / static_cast<S>(steps);
      const SprayEval<S> s1 = eval(pts, vel, true);
      last_energy = s1.energy;
      result.step_times.push_back(t);
      result.step_energies.push_back(s1.energy);
      recorded_current = false;
      if (i % opt.record_every == 0) {
        record(t, s1.energy);
        recorded_current = true;
      }
      const SprayEval<S> s2 =
          eval(pts + (dt / S(2)) * vel, vel + (dt / S(2)) * s1.acceleration, false);
      const SprayEval<S> s3 =
          eval(pts + (dt / S(2)) * vel + (dt * dt / S(4)) * s1.acceleration,
               vel + (dt / S(2)) * s2.acceleration, false);
      // position stages use the velocity component of the same RK4 state
      const TangentField<S> k1p = vel;
      const TangentField<S> k2p = vel + (dt / S(2)) * s1.acceleration;
      const TangentField<S> k3p = vel + (dt / S(2)) * s2.acceleration;
      const SprayEval<S> s4 = eval(pts + dt * k3p, vel + dt * s3.acceleration, false);
      const TangentField<S> k4p = vel + dt * s3.acceleration;
      pts += (dt / S(6)) * (k1p + S(2) * k2p + S(2) * k3p + k4p);
      vel += (dt / S(6)) * (s1.acceleration + S(2) * s2.acceleration +
                            S(2) * s3.acceleration + s4.acceleration);
    }
    // terminal sample
    if (!pts.allFinite() || !vel.allFinite()) {
      throw ImmersionError("geodesic flow left the immersible chart (blow-up)");
    }
    const ImmersedLoop<S> fend(grid, pts);
    const WeightedOperator<S> opend = assemble(fend, spec);
    const S e_end = opend.metric_inner(vel, vel);
    result.step_times.push_back(horizon);
    result.step_energies.push_back(e_end);
    record(horizon, e_end);
  } catch (const ImmersionError&) {
    result.status = ExpStatus::immersion_lost;
    result.failure_time = horizon * static_cast<S>(i) / static_cast<S>(steps);
    if (!recorded_current && !result.step_energies.empty() &&
        result.step_times.back() == result.failure_time) {
      // the step-start state itself was fine (a later stage failed): keep it
      record(result.failure_time, result.step_energies.back());
    }
    if (result.trajectory.states.empty()) {
      throw ImmersionError("exp_map: initial state already below the immersion floor");
    }
  }

  result.energy_initial = result.step_energies.empty() ? S(0) : result.step_energies.front();
  const S e0 = result.energy_initial;
  S drift = S(0);
  for (const S e : result.step_energies) drift = std::max(drift, std::abs(e - e0));
  if (e0 > static_cast<S>(1e-30)) drift /= e0;
  result.energy_drift = drift;
  result.energy_warning = drift > opt.warn_drift;
  return result;
}

// Action of a recorded path: 1/2 int G(f_t, f_t) dt by the trapezoid rule on
// the per-step energy monitor.
template <typename S>
S path_energy(const ExpResult<S>& r) {
  const auto& t = r.step_times;
  const auto& e = r.step_energies;
  S acc = S(0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    acc += (t[i] - t[i - 1]) * (e[i] + e[i - 1]) / S(2);
  }
  return acc / S(2);
}

template <typename S>
struct RegularityReport {
  S min_density_ratio;    // min over samples of min_j sigma_j / mean_j sigma_j
  S max_tail_fraction;    // max over samples of the velocity tail share
};

template <typename S>
RegularityReport<S> regularity_diagnostic(const PeriodicGrid<S>& grid,
                                          const Trajectory<S>& traj) {
  RegularityReport<S> rep{std::numeric_limits<S>::infinity(), S(0)};
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const TangentField<S> ftheta = grid.diff(traj.states[i].points);
    const ScalarField<S> sg = ftheta.rowwise().norm();
    rep.min_density_ratio = std::min(rep.min_density_ratio, sg.minCoeff() / sg.mean());
    rep.max_tail_fraction = std::max(rep.max_tail_fraction, traj.tail_fractions[i]);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Log map: damped Gauss-Newton shooting in a low-frequency velocity basis.
// ---------------------------------------------------------------------------

template <typename S>
struct LogOptions {
  S tol = static_cast<S>(1e-10);  // relative endpoint residual target
  Index max_iterations = 60;      // per rung of the mode ladder
  Index steps = 40;               // RK4 steps for each shot
  S fd_delta = static_cast<S>(1e-6);
  std::vector<int> mode_ladder = {4, 8, 16};
  bool throw_on_failure = true;
  S immersion_floor = default_immersion_floor<S>;
  // Shooting is a local inverse: refuse targets whose relative chordal
  // distance exceeds this radius instead of wandering.
  S trust_radius = S(2);
};

template <typename S>
struct LogResult {
  TangentField<S> initial_velocity;
  S residual = std::numeric_limits<S>::infinity();  // relative endpoint mismatch
  Index iterations = 0;
  int modes = 0;
  bool converged = false;
};

namespace detail {

// Columns 1, cos(k theta), sin(k theta) for k = 1..K.
template <typename S>
Matrix<S> trig_basis(const PeriodicGrid<S>& grid, int K) {
  const Index n = grid.n();
  Matrix<S> b(n, 2 * K + 1);
  b.col(0).setOnes();
  for (int k = 1; k <= K; ++k) {
    b.col(2 * k - 1) = (static_cast<S>(k) * grid.theta()).array().cos();
    b.col(2 * k) = (static_cast<S>(k) * grid.theta()).array().sin();
  }
  return b;
}

template <typename S>
Vector<S> trig_coefficients(const PeriodicGrid<S>& grid, const Vector<S>& u, int K) {
  const auto [a, b] = grid.fourier_coefficients(u);
  Vector<S> x = Vector<S>::Zero(2 * K + 1);
  x(0) = a(0);
  for (int k = 1; k <= K; ++k) {
    x(2 * k - 1) = a(k);
    x(2 * k) = b(k);
  }
  return x;
}

}  // namespace detail

// Initial velocity h with exp_{f0}(h) = f1, found by shooting: the unknown is
// the (2K+1) lowest Fourier coefficients per ambient component, the residual
// is the L^2(dtheta) endpoint mismatch, and a Levenberg-style damping with a
// forward-difference Jacobian drives it below `tol`.  The mode ladder
// escalates K only when the smoother parametrization stalls, so the returned
// preimage is the smallest-norm one the target admits.
template <typename S>
LogResult<S> log_map(const ImmersedLoop<S>& f0, const ImmersedLoop<S>& f1,
                     const OperatorSpec<S>& spec, const LogOptions<S>& opt = {}) {
  if (f0.n() != f1.n() || f0.dim() != f1.dim()) {
    throw ValidationError("log_map: endpoint discretizations do not match");
  }
  spec.validate_for_immersion_geodesics();
  const PeriodicGrid<S>& grid = f0.grid();
  const Index n = f0.n(), d = f0.dim();
  const S wq = std::sqrt(grid.spacing());

  TangentField<S> centered = f1.points();
  centered.rowwise() -= f1.points().colwise().mean();
  const S denom = std::max(centered.norm() * wq, static_cast<S>(1e-30));

  const S initial_gap = (f1.points() - f0.points()).norm() * wq / denom;
  if (initial_gap > opt.trust_radius) {
    LogResult<S> rejected;
    rejected.initial_velocity = TangentField<S>::Zero(n, d);
    rejected.residual = initial_gap;
    if (opt.throw_on_failure) {
      std::ostringstream msg;
      msg << "log_map: target outside the shooting trust region (relative distance "
          << initial_gap << " > " << opt.trust_radius << ")";
      throw ConvergenceError(msg.str());
    }
    return rejected;
  }

  ExpOptions<S> eopt;
  eopt.record_every = opt.steps;  // endpoint only
  eopt.immersion_floor = opt.immersion_floor;

  auto shoot = [&](const TangentField<S>& h, TangentField<S>& endpoint) -> bool {
    const ExpResult<S> r = exp_map(f0, h, spec, S(1), opt.steps, eopt);
    if (r.status != ExpStatus::ok) return false;
    endpoint = r.endpoint().points;
    return true;
  };

  LogResult<S> best;
  Index total_iters = 0;

  for (const int K : opt.mode_ladder) {
    const Matrix<S> basis = detail::trig_basis(grid, K);
    const Index nb = basis.cols();
    const Index nx = nb * d;

    // warm start: previous rung's best (exactly representable: the ladder is
    // nested), or the chordal difference projected onto the basis.
    const TangentField<S> seed = best.residual < std::numeric_limits<S>::infinity()
                                     ? best.initial_velocity
                                     : TangentField<S>(f1.points() - f0.points());
    Vector<S> x(nx);
    for (Index c = 0; c < d; ++c) {
      x.segment(c * nb, nb) =
          detail::trig_coefficients(grid, Vector<S>(seed.col(c)), K);
    }

    auto field_of = [&](const Vector<S>& coeffs) {
      TangentField<S> h(n, d);
      for (Index c = 0; c < d; ++c) h.col(c) = basis * coeffs.segment(c * nb, nb);
      return h;
    };
    auto residual_of = [&](const Vector<S>& coeffs, Vector<S>& r) -> bool {
      TangentField<S> endpoint;
      if (!shoot(field_of(coeffs), endpoint)) return false;
      const TangentField<S> diff = endpoint - f1.points();
      r = Eigen::Map<const Vector<S>>(diff.data(), diff.size()) * wq;
      return true;
    };

    Vector<S> r;
    if (!residual_of(x, r)) continue;  // seed lost immersion: try next rung
    S rnorm = r.norm();
    S mu = static_cast<S>(1e-4);
    Index iter = 0;
    for (; iter < opt.max_iterations && rnorm / denom > opt.tol; ++iter) {
      Matrix<S> J(r.size(), nx);
      for (Index c = 0; c < nx; ++c) {
        Vector<S> xp = x;
        xp(c) += opt.fd_delta;
        Vector<S> rp;
        if (residual_of(xp, rp)) {
          J.col(c) = (rp - r) / opt.fd_delta;
        } else {
          J.col(c).setZero();
        }
      }
      const Matrix<S> jtj = J.transpose() * J;
      const Vector<S> jtr = J.transpose() * r;
      bool accepted = false;
      for (int inner = 0; inner < 16; ++inner) {
        Matrix<S> lhs = jtj;
        lhs.diagonal().array() += mu;
        const Vector<S> delta = lhs.ldlt().solve(-jtr);
        Vector<S> rtrial;
        if (residual_of(x + delta, rtrial) && rtrial.norm() < rnorm) {
          x += delta;
          r = rtrial;
          rnorm = rtrial.norm();
          mu = std::max(mu / S(3), static_cast<S>(1e-12));
          accepted = true;
          break;
        }
        mu *= S(10);
      }
      if (!accepted) break;  // stalled at this rung: escalate the basis
    }
    total_iters += iter;
    if (rnorm / denom < best.residual) {
      best.initial_velocity = field_of(x);
      best.residual = rnorm / denom;
      best.modes = K;
    }
    if (best.residual <= opt.tol) break;
  }

  best.iterations = total_iters;
  best.converged = best.residual <= opt.tol;
  if (!best.converged && opt.throw_on_failure) {
    std::ostringstream msg;
    msg << "log_map: shooting stalled at relative residual " << best.residual
        << " (target " << opt.tol << ")";
    throw ConvergenceError(msg.str());
  }
  return best;
}

}  // namespace sobgeo
