#pragma once

#include <cmath>
#include <thread>
#include <vector>

#include "sobgeo/curve.hpp"
#include "sobgeo/errors.hpp"
#include "sobgeo/operator.hpp"
#include "sobgeo/types.hpp"

namespace sobgeo {

enum class AdjointMethod { fd_dual, closed_form, spectral };

template <typename S>
struct AdjointResult {
  TangentField<S> value;  // Adj(dP)(h,k)^perp, purely normal
  AdjointMethod method;
};

// ---------------------------------------------------------------------------
// Exact directional derivatives of the assembled operator.
// ---------------------------------------------------------------------------

// Variation of the density sigma = |f_theta| in direction m: <d_theta m, v>.
template <typename S>
ScalarField<S> density_variation(const ImmersedLoop<S>& f, const TangentField<S>& m) {
  return volume_variation(f, m);
}

// Derivative of the assembled matrix A with respect to its density, in the
// direction sigma_dot.  With x = sigma_dot / sigma^2 and B1 = D diag(1/sigma) D:
//   d(-D_s D_s) = diag(x) B1 + diag(1/sigma) D diag(x) D,
// and the scale-invariant family adds the Vol-derivative terms.
template <typename S>
Matrix<S> operator_derivative_matrix(const WeightedOperator<S>& op,
                                     const ScalarField<S>& sigma_dot) {
  const Matrix<S>& D = op.grid().diff_matrix();
  const ScalarField<S>& sg = op.sigma();
  const Vector<S> x = sigma_dot.array() / sg.array().square();
  Matrix<S> l_dot = (op.dtheta_ds().array().colwise() * x.array()).matrix();
  const Matrix<S> dxd = D * Matrix<S>(D.array().colwise() * x.array());
  l_dot += (dxd.array().colwise() / sg.array()).matrix();
  if (op.spec().family == OperatorFamily::standard) return l_dot;
  const S vol = op.vol();
  const S vol_dot = op.grid().quadrature(sigma_dot);
  Matrix<S> a_dot = (S(1) / vol) * l_dot -
                    (vol_dot / (vol * vol)) * op.minus_ds_ds();
  a_dot.diagonal().array() += S(-3) * vol_dot / (vol * vol * vol * vol);
  return a_dot;
}

// Divided-difference table for the derivative of lambda -> lambda^p
// (first-order Dalecki–Krein data): gamma_kl = (l_k^p - l_l^p)/(l_k - l_l),
// with the midpoint rule p*((l_k+l_l)/2)^(p-1) on near-coincident pairs.
template <typename S>
Matrix<S> power_divided_differences(const Vector<S>& lambda, S p) {
  const Index n = lambda.size();
  Vector<S> lp(n);
  for (Index i = 0; i < n; ++i) lp(i) = std::pow(lambda(i), p);
  Matrix<S> gamma(n, n);
  const S theta = static_cast<S>(1e-6);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      const S diff = lambda(k) - lambda(l);
      const S scale = std::max(std::abs(lambda(k)), std::abs(lambda(l)));
      if (std::abs(diff) <= theta * scale) {
        gamma(k, l) = p * std::pow((lambda(k) + lambda(l)) / S(2), p - S(1));
      } else {
        gamma(k, l) = (lp(k) - lp(l)) / diff;
      }
    }
  }
  return gamma;
}

// d(A^p)[A_dot] h, exact to rounding given the eigendecomposition of A.
template <typename S>
TangentField<S> power_derivative_apply(const WeightedOperator<S>& op,
                                       const Matrix<S>& a_dot,
                                       const TangentField<S>& h) {
  const Matrix<S> gamma = power_divided_differences(op.eigenvalues(), op.spec().p);
  const Matrix<S> mid = op.eigenvectors_inverse() * a_dot * op.eigenvectors();
  return op.eigenvectors() *
         Matrix<S>((gamma.array() * mid.array()).matrix() * (op.eigenvectors_inverse() * h));
}

// (d_m P_f) h for a loop direction m, through the exact spectral route.
template <typename S>
TangentField<S> derivative_P_spectral(const WeightedOperator<S>& op,
                                      const ImmersedLoop<S>& f,
                                      const TangentField<S>& m,
                                      const TangentField<S>& h) {
  const ScalarField<S> sigma_dot = density_variation(f, m);
  return power_derivative_apply(op, operator_derivative_matrix(op, sigma_dot), h);
}

// Same, for a density perturbation given directly (circle-diffeomorphism path).
template <typename S>
Vector<S> derivative_P_spectral_density(const WeightedOperator<S>& op,
                                        const ScalarField<S>& sigma_dot,
                                        const Vector<S>& u) {
  const Matrix<S> a_dot = operator_derivative_matrix(op, sigma_dot);
  const Matrix<S> gamma = power_divided_differences(op.eigenvalues(), op.spec().p);
  const Matrix<S> mid = op.eigenvectors_inverse() * a_dot * op.eigenvectors();
  return op.eigenvectors() *
         Vector<S>((gamma.array() * mid.array()).matrix() * (op.eigenvectors_inverse() * u));
}

// ---------------------------------------------------------------------------
// Finite-difference derivative of P (the ground-truth oracle).
// ---------------------------------------------------------------------------

template <typename S>
S default_fd_eps(const TangentField<S>& f_points, const TangentField<S>& m) {
  const S mscale = m.cwiseAbs().maxCoeff();
  if (mscale == S(0)) return S(0);
  return static_cast<S>(1e-4) * f_points.cwiseAbs().maxCoeff() / mscale;
}

// Central difference (P_{f+eps m} h - P_{f-eps m} h) / (2 eps); eps <= 0 asks
// for the default scaling 1e-4 * |f|_inf / |m|_inf.  With `richardson`, the
// (eps, eps/2) extrapolation (4 F(eps/2) - F(eps))/3 cancels the O(eps^2) term.
template <typename S>
TangentField<S> derivative_P(const ImmersedLoop<S>& f, const OperatorSpec<S>& spec,
                             const TangentField<S>& m, const TangentField<S>& h,
                             S eps = S(-1), bool richardson = false) {
  check_field(f, m);
  check_field(f, h);
  if (m.cwiseAbs().maxCoeff() == S(0)) {
    return TangentField<S>::Zero(h.rows(), h.cols());
  }
  const S e = eps > S(0) ? eps : default_fd_eps(f.points(), m);
  auto central = [&](S ee) {
    ImmersedLoop<S> fp(f.grid(), f.points() + ee * m);
    ImmersedLoop<S> fm(f.grid(), f.points() - ee * m);
    return TangentField<S>(
        (assemble(fp, spec).apply(h) - assemble(fm, spec).apply(h)) / (S(2) * ee));
  };
  if (!richardson) return central(e);
  return (S(4) * central(e / S(2)) - central(e)) / S(3);
}

// ---------------------------------------------------------------------------
// The normal part of the adjoint, three ways.
// ---------------------------------------------------------------------------

// Ground truth by dualization: evaluate the linear functional
//   m |-> sum_j w_j <(d_{m_perp} P) h, k>_j
// on the n*d nodal basis fields, divide by the quadrature weights, and
// project the resulting vector field to the normal bundle.  The probe
// evaluations are independent; `threads` > 1 splits them (each worker writes
// disjoint entries, so the result is schedule-independent).
template <typename S>
AdjointResult<S> adjoint_normal_fd(const ImmersedLoop<S>& f, const OperatorSpec<S>& spec,
                                   const TangentField<S>& h, const TangentField<S>& k,
                                   S eps = S(-1), bool richardson = false,
                                   int threads = 1) {
  check_field(f, h);
  check_field(f, k);
  const Index n = f.n(), d = f.dim();
  const TangentField<S> v = unit_tangent(f);
  const Vector<S> w = f.sqrt_g() * f.grid().spacing();
  TangentField<S> value = TangentField<S>::Zero(n, d);

  auto probe = [&](Index flat) {
    const Index j = flat / d, c = flat % d;
    TangentField<S> m = TangentField<S>::Zero(n, d);
    m(j, c) = S(1);
    // project the nodal vector at its own node (the only nonzero row)
    const S along = m.row(j).dot(v.row(j));
    m.row(j) -= along * v.row(j);
    if (m.cwiseAbs().maxCoeff() < static_cast<S>(1e-14)) return;
    const TangentField<S> dph = derivative_P(f, spec, m, h, eps, richardson);
    const S pairing = ((dph.array() * k.array()).rowwise().sum() * w.array()).sum();
    value(j, c) = pairing / w(j);
  };

  const Index total = n * d;
  if (threads <= 1) {
    for (Index i = 0; i < total; ++i) probe(i);
  } else {
    std::vector<std::thread> pool;
    const Index nt = std::min<Index>(threads, total);
    for (Index t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        for (Index i = t; i < total; i += nt) probe(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  const ScalarField<S> along = (value.array() * v.array()).rowwise().sum();
  value -= TangentField<S>(v.array().colwise() * along.array());
  return {std::move(value), AdjointMethod::fd_dual};
}

// Exact Riesz representer of the same functional through the spectral
// calculus: with S = (V^-1 k)(V^-1 h)^T and the divided-difference table
// gamma, the matrix Z = W V (gamma o S) V^T contracts against dA[m] as
// sum_j w_j <dA^p[m] h, k>_j = <A_dot(m), Z>_F, and the density chain rule
// turns the Frobenius pairing into a nodal functional of sigma_dot.
template <typename S>
AdjointResult<S> adjoint_normal_spectral(const WeightedOperator<S>& op,
                                         const ImmersedLoop<S>& f,
                                         const TangentField<S>& h,
                                         const TangentField<S>& k) {
  check_field(f, h);
  check_field(f, k);
  const Index n = f.n(), d = f.dim();
  const Matrix<S>& D = f.grid().diff_matrix();
  const ScalarField<S>& sg = op.sigma();
  const TangentField<S> v = unit_tangent(f);

  const Matrix<S> gamma = power_divided_differences(op.eigenvalues(), op.spec().p);
  const Matrix<S> alpha = op.eigenvectors_inverse() * k;
  const Matrix<S> beta = op.eigenvectors_inverse() * h;
  const Matrix<S> smat = alpha * beta.transpose();
  Matrix<S> z = op.eigenvectors() * Matrix<S>((gamma.array() * smat.array()).matrix()) *
                op.eigenvectors().transpose();
  z = (z.array().colwise() * op.weight().array()).matrix();

  // <d(-DsDs)(x), Z>_F = sum_j phi_x(j) x(j) with x = sigma_dot/sigma^2
  const Matrix<S> xmat = (z.array().colwise() / sg.array()).matrix();
  const Vector<S> t1 = (op.dtheta_ds().array() * z.array()).rowwise().sum();
  const Vector<S> t2 = ((D * xmat).array() * D.transpose().array()).rowwise().sum();
  const Vector<S> phi_x = t1 + t2;

  Vector<S> phi;
  if (op.spec().family == OperatorFamily::standard) {
    phi = phi_x.array() / sg.array().square();
  } else {
    const S vol = op.vol();
    const S c0 = S(-3) / std::pow(vol, S(4)) * z.trace() -
                 (op.minus_ds_ds().array() * z.array()).sum() / (vol * vol);
    phi = (phi_x.array() / sg.array().square() / vol) + c0 * f.grid().spacing();
  }

  TangentField<S> value(n, d);
  for (Index c = 0; c < d; ++c) {
    value.col(c) = -(D * Vector<S>(v.col(c).array() * phi.array())).array() /
                   op.weight().array();
  }
  const ScalarField<S> along = (value.array() * v.array()).rowwise().sum();
  value -= TangentField<S>(v.array().colwise() * along.array());
  return {std::move(value), AdjointMethod::spectral};
}

template <typename S>
AdjointResult<S> adjoint_normal_spectral(const ImmersedLoop<S>& f,
                                         const OperatorSpec<S>& spec,
                                         const TangentField<S>& h,
                                         const TangentField<S>& k) {
  return adjoint_normal_spectral(assemble(f, spec), f, h, k);
}

// Integer-order closed form (p in {1,2,3}): split A^p across the variation,
//   sum_j w_j <dA^p[m] h, k>_j = dtheta * sum_j sigma_dot(j) rho(j),
//   rho = sum_i <d_s d_s a_i, b_i> - <d_s a_i, d_s b_i>,  a_i = A^i h,  b_i = A^{p-1-i} k,
// then dualize through the codifferential: value = (-1/sigma) D(rho v),
// projected normal.  Pointwise this reduces to the curvature-weighted form
// (<d_s a_i, d_s b_i> - <d_s d_s a_i, b_i>) H up to spectral truncation.
template <typename S>
AdjointResult<S> adjoint_normal_closed_form(const ImmersedLoop<S>& f,
                                            const OperatorSpec<S>& spec,
                                            const TangentField<S>& h,
                                            const TangentField<S>& k) {
  check_field(f, h);
  check_field(f, k);
  if (spec.family != OperatorFamily::standard) {
    throw ValidationError("closed-form adjoint is derived for the standard family only");
  }
  const S pr = std::round(spec.p);
  if (std::abs(spec.p - pr) > static_cast<S>(1e-12) || pr < S(1) || pr > S(3)) {
    throw ValidationError("closed-form adjoint requires integer order p in {1,2,3}; use the fd path");
  }
  const int p = static_cast<int>(pr);
  const WeightedOperator<S> op = assemble(f, spec);
  const Matrix<S>& A = op.laplacian();
  const Matrix<S>& D = f.grid().diff_matrix();
  const ScalarField<S>& sg = f.sqrt_g();
  const TangentField<S> v = unit_tangent(f);

  auto ds = [&](const TangentField<S>& u) {
    return TangentField<S>((D * u).array().colwise() / sg.array());
  };

  Vector<S> rho = Vector<S>::Zero(f.n());
  TangentField<S> a_i = h;
  for (int i = 0; i < p; ++i) {
    TangentField<S> b_i = k;
    for (int r = 0; r < p - 1 - i; ++r) b_i = A * b_i;
    const TangentField<S> dsa = ds(a_i);
    rho += ((ds(dsa).array() * b_i.array()).rowwise().sum() -
            (dsa.array() * ds(b_i).array()).rowwise().sum())
               .matrix();
    if (i + 1 < p) a_i = A * a_i;
  }

  TangentField<S> value(f.n(), f.dim());
  for (Index c = 0; c < f.dim(); ++c) {
    value.col(c) = -(D * Vector<S>(v.col(c).array() * rho.array())).array() / sg.array();
  }
  const ScalarField<S> along = (value.array() * v.array()).rowwise().sum();
  value -= TangentField<S>(v.array().colwise() * along.array());
  return {std::move(value), AdjointMethod::closed_form};
}

// Exact gap Adj(h,k)^perp - Adj(k,h)^perp.  Differentiating the weighted
// self-adjointness identity of the family gives, with q = <h,Pk> - <Ph,k>,
//   gap = proj_normal( (-1/sigma) D(q v) ),
// which is the discrete form of (<Ph,k> - <h,Pk>) H.  The adjoint is NOT
// symmetric in (h,k); this is its exact antisymmetric part.
template <typename S>
TangentField<S> adjoint_normal_swap_gap(const WeightedOperator<S>& op,
                                        const ImmersedLoop<S>& f,
                                        const TangentField<S>& h,
                                        const TangentField<S>& k) {
  const TangentField<S> ph = op.apply(h);
  const TangentField<S> pk = op.apply(k);
  const Vector<S> q = (h.array() * pk.array()).rowwise().sum() -
                      (ph.array() * k.array()).rowwise().sum();
  const Matrix<S>& D = f.grid().diff_matrix();
  const TangentField<S> v = unit_tangent(f);
  TangentField<S> gap(f.n(), f.dim());
  for (Index c = 0; c < f.dim(); ++c) {
    gap.col(c) = -(D * Vector<S>(v.col(c).array() * q.array())).array() / f.sqrt_g().array();
  }
  const ScalarField<S> along = (gap.array() * v.array()).rowwise().sum();
  gap -= TangentField<S>(v.array().colwise() * along.array());
  return gap;
}

}  // namespace sobgeo
