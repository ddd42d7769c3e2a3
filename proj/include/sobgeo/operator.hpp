#pragma once

#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>

#include <Eigen/Eigenvalues>

#include "sobgeo/curve.hpp"
#include "sobgeo/errors.hpp"
#include "sobgeo/grid.hpp"
#include "sobgeo/types.hpp"

namespace sobgeo {

enum class OperatorFamily { standard, scale_invariant };

inline const char* family_name(OperatorFamily f) {
  return f == OperatorFamily::standard ? "standard" : "scale_invariant";
}

template <typename S>
struct OperatorSpec {
  S p = S(1);
  OperatorFamily family = OperatorFamily::standard;

  void validate() const {
    if (!(p >= S(0))) throw ValidationError("OperatorSpec: order p must be >= 0");
  }
  // Geodesics on immersed loops need p >= 1; the circle-diffeomorphism
  // routines accept p >= 1/2.
  void validate_for_immersion_geodesics() const {
    if (!(p >= S(1))) {
      throw ValidationError("OperatorSpec: geodesic routines on loops require p >= 1");
    }
  }
  void validate_for_diffeo_geodesics() const {
    if (!(p >= S(0.5))) {
      throw ValidationError("OperatorSpec: circle-diffeomorphism routines require p >= 1/2");
    }
  }
};

// The assembled inertia operator for a given density sigma > 0:
//
//   standard:         A = I - D_s D_s,                 D_s = diag(1/sigma) D
//   scale_invariant:  A = Vol^-3 I + Vol^-1 (-D_s D_s), Vol = quadrature(sigma)
//
// together with its eigendecomposition in the weighted inner product
// <u,w>_W = sum_j w_j u_j w_j with weights w_j = sigma_j * 2pi/n.  A is
// self-adjoint in that product, so the similarity transform
// W^{1/2} A W^{-1/2} is symmetric; its eigenvectors Q give V = W^{-1/2} Q
// (weighted-orthonormal) and V^{-1} = Q^T W^{1/2} exactly.
//
// Fractional powers act componentwise through eigenvalue powers lambda^q.
template <typename S>
class WeightedOperator {
 public:
  WeightedOperator(PeriodicGrid<S> grid, ScalarField<S> sigma, OperatorSpec<S> spec)
      : grid_(std::move(grid)), spec_(spec), sigma_(std::move(sigma)) {
    spec_.validate();
    const Index n = grid_.n();
    if (sigma_.rows() != n) throw ValidationError("operator density does not match grid");
    if (!(sigma_.minCoeff() > S(0))) {
      throw ValidationError("operator density must be strictly positive");
    }
    const Matrix<S>& D = grid_.diff_matrix();
    weight_ = sigma_ * grid_.spacing();
    vol_ = grid_.quadrature(sigma_);

    // d_theta d_s as a matrix (rows of D scaled by 1/sigma, then D again).
    dtheta_ds_ = D * Matrix<S>(D.array().colwise() / sigma_.array());
    minus_ds_ds_ = -(dtheta_ds_.array().colwise() / sigma_.array()).matrix();
    if (spec_.family == OperatorFamily::standard) {
      a_ = minus_ds_ds_;
      a_.diagonal().array() += S(1);
    } else {
      a_ = (S(1) / vol_) * minus_ds_ds_;
      a_.diagonal().array() += S(1) / (vol_ * vol_ * vol_);
    }

    const Vector<S> w_half = weight_.array().sqrt();
    Matrix<S> sym = (a_.array().colwise() * w_half.array()).matrix();
    sym = (sym.array().rowwise() / w_half.transpose().array()).matrix();
    sym = ((sym + sym.transpose()) / S(2)).eval();
    Eigen::SelfAdjointEigenSolver<Matrix<S>> es(sym);
    if (es.info() != Eigen::Success) {
      throw Error("operator eigendecomposition failed (degenerate weights?)");
    }
    lambda_ = es.eigenvalues();
    if (!(lambda_.minCoeff() > S(0))) {
      throw Error("assembled operator is not positive definite");
    }
    v_ = (es.eigenvectors().array().colwise() / w_half.array()).matrix();
    v_inv_ = (es.eigenvectors().transpose().array().rowwise() * w_half.transpose().array()).matrix();
  }

  const PeriodicGrid<S>& grid() const { return grid_; }
  const OperatorSpec<S>& spec() const { return spec_; }
  const ScalarField<S>& sigma() const { return sigma_; }
  const ScalarField<S>& sqrt_g() const { return sigma_; }
  const Vector<S>& weight() const { return weight_; }
  S vol() const { return vol_; }

  const Matrix<S>& laplacian() const { return a_; }          // assembled A
  const Matrix<S>& minus_ds_ds() const { return minus_ds_ds_; }
  const Matrix<S>& dtheta_ds() const { return dtheta_ds_; }  // D diag(1/sigma) D
  const Vector<S>& eigenvalues() const { return lambda_; }
  const Matrix<S>& eigenvectors() const { return v_; }       // weighted-orthonormal
  const Matrix<S>& eigenvectors_inverse() const { return v_inv_; }

  // A^q h, componentwise over ambient dimensions.
  TangentField<S> apply_power(S q, const TangentField<S>& h) const {
    check(h);
    const Matrix<S> coef = v_inv_ * h;
    return v_ * Matrix<S>(coef.array().colwise() * lambda_.array().pow(q));
  }
  ScalarField<S> apply_power(S q, const ScalarField<S>& u) const {
    const Vector<S> coef = v_inv_ * u;
    return v_ * Vector<S>(coef.array() * lambda_.array().pow(q));
  }

  template <typename Field>
  Field apply(const Field& h) const { return apply_power(spec_.p, h); }
  template <typename Field>
  Field apply_inverse(const Field& h) const { return apply_power(-spec_.p, h); }

  // G(h,k) = sum_j w_j <(P h)_j, k_j>.
  S metric_inner(const TangentField<S>& h, const TangentField<S>& k) const {
    check(h);
    check_same_shape(h, k);
    const TangentField<S> ph = apply(h);
    return ((ph.array() * k.array()).rowwise().sum() * weight_.array()).sum();
  }
  S metric_inner(const ScalarField<S>& u, const ScalarField<S>& w2) const {
    const ScalarField<S> pu = apply(u);
    return (pu.array() * w2.array() * weight_.array()).sum();
  }

 private:
  void check(const Matrix<S>& h) const {
    if (h.rows() != grid_.n()) throw ValidationError("field does not match operator grid");
  }
  static void check_same_shape(const Matrix<S>& h, const Matrix<S>& k) {
    if (h.rows() != k.rows() || h.cols() != k.cols()) {
      throw ValidationError("fields have mismatched shapes");
    }
  }

  PeriodicGrid<S> grid_;
  OperatorSpec<S> spec_;
  ScalarField<S> sigma_;
  Vector<S> weight_;
  S vol_;
  Matrix<S> dtheta_ds_;
  Matrix<S> minus_ds_ds_;
  Matrix<S> a_;
  Vector<S> lambda_;
  Matrix<S> v_;
  Matrix<S> v_inv_;
};

// Operator of an immersed loop: density sigma = |f_theta|.
template <typename S>
WeightedOperator<S> assemble(const ImmersedLoop<S>& f, const OperatorSpec<S>& spec) {
  return WeightedOperator<S>(f.grid(), f.sqrt_g(), spec);
}

// Operator from a raw positive density (the circle-diffeomorphism path,
// where sigma = phi').
template <typename S>
WeightedOperator<S> assemble_from_density(const PeriodicGrid<S>& grid,
                                          const ScalarField<S>& sigma,
                                          const OperatorSpec<S>& spec) {
  return WeightedOperator<S>(grid, sigma, spec);
}

template <typename S>
S metric_inner(const ImmersedLoop<S>& f, const OperatorSpec<S>& spec,
               const TangentField<S>& h, const TangentField<S>& k) {
  return assemble(f, spec).metric_inner(h, k);
}

// Cache of assembled operators keyed by the exact bit patterns of the loop
// samples and the spec; deterministic by construction.  Useful where the same
// (loop, spec) pair recurs (verification batteries, CLI replays) — the time
// stepper deliberately does not use it, since f changes every stage.
template <typename S>
class OperatorCache {
 public:
  std::shared_ptr<const WeightedOperator<S>> get(const ImmersedLoop<S>& f,
                                                 const OperatorSpec<S>& spec) {
    const std::string key = make_key(f, spec);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    if (map_.size() >= max_entries_) map_.clear();
    auto op = std::make_shared<const WeightedOperator<S>>(f.grid(), f.sqrt_g(), spec);
    map_.emplace(key, op);
    return op;
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    map_.clear();
  }

 private:
  static std::string make_key(const ImmersedLoop<S>& f, const OperatorSpec<S>& spec) {
    std::string key;
    const auto& pts = f.points();
    key.resize(sizeof(Index) * 2 + sizeof(S) + 1 + sizeof(S) * pts.size());
    char* out = key.data();
    const Index n = pts.rows(), d = pts.cols();
    std::memcpy(out, &n, sizeof(Index)); out += sizeof(Index);
    std::memcpy(out, &d, sizeof(Index)); out += sizeof(Index);
    std::memcpy(out, &spec.p, sizeof(S)); out += sizeof(S);
    *out++ = spec.family == OperatorFamily::standard ? 0 : 1;
    std::memcpy(out, pts.data(), sizeof(S) * pts.size());
    return key;
  }

  std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const WeightedOperator<S>>> map_;
  std::size_t max_entries_ = 256;
};

}  // namespace sobgeo
