#pragma once

#include <cmath>
#include <memory>
#include <utility>

#include "sobgeo/errors.hpp"
#include "sobgeo/types.hpp"

namespace sobgeo {

// Uniform periodic grid theta_j = 2*pi*j/n on the circle, n odd, with the
// dense spectral differentiation operator, rectangle-rule quadrature,
// band-limited (trigonometric) interpolation and Fourier diagnostics.
//
// Copies are cheap: all tables live behind a shared immutable block.
template <typename S>
class PeriodicGrid {
 public:
  explicit PeriodicGrid(Index n) : data_(std::make_shared<const Data>(make(n))) {}

  Index n() const { return data_->n; }
  S spacing() const { return data_->spacing; }
  Index max_mode() const { return (data_->n - 1) / 2; }
  const Vector<S>& theta() const { return data_->theta; }

  // Dense spectral differentiation operator; exactly antisymmetric by
  // construction (entries for +k and -k offsets are written as one value and
  // its negation, never recomputed through the sine).
  const Matrix<S>& diff_matrix() const { return data_->D; }

  ScalarField<S> diff(const ScalarField<S>& u) const {
    check_len(u.rows());
    return data_->D * u;
  }
  TangentField<S> diff(const TangentField<S>& u) const {
    check_len(u.rows());
    return data_->D * u;
  }

  // Derivative through an explicit Fourier round-trip; agrees with the dense
  // operator to rounding and exists so that tests can cross-check the two.
  ScalarField<S> diff_dft(const ScalarField<S>& u) const {
    check_len(u.rows());
    auto [a, b] = fourier_coefficients(u);
    const Index m = max_mode();
    ScalarField<S> out = ScalarField<S>::Zero(n());
    for (Index k = 1; k <= m; ++k) {
      const S kk = static_cast<S>(k);
      for (Index j = 0; j < n(); ++j) {
        const S th = kk * data_->theta(j);
        out(j) += kk * (b(k) * std::cos(th) - a(k) * std::sin(th));
      }
    }
    return out;
  }

  // (2*pi/n) * sum u_j; spectrally accurate on smooth periodic data.
  S quadrature(const ScalarField<S>& u) const {
    check_len(u.rows());
    return data_->spacing * u.sum();
  }

  // Cosine/sine coefficients: u = a(0) + sum_k a(k) cos(k th) + b(k) sin(k th).
  std::pair<Vector<S>, Vector<S>> fourier_coefficients(const ScalarField<S>& u) const {
    check_len(u.rows());
    const Index m = max_mode();
    Vector<S> a = Vector<S>::Zero(m + 1);
    Vector<S> b = Vector<S>::Zero(m + 1);
    a(0) = u.sum() / static_cast<S>(n());
    for (Index k = 1; k <= m; ++k) {
      S ca = 0, cb = 0;
      for (Index j = 0; j < n(); ++j) {
        const S th = static_cast<S>(k) * data_->theta(j);
        ca += u(j) * std::cos(th);
        cb += u(j) * std::sin(th);
      }
      a(k) = S(2) * ca / static_cast<S>(n());
      b(k) = S(2) * cb / static_cast<S>(n());
    }
    return {std::move(a), std::move(b)};
  }

  // Sum of |u_hat_nu|^2 over |nu| >= cutoff with u_hat_nu = (1/n) sum u_j e^{-i nu th_j};
  // Parseval then reads quadrature(u^2) = 2*pi * sum_nu |u_hat_nu|^2.
  S fourier_tail_energy(const ScalarField<S>& u, Index cutoff) const {
    if (cutoff >= (n() + 1) / 2) {
      throw ValidationError("fourier_tail_energy: cutoff must be < n/2");
    }
    auto [a, b] = fourier_coefficients(u);
    S tail = 0;
    for (Index k = std::max<Index>(cutoff, 1); k <= max_mode(); ++k) {
      tail += (a(k) * a(k) + b(k) * b(k)) / S(2);
    }
    if (cutoff == 0) tail += a(0) * a(0);
    return tail;
  }
  S fourier_tail_energy(const TangentField<S>& u, Index cutoff) const {
    S tail = 0;
    for (Index c = 0; c < u.cols(); ++c) {
      tail += fourier_tail_energy(ScalarField<S>(u.col(c)), cutoff);
    }
    return tail;
  }
  S fourier_total_energy(const ScalarField<S>& u) const {
    auto [a, b] = fourier_coefficients(u);
    S tot = a(0) * a(0);
    for (Index k = 1; k <= max_mode(); ++k) {
      tot += (a(k) * a(k) + b(k) * b(k)) / S(2);
    }
    return tot;
  }

  // Band-limited interpolant evaluated at one point (Dirichlet kernel form,
  // valid for odd n): u(x) = sum_j u_j sin(n y/2) / (n sin(y/2)), y = x - th_j.
  S interpolate(const ScalarField<S>& u, S x) const {
    check_len(u.rows());
    const Index nn = n();
    S acc = 0;
    for (Index j = 0; j < nn; ++j) {
      acc += u(j) * dirichlet(x - data_->theta(j));
    }
    return acc;
  }

  // Values of the interpolant of u at phi(theta_j).  phi must be a strictly
  // increasing degree-1 circle map given by its nodal values.
  ScalarField<S> resample(const ScalarField<S>& u, const ScalarField<S>& phi) const {
    check_len(u.rows());
    validate_circle_map(phi);
    ScalarField<S> out(n());
    for (Index j = 0; j < n(); ++j) out(j) = interpolate(u, phi(j));
    return out;
  }
  TangentField<S> resample(const TangentField<S>& u, const ScalarField<S>& phi) const {
    check_len(u.rows());
    validate_circle_map(phi);
    TangentField<S> out(n(), u.cols());
    for (Index j = 0; j < n(); ++j) {
      for (Index c = 0; c < u.cols(); ++c) {
        out(j, c) = interpolate(ScalarField<S>(u.col(c)), phi(j));
      }
    }
    return out;
  }

  // phi' = 1 + d(phi - theta)/dtheta > 0 at every node.
  void validate_circle_map(const ScalarField<S>& phi) const {
    check_len(phi.rows());
    ScalarField<S> disp = phi - data_->theta;
    ScalarField<S> dphi = (data_->D * disp).array() + S(1);
    if (!(dphi.minCoeff() > S(0))) {
      throw ValidationError("resample: phi is not strictly increasing (phi' <= 0 at a node)");
    }
  }

 private:
  struct Data {
    Index n;
    S spacing;
    Vector<S> theta;
    Matrix<S> D;
  };

  static Data make(Index n) {
    if (n < 9 || n % 2 == 0) {
      throw ValidationError("PeriodicGrid: n must be odd and >= 9");
    }
    Data d;
    d.n = n;
    d.spacing = S(2) * pi() / static_cast<S>(n);
    d.theta.resize(n);
    for (Index j = 0; j < n; ++j) d.theta(j) = d.spacing * static_cast<S>(j);
    d.D = Matrix<S>::Zero(n, n);
    for (Index k = 1; k < n; ++k) {
      const S c = S(0.5) * (k % 2 == 0 ? S(1) : S(-1)) /
                  std::sin(static_cast<S>(k) * d.spacing / S(2));
      // D[(j+k)%n][j] = c and D[j][(j+k)%n] = -c: antisymmetry to the bit.
      for (Index j = 0; j < n; ++j) {
        d.D((j + k) % n, j) = c;
        d.D(j, (j + k) % n) = -c;
      }
    }
    return d;
  }

  static constexpr S pi() { return static_cast<S>(3.14159265358979323846264338327950288L); }

  S dirichlet(S y) const {
    const S half = std::sin(y / S(2));
    if (std::abs(half) < static_cast<S>(1e-15)) return S(1);
    return std::sin(static_cast<S>(n()) * y / S(2)) / (static_cast<S>(n()) * half);
  }

  void check_len(Index rows) const {
    if (rows != data_->n) {
      throw ValidationError("field length does not match grid size");
    }
  }

  std::shared_ptr<const Data> data_;
};

}  // namespace sobgeo
