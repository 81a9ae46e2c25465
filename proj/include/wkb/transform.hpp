#pragma once

// Wave <-> U <-> Z conversions.
//
//   U = (a^{1/4} w, eps (a^{1/4} w)' / sqrt(a))
//   Z = exp(-i Phi / eps) P U,   Phi = diag(phi, -phi)
//   P = [[i, 1], [1, i]] / sqrt(2),  P^{-1} = [[-i, 1], [1, -i]] / sqrt(2)
//
// Inverting the U definition with the product rule gives
//   w       = a^{-1/4} U_1
//   eps w'  = a^{1/4} U_2 - (eps/4) a' a^{-5/4} U_1
// and, at x = 0 with eps w'(0) = phi_1,
//   U_2(0)  = a^{-1/4} phi_1 + (eps/4) a^{-5/4} a' phi_0.

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Core>

#include "wkb/coeffs.hpp"

namespace wkb {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2cd;
using Mat2 = Eigen::Matrix2cd;

enum class Representation { U, Z };

/// Complex 2-vector tagged with its representation at compile time.
template <Representation R>
struct StateVec {
  Vec2 v = Vec2::Zero();

  StateVec() = default;
  explicit StateVec(const Vec2& values) : v(values) {}
  StateVec(cplx first, cplx second) : v(first, second) {}

  [[nodiscard]] cplx operator[](int i) const { return v(i); }
  static constexpr Representation representation = R;

  friend StateVec operator*(cplx s, const StateVec& x) { return StateVec(Vec2(s * x.v)); }
};

using UState = StateVec<Representation::U>;
using ZState = StateVec<Representation::Z>;

inline const Mat2& p_matrix() {
  static const Mat2 p = [] {
    Mat2 m;
    const double r = 1.0 / std::numbers::sqrt2;
    m << cplx(0, r), cplx(r, 0), cplx(r, 0), cplx(0, r);
    return m;
  }();
  return p;
}

inline const Mat2& p_inverse() {
  static const Mat2 p = [] {
    Mat2 m;
    const double r = 1.0 / std::numbers::sqrt2;
    m << cplx(0, -r), cplx(r, 0), cplx(r, 0), cplx(0, -r);
    return m;
  }();
  return p;
}

/// diag(e^{-i phi/eps}, e^{i phi/eps}) for forward, the conjugate for backward.
struct PhaseRotation {
  enum class Direction { forward, backward };

  double phase = 0.0;
  double eps = 1.0;
  Direction direction = Direction::forward;

  [[nodiscard]] Vec2 diagonal() const {
    const double sign = direction == Direction::forward ? -1.0 : 1.0;
    const cplx e = std::polar(1.0, sign * phase / eps);
    return {e, std::conj(e)};
  }

  [[nodiscard]] Vec2 apply(const Vec2& v) const { return diagonal().cwiseProduct(v); }
};

inline UState u_initial(cplx phi0, cplx phi1, const CoefficientModel& model, double eps) {
  const double a = model.eval(0.0, 0);
  const double da = model.eval(0.0, 1);
  const double q = std::pow(a, 0.25);
  return {q * phi0, phi1 / q + (eps / 4.0) * da / (a * q) * phi0};
}

inline ZState z_from_u(const UState& u, double phase_value, double eps) {
  const PhaseRotation rot{phase_value, eps, PhaseRotation::Direction::forward};
  return ZState(rot.apply(p_matrix() * u.v));
}

inline UState u_from_z(const ZState& z, double phase_value, double eps) {
  const PhaseRotation rot{phase_value, eps, PhaseRotation::Direction::backward};
  return UState(Vec2(p_inverse() * rot.apply(z.v)));
}

/// Wave value and scaled derivative (w, eps w') recovered from U at x.
struct WaveValue {
  cplx w;
  cplx eps_w_prime;
};

inline WaveValue wave_from_u(const UState& u, const CoefficientModel& model, double x, double eps) {
  const double a = model.eval(x, 0);
  const double da = model.eval(x, 1);
  const double q = std::pow(a, 0.25);
  return {u[0] / q, q * u[1] - (eps / 4.0) * da / (a * q) * u[0]};
}

}  // namespace wkb
