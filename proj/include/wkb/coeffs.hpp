#pragma once

// Coefficient function a(x) and the derived WKB functions.
//
// With q = a^{-1/4} the correction term is b = -q q''/2 and the phase
// derivative is phi' = sqrt(a) - eps^2 b. The chain b_0 = b/(2 phi'),
// b_p = b_{p-1}'/(2 phi') and the third-order auxiliaries are quotients of the
// same kind. All of them are formed on truncated Taylor series of a, so every
// derivative is exact up to round-off. A model that supplies M derivatives of a
// yields b with M-2 derivatives, hence b_0..b_{M-2}.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wkb/errors.hpp"
#include "wkb/expression.hpp"
#include "wkb/jet.hpp"

namespace wkb {

/// Largest index p of b_p that any scheme needs (b_5 for the third-order scheme).
inline constexpr int kMaxChainIndex = 5;

/// a(x) on [0,1] together with its first max_order derivatives.
class CoefficientModel {
 public:
  /// Writes a^(k)(x) into out[k] for k < out.size().
  using DerivativeFn = std::function<void(double x, std::span<double> out)>;
  /// Closed-form integral of phi' = sqrt(a) - eps^2 b over [xa, xb].
  using IncrementFn = std::function<double(double eps, double xa, double xb)>;

  CoefficientModel(std::string name, int max_order, double a_floor, DerivativeFn derivs, IncrementFn analytic = {})
      : name_(std::move(name)),
        max_order_(max_order),
        a_floor_(a_floor),
        derivs_(std::move(derivs)),
        analytic_(std::move(analytic)) {
    if (max_order_ < 0 || max_order_ > kMaxJetOrder) throw ConfigError("derivative order out of range for " + name_);
    if (!(a_floor_ > 0.0)) throw ConfigError("coefficient '" + name_ + "' is not bounded away from zero");
  }

  /// k-th derivative of a at x.
  [[nodiscard]] double eval(double x, int k) const {
    require_order(k);
    std::array<double, kMaxJetOrder + 1> d{};
    derivatives(x, std::span<double>(d.data(), static_cast<std::size_t>(k) + 1));
    return d[static_cast<std::size_t>(k)];
  }

  void derivatives(double x, std::span<double> out) const {
    check_domain(x);
    derivs_(x, out);
  }

  /// Taylor jet of a at x of the requested order.
  [[nodiscard]] Jet<double> jet(double x, int order) const {
    require_order(order);
    std::array<double, kMaxJetOrder + 1> d{};
    derivatives(x, std::span<double>(d.data(), static_cast<std::size_t>(order) + 1));
    return Jet<double>::from_derivatives(d, order);
  }

  void require_order(int k) const {
    if (k < 0) throw ConfigError("negative derivative order");
    if (k > max_order_) {
      throw ConfigError("coefficient '" + name_ + "' provides " + std::to_string(max_order_) +
                        " derivatives, " + std::to_string(k) + " required");
    }
  }

  static void check_domain(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("evaluation point " + std::to_string(x) + " outside [0,1]");
  }

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] int max_order() const noexcept { return max_order_; }
  [[nodiscard]] double a_floor() const noexcept { return a_floor_; }
  [[nodiscard]] bool has_analytic_phase() const noexcept { return static_cast<bool>(analytic_); }
  [[nodiscard]] double analytic_increment(double eps, double xa, double xb) const {
    if (!analytic_) throw ConfigError("coefficient '" + name_ + "' has no closed-form phase; use quadrature");
    return analytic_(eps, xa, xb);
  }

  /// a(x) = a0.
  static CoefficientModel constant(double a0) {
    if (!(a0 > 0.0)) throw ConfigError("constant coefficient must be positive");
    auto derivs = [a0](double, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      if (!out.empty()) out[0] = a0;
    };
    const double root = std::sqrt(a0);
    auto increment = [root](double, double xa, double xb) { return root * (xb - xa); };
    return CoefficientModel("constant(" + format_number(a0) + ")", kMaxJetOrder, a0, derivs, increment);
  }

  /// a(x) = (x + 1/2)^2. With t = x + 1/2: b = -(3/8) t^-3 and
  /// phi(x) = x^2/2 + x/2 - eps^2 (3/16)(t^-2 - 4).
  static CoefficientModel affine_squared() {
    auto derivs = [](double x, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      const double t = x + 0.5;
      if (!out.empty()) out[0] = t * t;
      if (out.size() > 1) out[1] = 2.0 * t;
      if (out.size() > 2) out[2] = 2.0;
    };
    // Both parts are written as products of differences so that short cells
    // do not cancel.
    auto increment = [](double eps, double xa, double xb) {
      const double ta = xa + 0.5;
      const double tb = xb + 0.5;
      const double dx = xb - xa;
      const double smooth = 0.5 * dx * (xa + xb + 1.0);
      const double correction = (3.0 / 16.0) * dx * (ta + tb) / (ta * ta * tb * tb);
      return smooth + eps * eps * correction;
    };
    return CoefficientModel("affine-squared", kMaxJetOrder, 0.25, derivs, increment);
  }

  /// User expression in x, differentiated in Taylor mode. The positivity floor
  /// is taken from a dense sample of [0,1].
  static CoefficientModel from_expression(std::string_view text, int max_order = 9) {
    auto expr = Expression::parse(text);
    auto derivs = [expr](double x, std::span<double> out) {
      if (out.empty()) return;
      const int order = static_cast<int>(out.size()) - 1;
      const auto j = expr.evaluate<double>(x, order);
      for (int k = 0; k <= order; ++k) out[static_cast<std::size_t>(k)] = j.derivative_value(k);
    };
    double floor = std::numeric_limits<double>::infinity();
    constexpr int samples = 1024;
    for (int i = 0; i <= samples; ++i) {
      const double v = expr.value(static_cast<double>(i) / samples);
      if (!std::isfinite(v)) throw ConfigError("coefficient '" + expr.text() + "' is not finite on [0,1]");
      floor = std::min(floor, v);
    }
    if (!(floor > 0.0)) throw ConfigError("coefficient '" + expr.text() + "' has a turning point in [0,1]");
    return CoefficientModel(expr.text(), max_order, floor, derivs);
  }

 private:
  static std::string format_number(double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  std::string name_;
  int max_order_;
  double a_floor_;
  DerivativeFn derivs_;
  IncrementFn analytic_;
};

/// Resolves "constant", "constant(a0)", "affine-squared", "expr:<text>", or a
/// bare expression in x.
inline CoefficientModel make_problem(std::string_view name) {
  if (name == "affine-squared") return CoefficientModel::affine_squared();
  if (name == "constant") return CoefficientModel::constant(1.0);
  if (name.starts_with("constant(") && name.ends_with(")")) {
    const std::string arg(name.substr(9, name.size() - 10));
    char* end = nullptr;
    const double a0 = std::strtod(arg.c_str(), &end);
    if (end == arg.c_str() || *end != '\0') throw ConfigError("bad constant coefficient '" + arg + "'");
    return CoefficientModel::constant(a0);
  }
  if (name.starts_with("expr:")) return CoefficientModel::from_expression(name.substr(5));
  return CoefficientModel::from_expression(name);
}

/// The ten third-order auxiliaries at one point.
struct Q3Aux {
  double c0 = 0, c1 = 0, d0 = 0, d1 = 0, e0 = 0, f0 = 0, f1 = 0, g0 = 0, kappa0 = 0, l0 = 0;
};

struct WkbAux {
  std::array<double, kMaxChainIndex + 1> b_chain{};
  Q3Aux q3;
  double epsilon = 0.0;
};

/// Everything the stepper needs at one grid point.
struct NodeCoefficients {
  double x = 0.0;
  double b = 0.0;
  double phi_prime = 0.0;
  std::array<double, kMaxChainIndex + 1> chain{};  // b_0..b_5, unused tail left at 0
  Q3Aux aux;
};

namespace detail {

template <class T>
struct WkbJets {
  Jet<T> b;
  Jet<T> phi_prime;
  std::array<Jet<T>, kMaxChainIndex + 1> chain;
  int chain_len = 0;
};

/// b, phi' and b_0..b_{p_max} from a jet of a; needs a.order() >= p_max + 2.
template <class T>
WkbJets<T> wkb_jets(const Jet<T>& a, const T& eps, int p_max) {
  WkbJets<T> out;
  const int k = a.order() - 2;
  const Jet<T> q = pow(a, T(-0.25));
  out.b = T(-0.5) * q.truncated(k) * q.derivative().derivative();
  out.phi_prime = sqrt(a).truncated(k) - eps * eps * out.b;
  const Jet<T> two_phip = T(2) * out.phi_prime;
  out.chain[0] = out.b / two_phip;
  for (int p = 1; p <= p_max; ++p) out.chain[p] = out.chain[p - 1].derivative() / two_phip;
  out.chain_len = p_max + 1;
  return out;
}

template <class T>
Q3Aux q3_aux_values(const WkbJets<T>& w) {
  const Jet<T> two_phip = T(2) * w.phi_prime;
  const Jet<T>& b = w.b;
  const Jet<T>& b0 = w.chain[0];
  const Jet<T>& b1 = w.chain[1];
  const Jet<T> c0 = b * b * b0 / two_phip;
  const Jet<T> c1 = c0.derivative() / two_phip;
  const Jet<T> d0 = c0 / two_phip;
  const Jet<T> d1 = d0.derivative() / two_phip;
  const Jet<T> e0 = c1 / two_phip;
  const Jet<T> f0 = b0 / two_phip;
  const Jet<T> f1 = f0.derivative() / two_phip;
  const Jet<T> g0 = b1 / two_phip;
  const Jet<T> kappa0 = b * b1 / two_phip;
  const Jet<T> l0 = b * b0 * b1 / two_phip;
  auto v = [](const Jet<T>& j) { return static_cast<double>(j.value()); };
  return Q3Aux{v(c0), v(c1), v(d0), v(d1), v(e0), v(f0), v(f1), v(g0), v(kappa0), v(l0)};
}

inline void require_positive_phase(double phi_prime, double x, double eps) {
  if (!(phi_prime > 0.0) || !std::isfinite(phi_prime)) {
    throw PhaseValidityError("phase derivative phi'(" + std::to_string(x) + ") = " + std::to_string(phi_prime) +
                             " is not positive for eps = " + std::to_string(eps) +
                             "; eps is too large for a monotone phase (phi'(x) != 0 required)");
  }
}

}  // namespace detail

/// k-th derivative of b(x) = -a^{-1/4} (a^{-1/4})'' / 2, for k in 0..5.
inline double eval_b(const CoefficientModel& model, double x, int k) {
  if (k < 0 || k > kMaxChainIndex) throw ConfigError("eval_b: derivative order must be in 0..5");
  model.require_order(k + 2);
  const auto a = model.jet(x, k + 2);
  const Jet<double> q = pow(a, -0.25);
  const Jet<double> b = -0.5 * q.truncated(k) * q.derivative().derivative();
  return b.derivative_value(k);
}

/// phi'(x) and its derivatives up to the given order (model must provide order + 2).
inline Jet<double> phi_prime_jet(const CoefficientModel& model, double eps, double x, int order) {
  model.require_order(order + 2);
  return detail::wkb_jets(model.jet(x, order + 2), eps, 0).phi_prime;
}

/// b_0..b_{p_max} at x.
inline std::vector<double> eval_b_chain(const CoefficientModel& model, double eps, double x, int p_max) {
  if (p_max < 0 || p_max > kMaxChainIndex) throw ConfigError("eval_b_chain: p_max must be in 0..5");
  model.require_order(p_max + 2);
  const auto w = detail::wkb_jets(model.jet(x, p_max + 2), eps, p_max);
  detail::require_positive_phase(w.phi_prime.value(), x, eps);
  std::vector<double> out(static_cast<std::size_t>(p_max) + 1);
  for (int p = 0; p <= p_max; ++p) out[static_cast<std::size_t>(p)] = w.chain[p].value();
  return out;
}

/// b_0..b_5 and the ten auxiliaries at x; the model must supply 7 derivatives.
inline WkbAux eval_q3_aux(const CoefficientModel& model, double eps, double x) {
  model.require_order(kMaxChainIndex + 2);
  const auto w = detail::wkb_jets(model.jet(x, kMaxChainIndex + 2), eps, kMaxChainIndex);
  detail::require_positive_phase(w.phi_prime.value(), x, eps);
  WkbAux aux;
  for (int p = 0; p <= kMaxChainIndex; ++p) aux.b_chain[static_cast<std::size_t>(p)] = w.chain[p].value();
  aux.q3 = detail::q3_aux_values(w);
  aux.epsilon = eps;
  return aux;
}

/// One jet pass producing b, phi', b_0..b_{p_max} and optionally the auxiliaries.
inline NodeCoefficients evaluate_node(const CoefficientModel& model, double eps, double x, int p_max, bool with_aux) {
  model.require_order(p_max + 2);
  const auto w = detail::wkb_jets(model.jet(x, p_max + 2), eps, p_max);
  NodeCoefficients n;
  n.x = x;
  n.b = w.b.value();
  n.phi_prime = w.phi_prime.value();
  detail::require_positive_phase(n.phi_prime, x, eps);
  for (int p = 0; p <= p_max; ++p) n.chain[static_cast<std::size_t>(p)] = w.chain[p].value();
  if (with_aux) n.aux = detail::q3_aux_values(w);
  return n;
}

}  // namespace wkb
