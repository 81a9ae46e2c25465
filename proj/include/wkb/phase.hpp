#pragma once

// The WKB phase phi(x) = int_0^x (sqrt(a) - eps^2 b) and its per-cell increments.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "wkb/coeffs.hpp"
#include "wkb/errors.hpp"

namespace wkb {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(static_cast<std::size_t>(n)), weights(static_cast<std::size_t>(n)) {
    if (n < 1 || n > 64) throw ConfigError("Gauss-Legendre node count must be in 1..64");
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const auto lo = static_cast<std::size_t>(i);
      const auto hi = static_cast<std::size_t>(n - 1 - i);
      nodes[lo] = -z;
      nodes[hi] = z;
      weights[lo] = weights[hi] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  }

  [[nodiscard]] int size() const noexcept { return static_cast<int>(nodes.size()); }
};

/// How increments are obtained: closed form, or Gauss-Legendre with `nodes` points per cell.
struct PhaseMode {
  enum class Kind { analytic, quadrature };
  Kind kind = Kind::analytic;
  int nodes = 6;

  static PhaseMode analytic() { return {Kind::analytic, 0}; }
  static PhaseMode quadrature(int nodes = 6) { return {Kind::quadrature, nodes}; }

  /// "analytic", "gl" or "gl:<n>".
  static PhaseMode parse(std::string_view text) {
    if (text == "analytic") return analytic();
    if (text == "gl") return quadrature();
    if (text.starts_with("gl:")) {
      const std::string n(text.substr(3));
      char* end = nullptr;
      const long v = std::strtol(n.c_str(), &end, 10);
      if (end == n.c_str() || *end != '\0' || v < 1 || v > 64) throw ConfigError("bad phase node count '" + n + "'");
      return quadrature(static_cast<int>(v));
    }
    throw ConfigError("unknown phase mode '" + std::string(text) + "' (expected analytic or gl:<n>)");
  }

  /// Order gamma of the phase integration; infinity for the closed form.
  [[nodiscard]] double gamma() const {
    return kind == Kind::analytic ? std::numeric_limits<double>::infinity() : 2.0 * nodes;
  }

  [[nodiscard]] std::string to_string() const {
    return kind == Kind::analytic ? "analytic" : "gl:" + std::to_string(nodes);
  }

  bool operator==(const PhaseMode&) const = default;
};

/// sqrt(a(x)) - eps^2 b(x).
inline double phi_prime(const CoefficientModel& model, double eps, double x) {
  return phi_prime_jet(model, eps, x, 0).value();
}

namespace detail {

inline void check_interval(double xa, double xb) {
  if (!(xa >= 0.0 && xa < xb && xb <= 1.0)) {
    throw ConfigError("phase interval [" + std::to_string(xa) + ", " + std::to_string(xb) + "] is not inside [0,1]");
  }
}

}  // namespace detail

/// int_{xa}^{xb} phi'. Quadrature mode checks phi' > 0 at every node.
inline double phase_increment(const CoefficientModel& model, double eps, double xa, double xb,
                              const PhaseMode& mode = PhaseMode::analytic()) {
  detail::check_interval(xa, xb);
  if (mode.kind == PhaseMode::Kind::analytic) return model.analytic_increment(eps, xa, xb);
  thread_local int cached_n = 0;
  thread_local GaussLegendre rule(1);
  if (cached_n != mode.nodes) {
    rule = GaussLegendre(mode.nodes);
    cached_n = mode.nodes;
  }
  const double half = 0.5 * (xb - xa);
  const double mid = 0.5 * (xa + xb);
  double sum = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    const double x = mid + half * rule.nodes[static_cast<std::size_t>(i)];
    const double fp = phi_prime(model, eps, x);
    detail::require_positive_phase(fp, x, eps);
    sum += rule.weights[static_cast<std::size_t>(i)] * fp;
  }
  return half * sum;
}

/// Phase on the uniform grid x_n = n/N. Increments are primary; phi is their
/// compensated running sum.
struct PhaseTable {
  std::vector<double> grid;
  std::vector<double> phi;
  std::vector<double> increments;
  PhaseMode mode;
  double gamma = std::numeric_limits<double>::infinity();
  double eps = 0.0;

  [[nodiscard]] int cells() const noexcept { return static_cast<int>(increments.size()); }
  [[nodiscard]] double h() const { return 1.0 / cells(); }
};

inline PhaseTable build_phase_table(const CoefficientModel& model, double eps, int n_cells,
                                    const PhaseMode& mode = PhaseMode::analytic()) {
  if (n_cells < 1) throw ConfigError("phase table needs at least one cell");
  PhaseTable t;
  t.mode = mode;
  t.gamma = mode.gamma();
  t.eps = eps;
  const auto n = static_cast<std::size_t>(n_cells);
  t.grid.resize(n + 1);
  t.phi.resize(n + 1);
  t.increments.resize(n);
  for (std::size_t i = 0; i <= n; ++i) t.grid[i] = static_cast<double>(i) / static_cast<double>(n_cells);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = phase_increment(model, eps, t.grid[i], t.grid[i + 1], mode);
    if (!(s > 0.0)) {
      throw PhaseValidityError("non-positive phase increment on cell " + std::to_string(i) + " for eps = " +
                               std::to_string(eps));
    }
    t.increments[i] = s;
  }
  // Neumaier summation.
  double sum = 0.0;
  double comp = 0.0;
  t.phi[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = t.increments[i];
    const double next = sum + s;
    if (std::abs(sum) >= std::abs(s)) {
      comp += (sum - next) + s;
    } else {
      comp += (s - next) + sum;
    }
    sum = next;
    t.phi[i + 1] = sum + comp;
  }
  return t;
}

}  // namespace wkb
