#pragma once

// Ground truth for the schemes, computed without any of the asymptotic formulas.
//
// Two independent routes to the Picard matrices
//   M_p(eta; xi) = int_xi^eta N(y) M_{p-1}(y; xi) dy,  M_0 = I,
// are provided: nested adaptive Gauss-Kronrod quadrature, and the triangular
// ODE system Y_p' = N Y_{p-1} integrated by Bulirsch-Stoer extrapolation. The
// same integrator also propagates Z' = eps N Z for per-step and global
// reference values.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "wkb/coeffs.hpp"
#include "wkb/errors.hpp"
#include "wkb/phase.hpp"
#include "wkb/stepper.hpp"
#include "wkb/transform.hpp"

namespace wkb {

/// phi(x) at arbitrary x. With a table the value is anchored at the node below
/// x so that grid values coincide with the table exactly; otherwise it is
/// anchored at (x0, phi0).
class PhaseAccessor {
 public:
  PhaseAccessor(const CoefficientModel& model, double eps, PhaseMode mode, double x0 = 0.0, double phi0 = 0.0)
      : model_(&model), eps_(eps), mode_(mode), x0_(x0), phi0_(phi0) {}

  PhaseAccessor(const CoefficientModel& model, const PhaseTable& table)
      : model_(&model), eps_(table.eps), mode_(table.mode), table_(&table) {}

  [[nodiscard]] double operator()(double x) const {
    if (table_ != nullptr) {
      const int cells = table_->cells();
      auto n = static_cast<int>(std::floor(x * cells));
      n = std::clamp(n, 0, cells - 1);
      const auto i = static_cast<std::size_t>(n);
      return table_->phi[i] + signed_increment(table_->grid[i], x);
    }
    return phi0_ + signed_increment(x0_, x);
  }

  [[nodiscard]] double eps() const noexcept { return eps_; }

 private:
  [[nodiscard]] double signed_increment(double from, double to) const {
    if (to == from) return 0.0;
    if (to > from) return phase_increment(*model_, eps_, from, to, mode_);
    return -phase_increment(*model_, eps_, to, from, mode_);
  }

  const CoefficientModel* model_;
  double eps_;
  PhaseMode mode_;
  double x0_ = 0.0;
  double phi0_ = 0.0;
  const PhaseTable* table_ = nullptr;
};

/// N(x) = [[0, b e^{-2i phi/eps}], [b e^{2i phi/eps}, 0]].
class OscillatoryMatrixFn {
 public:
  OscillatoryMatrixFn(const CoefficientModel& model, PhaseAccessor phase)
      : model_(&model), phase_(std::move(phase)) {
    constexpr int samples = 256;
    double peak = 0.0;
    for (int i = 0; i <= samples; ++i) {
      peak = std::max(peak, std::abs(phi_prime(model, phase_.eps(), static_cast<double>(i) / samples)));
    }
    max_frequency_ = 2.0 * peak / phase_.eps();
  }

  /// Upper bound (sampled) on the angular frequency 2 phi'/eps of the entries.
  [[nodiscard]] double max_frequency() const noexcept { return max_frequency_; }

  /// Lower-left entry b e^{2i phi/eps}; the upper-right entry is its conjugate.
  [[nodiscard]] cplx lower(double x) const {
    // Integrator stages may land an ulp or so outside [0,1].
    if ((x < 0.0 && x > -1e-12) || (x > 1.0 && x < 1.0 + 1e-12)) x = std::clamp(x, 0.0, 1.0);
    return eval_b(*model_, x, 0) * std::polar(1.0, 2.0 * phase_(x) / phase_.eps());
  }

  [[nodiscard]] Mat2 operator()(double x) const {
    const cplx n21 = lower(x);
    Mat2 m;
    m << 0.0, std::conj(n21), n21, 0.0;
    return m;
  }

  [[nodiscard]] double eps() const noexcept { return phase_.eps(); }

 private:
  const CoefficientModel* model_;
  PhaseAccessor phase_;
  double max_frequency_ = 0.0;
};

struct OracleOptions {
  double tol = 1e-13;
  std::size_t max_steps = 20'000'000;  // integrator steps
  std::size_t max_panels = 20'000;     // quadrature panels per integral
};

namespace detail {

/// Globally adaptive Gauss-Kronrod (7, 15) for matrix-valued integrands. The
/// panel with the largest error estimate is bisected until the summed estimate
/// drops below tol or every panel is at round-off level.
class GaussKronrod15 {
 public:
  explicit GaussKronrod15(const OracleOptions& opt) : opt_(opt) {}

  Mat2 integrate(const std::function<Mat2(double)>& f, double a, double b, double tol) {
    if (a == b) return Mat2::Zero();
    std::vector<Panel> panels{evaluate(f, a, b)};
    for (;;) {
      double total_err = 0.0;
      std::size_t worst = 0;
      bool refinable = false;
      for (std::size_t i = 0; i < panels.size(); ++i) {
        total_err += panels[i].err;
        if (panels[i].err > panels[worst].err) worst = i;
        refinable = refinable || !panels[i].at_roundoff;
      }
      if (total_err <= tol || !refinable) break;
      if (panels[worst].at_roundoff) {
        // Pick the worst panel that can still improve.
        double best = -1.0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
          if (!panels[i].at_roundoff && panels[i].err > best) {
            best = panels[i].err;
            worst = i;
          }
        }
      }
      if (panels.size() >= opt_.max_panels) throw OracleError("quadrature panel budget exceeded");
      const Panel p = panels[worst];
      const double mid = 0.5 * (p.a + p.b);
      if (!(mid > p.a && mid < p.b)) throw OracleError("quadrature could not reach the requested tolerance");
      panels[worst] = evaluate(f, p.a, mid);
      panels.push_back(evaluate(f, mid, p.b));
    }
    Mat2 sum = Mat2::Zero();
    for (const auto& p : panels) sum += p.value;
    return sum;
  }

 private:
  struct Panel {
    double a;
    double b;
    Mat2 value;
    double err;
    bool at_roundoff;
  };

  static constexpr std::array<double, 8> xgk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                             0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                             0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                             0.207784955007898467600689403773245, 0.0};
  static constexpr std::array<double, 8> wgk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                             0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                             0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                             0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  static Panel evaluate(const std::function<Mat2(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    const Mat2 fc = f(c);
    Mat2 kronrod = wgk[7] * fc;
    Mat2 gauss = wg[3] * fc;
    double scale = wgk[7] * fc.cwiseAbs().maxCoeff();
    for (std::size_t j = 0; j < 7; ++j) {
      const Mat2 lo = f(c - r * xgk[j]);
      const Mat2 hi = f(c + r * xgk[j]);
      const Mat2 sum = lo + hi;
      kronrod += wgk[j] * sum;
      scale += wgk[j] * (lo.cwiseAbs().maxCoeff() + hi.cwiseAbs().maxCoeff());
      if (j % 2 == 1) gauss += wg[j / 2] * sum;
    }
    kronrod *= r;
    gauss *= r;
    scale *= std::abs(r);
    const double err = (kronrod - gauss).cwiseAbs().maxCoeff();
    return {a, b, kronrod, err, err <= 50.0 * std::numeric_limits<double>::epsilon() * scale};
  }

  OracleOptions opt_;
};

/// Integrates y' = rhs(x, y) for a complex state of fixed size with
/// Bulirsch-Stoer extrapolation. (Fehlberg 7(8) is unsuitable: its error
/// estimate vanishes when the right-hand side depends on x only, which is
/// nearly the case for the small deviations integrated here.)
template <std::size_t NC>
class ComplexFlow {
 public:
  using Values = std::array<cplx, NC>;
  using Rhs = std::function<void(double, const Values&, Values&)>;

  ComplexFlow(Rhs rhs, const OracleOptions& opt) : rhs_(std::move(rhs)), opt_(opt) {}

  /// Advances y from xi to eta in place; steps never exceed max_dt, which
  /// keeps the error estimator from stepping over whole oscillations.
  std::size_t run(Values& y, double xi, double eta, double max_dt) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2 * NC>;
    State state{};
    for (std::size_t i = 0; i < NC; ++i) {
      state[2 * i] = y[i].real();
      state[2 * i + 1] = y[i].imag();
    }
    auto system = [this](const State& s, State& ds, double x) {
      Values v;
      Values dv;
      for (std::size_t i = 0; i < NC; ++i) v[i] = cplx(s[2 * i], s[2 * i + 1]);
      rhs_(x, v, dv);
      for (std::size_t i = 0; i < NC; ++i) {
        ds[2 * i] = dv[i].real();
        ds[2 * i + 1] = dv[i].imag();
      }
    };
    std::size_t steps = 0;
    auto budget = [&steps, this](const State&, double) {
      if (++steps > opt_.max_steps) throw OracleError("integrator step budget exceeded");
    };
    odeint::bulirsch_stoer<State> stepper(opt_.tol, opt_.tol, 1.0, 1.0, max_dt);
    try {
      odeint::integrate_adaptive(stepper, system, state, xi, eta, std::min(max_dt, eta - xi), budget);
    } catch (const OracleError&) {
      throw;
    } catch (const std::exception& e) {
      throw OracleError(std::string("integrator failure: ") + e.what());
    }
    for (std::size_t i = 0; i < NC; ++i) y[i] = cplx(state[2 * i], state[2 * i + 1]);
    return steps;
  }

 private:
  Rhs rhs_;
  OracleOptions opt_;
};

/// Roughly six steps per period of N.
inline double max_step(const OscillatoryMatrixFn& n) { return 1.0 / n.max_frequency(); }

}  // namespace detail

enum class PicardRoute { nested_quadrature, ode_system };

/// M_1..M_{p_max} on [xi, eta] (index 0 holds M_1).
inline std::vector<Mat2> picard_series(int p_max, double xi, double eta, const OscillatoryMatrixFn& n,
                                       const OracleOptions& opt = {},
                                       PicardRoute route = PicardRoute::nested_quadrature) {
  if (p_max < 1 || p_max > 3) throw ConfigError("picard_series: p must be 1, 2 or 3");
  if (!(eta >= xi)) throw ConfigError("picard_series: eta must not precede xi");
  std::vector<Mat2> out;
  if (route == PicardRoute::nested_quadrature) {
    detail::GaussKronrod15 gk(opt);
    // The innermost integrals get a tighter tolerance so their error does not
    // leak into the outer estimate.
    std::function<Mat2(int, double)> m = [&](int p, double y) -> Mat2 {
      if (p == 0) return Mat2::Identity();
      if (y == xi) return Mat2::Zero();
      detail::GaussKronrod15 inner(opt);
      const double tol = opt.tol * std::pow(0.1, p_max - p);
      return inner.integrate([&](double z) -> Mat2 { return n(z) * m(p - 1, z); }, xi, y, tol);
    };
    for (int p = 1; p <= p_max; ++p) out.push_back(m(p, eta));
    return out;
  }
  constexpr std::size_t blocks = 3;
  using Flow = detail::ComplexFlow<4 * blocks>;
  auto rhs = [&n](double x, const Flow::Values& y, Flow::Values& dy) {
    const Mat2 nx = n(x);
    for (std::size_t p = 0; p < blocks; ++p) {
      Mat2 prev = Mat2::Identity();
      if (p > 0) prev << y[4 * (p - 1)], y[4 * (p - 1) + 1], y[4 * (p - 1) + 2], y[4 * (p - 1) + 3];
      const Mat2 d = nx * prev;
      dy[4 * p] = d(0, 0);
      dy[4 * p + 1] = d(0, 1);
      dy[4 * p + 2] = d(1, 0);
      dy[4 * p + 3] = d(1, 1);
    }
  };
  Flow::Values y{};
  if (eta > xi) Flow(rhs, opt).run(y, xi, eta, detail::max_step(n));
  for (int p = 0; p < p_max; ++p) {
    Mat2 m;
    const auto k = static_cast<std::size_t>(4 * p);
    m << y[k], y[k + 1], y[k + 2], y[k + 3];
    out.push_back(m);
  }
  return out;
}

/// Single Picard matrix M_p(eta; xi).
inline Mat2 picard_m(int p, double xi, double eta, const OscillatoryMatrixFn& n, const OracleOptions& opt = {},
                     PicardRoute route = PicardRoute::nested_quadrature) {
  return picard_series(p, xi, eta, n, opt, route).back();
}

/// Transfer matrix T(eta; xi) of Z' = eps N Z. The deviation T - I is
/// integrated so that the O(eps^2) changes are not rounded against 1.
inline Mat2 flow_transfer(double xi, double eta, const OscillatoryMatrixFn& n, const OracleOptions& opt = {}) {
  using Flow = detail::ComplexFlow<4>;
  const double eps = n.eps();
  auto rhs = [&n, eps](double x, const Flow::Values& y, Flow::Values& dy) {
    Mat2 dev;
    dev << y[0], y[1], y[2], y[3];
    const Mat2 d = eps * n(x) * (Mat2::Identity() + dev);
    dy = {d(0, 0), d(0, 1), d(1, 0), d(1, 1)};
  };
  Flow::Values y{};
  if (eta > xi) Flow(rhs, opt).run(y, xi, eta, detail::max_step(n));
  Mat2 t;
  t << 1.0 + y[0], y[1], y[2], 1.0 + y[3];
  return t;
}

/// Z(eta) from Z(xi) = z0 by integrating Z' = eps N Z.
inline ZState flow_oracle(const ZState& z0, double xi, double eta, const OscillatoryMatrixFn& n,
                          const OracleOptions& opt = {}) {
  using Flow = detail::ComplexFlow<2>;
  const double eps = n.eps();
  const Vec2 base = z0.v;
  auto rhs = [&n, eps, &base](double x, const Flow::Values& y, Flow::Values& dy) {
    const Vec2 d = eps * n(x) * (base + Vec2(y[0], y[1]));
    dy = {d(0), d(1)};
  };
  Flow::Values y{};
  if (eta > xi) Flow(rhs, opt).run(y, xi, eta, detail::max_step(n));
  return ZState(Vec2(base + Vec2(y[0], y[1])));
}

struct ReferenceSolution {
  PhaseTable phase;
  std::vector<ZState> z;
  std::vector<UState> u;
};

struct ReferenceOptions {
  OracleOptions oracle;
  bool cross_validate = true;
  int refinement = 16;           // WKB3 comparison run uses refinement * N cells
  double cross_tolerance = 1e-9;  // max-norm disagreement allowed between the two
};

/// Z and U at the nodes x_n = n/N from the flow oracle. N = 0 gives the single
/// node x = 0. The phase on the nodes is the table the schemes use, so both
/// sides of a comparison share the backward transform.
inline ReferenceSolution reference_solution(const CoefficientModel& model, double eps, int n_cells, cplx phi0,
                                            cplx phi1, const PhaseMode& mode = PhaseMode::analytic(),
                                            const ReferenceOptions& opt = {}) {
  if (n_cells < 0) throw ConfigError("reference grid needs a non-negative cell count");
  ReferenceSolution ref;
  const UState u0 = u_initial(phi0, phi1, model, eps);
  if (n_cells == 0) {
    ref.phase.grid = {0.0};
    ref.phase.phi = {0.0};
    ref.phase.mode = mode;
    ref.phase.eps = eps;
    ref.u = {u0};
    ref.z = {z_from_u(u0, 0.0, eps)};
    return ref;
  }
  ref.phase = build_phase_table(model, eps, n_cells, mode);
  const OscillatoryMatrixFn n(model, PhaseAccessor(model, ref.phase));
  const auto cells = static_cast<std::size_t>(n_cells);
  ref.z.resize(cells + 1);
  ref.z[0] = z_from_u(u0, 0.0, eps);

  using Flow = detail::ComplexFlow<2>;
  const Vec2 base = ref.z[0].v;
  auto rhs = [&n, eps, &base](double x, const Flow::Values& y, Flow::Values& dy) {
    const Vec2 d = eps * n(x) * (base + Vec2(y[0], y[1]));
    dy = {d(0), d(1)};
  };
  Flow flow(rhs, opt.oracle);
  Flow::Values dev{};
  for (std::size_t i = 0; i < cells; ++i) {
    flow.run(dev, ref.phase.grid[i], ref.phase.grid[i + 1], detail::max_step(n));
    ref.z[i + 1] = ZState(Vec2(base + Vec2(dev[0], dev[1])));
  }
  ref.u.resize(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) ref.u[i] = u_from_z(ref.z[i], ref.phase.phi[i], eps);

  if (opt.cross_validate && model.max_order() >= required_derivatives(Scheme::wkb3)) {
    const int fine = n_cells * opt.refinement;
    const auto check = solve_ivp(model, eps, fine, Scheme::wkb3, phi0, phi1, mode);
    double worst = 0.0;
    for (std::size_t i = 0; i <= cells; ++i) {
      const auto j = i * static_cast<std::size_t>(opt.refinement);
      worst = std::max(worst, (check.z[j].v - ref.z[i].v).cwiseAbs().maxCoeff());
    }
    if (!(worst <= opt.cross_tolerance)) {
      throw OracleError("reference cross-validation failed: flow oracle and refined WKB3 differ by " +
                        std::to_string(worst) + " (allowed " + std::to_string(opt.cross_tolerance) + ")");
    }
  }
  return ref;
}

}  // namespace wkb
