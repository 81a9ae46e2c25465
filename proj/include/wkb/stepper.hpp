#pragma once

// One-step WKB schemes of order 2 and 3 for Z' = eps N(x) Z.
//
//   Z_{n+1} = (I + sum_{p=1}^{P} A_n^{p,P}) Z_n
//
// with A^1 = eps [[0, conj Q1], [Q1, 0]], A^2 = eps^2 diag(Q2, conj Q2) and,
// for P = 3, A^3 = eps^3 [[0, conj Q3], [Q3, 0]]. The Q terms are
// endpoint formulas from the asymptotic method for oscillatory integrals.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wkb/coeffs.hpp"
#include "wkb/phase.hpp"
#include "wkb/transform.hpp"

namespace wkb {

enum class Scheme { wkb2 = 2, wkb3 = 3 };

inline int scheme_order(Scheme s) { return static_cast<int>(s); }

inline std::string_view scheme_name(Scheme s) { return s == Scheme::wkb2 ? "wkb2" : "wkb3"; }

inline Scheme parse_scheme(std::string_view name) {
  if (name == "wkb2" || name == "WKB2") return Scheme::wkb2;
  if (name == "wkb3" || name == "WKB3") return Scheme::wkb3;
  throw ConfigError("unknown scheme '" + std::string(name) + "' (expected wkb2 or wkb3)");
}

/// Highest b_p index the scheme touches (b_{2P-1}), and the derivative order of a this requires.
inline int chain_length(Scheme s) { return 2 * scheme_order(s) - 1; }
inline int required_derivatives(Scheme s) { return chain_length(s) + 2; }

/// Remainder of the exponential series, e^{ix} - sum_{k<p} (ix)^k / k!, for p = 1, 2, 3.
inline cplx h_special(int p, double x) {
  if (p < 1 || p > 3) throw std::invalid_argument("h_special: p must be 1, 2 or 3");
  if (std::abs(x) <= 0.5) {
    // Tail sum_{k>=p} (ix)^k / k!; the direct formula would cancel here.
    const cplx ix(0.0, x);
    cplx term(1.0, 0.0);
    for (int k = 1; k <= p; ++k) term *= ix / static_cast<double>(k);
    cplx sum = term;
    for (int k = p + 1; k < 40; ++k) {
      term *= ix / static_cast<double>(k);
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  // e^{ix} - 1 = 2i sin(x/2) e^{ix/2} keeps relative accuracy near x = 2 pi k.
  const double s = std::sin(0.5 * x);
  cplx h(-2.0 * s * s, std::sin(x));
  if (p >= 2) h -= cplx(0.0, x);
  if (p >= 3) h += cplx(0.5 * x * x, 0.0);
  return h;
}

/// Simpson rule (x_hi - x_lo)/6 (f_lo + 4 f_mid + f_hi).
inline cplx simpson_weighted(cplx f_lo, cplx f_mid, cplx f_hi, double x_lo, double x_hi) {
  return (x_hi - x_lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
}

/// b, b_0 and b_1 at a cell midpoint; only the Simpson terms need them.
struct MidCoefficients {
  double b = 0.0;
  double b0 = 0.0;
  double b1 = 0.0;
};

/// Per-cell data entering the Q formulas.
struct StepContext {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double s = 0.0;       // phase increment over the cell
  double phi_lo = 0.0;  // accumulated phase at x_lo
  double eps = 0.0;
  NodeCoefficients lo;
  NodeCoefficients hi;
  MidCoefficients mid;

  [[nodiscard]] double h() const { return x_hi - x_lo; }
};

/// Builds a context by evaluating the model on [x_lo, x_hi] directly.
inline StepContext make_step_context(const CoefficientModel& model, double eps, double x_lo, double x_hi,
                                     double phi_lo, double s, Scheme scheme) {
  StepContext ctx;
  ctx.x_lo = x_lo;
  ctx.x_hi = x_hi;
  ctx.s = s;
  ctx.phi_lo = phi_lo;
  ctx.eps = eps;
  const bool third = scheme == Scheme::wkb3;
  ctx.lo = evaluate_node(model, eps, x_lo, chain_length(scheme), third);
  ctx.hi = evaluate_node(model, eps, x_hi, chain_length(scheme), third);
  if (third) {
    const auto m = evaluate_node(model, eps, 0.5 * (x_lo + x_hi), 1, false);
    ctx.mid = {m.b, m.chain[0], m.chain[1]};
  }
  return ctx;
}

namespace detail {

inline cplx i_eps_power(double eps, int p) {
  // (i eps)^p
  static constexpr std::array<cplx, 4> units{cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
  return units[static_cast<std::size_t>(p % 4)] * std::pow(eps, p);
}

}  // namespace detail

inline cplx q1_term(const StepContext& ctx, int order) {
  if (order != 2 && order != 3) throw std::invalid_argument("q1_term: order must be 2 or 3");
  const double eps = ctx.eps;
  const cplx e_lo = std::polar(1.0, 2.0 * ctx.phi_lo / eps);
  const cplx e_step = std::polar(1.0, 2.0 * ctx.s / eps);
  const double k = 2.0 * ctx.s / eps;
  cplx boundary(0.0);
  cplx shifted(0.0);
  for (int p = 1; p <= order; ++p) {
    const auto bp_hi = ctx.hi.chain[static_cast<std::size_t>(p - 1)];
    const auto bp_lo = ctx.lo.chain[static_cast<std::size_t>(p - 1)];
    boundary += detail::i_eps_power(eps, p) * (bp_hi * e_step - bp_lo);
    shifted += detail::i_eps_power(eps, p + order) * ctx.hi.chain[static_cast<std::size_t>(p + order - 1)] *
               h_special(p, k);
  }
  return -e_lo * (boundary + shifted);
}

inline cplx q2_term(const StepContext& ctx, int order) {
  const double eps = ctx.eps;
  const double h = ctx.h();
  const double k = -2.0 * ctx.s / eps;
  const cplx I(0.0, 1.0);
  const auto& lo = ctx.lo;
  const auto& hi = ctx.hi;
  const double b0_lo = lo.chain[0];
  const double b0_hi = hi.chain[0];
  const double b1_lo = lo.chain[1];
  const double b1_hi = hi.chain[1];
  if (order == 2) {
    return -I * eps * h * 0.5 * (hi.b * b0_hi + lo.b * b0_lo) - eps * eps * b0_lo * b0_hi * h_special(1, k) +
           I * eps * eps * eps * b1_hi * (b0_lo - b0_hi) * h_special(2, k);
  }
  if (order != 3) throw std::invalid_argument("q2_term: order must be 2 or 3");
  const double b2_hi = hi.chain[2];
  const double b3_hi = hi.chain[3];
  const cplx simpson_bb0 = simpson_weighted(lo.b * b0_lo, ctx.mid.b * ctx.mid.b0, hi.b * b0_hi, ctx.x_lo, ctx.x_hi);
  const cplx simpson_bb1 = simpson_weighted(lo.b * b1_lo, ctx.mid.b * ctx.mid.b1, hi.b * b1_hi, ctx.x_lo, ctx.x_hi);
  // b0(x_n) e^{2i phi_n/eps} [b0(y) e^{-2i phi(y)/eps}]_{x_n}^{x_{n+1}} only involves the increment.
  const cplx bracket = b0_lo * (b0_hi * std::polar(1.0, k) - b0_lo);
  const double e2 = eps * eps;
  const double e3 = e2 * eps;
  const double e4 = e3 * eps;
  const double e5 = e4 * eps;
  return -I * eps * simpson_bb0 - e2 * (bracket - simpson_bb1) +
         I * e3 * (b0_lo * b1_hi - b1_lo * b0_hi) * h_special(1, k) +
         e4 * ((b0_lo + b0_hi) * b2_hi - b1_lo * b1_hi - 2.0 * b0_hi * b3_hi * ctx.s) * h_special(2, k) +
         I * e5 * ((b0_hi - b0_lo) * b3_hi - (b1_hi - b1_lo) * b2_hi) * h_special(3, k);
}

inline cplx q3_term(const StepContext& ctx) {
  const double eps = ctx.eps;
  const double h = ctx.h();
  const double s = ctx.s;
  const double k = 2.0 * s / eps;
  const cplx I(0.0, 1.0);
  const cplx e_lo = std::polar(1.0, 2.0 * ctx.phi_lo / eps);
  const auto& lo = ctx.lo;
  const auto& hi = ctx.hi;
  const auto& ax = hi.aux;
  const double b0_lo = lo.chain[0];
  const double b0_hi = hi.chain[0];
  const double b1_hi = hi.chain[1];
  const double bb0_lo = lo.b * b0_lo;
  const double lk = ax.l0 - b0_lo * ax.kappa0;
  const double e2 = eps * eps;

  const double t1 = 0.5 * h * (ax.c0 + bb0_lo * b0_hi);
  const double t2 = 0.5 * (ax.c1 * h + ax.d0 + bb0_lo * (b1_hi * h + ax.f0)) + (b0_lo * b0_hi * b0_hi + 2.0 * s * lk);
  const double t3 = 0.5 * (ax.e0 + ax.d1 + bb0_lo * (ax.g0 + ax.f1)) + 2.0 * (b0_lo * b0_hi * b1_hi + lk);
  return e_lo * (-e2 * t1 * h_special(1, k) - I * e2 * eps * t2 * h_special(2, k) +
                 e2 * e2 * t3 * h_special(3, k));
}

/// I + A^1 + A^2 (+ A^3), with the blocks kept for inspection.
struct StepOperator {
  Mat2 matrix = Mat2::Identity();
  Scheme scheme = Scheme::wkb2;
  Mat2 a1 = Mat2::Zero();
  Mat2 a2 = Mat2::Zero();
  Mat2 a3 = Mat2::Zero();
};

inline StepOperator assemble_step_operator(const StepContext& ctx, Scheme scheme) {
  const int order = scheme_order(scheme);
  const double eps = ctx.eps;
  StepOperator op;
  op.scheme = scheme;
  const cplx q1 = q1_term(ctx, order);
  const cplx q2 = q2_term(ctx, order);
  op.a1 << 0.0, eps * std::conj(q1), eps * q1, 0.0;
  op.a2 << eps * eps * q2, 0.0, 0.0, eps * eps * std::conj(q2);
  if (scheme == Scheme::wkb3) {
    const cplx q3 = q3_term(ctx);
    const double e3 = eps * eps * eps;
    op.a3 << 0.0, e3 * std::conj(q3), e3 * q3, 0.0;
  }
  op.matrix = Mat2::Identity() + op.a1 + op.a2 + op.a3;
  return op;
}

inline ZState advance(const ZState& z, const StepOperator& op) { return ZState(Vec2(op.matrix * z.v)); }

/// Z, U and the recovered wave at every grid node.
struct Trajectory {
  Scheme scheme = Scheme::wkb2;
  double eps = 0.0;
  PhaseTable phase;
  std::vector<ZState> z;
  std::vector<UState> u;
  std::vector<WaveValue> wave;

  [[nodiscard]] const std::vector<double>& grid() const { return phase.grid; }
};

struct SolveOptions {
  Scheme scheme = Scheme::wkb3;
  PhaseMode phase = PhaseMode::analytic();
};

/// Coefficients at all nodes and, for the third-order scheme, at all midpoints.
struct GridCoefficients {
  std::vector<NodeCoefficients> nodes;
  std::vector<MidCoefficients> mids;
};

inline GridCoefficients evaluate_grid(const CoefficientModel& model, double eps, const std::vector<double>& grid,
                                      Scheme scheme) {
  GridCoefficients g;
  const bool third = scheme == Scheme::wkb3;
  g.nodes.reserve(grid.size());
  for (double x : grid) g.nodes.push_back(evaluate_node(model, eps, x, chain_length(scheme), third));
  if (third) {
    g.mids.reserve(grid.size() - 1);
    for (std::size_t n = 0; n + 1 < grid.size(); ++n) {
      const auto m = evaluate_node(model, eps, 0.5 * (grid[n] + grid[n + 1]), 1, false);
      g.mids.push_back({m.b, m.chain[0], m.chain[1]});
    }
  }
  return g;
}

inline Trajectory solve_ivp(const CoefficientModel& model, double eps, int n_cells, Scheme scheme, cplx phi0, cplx phi1,
                            const PhaseMode& phase_mode = PhaseMode::analytic()) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (model.max_order() < required_derivatives(scheme)) {
    throw ConfigError(std::string(scheme_name(scheme)) + " needs " + std::to_string(required_derivatives(scheme)) +
                      " derivatives of a, model '" + model.name() + "' provides " +
                      std::to_string(model.max_order()));
  }
  Trajectory traj;
  traj.scheme = scheme;
  traj.eps = eps;
  traj.phase = build_phase_table(model, eps, n_cells, phase_mode);
  const auto& grid = traj.phase.grid;
  const auto coeffs = evaluate_grid(model, eps, grid, scheme);

  const auto n = static_cast<std::size_t>(n_cells);
  traj.z.resize(n + 1);
  traj.z[0] = z_from_u(u_initial(phi0, phi1, model, eps), 0.0, eps);
  for (std::size_t i = 0; i < n; ++i) {
    StepContext ctx;
    ctx.x_lo = grid[i];
    ctx.x_hi = grid[i + 1];
    ctx.s = traj.phase.increments[i];
    ctx.phi_lo = traj.phase.phi[i];
    ctx.eps = eps;
    ctx.lo = coeffs.nodes[i];
    ctx.hi = coeffs.nodes[i + 1];
    if (!coeffs.mids.empty()) ctx.mid = coeffs.mids[i];
    traj.z[i + 1] = advance(traj.z[i], assemble_step_operator(ctx, scheme));
  }
  traj.u.resize(n + 1);
  traj.wave.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    traj.u[i] = u_from_z(traj.z[i], traj.phase.phi[i], eps);
    traj.wave[i] = wave_from_u(traj.u[i], model, grid[i], eps);
  }
  return traj;
}

}  // namespace wkb
