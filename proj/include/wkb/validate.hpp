#pragma once

// Formula-vs-oracle checks behind `wkbsolve validate`.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "wkb/coeffs.hpp"
#include "wkb/oracle.hpp"
#include "wkb/phase.hpp"
#include "wkb/stepper.hpp"
#include "wkb/transform.hpp"

namespace wkb {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Local defects of one step operator against the Picard matrices and the
/// exact transfer matrix on the cells [x0, x0 + 2^-j].
struct LocalDefects {
  std::vector<double> h;
  std::array<std::vector<double>, 3> picard;  // ||A^p - eps^p M_p||
  std::vector<double> transfer;               // ||I + sum A^p - T||
  double route_gap = 0.0;                     // max ||M_p(quadrature) - M_p(ODE)||
};

inline LocalDefects local_defects(const CoefficientModel& model, double eps, Scheme scheme, double x0, int j_lo,
                                  int j_hi, const OracleOptions& opt = {}) {
  LocalDefects d;
  const int p_max = scheme_order(scheme);
  const double phi_lo = x0 > 0.0 ? phase_increment(model, eps, 0.0, x0) : 0.0;
  const OscillatoryMatrixFn n(model, PhaseAccessor(model, eps, PhaseMode::analytic()));
  for (int j = j_lo; j <= j_hi; ++j) {
    const double h = std::ldexp(1.0, -j);
    const double s = phase_increment(model, eps, x0, x0 + h);
    const auto op = assemble_step_operator(make_step_context(model, eps, x0, x0 + h, phi_lo, s, scheme), scheme);
    const auto ma = picard_series(p_max, x0, x0 + h, n, opt, PicardRoute::nested_quadrature);
    const auto mb = picard_series(p_max, x0, x0 + h, n, opt, PicardRoute::ode_system);
    const std::array<const Mat2*, 3> a{&op.a1, &op.a2, &op.a3};
    d.h.push_back(h);
    for (int p = 0; p < p_max; ++p) {
      const auto k = static_cast<std::size_t>(p);
      d.picard[k].push_back((*a[k] - std::pow(eps, p + 1) * ma[k]).norm());
      d.route_gap = std::max(d.route_gap, (ma[k] - mb[k]).norm());
    }
    d.transfer.push_back((op.matrix - flow_transfer(x0, x0 + h, n, opt)).norm());
  }
  return d;
}

/// h_p(x) from its defining series in 50-digit arithmetic.
inline cplx h_special_reference(int p, double x) {
  using big = boost::multiprecision::cpp_bin_float_50;
  big re = 0, im = 0;
  big tr = 1, ti = 0;  // (ix)^k / k!
  const big bx = x;
  for (int k = 1; k < 400; ++k) {
    // multiply by i x / k
    const big nr = -ti * bx / k;
    const big ni = tr * bx / k;
    tr = nr;
    ti = ni;
    if (k >= p) {
      re += tr;
      im += ti;
    }
    if (k > 2 * std::abs(x) + 10 && abs(tr) + abs(ti) < big("1e-60")) break;
  }
  return {static_cast<double>(re), static_cast<double>(im)};
}

/// The checks run by `wkbsolve validate` for one problem and eps; the local
/// defects are measured on cells [x0, x0 + 2^-j], j = 4..8.
inline std::vector<CheckResult> run_validation(const CoefficientModel& model, double eps, double x0 = 0.0) {
  if (!(x0 >= 0.0 && x0 + 0.0625 <= 1.0)) throw ConfigError("validation cells need x0 in [0, 0.9375]");
  std::vector<CheckResult> out;
  auto add = [&out](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return std::string(buf);
  };

  // h_p kernels.
  double worst_h = 0.0;
  for (int p = 1; p <= 3; ++p) {
    for (int i = 0; i <= 100; ++i) {
      const double x = std::pow(10.0, -9.0 + i * (std::log10(20.0) + 9.0) / 100.0);
      const cplx ref = h_special_reference(p, x);
      worst_h = std::max(worst_h, std::abs(h_special(p, x) - ref) / std::abs(ref));
    }
  }
  add("h_p kernels vs 50-digit series", worst_h <= 1e-13, "max rel err " + fmt(worst_h));

  // Transform round trip.
  double worst_rt = 0.0;
  for (int i = 0; i < 64; ++i) {
    const UState u(cplx(std::cos(i), std::sin(3.0 * i)), cplx(0.5 - std::sin(i), std::cos(7.0 * i)));
    const double phase = 0.37 * i;
    const UState back = u_from_z(z_from_u(u, phase, eps), phase, eps);
    worst_rt = std::max(worst_rt, (back.v - u.v).norm() / u.v.norm());
  }
  add("U -> Z -> U round trip", worst_rt <= 1e-14, "max rel err " + fmt(worst_rt));

  // Phase: closed form (if any) against Gauss-Legendre.
  if (model.has_analytic_phase()) {
    const auto a = build_phase_table(model, eps, 256, PhaseMode::analytic());
    const auto g = build_phase_table(model, eps, 256, PhaseMode::quadrature(6));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.phi.size(); ++i) worst = std::max(worst, std::abs(a.phi[i] - g.phi[i]));
    add("phase: closed form vs 6-point Gauss-Legendre", worst <= 1e-13, "max diff " + fmt(worst));
  }

  // Step operators against the Picard oracle and the flow.
  for (Scheme scheme : {Scheme::wkb2, Scheme::wkb3}) {
    if (model.max_order() < required_derivatives(scheme)) continue;
    OracleOptions opt;
    opt.tol = 1e-15;
    const auto d = local_defects(model, eps, scheme, x0, 4, 8, opt);
    add(std::string(scheme_name(scheme)) + ": Picard routes agree", d.route_gap <= 1e-12,
        "max gap " + fmt(d.route_gap));
    // Local order P + 1, with the same 0.3 slack for both schemes.
    const double expect = scheme_order(scheme) + 1.0 - 0.3;
    for (int p = 0; p < scheme_order(scheme); ++p) {
      const auto& e = d.picard[static_cast<std::size_t>(p)];
      if (*std::max_element(e.begin(), e.end()) < 1e-13) {
        add(std::string(scheme_name(scheme)) + ": A^" + std::to_string(p + 1) + " vs Picard", true, "exact");
        continue;
      }
      const double slope = loglog_slope(d.h, e);
      add(std::string(scheme_name(scheme)) + ": A^" + std::to_string(p + 1) + " vs Picard", slope >= 2.0,
          "slope " + fmt(slope));
    }
    if (*std::max_element(d.transfer.begin(), d.transfer.end()) < 1e-13) {
      add(std::string(scheme_name(scheme)) + ": step operator vs flow", true, "exact");
    } else {
      const double slope = loglog_slope(d.h, d.transfer);
      add(std::string(scheme_name(scheme)) + ": step operator vs flow", slope >= expect,
          "slope " + fmt(slope) + " (need >= " + fmt(expect) + ")");
    }
  }
  return out;
}

}  // namespace wkb
