// wkbsolve: single runs, convergence sweeps and oracle checks for the
// WKB-marching schemes on eps^2 w'' + a(x) w = 0, x in [0,1].

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wkb/harness.hpp"
#include "wkb/validate.hpp"

namespace {

using wkb::cplx;

// Accepts "1", "-0.5", "i", "-2i", "1+2i", "0.5-1e-3i" and "(re,im)".
cplx parse_complex(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (c != ' ') s += c;
  }
  auto fail = [&text]() -> cplx { throw wkb::ConfigError("bad complex number '" + text + "'"); };
  if (s.empty()) return fail();
  if (s.front() == '(' && s.back() == ')') {
    const auto comma = s.find(',');
    if (comma == std::string::npos) return fail();
    try {
      std::size_t a = 0, b = 0;
      const std::string re = s.substr(1, comma - 1), im = s.substr(comma + 1, s.size() - comma - 2);
      const double r = std::stod(re, &a), i = std::stod(im, &b);
      if (a != re.size() || b != im.size()) return fail();
      return {r, i};
    } catch (const std::logic_error&) {
      return fail();
    }
  }
  auto real_part = [&](const std::string& t) -> double {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::logic_error&) {
      fail();
    }
    if (used != t.size()) fail();
    return v;
  };
  if (s.back() != 'i') return {real_part(s), 0.0};
  // Split before the last sign that is not part of an exponent.
  std::size_t split = 0;
  for (std::size_t k = s.size() - 1; k > 0; --k) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  const std::string im = s.substr(split, s.size() - split - 1);
  const double re = split == 0 ? 0.0 : real_part(s.substr(0, split));
  return {re, real_part(im)};
}

std::string format_complex(cplx z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.15e %c %.15ei", z.real(), z.imag() < 0 ? '-' : '+', std::abs(z.imag()));
  return buf;
}

struct Options {
  std::string problem = "affine-squared";
  std::vector<std::string> schemes;
  std::vector<double> eps;
  std::vector<int> n_list;
  std::string phase = "analytic";
  std::string norm = "max";
  std::string out = "convergence.csv";
  std::string phi0 = "1";
  std::string phi1 = "i";
  double tol = 1e-14;
  std::size_t max_steps = 20'000'000;
  unsigned threads = 0;
  bool work_precision = false;
  bool no_cross_validate = false;
  bool no_oracle = false;
  double x0 = 0.0;
};

wkb::StudyConfig study_config(const Options& o) {
  wkb::StudyConfig c;
  c.problem = o.problem;
  if (!o.schemes.empty()) {
    c.schemes.clear();
    for (const auto& s : o.schemes) c.schemes.push_back(wkb::parse_scheme(s));
  }
  if (!o.eps.empty()) c.epsilons = o.eps;
  if (!o.n_list.empty()) c.n_list = o.n_list;
  c.phase = wkb::PhaseMode::parse(o.phase);
  c.norm = wkb::parse_norm(o.norm);
  c.out = o.out;
  c.phi0 = parse_complex(o.phi0);
  c.phi1 = parse_complex(o.phi1);
  c.oracle_tol = o.tol;
  c.oracle_max_steps = o.max_steps;
  c.cross_validate = !o.no_cross_validate;
  c.work_precision = o.work_precision;
  c.workers = o.threads;
  c.validate();
  return c;
}

int run_solve(const Options& o) {
  auto c = study_config(o);
  const auto model = wkb::make_problem(c.problem);
  const wkb::Scheme scheme = c.schemes.front();
  const double eps = c.epsilons.front();
  const int n = c.n_list.front();
  const auto traj = wkb::solve_ivp(model, eps, n, scheme, c.phi0, c.phi1, c.phase);
  std::cout << "problem  " << model.name() << "\nscheme   " << wkb::scheme_name(scheme) << "\neps      " << eps
            << "\nN        " << n << "\nphase    " << c.phase.to_string() << '\n';
  std::cout << "U(1)     " << format_complex(traj.u.back()[0]) << "\n         " << format_complex(traj.u.back()[1])
            << '\n';
  std::cout << "w(1)     " << format_complex(traj.wave.back().w) << "\neps w'(1) "
            << format_complex(traj.wave.back().eps_w_prime) << '\n';
  if (!o.no_oracle) {
    wkb::ReferenceOptions ro;
    ro.oracle.tol = c.oracle_tol;
    ro.oracle.max_steps = c.oracle_max_steps;
    ro.cross_validate = c.cross_validate;
    const auto ref = wkb::reference_solution(model, eps, n, c.phi0, c.phi1, c.phase, ro);
    const auto [eu, ez] = wkb::trajectory_errors(traj, ref, 1, c.norm);
    std::printf("err_U    %.6e\nerr_Z    %.6e\n", eu, ez);
  }
  return 0;
}

int run_converge(const Options& o) {
  const auto c = study_config(o);
  const auto records = wkb::run_study(c);
  const auto script = wkb::emit_outputs(records, c.out, c.work_precision);
  std::cout << "wrote " << c.out << " (" << records.size() << " rows) and " << script.string() << '\n';
  for (wkb::Scheme s : c.schemes) {
    for (double e : c.epsilons) {
      const auto group = wkb::select_group(records, s, e);
      try {
        std::printf("%s eps=%-8g fitted order %.3f\n", std::string(wkb::scheme_name(s)).c_str(), e,
                    wkb::estimate_order(group, wkb::ErrorKind::u));
      } catch (const wkb::EstimateError&) {
        std::printf("%s eps=%-8g fitted order n/a (fewer than 3 errors in the fit window)\n",
                    std::string(wkb::scheme_name(s)).c_str(), e);
      }
    }
  }
  return 0;
}

int run_validate(const Options& o) {
  const auto model = wkb::make_problem(o.problem);
  const double eps = o.eps.empty() ? 0.1 : o.eps.front();
  if (!(eps > 0.0 && eps <= 1.0)) throw wkb::ConfigError("eps must lie in (0, 1]");
  const auto results = wkb::run_validation(model, eps, o.x0);
  bool ok = true;
  std::printf("%-48s %-6s %s\n", "check", "result", "detail");
  for (const auto& r : results) {
    std::printf("%-48s %-6s %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? 0 : static_cast<int>(wkb::ExitCode::oracle_failure);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WKB-marching solver for eps^2 w'' + a(x) w = 0 on [0,1]"};
  app.set_config("--config", "", "TOML/INI file with option values (keys are long option names)");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--problem", o.problem, "affine-squared | constant | constant(a0) | expr:<a(x)>")
      ->capture_default_str();
  app.add_option("--scheme", o.schemes, "wkb2 and/or wkb3 (solve uses the first)")->delimiter(',');
  app.add_option("--eps", o.eps, "eps values (solve uses the first)")->delimiter(',');
  app.add_option("--n-list", o.n_list, "cell counts N, nested powers of two (solve uses the first)")->delimiter(',');
  app.add_option("--phase", o.phase, "analytic | gl:<nodes>")->capture_default_str();
  app.add_option("--norm", o.norm, "max | euclidean")->capture_default_str();
  app.add_option("--out", o.out, "CSV output path (converge)")->capture_default_str();
  app.add_option("--phi0", o.phi0, "w(0)")->capture_default_str();
  app.add_option("--phi1", o.phi1, "eps w'(0)")->capture_default_str();
  app.add_option("--tol", o.tol, "oracle tolerance")->capture_default_str();
  app.add_option("--max-steps", o.max_steps, "oracle integrator step budget per cell")->capture_default_str();
  app.add_option("--threads", o.threads, "worker threads, 0 = all cores")->capture_default_str();
  app.add_flag("--work-precision", o.work_precision, "also plot error against wall time");
  app.add_flag("--no-cross-validate", o.no_cross_validate, "skip the refined-WKB3 check of the reference");
  app.add_option("--x0", o.x0, "validate: left end of the test cells")->capture_default_str();
  app.add_flag("--no-oracle", o.no_oracle, "solve: skip the reference computation");

  auto* solve = app.add_subcommand("solve", "single run; prints U, w at x = 1 and the error against the oracle");
  auto* converge = app.add_subcommand("converge", "sweep (scheme, eps, N); writes CSV and a plot script");
  auto* validate = app.add_subcommand("validate", "formula-vs-oracle checks, printed as a pass/fail table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(wkb::ExitCode::invalid_config);
  }

  try {
    if (solve->parsed()) return run_solve(o);
    if (converge->parsed()) return run_converge(o);
    if (validate->parsed()) return run_validate(o);
  } catch (const wkb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
