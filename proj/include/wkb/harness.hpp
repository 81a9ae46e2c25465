#pragma once

// Convergence studies: sweeps over (scheme, eps, N), error norms against the
// reference oracle, order estimates, and CSV / plot-script output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wkb/coeffs.hpp"
#include "wkb/errors.hpp"
#include "wkb/oracle.hpp"
#include "wkb/phase.hpp"
#include "wkb/stepper.hpp"

namespace wkb {

/// Vector norm on C^2 used for the nodewise errors.
enum class Norm { max, euclidean };

inline Norm parse_norm(std::string_view s) {
  if (s == "max" || s == "inf") return Norm::max;
  if (s == "euclidean" || s == "2") return Norm::euclidean;
  throw ConfigError("unknown norm '" + std::string(s) + "' (expected max or euclidean)");
}

inline double vector_norm(const Vec2& v, Norm n) { return n == Norm::max ? v.cwiseAbs().maxCoeff() : v.norm(); }

struct StudyConfig {
  std::string problem = "affine-squared";
  std::vector<Scheme> schemes{Scheme::wkb3, Scheme::wkb2};
  // Three decades: resolved, intermediate, round-off dominated.
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
  std::vector<int> n_list{16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  PhaseMode phase = PhaseMode::analytic();
  cplx phi0{1.0, 0.0};
  cplx phi1{0.0, 1.0};
  Norm norm = Norm::max;
  std::string out = "convergence.csv";
  double oracle_tol = 1e-14;
  std::size_t oracle_max_steps = 20'000'000;
  bool cross_validate = true;
  bool work_precision = false;
  unsigned workers = 0;  // 0: hardware concurrency

  void validate() const {
    if (schemes.empty()) throw ConfigError("scheme list is empty");
    if (epsilons.empty()) throw ConfigError("eps list is empty");
    if (n_list.empty()) throw ConfigError("N list is empty");
    for (double e : epsilons) {
      if (!(e > 0.0 && e <= 1.0)) throw ConfigError("eps values must lie in (0, 1]");
    }
    const int finest = *std::max_element(n_list.begin(), n_list.end());
    for (int n : n_list) {
      if (n < 2) throw ConfigError("N values must be at least 2");
      if (finest % n != 0) {
        throw ConfigError("N list is not nested: " + std::to_string(n) + " does not divide " + std::to_string(finest));
      }
    }
    if (!(oracle_tol >= 1e-16)) throw ConfigError("oracle tolerance must be at least 1e-16");
  }
};

struct ConvergenceRecord {
  Scheme scheme = Scheme::wkb3;
  double epsilon = 0.0;
  double h = 0.0;
  double err_u = 0.0;
  double err_z = 0.0;
  double wall_time = 0.0;
  std::optional<double> observed_order;  // pairwise slope of err_u against the previous h
};

enum class ErrorKind { u, z };

inline double record_error(const ConvergenceRecord& r, ErrorKind k) { return k == ErrorKind::u ? r.err_u : r.err_z; }

/// Nodewise L-infinity errors of a trajectory against a reference on a grid
/// that is `stride` times finer.
inline std::pair<double, double> trajectory_errors(const Trajectory& t, const ReferenceSolution& ref, std::size_t stride,
                                                   Norm norm) {
  double eu = 0.0;
  double ez = 0.0;
  for (std::size_t i = 0; i < t.z.size(); ++i) {
    eu = std::max(eu, vector_norm(t.u[i].v - ref.u[i * stride].v, norm));
    ez = std::max(ez, vector_norm(t.z[i].v - ref.z[i * stride].v, norm));
  }
  return {eu, ez};
}

namespace detail {

/// Runs jobs 0..count-1 on a bounded pool; the first exception is rethrown.
template <class Job>
void run_pool(std::size_t count, unsigned workers, Job job) {
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Fills observed_order in canonical order: groups by (scheme, eps), h decreasing.
inline void fill_observed_orders(std::vector<ConvergenceRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].observed_order.reset();
    if (i == 0) continue;
    const auto& prev = records[i - 1];
    auto& cur = records[i];
    if (prev.scheme != cur.scheme || prev.epsilon != cur.epsilon) continue;
    const double slope = std::log(prev.err_u / cur.err_u) / std::log(prev.h / cur.h);
    if (std::isfinite(slope)) cur.observed_order = slope;
  }
}

/// One record per (scheme, eps, N). The reference is computed once per eps on
/// the finest grid and restricted to the coarser (nested) grids.
inline std::vector<ConvergenceRecord> run_study(const StudyConfig& config) {
  config.validate();
  const auto model = make_problem(config.problem);
  const int finest = *std::max_element(config.n_list.begin(), config.n_list.end());

  std::vector<ReferenceSolution> refs(config.epsilons.size());
  ReferenceOptions ref_opt;
  ref_opt.oracle.tol = config.oracle_tol;
  ref_opt.oracle.max_steps = config.oracle_max_steps;
  ref_opt.cross_validate = config.cross_validate;
  detail::run_pool(config.epsilons.size(), config.workers, [&](std::size_t i) {
    refs[i] = reference_solution(model, config.epsilons[i], finest, config.phi0, config.phi1, config.phase, ref_opt);
  });

  std::vector<int> ns = config.n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<double> eps_sorted = config.epsilons;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());
  eps_sorted.erase(std::unique(eps_sorted.begin(), eps_sorted.end()), eps_sorted.end());

  struct Job {
    Scheme scheme;
    std::size_t eps_index;
    int n;
  };
  std::vector<Job> jobs;
  for (Scheme s : config.schemes) {
    for (double e : eps_sorted) {
      const auto ei = static_cast<std::size_t>(
          std::find(config.epsilons.begin(), config.epsilons.end(), e) - config.epsilons.begin());
      for (int n : ns) jobs.push_back({s, ei, n});
    }
  }
  std::vector<ConvergenceRecord> records(jobs.size());
  detail::run_pool(jobs.size(), config.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const double eps = config.epsilons[job.eps_index];
    const auto start = std::chrono::steady_clock::now();
    const auto traj = solve_ivp(model, eps, job.n, job.scheme, config.phi0, config.phi1, config.phase);
    const auto stop = std::chrono::steady_clock::now();
    const auto [eu, ez] =
        trajectory_errors(traj, refs[job.eps_index], static_cast<std::size_t>(finest / job.n), config.norm);
    auto& r = records[i];
    r.scheme = job.scheme;
    r.epsilon = eps;
    r.h = 1.0 / job.n;
    r.err_u = eu;
    r.err_z = ez;
    r.wall_time = std::chrono::duration<double>(stop - start).count();
  });
  fill_observed_orders(records);
  return records;
}

class EstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares slope of log(err) against log(h) over records whose error
/// lies in (lo, hi); at least three usable points are required.
inline double estimate_order(const std::vector<ConvergenceRecord>& group, ErrorKind kind = ErrorKind::u,
                             double lo = 1e-12, double hi = 1e-2) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : group) {
    const double e = record_error(r, kind);
    if (e > lo && e < hi) pts.emplace_back(std::log(r.h), std::log(e));
  }
  if (pts.size() < 3) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "order estimate needs at least 3 errors in (%g, %g), found %zu", lo, hi, pts.size());
    throw EstimateError(buf);
  }
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxy / sxx;
}

/// Records of one (scheme, eps) group, in study order.
inline std::vector<ConvergenceRecord> select_group(const std::vector<ConvergenceRecord>& records, Scheme scheme,
                                                   double eps) {
  std::vector<ConvergenceRecord> out;
  for (const auto& r : records) {
    if (r.scheme == scheme && r.epsilon == eps) out.push_back(r);
  }
  return out;
}

namespace detail {

inline std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

/// RFC 4180: quote fields containing separators, quotes or line breaks.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace detail

inline constexpr const char* kCsvHeader = "scheme,epsilon,h,err_U_Linf,err_Z_Linf,wall_time_s,observed_order";

inline std::string format_csv(const std::vector<ConvergenceRecord>& records) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << detail::csv_field(std::string(scheme_name(r.scheme))) << ',' << detail::sci(r.epsilon) << ','
       << detail::sci(r.h) << ',' << detail::sci(r.err_u) << ',' << detail::sci(r.err_z) << ','
       << detail::sci(r.wall_time) << ',' << (r.observed_order ? detail::sci(*r.observed_order) : std::string()) << '\n';
  }
  return os.str();
}

/// Matplotlib script: log-log err_U against h, one panel per scheme (WKB3
/// left), one curve per eps. With work_precision a second figure plots error
/// against wall time.
inline std::string format_plot_script(const std::string& csv_name, bool work_precision) {
  std::ostringstream os;
  os << R"(#!/usr/bin/env python3
# Generated by wkbsolve converge. Usage: python3 <this file> [output.png]
import csv
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV = os.path.join(HERE, ")"
     << csv_name << R"(")
OUT = sys.argv[1] if len(sys.argv) > 1 else os.path.splitext(CSV)[0] + ".png"

curves = defaultdict(lambda: defaultdict(list))
with open(CSV, newline="") as fh:
    for row in csv.DictReader(fh):
        curves[row["scheme"]][float(row["epsilon"])].append(
            (float(row["h"]), float(row["err_U_Linf"]), float(row["wall_time_s"])))

panels = [s for s in ("wkb3", "wkb2") if s in curves]
fig, axes = plt.subplots(1, len(panels), figsize=(6 * len(panels), 4.5), squeeze=False)
for ax, scheme in zip(axes[0], panels):
    for eps in sorted(curves[scheme], reverse=True):
        pts = sorted(curves[scheme][eps])
        ax.loglog([p[0] for p in pts], [max(p[1], 1e-17) for p in pts], "o-", label="eps = %g" % eps)
    ax.set_title(scheme.upper())
    ax.set_xlabel("h")
    ax.set_ylabel("L-inf error of U")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig(OUT, dpi=150)
print("wrote", OUT)
)";
  if (work_precision) {
    os << R"(
fig, ax = plt.subplots(figsize=(6, 4.5))
for scheme in panels:
    for eps in sorted(curves[scheme], reverse=True):
        pts = sorted(curves[scheme][eps], key=lambda p: p[2])
        ax.loglog([p[2] for p in pts], [max(p[1], 1e-17) for p in pts], "o-", label="%s, eps = %g" % (scheme, eps))
ax.set_xlabel("wall time [s]")
ax.set_ylabel("L-inf error of U")
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize="small")
fig.tight_layout()
WP = os.path.splitext(OUT)[0] + "_work_precision.png"
fig.savefig(WP, dpi=150)
print("wrote", WP)
)";
  }
  return os.str();
}

/// Path of the plot script that accompanies a CSV file.
inline std::filesystem::path plot_script_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension();
  p += "_plot.py";
  return p;
}

/// Writes the CSV and its plot script; returns the script path.
inline std::filesystem::path emit_outputs(const std::vector<ConvergenceRecord>& records,
                                          const std::filesystem::path& csv_path, bool work_precision = false) {
  const auto script = plot_script_path(csv_path);
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + csv_path.string());
    f << format_csv(records);
    if (!f) throw std::runtime_error("write failed for " + csv_path.string());
  }
  {
    std::ofstream f(script, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + script.string());
    f << format_plot_script(csv_path.filename().string(), work_precision);
    if (!f) throw std::runtime_error("write failed for " + script.string());
  }
  return script;
}

}  // namespace wkb
