#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ensctl/cli/config.hpp"
#include "ensctl/control.hpp"
#include "ensctl/gramian.hpp"
#include "ensctl/io/csv.hpp"

#ifndef ENSCTL_VERSION
#define ENSCTL_VERSION "0.0.0"
#endif

namespace ensctl::cli {

struct RunOptions {
  std::size_t jobs = 1;
  std::string config_path;
};

/// Result of one run: the exit status the CLI should return and the files
/// that were written.
struct RunOutcome {
  int exit_code = 0;
  std::string error;
  std::vector<std::string> files;
};

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::validation: return 1;
    case ErrorKind::numerical: return 2;
    case ErrorKind::io: return 3;
  }
  return 2;
}

/// One realization set with everything derived from it for a fixed target set.
struct Instance {
  RealizationSet set;
  std::vector<PreparedSystem> systems;
  PairGramians pairs;
  Cocg cocg;
  ManeuverVector beta;
  SpectrumSample spectrum;
};

namespace detail {

inline std::string join_nodes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <class T>
std::vector<T> sorted(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return v;
}

/// All k-subsets of `items` in lexicographic order, or `cap` distinct ones
/// drawn with a fixed seed when there are more than `cap`.
inline std::vector<std::vector<std::size_t>> subsets_of_size(const std::vector<std::size_t>& items, std::size_t k,
                                                             std::size_t cap) {
  std::vector<std::vector<std::size_t>> all;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  const std::size_t n = items.size();
  double count = 1;
  for (std::size_t i = 0; i < k; ++i) count = count * (n - i) / (i + 1);
  if (count <= static_cast<double>(cap)) {
    while (true) {
      std::vector<std::size_t> s;
      for (auto i : idx) s.push_back(items[i]);
      all.push_back(std::move(s));
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return all;
  }
  Rng rng(0x7a5e7ull * 1000003ull + k);
  std::set<std::vector<std::size_t>> seen;
  while (seen.size() < cap) {
    std::vector<std::size_t> pool = items;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform01() * (pool.size() - i));
      std::swap(pool[i], pool[std::min(j, pool.size() - 1)]);
    }
    std::vector<std::size_t> s(pool.begin(), pool.begin() + k);
    std::sort(s.begin(), s.end());
    seen.insert(std::move(s));
  }
  return {seen.begin(), seen.end()};
}

}  // namespace detail

class Runner {
 public:
  Runner(const Config& cfg, RunOptions opt)
      : cfg_(cfg), opt_(std::move(opt)), precision_(cfg.experiment.precision_bits) {}

  /// Runs the configured experiment and writes its outputs. Library errors
  /// are caught here and turned into an exit code plus a manifest marked
  /// partial.
  RunOutcome run() {
    RunOutcome out;
    const auto start = std::chrono::steady_clock::now();
    started_at_ = detail::utc_timestamp();
    try {
      std::filesystem::create_directories(cfg_.output.directory);
    } catch (const std::filesystem::filesystem_error& e) {
      out.exit_code = 3;
      out.error = "cannot create output directory " + cfg_.output.directory + ": " + e.what();
      return out;
    }
    try {
      dispatch();
    } catch (const Error& e) {
      out.exit_code = exit_code_for(e.kind());
      out.error = e.what();
    } catch (const std::exception& e) {
      out.exit_code = 2;
      out.error = e.what();
    }
    try {
      for (const auto& [name, table] : tables_) {
        const std::string path = (std::filesystem::path(cfg_.output.directory) / name).string();
        emit_csv(table, path);
        out.files.push_back(name);
      }
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_manifest(out, wall);
    } catch (const Error& e) {
      if (out.exit_code == 0) out.exit_code = exit_code_for(e.kind());
      if (out.error.empty()) out.error = e.what();
    }
    return out;
  }

  [[nodiscard]] const std::map<std::string, CsvTable>& tables() const noexcept { return tables_; }

 private:
  const PrecisionContext& ctx() const { return precision_.context(); }

  CsvTable& table(const std::string& name, std::vector<std::string> header) {
    auto it = tables_.find(name);
    if (it == tables_.end()) it = tables_.emplace(name, CsvTable(std::move(header))).first;
    return it->second;
  }

  CsvTable& results() {
    return table("results.csv", {"experiment", "seed", "N", "p", "targets", "b", "alpha", "mu0", "theta0_sq", "J",
                                 "E", "D", "D_over_Np"});
  }

  CsvTable& spectrum_table() {
    return table("spectrum.csv", {"experiment", "seed", "N", "p", "k", "mu", "theta_sq"});
  }

  void dispatch() {
    switch (cfg_.experiment.kind) {
      case ExperimentKind::sweep_nb:
      case ExperimentKind::spectrum: sweep(); break;
      case ExperimentKind::fit_assumptions: fit(); break;
      case ExperimentKind::constant_deviation: constant_deviation(); break;
      case ExperimentKind::target_sweep: target_sweep(); break;
      case ExperimentKind::verify_trajectory: verify_trajectory(); break;
    }
  }

  RealizationSet sample(std::uint64_t seed, std::size_t N, const Horizon& horizon) const {
    const auto& e = cfg_.ensemble;
    if (e.type == "nonlinear_demo") {
      return sample_linearized_realizations(demo_nonlinear_model(), N, seed, widen(e.guess), e.targets, widen(e.y_f),
                                            horizon, ctx());
    }
    EnsembleSpec spec = e.spec;
    spec.horizon = horizon;
    return sample_realizations(spec, N, seed, ctx());
  }

  Instance build(std::uint64_t seed, std::size_t N, const Horizon& horizon) {
    const auto t0 = std::chrono::steady_clock::now();
    Instance in{sample(seed, N, horizon), {}, {}, {}, {}, {}};
    in.systems = prepare_systems(in.set, ctx(), opt_.jobs);
    in.pairs = compute_pair_gramians(in.systems, in.set.horizon, ctx(), opt_.jobs);
    in.cocg = assemble_cocg_from_pairs(in.pairs, in.set.C, ctx());
    in.beta = compute_maneuvers(in.set, in.systems, ctx());
    in.spectrum = make_spectrum_sample(in.cocg, in.beta, seed);
    if (cfg_.output.dump_gramians) dump_gramian(in.cocg, seed);
    stage_seconds_.push_back(
        {seed, N, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    return in;
  }

  Instance build(std::uint64_t seed, std::size_t N) { return build(seed, N, make_horizon(cfg_.ensemble)); }

  void dump_gramian(const Cocg& cocg, std::uint64_t seed) {
    std::vector<std::string> header;
    for (std::size_t c = 0; c < cocg.size(); ++c) header.push_back("c" + std::to_string(c));
    CsvTable& t = table("gramian_seed" + std::to_string(seed) + "_N" + std::to_string(cocg.N) + ".csv", header);
    for (std::size_t r = 0; r < cocg.size(); ++r) {
      auto row = t.add_row();
      for (std::size_t c = 0; c < cocg.size(); ++c) row << cocg.matrix(r, c);
    }
  }

  void add_spectrum(const Instance& in, std::uint64_t seed) {
    CsvTable& t = spectrum_table();
    for (std::size_t k = 0; k < in.cocg.size(); ++k) {
      t.add_row() << cfg_.experiment.id << seed << in.cocg.N << in.cocg.p << k << in.cocg.eigenvalues[k]
                  << in.spectrum.theta_sq[k];
    }
  }

  void add_result(const Instance& in, std::uint64_t seed, const std::vector<std::size_t>& targets,
                  const ControlSolution& s) {
    const Real np = Real(in.cocg.size());
    results().add_row() << cfg_.experiment.id << seed << in.cocg.N << in.cocg.p << detail::join_nodes(targets) << s.b
                        << s.alpha << in.cocg.eigenvalues[0] << in.spectrum.theta_sq[0] << s.J << s.E << s.D
                        << s.D / np;
  }

  std::vector<Real> b_values() const {
    std::vector<Real> out;
    for (const auto& s : cfg_.experiment.b) out.emplace_back(s);
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::vector<std::size_t>& targets() const { return cfg_.ensemble.targets; }

  void sweep() {
    results();
    const auto bs = b_values();
    for (auto seed : detail::sorted(cfg_.experiment.seeds))
      for (auto N : detail::sorted(cfg_.experiment.N)) {
        const Instance in = build(seed, N);
        add_spectrum(in, seed);
        for (const auto& b : bs) add_result(in, seed, targets(), solve_control_for_b(in.cocg, in.beta, b, ctx()));
      }
  }

  void fit() {
    results();
    const auto bs = b_values();
    std::vector<SpectrumSample> samples;
    std::map<std::pair<std::size_t, std::size_t>, Costs> sums;  // (N, b index)
    for (auto seed : detail::sorted(cfg_.experiment.seeds))
      for (auto N : detail::sorted(cfg_.experiment.N)) {
        const Instance in = build(seed, N);
        add_spectrum(in, seed);
        samples.push_back(in.spectrum);
        for (std::size_t i = 0; i < bs.size(); ++i) {
          const auto s = solve_control_for_b(in.cocg, in.beta, bs[i], ctx());
          add_result(in, seed, targets(), s);
          auto& acc = sums[{N, i}];
          acc.J += s.J;
          acc.E += s.E;
          acc.D += s.D;
        }
      }
    const AssumptionFit f = fit_assumptions(samples, ctx());
    write_fit(f);
    if (bs.empty()) return;
    CsvTable& t = table("approx.csv", {"N", "p", "b", "J", "E", "D", "J_approx", "E_approx", "D_approx", "J_bound",
                                       "E_bound", "D_bound"});
    const Real seeds = Real(cfg_.experiment.seeds.size());
    for (auto N : detail::sorted(cfg_.experiment.N))
      for (std::size_t i = 0; i < bs.size(); ++i) {
        const Costs& m = sums[{N, i}];
        const Costs a = approx_costs(f, N, f.p, bs[i]);
        const Costs u = upper_bounds(f, N, f.p, bs[i]);
        t.add_row() << N << f.p << bs[i] << m.J / seeds << m.E / seeds << m.D / seeds << a.J << a.E << a.D << u.J
                    << u.E << u.D;
      }
  }

  void write_fit(const AssumptionFit& f) {
    CsvTable& t = table("fit.csv", {"quantity", "value", "r_squared", "points"});
    t.add_row() << "c1" << f.c1 << f.mu0_fit.r_squared << f.mu0_fit.points;
    t.add_row() << "c2" << f.c2 << f.theta0_fit.r_squared << f.theta0_fit.points;
    t.add_row() << "r1" << f.r1 << f.decay_fit.r_squared << f.decay_fit.points;
    t.add_row() << "r2" << f.r2 << f.theta_fit.r_squared << f.theta_fit.points;
    std::size_t floors = 0;
    for (const auto& fl : f.floors) floors += fl.floor_start.has_value();
    t.add_row() << "theta_c_sq" << f.theta_c_sq << "" << floors;
    t.add_row() << "floor_detected" << (f.floor_detected ? "true" : "false") << "" << f.floors.size();
    t.add_row() << "k_bar_at_N_max" << std::to_string(f.k_bar(f.N_max * f.p)) << "" << "";
    t.add_row() << "seeds" << std::to_string(f.seeds) << "" << "";
    t.add_row() << "N_min" << std::to_string(f.N_min) << "" << "";
    t.add_row() << "N_max" << std::to_string(f.N_max) << "" << "";
  }

  Real target_deviation() const { return Real(cfg_.experiment.target_deviation); }

  BisectionOptions bisection_options() const {
    BisectionOptions o;
    o.tol = Real(cfg_.experiment.tolerance);
    return o;
  }

  void constant_deviation() {
    results();
    for (auto seed : detail::sorted(cfg_.experiment.seeds))
      for (auto N : detail::sorted(cfg_.experiment.N)) {
        const Instance in = build(seed, N);
        add_spectrum(in, seed);
        const auto r = bisect_b_for_deviation(in.cocg.eigenvalues, in.spectrum.theta_sq, target_deviation(), ctx(),
                                              bisection_options());
        add_result(in, seed, targets(), solve_control_for_b(in.cocg, in.beta, r.b, ctx()));
      }
  }

  struct SubsetResult {
    bool ok = false;
    ControlSolution solution;
    Real mu0;
    Real theta0_sq;
  };

  void target_sweep() {
    results();
    CsvTable& summary = table("target_sweep.csv", {"N", "cardinality", "subsets", "failures", "mean_b",
                                                   "mean_D_over_Np", "geomean_E", "mean_J"});
    const auto& cand = cfg_.experiment.candidate_targets;
    std::vector<std::vector<std::size_t>> subsets;
    for (std::size_t q = 1; q <= cand.size(); ++q)
      for (auto& s : detail::subsets_of_size(detail::sorted(cand), q, cfg_.experiment.subset_cap))
        subsets.push_back(std::move(s));
    const Real target = target_deviation();
    const auto opts = bisection_options();
    for (auto N : detail::sorted(cfg_.experiment.N)) {
      std::map<std::size_t, std::vector<SubsetResult>> by_q;
      for (auto seed : detail::sorted(cfg_.experiment.seeds)) {
        const auto t0 = std::chrono::steady_clock::now();
        Instance base{sample(seed, N, make_horizon(cfg_.ensemble)), {}, {}, {}, {}, {}};
        base.systems = prepare_systems(base.set, ctx(), opt_.jobs);
        base.pairs = compute_pair_gramians(base.systems, base.set.horizon, ctx(), opt_.jobs);
        std::vector<SubsetResult> res(subsets.size());
        parallel_for(subsets.size(), opt_.jobs, [&](std::size_t i) {
          const RealizationSet sub =
              base.set.with_targets(subsets[i], RealVector(subsets[i].size(), Real(cfg_.experiment.target_y_f)));
          Instance in{sub, {}, {}, assemble_cocg_from_pairs(base.pairs, sub.C, ctx()),
                      compute_maneuvers(sub, base.systems, ctx()), {}};
          in.spectrum = make_spectrum_sample(in.cocg, in.beta, seed);
          try {
            const auto r = bisect_b_for_deviation(in.cocg.eigenvalues, in.spectrum.theta_sq, target, ctx(), opts);
            res[i] = {true, solve_control_for_b(in.cocg, in.beta, r.b, ctx()), in.cocg.eigenvalues[0],
                      in.spectrum.theta_sq[0]};
          } catch (const DeviationRangeError&) {
            res[i].ok = false;
          }
        });
        for (std::size_t i = 0; i < subsets.size(); ++i) {
          const std::size_t p = subsets[i].size();
          if (res[i].ok) {
            const auto& s = res[i].solution;
            results().add_row() << cfg_.experiment.id << seed << N << p << detail::join_nodes(subsets[i]) << s.b
                                << s.alpha << res[i].mu0 << res[i].theta0_sq << s.J << s.E << s.D
                                << s.D / Real(N * p);
          }
          by_q[p].push_back(std::move(res[i]));
        }
        stage_seconds_.push_back(
            {seed, N, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
      }
      for (const auto& [q, list] : by_q) {
        Real sb = 0, sd = 0, sj = 0, slog = 0;
        std::size_t ok = 0;
        for (const auto& r : list) {
          if (!r.ok) continue;
          ++ok;
          sb += r.solution.b;
          sd += r.solution.D / Real(N * q);
          sj += r.solution.J;
          slog += boost::multiprecision::log(r.solution.E);
        }
        auto row = summary.add_row();
        row << N << q << list.size() << (list.size() - ok);
        if (ok == 0) {
          row << "" << "" << "" << "";
        } else {
          const Real k = Real(ok);
          row << sb / k << sd / k << boost::multiprecision::exp(slog / k) << sj / k;
        }
      }
    }
  }

  void verify_trajectory() {
    results();
    CsvTable& t = table("trajectory.csv", {"experiment", "seed", "N", "b", "t_f", "E", "E_quadrature", "E_rel_error",
                                           "D", "D_simulated", "D_rel_error", "gamma_mismatch", "pass"});
    const Real limit("1e-6");
    std::string failures;
    for (auto seed : detail::sorted(cfg_.experiment.seeds))
      for (auto N : detail::sorted(cfg_.experiment.N)) {
        Horizon h = make_horizon(cfg_.ensemble);
        if (h.is_infinite()) h = Horizon::finite(trajectory_horizon(sample(seed, N, h), ctx()));
        const Instance in = build(seed, N, h);
        const TimeGrid grid{h.t_f(), cfg_.experiment.grid_intervals};
        for (const auto& b : b_values()) {
          const auto s = solve_control_for_b(in.cocg, in.beta, b, ctx());
          add_result(in, seed, targets(), s);
          const auto u = synthesize_input(in.set, s, grid, ctx());
          const auto sim = simulate_forward(in.set, u, s.accuracies);
          const Real eq = input_energy(u);
          auto rel = [](const Real& a, const Real& ref) {
            return ref == 0 ? boost::multiprecision::abs(a) : boost::multiprecision::abs(a - ref) / boost::multiprecision::abs(ref);
          };
          const Real e_err = rel(eq, s.E);
          const Real d_err = rel(sim.deviation, s.D);
          const bool pass = e_err <= limit && d_err <= limit && sim.gamma_mismatch <= limit;
          t.add_row() << cfg_.experiment.id << seed << N << b << h.t_f() << s.E << eq << e_err << s.D
                      << sim.deviation << d_err << sim.gamma_mismatch << pass;
          if (!pass) {
            failures += (failures.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) + " N " +
                        std::to_string(N) + " b " + to_string(b, 6);
          }
        }
      }
    if (!failures.empty()) throw NumericalError("trajectory verification failed for " + failures);
  }

  void write_manifest(const RunOutcome& out, double wall) const {
    json m;
    m["status"] = out.exit_code == 0 ? "complete" : "partial";
    m["exit_code"] = out.exit_code;
    m["error"] = out.error.empty() ? json() : json(out.error);
    m["experiment"] = cfg_.experiment.id;
    m["kind"] = kind_name(cfg_.experiment.kind);
    m["config_hash"] = config_hash(cfg_);
    if (!opt_.config_path.empty()) m["config_path"] = opt_.config_path;
    m["precision_bits"] = cfg_.experiment.precision_bits;
    m["software"] = {{"name", "ensctl"}, {"version", ENSCTL_VERSION}};
    m["jobs"] = opt_.jobs;
    m["started_at"] = started_at_;
    m["wall_seconds"] = wall;
    json stages = json::array();
    for (const auto& s : stage_seconds_) stages.push_back({{"seed", s.seed}, {"N", s.N}, {"seconds", s.seconds}});
    m["stage_seconds"] = stages;
    m["files"] = out.files;
    m["config"] = cfg_.document;
    write_text_file((std::filesystem::path(cfg_.output.directory) / "manifest.json").string(), m.dump(2) + "\n");
  }

  struct Stage {
    std::uint64_t seed;
    std::size_t N;
    double seconds;
  };

  const Config& cfg_;
  RunOptions opt_;
  ScopedPrecision precision_;
  std::map<std::string, CsvTable> tables_;
  std::vector<Stage> stage_seconds_;
  std::string started_at_;
};

/// Validated config in, files out. Errors raised before any computation
/// (bad config) never reach this point, so no files exist for them.
inline RunOutcome run_experiment(const Config& cfg, const RunOptions& opt = {}) {
  Runner r(cfg, opt);
  return r.run();
}

}  // namespace ensctl::cli
