#include "aggrex/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "aggrex/chain.hpp"
#include "aggrex/errors.hpp"
#include "aggrex/experiments.hpp"
#include "aggrex/kernels.hpp"
#include "aggrex/svd.hpp"

namespace aggrex {

using nlohmann::json;

void apply_thread_cap(int threads) {
#ifdef _OPENMP
  if (threads > 0) {
    omp_set_num_threads(threads);
    return;
  }
  if (const char* env = std::getenv("AGGREX_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) omp_set_num_threads(parsed);
  }
#else
  (void)threads;
#endif
}

namespace {

// Collects per-run metadata; written last so it can checksum every artifact.
class Manifest {
 public:
  Manifest(const std::string& subcommand, const CliOptions& opts)
      : start_(std::chrono::steady_clock::now()) {
    j_["subcommand"] = subcommand;
    j_["config"] = opts.config_path.empty() ? "<defaults>" : opts.config_path;
    j_["out_dir"] = opts.out_dir;
    j_["threads"] = opts.threads;
  }

  void set_seed(std::uint64_t seed) { j_["seed"] = seed; }

  void set_resolved(const KeyValueConfig& cfg) {
    json r = json::object();
    for (const auto& [key, value] : cfg.resolved()) r[key] = value;
    j_["config_resolved"] = r;
  }

  void add_input(const fs::path& path) {
    j_["inputs"][path.string()] = checksum_hex(path);
  }

  void add_output(const fs::path& path) {
    j_["outputs"][path.string()] = checksum_hex(path);
  }

  void write(const fs::path& out_dir) {
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start_;
    j_["wall_clock_seconds"] = elapsed.count();
    std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write manifest under " + out_dir.string());
    out << j_.dump(2) << '\n';
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

fs::path ensure_out_dir(const CliOptions& opts) {
  fs::path dir(opts.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string());
  return dir;
}

KeyValueConfig load_config(const CliOptions& opts) {
  if (opts.config_path.empty()) return KeyValueConfig::from_string("", "<defaults>");
  return KeyValueConfig::from_file(opts.config_path);
}

std::uint64_t resolve_seed(const CliOptions& opts, KeyValueConfig& cfg) {
  const std::uint64_t from_cfg = cfg.get_u64("seed", 0);
  return opts.seed_set ? opts.seed : from_cfg;
}

EmpiricalChain load_chain(KeyValueConfig& cfg, Manifest& manifest) {
  const fs::path p_path = cfg.require_string("transition");
  const fs::path xi_path = cfg.require_string("stationary");
  manifest.add_input(p_path);
  manifest.add_input(xi_path);
  EmpiricalChain chain;
  chain.P = read_matrix_csv(p_path);
  chain.xi = read_vector_csv(xi_path);
  if (chain.P.rows() != chain.P.cols())
    throw InputError("transition matrix must be square: " + p_path.string());
  if (chain.xi.size() != chain.P.rows())
    throw InputError("stationary vector length does not match the transition matrix");
  if (!all_finite(chain.P) || !all_finite(chain.xi))
    throw InputError("chain files contain non-finite values");
  chain.d = chain.P.rows();
  return chain;
}

double resolve_lambda(KeyValueConfig& cfg, const EmpiricalChain& chain, double raw) {
  if (!cfg.get_bool("lambda_relative", false)) return raw;
  const double wn = weighted_frobenius(chain.P, chain.xi);
  return raw * wn * wn;
}

SolverConfig solver_config_from(KeyValueConfig& cfg, double lambda,
                                std::uint64_t seed) {
  SolverConfig scfg;
  scfg.lambda = lambda;
  scfg.eps0 = cfg.get_double("eps0", scfg.eps0);
  scfg.eps = cfg.get_double("eps", scfg.eps);
  scfg.local_window = cfg.get_size("local_window", scfg.local_window);
  scfg.local_tol = cfg.get_double("local_tol", scfg.local_tol);
  scfg.max_inner_iters = cfg.get_size("max_inner_iters", scfg.max_inner_iters);
  scfg.seed = seed;
  const std::string policy = cfg.get_string("step_policy", "lipschitz");
  if (policy == "lipschitz") {
    LipschitzPolicy lp;
    lp.gamma1 = cfg.get_double("gamma1", lp.gamma1);
    lp.gamma2 = cfg.get_double("gamma2", lp.gamma2);
    scfg.policy = lp;
  } else if (policy == "bb") {
    BbPolicy bp;
    bp.delta = cfg.get_double("delta", bp.delta);
    bp.eta = cfg.get_double("eta", bp.eta);
    scfg.policy = bp;
  } else {
    throw ConfigError("step_policy must be 'lipschitz' or 'bb', got '" + policy + "'");
  }
  return scfg;
}

RankAdaptConfig rank_config_from(KeyValueConfig& cfg, const std::string& default_rule) {
  RankAdaptConfig rcfg;
  const std::string rule = cfg.get_string("stopping_rule", default_rule);
  if (rule == "exact") {
    ExactRule ex;
    ex.eps_exa = cfg.get_double("eps_exa", ex.eps_exa);
    rcfg.rule = ex;
  } else if (rule == "early") {
    EarlyRule early;
    early.num_tests = cfg.get_size("num_tests", early.num_tests);
    rcfg.rule = early;
  } else {
    throw ConfigError("stopping_rule must be 'exact' or 'early', got '" + rule + "'");
  }
  rcfg.restarts_omega = cfg.get_size("restarts_omega", rcfg.restarts_omega);
  rcfg.kappa_min = cfg.get_double("kappa_min", rcfg.kappa_min);
  rcfg.append_decrease = cfg.get_double("append_decrease", rcfg.append_decrease);
  rcfg.max_outer = cfg.get_size("max_outer", rcfg.max_outer);
  return rcfg;
}

json diagnostics_to_json(const DiagnosticsRecord& rec) {
  json d;
  d["relLE1"] = rec.relLE1;
  d["relLE2"] = rec.relLE2;
  d["GE"] = rec.GE;
  d["GE_note"] = "certified from below";
  d["relDG"] = rec.relDG;
  if (rec.relRE) d["relRE"] = *rec.relRE;
  if (rec.relSE) d["relSE"] = *rec.relSE;
  if (rec.sigma1) d["sigma1"] = *rec.sigma1;
  if (rec.sigma_r) d["sigma_r"] = *rec.sigma_r;
  if (rec.sigma_r1) d["sigma_r_plus_1"] = *rec.sigma_r1;
  d["zero_weight_states"] = rec.zero_weight_states;
  d["denom_zero"] = rec.denom_zero;
  return d;
}

json events_to_json(const std::vector<SolveEvent>& events) {
  json arr = json::array();
  for (const SolveEvent& ev : events) {
    json e;
    if (const auto* p = std::get_if<PalmEvent>(&ev)) {
      e["type"] = "palm";
      e["iters"] = p->iters;
      e["s_after"] = p->s_after;
      e["F_after"] = p->F_after;
      e["hit_max"] = p->hit_max;
    } else if (const auto* c = std::get_if<CompressEvent>(&ev)) {
      e["type"] = "compress";
      e["s_before"] = c->s_before;
      e["s_after"] = c->s_after;
      e["delta_norm"] = c->delta_norm;
      e["F_after"] = c->F_after;
      e["warned"] = c->warned;
    } else if (const auto* t = std::get_if<CertificateEvent>(&ev)) {
      e["type"] = "certificate";
      e["rule"] = t->rule;
      e["sigma"] = t->sigma;
      e["lambda"] = t->lambda;
      e["threshold"] = t->threshold;
      e["pass"] = t->pass;
    } else if (const auto* a = std::get_if<AppendEvent>(&ev)) {
      e["type"] = "append";
      e["kappa"] = a->kappa;
      e["F_before"] = a->F_before;
      e["F_after"] = a->F_after;
      e["s_after"] = a->s_after;
    }
    arr.push_back(std::move(e));
  }
  return arr;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::optional<DenseMatrix> load_ground_truth(KeyValueConfig& cfg, Manifest& manifest,
                                             std::size_t d) {
  const std::string path = cfg.get_string("ground_truth", "");
  if (path.empty()) return std::nullopt;
  manifest.add_input(path);
  DenseMatrix P = read_matrix_csv(path);
  if (P.rows() != d || P.cols() != d)
    throw InputError("ground-truth matrix dimension mismatch: " + path);
  return P;
}

}  // namespace

void cmd_estimate(const CliOptions& opts) {
  const fs::path out_dir = ensure_out_dir(opts);
  Manifest manifest("estimate", opts);
  KeyValueConfig cfg = load_config(opts);
  manifest.set_seed(resolve_seed(opts, cfg));

  const fs::path traj_path = cfg.require_string("trajectory");
  const std::size_t d_hint = cfg.get_size("d", 0);
  const fs::path p_out = out_dir / cfg.get_string("transition_out", "P_hat.csv");
  const fs::path xi_out = out_dir / cfg.get_string("stationary_out", "xi_hat.csv");
  cfg.reject_unknown_keys();
  manifest.set_resolved(cfg);
  manifest.add_input(traj_path);

  Trajectory traj = read_trajectory(traj_path, d_hint);
  EmpiricalChain chain = estimate_transition(traj);
  write_matrix_csv(p_out, chain.P);
  write_vector_csv(xi_out, chain.xi);
  manifest.add_output(p_out);
  manifest.add_output(xi_out);
  manifest.write(out_dir);
}

void cmd_synth(const CliOptions& opts) {
  const fs::path out_dir = ensure_out_dir(opts);
  Manifest manifest("synth", opts);
  KeyValueConfig cfg = load_config(opts);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  manifest.set_seed(seed);

  const std::size_t d = cfg.get_size("d", 100);
  const std::size_t r = cfg.get_size("r", 5);
  const std::size_t n = cfg.get_size("n", 100000);
  const fs::path u_out = out_dir / cfg.get_string("u_out", "U_star.csv");
  const fs::path v_out = out_dir / cfg.get_string("v_out", "V_star.csv");
  const fs::path p_out = out_dir / cfg.get_string("p_out", "P_star.csv");
  const fs::path xi_out = out_dir / cfg.get_string("xi_out", "xi_star.csv");
  const fs::path traj_out = out_dir / cfg.get_string("trajectory_out", "trajectory.txt");
  cfg.reject_unknown_keys();
  manifest.set_resolved(cfg);

  RngStream root(seed);
  RngStream gen = root.fork(1);
  GroundTruthChain chain = generate_ground_truth(gen, d, r);
  RngStream sim = root.fork(2);
  Trajectory traj = simulate_trajectory(sim, chain, n);

  write_matrix_csv(u_out, chain.U);
  write_matrix_csv(v_out, chain.V);
  write_matrix_csv(p_out, chain.P);
  write_vector_csv(xi_out, chain.xi);
  write_trajectory(traj_out, traj);
  for (const fs::path& p : {u_out, v_out, p_out, xi_out, traj_out})
    manifest.add_output(p);
  manifest.write(out_dir);
}

void cmd_solve(const CliOptions& opts) {
  const fs::path out_dir = ensure_out_dir(opts);
  Manifest manifest("solve", opts);
  KeyValueConfig cfg = load_config(opts);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  manifest.set_seed(seed);

  EmpiricalChain chain = load_chain(cfg, manifest);
  const double lambda = resolve_lambda(cfg, chain, cfg.require_double("lambda"));
  SolverConfig scfg = solver_config_from(cfg, lambda, seed);
  RankAdaptConfig rcfg = rank_config_from(cfg, "exact");
  const std::size_t s0 = cfg.get_size("s0", 1);
  std::optional<DenseMatrix> P_star = load_ground_truth(cfg, manifest, chain.d);
  const fs::path u_out = out_dir / cfg.get_string("u_out", "U_hat.csv");
  const fs::path v_out = out_dir / cfg.get_string("v_out", "V_hat.csv");
  const fs::path report_out = out_dir / cfg.get_string("report_out", "report.json");
  cfg.reject_unknown_keys();
  manifest.set_resolved(cfg);

  LossContext ctx(chain, lambda);
  RngStream root(seed);
  RngStream init = root.fork(0);
  FactorPair fp0 = random_feasible_pair(init, chain.d, s0);
  SolveReport rep = adapt_rank(ctx, fp0, scfg, rcfg, root.fork(1),
                               P_star ? &*P_star : nullptr);

  write_matrix_csv(u_out, rep.terminal.U);
  write_matrix_csv(v_out, rep.terminal.V);
  json j;
  j["lambda"] = lambda;
  j["s_hat"] = rep.s_hat;
  j["F"] = rep.F;
  j["termination"] = rep.termination;
  j["total_inner_iters"] = rep.total_inner_iters;
  j["events"] = events_to_json(rep.events);
  j["diagnostics"] = diagnostics_to_json(rep.diagnostics);
  j["factors"] = {{"u", u_out.filename().string()}, {"v", v_out.filename().string()}};
  {
    json r = json::object();
    for (const auto& [key, value] : cfg.resolved()) r[key] = value;
    j["config"] = r;
  }
  write_json(report_out, j);
  manifest.add_output(u_out);
  manifest.add_output(v_out);
  manifest.add_output(report_out);
  manifest.write(out_dir);
  if (rep.termination == "numeric-failure")
    throw NumericError("solver hit a numeric failure; partial report written");
}

void cmd_path(const CliOptions& opts) {
  const fs::path out_dir = ensure_out_dir(opts);
  Manifest manifest("path", opts);
  KeyValueConfig cfg = load_config(opts);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  manifest.set_seed(seed);

  EmpiricalChain chain = load_chain(cfg, manifest);
  std::vector<double> grid = cfg.get_double_list("lambdas");
  if (grid.empty()) {
    const double hi = cfg.require_double("lambda_hi");
    const double lo = cfg.require_double("lambda_lo");
    const std::size_t per_decade = cfg.get_size("per_decade", 8);
    grid = geometric_grid(hi, lo, per_decade);
  }
  if (cfg.get_bool("lambda_relative", false)) {
    const double wn = weighted_frobenius(chain.P, chain.xi);
    for (double& l : grid) l *= wn * wn;
  }
  for (std::size_t t = 1; t < grid.size(); ++t)
    if (!(grid[t] < grid[t - 1]))
      throw InputError("lambda grid must be strictly decreasing");

  SolverConfig scfg = solver_config_from(cfg, grid.front(), seed);
  RankAdaptConfig rcfg = rank_config_from(cfg, "exact");
  const std::size_t s0 = cfg.get_size("s0", 1);
  std::optional<DenseMatrix> P_star = load_ground_truth(cfg, manifest, chain.d);
  const fs::path csv_out = out_dir / cfg.get_string("path_out", "path.csv");
  const fs::path summary_out =
      out_dir / cfg.get_string("summary_out", "path_summary.json");
  cfg.reject_unknown_keys();
  manifest.set_resolved(cfg);

  PathResult result = run_path(chain, grid, scfg, rcfg, s0, RngStream(seed),
                               P_star ? &*P_star : nullptr);

  {
    std::ofstream out(csv_out, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + csv_out.string());
    out << "lambda,s_hat,F,relRE,relLE1,relLE2,GE,relDG\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const PathEntry& e : result.entries) {
      out << format_sig17(e.lambda) << ',' << e.s_hat << ','
          << format_sig17(e.failed ? nan : e.F) << ','
          << format_sig17(e.relRE && !e.failed ? *e.relRE : nan) << ','
          << format_sig17(e.failed ? nan : e.diag.relLE1) << ','
          << format_sig17(e.failed ? nan : e.diag.relLE2) << ','
          << format_sig17(e.failed ? nan : e.diag.GE) << ','
          << format_sig17(e.failed ? nan : e.diag.relDG) << '\n';
    }
  }
  json summary;
  summary["points"] = result.entries.size();
  if (result.lambda_star) summary["lambda_star"] = *result.lambda_star;
  if (result.relRE_star) summary["relRE_star"] = *result.relRE_star;
  write_json(summary_out, summary);
  manifest.add_output(csv_out);
  manifest.add_output(summary_out);
  manifest.write(out_dir);
}

void cmd_partition(const CliOptions& opts) {
  const fs::path out_dir = ensure_out_dir(opts);
  Manifest manifest("partition", opts);
  KeyValueConfig cfg = load_config(opts);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  manifest.set_seed(seed);

  EmpiricalChain chain;
  std::vector<GridCell> coords;
  const std::string trips_path = cfg.get_string("trips", "");
  if (!trips_path.empty()) {
    manifest.add_input(trips_path);
    const bool skip_header = cfg.get_bool("skip_header", false);
    std::vector<TripRecord> records = read_trip_records(trips_path, skip_header);
    const double cell = cfg.get_double("cell", 0.001);
    BBox bbox;
    if (cfg.has("lon_min")) {
      bbox.lon_min = cfg.require_double("lon_min");
      bbox.lon_max = cfg.require_double("lon_max");
      bbox.lat_min = cfg.require_double("lat_min");
      bbox.lat_max = cfg.require_double("lat_max");
    } else {
      bbox.lon_min = bbox.lon_max = records.front().pickup_lon;
      bbox.lat_min = bbox.lat_max = records.front().pickup_lat;
      for (const TripRecord& t : records) {
        for (double lon : {t.pickup_lon, t.dropoff_lon}) {
          bbox.lon_min = std::min(bbox.lon_min, lon);
          bbox.lon_max = std::max(bbox.lon_max, lon);
        }
        for (double lat : {t.pickup_lat, t.dropoff_lat}) {
          bbox.lat_min = std::min(bbox.lat_min, lat);
          bbox.lat_max = std::max(bbox.lat_max, lat);
        }
      }
      // half-open cells: nudge the max edges so the extreme points fall inside
      bbox.lon_max += cell;
      bbox.lat_max += cell;
    }
    const double min_freq = cfg.get_double("min_freq", 0.0);
    BinnedChain binned = bin_trip_records(records, cell, bbox, min_freq);
    chain = std::move(binned.chain);
    coords = std::move(binned.coords);
  } else {
    chain = load_chain(cfg, manifest);
    coords.assign(chain.d, GridCell{0, 0});
  }

  const std::size_t k = cfg.get_size("k", 0);
  if (k == 0) throw ConfigError("missing required config key 'k'");
  const std::string method = cfg.get_string("method", "aggregation");
  const std::size_t replicates = cfg.get_size("replicates", 50);
  const fs::path csv_out = out_dir / cfg.get_string("partition_out", "partition.csv");
  const fs::path summary_out =
      out_dir / cfg.get_string("summary_out", "partition_summary.json");

  RngStream root(seed);
  PartitionResult result;
  if (method == "aggregation") {
    const double lambda = resolve_lambda(cfg, chain, cfg.require_double("lambda"));
    SolverConfig scfg = solver_config_from(cfg, lambda, seed);
    RankAdaptConfig rcfg = rank_config_from(cfg, "early");
    const std::size_t s0 = cfg.get_size("s0", 1);
    cfg.reject_unknown_keys();
    manifest.set_resolved(cfg);

    LossContext ctx(chain, lambda);
    RngStream init = root.fork(0);
    FactorPair fp0 = random_feasible_pair(init, chain.d, s0);
    SolveReport rep = adapt_rank(ctx, fp0, scfg, rcfg, root.fork(1));
    if (rep.termination == "numeric-failure")
      throw NumericError("partition solve hit a numeric failure");
    result = partition_states(chain, k, method, replicates, root.fork(2),
                              &rep.terminal);
  } else {
    cfg.reject_unknown_keys();
    manifest.set_resolved(cfg);
    result = partition_states(chain, k, method, replicates, root.fork(2));
  }

  {
    std::ofstream out(csv_out, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + csv_out.string());
    out << "state,x,y,cluster\n";
    for (std::size_t i = 0; i < result.labels.size(); ++i)
      out << i << ',' << coords[i].x << ',' << coords[i].y << ','
          << result.labels[i] << '\n';
  }
  json summary;
  summary["k"] = result.k;
  summary["method"] = result.method;
  summary["wcss"] = result.wcss;
  summary["states"] = result.labels.size();
  write_json(summary_out, summary);
  manifest.add_output(csv_out);
  manifest.add_output(summary_out);
  manifest.write(out_dir);
}

void cmd_diagnose(const CliOptions& opts) {
  const fs::path out_dir = ensure_out_dir(opts);
  Manifest manifest("diagnose", opts);
  KeyValueConfig cfg = load_config(opts);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  manifest.set_seed(seed);

  EmpiricalChain chain = load_chain(cfg, manifest);
  const double lambda = resolve_lambda(cfg, chain, cfg.require_double("lambda"));
  const fs::path u_path = cfg.require_string("u");
  const fs::path v_path = cfg.require_string("v");
  manifest.add_input(u_path);
  manifest.add_input(v_path);
  const std::size_t restarts = cfg.get_size("restarts_omega", 20);
  std::optional<DenseMatrix> P_star = load_ground_truth(cfg, manifest, chain.d);
  const fs::path report_out = out_dir / cfg.get_string("report_out", "diagnostics.json");
  cfg.reject_unknown_keys();
  manifest.set_resolved(cfg);

  FactorPair fp;
  fp.U = read_matrix_csv(u_path);
  fp.V = read_matrix_csv(v_path);
  if (fp.U.rows() != chain.d || fp.V.rows() != chain.d ||
      fp.U.cols() != fp.V.cols())
    throw InputError("factor files do not match the chain dimension");

  LossContext ctx(chain, lambda);
  DiagnosticsRecord rec = compute_diagnostics(ctx, fp, RngStream(seed).fork(0),
                                              restarts, P_star ? &*P_star : nullptr);
  {
    const std::size_t want = std::min(chain.d, fp.s() + 1);
    ThinSvd svd = thin_svd(scale_rows(chain.P, chain.xi), want);
    rec.sigma1 = svd.sigma.front();
    if (fp.s() <= chain.d) rec.sigma_r = svd.sigma[fp.s() - 1];
    if (fp.s() + 1 <= chain.d) rec.sigma_r1 = svd.sigma[fp.s()];
  }

  json j;
  j["lambda"] = lambda;
  j["s"] = fp.s();
  j["F"] = objective_F(ctx, fp);
  j["diagnostics"] = diagnostics_to_json(rec);
  write_json(report_out, j);
  manifest.add_output(report_out);
  manifest.write(out_dir);
}

int dispatch_command(const std::string& subcommand, const CliOptions& opts) {
  try {
    apply_thread_cap(opts.threads);
    if (subcommand == "estimate")
      cmd_estimate(opts);
    else if (subcommand == "synth")
      cmd_synth(opts);
    else if (subcommand == "solve")
      cmd_solve(opts);
    else if (subcommand == "path")
      cmd_path(opts);
    else if (subcommand == "partition")
      cmd_partition(opts);
    else if (subcommand == "diagnose")
      cmd_diagnose(opts);
    else
      throw InputError("unknown subcommand: " + subcommand);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 4;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace aggrex
