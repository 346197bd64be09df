#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "rootsa/cli.hpp"
#include "rootsa/errors.hpp"

namespace rootsa::cli {

using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

std::optional<Vector> try_fixed_point(const Problem& problem) {
  try {
    return fixed_point_oracle(problem);
  } catch (const Error&) {
    return std::nullopt;
  }
}

StepsizeSchedule vanilla_schedule(const ExperimentConfig& c) {
  if (c.vanilla.schedule == "constant") return constant_stepsize(c.vanilla.alpha);
  if (c.vanilla.schedule == "polynomial") return polynomial_stepsize(c.vanilla.c, c.vanilla.omega);
  double gamma = 0.0;
  switch (family_of(c.problem)) {
    case Family::ssp: gamma = ssp_weights(std::get<SSPInstance>(c.problem)).nominal_factor(); break;
    case Family::avgcost: return polynomial_stepsize(c.vanilla.c, c.vanilla.omega);
    default: gamma = discount_of(c.problem);
  }
  return rescaled_linear_stepsize(gamma);
}

struct Task {
  std::uint64_t seed;
  long n;
};

RunRecord run_one(const ExperimentConfig& c, const Task& task, const ResolvedTuning& tuning, const NormSpec& norm,
                  const std::optional<Vector>& theta_star, const Vector& theta0, bool dry_run) {
  RunRecord rec;
  rec.problem_id = c.problem_id;
  rec.algorithm = to_string(c.algorithm);
  rec.seed = task.seed;
  rec.n = task.n;
  rec.alpha = tuning.alpha;
  rec.burn_in = tuning.burn_in;
  rec.restarts = tuning.restarts;
  if (dry_run) {
    // injected series replayed through the reporting path
    for (long t : tuning.checkpoints) {
      CheckpointRecord cp;
      cp.t = t;
      cp.defect = c.dry_run.scale * std::pow(static_cast<double>(t), c.dry_run.exponent);
      rec.series.push_back(cp);
    }
    rec.final_defect = c.dry_run.scale * std::pow(static_cast<double>(task.n), c.dry_run.exponent);
    rec.samples_used = 0;
    return rec;
  }
  const auto start = std::chrono::steady_clock::now();
  GenerativeOracle oracle(c.problem, c.oracle, task.seed, static_cast<std::uint64_t>(task.n));
  TraceOptions opts{norm, theta_star};
  RunTrace trace;
  if (c.algorithm == Algorithm::vanilla) {
    trace = vanilla_sa_run(oracle, theta0, vanilla_schedule(c), task.n, tuning.checkpoints, opts);
  } else {
    RootSaConfig rc;
    rc.alpha = tuning.alpha;
    rc.burn_in = tuning.burn_in;
    rc.horizon = task.n;
    rc.restarts = tuning.restarts;
    rc.c_epoch = c.tuning.c_epoch;
    rc.checkpoints = tuning.checkpoints;
    rc.c_burn = c.tuning.c_burn;
    rc.c_step = c.tuning.c_step;
    trace = c.algorithm == Algorithm::rootsa ? rootsa_run(rc, oracle, theta0, opts)
                                             : rootsa_restart_run(rc, oracle, theta0, opts);
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  rec.samples_used = trace.samples_used;
  rec.diverged = trace.diverged;
  rec.message = trace.message;
  rec.series = std::move(trace.checkpoints);
  if (trace.theta_final.allFinite()) {
    rec.final_defect = operator_defect(c.problem, trace.theta_final, norm);
    if (theta_star) rec.final_error = estimation_error(trace.theta_final, *theta_star, norm);
  } else {
    rec.final_defect = std::numeric_limits<double>::infinity();
  }
  return rec;
}

ExperimentConfig load_with_options(const CommandOptions& o) {
  ExperimentConfig c = load_config(o.config_path);
  for (auto& s : c.seeds) s += o.seed_offset;
  if (o.workers) {
    if (*o.workers < 1) throw ConfigError("--workers must be >= 1");
    c.workers = *o.workers;
  }
  return c;
}

json resolved_json(const ExperimentConfig& c) {
  json out = json::array();
  auto hs = c.horizons;
  std::sort(hs.begin(), hs.end());
  for (long n : hs) out.push_back(resolve_tuning(c, n).echo);
  return out;
}

void write_summary(const std::string& path, const std::string& command, const ExperimentConfig& c,
                   const std::vector<RunRecord>& records, const json& extra) {
  json runs = json::array();
  for (const auto& r : records) {
    runs.push_back({{"seed", r.seed},
                    {"n", r.n},
                    {"final_defect", r.final_defect},
                    {"final_error", r.final_error ? json(*r.final_error) : json(nullptr)},
                    {"diverged", r.diverged},
                    {"message", r.message},
                    {"wall_ms", r.wall_ms}});
  }
  json s{{"version", ROOTSA_VERSION}, {"command", command},  {"problem_id", c.problem_id},
         {"config", c.raw},           {"resolved", resolved_json(c)}, {"runs", runs}};
  for (const auto& [k, v] : extra.items()) s[k] = v;
  auto out = open_out(path);
  out << s.dump(2) << "\n";
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

std::string out_path(const CommandOptions& o, const std::string& name) {
  return (std::filesystem::path(o.out_dir) / name).string();
}

}  // namespace

std::vector<RunRecord> execute_batch(const ExperimentConfig& c, int workers, bool dry_run) {
  auto seeds = c.seeds;
  auto horizons = c.horizons;
  std::sort(seeds.begin(), seeds.end());
  std::sort(horizons.begin(), horizons.end());

  // resolve everything up front so config errors surface before any work
  std::map<long, ResolvedTuning> tuning;
  for (long n : horizons) tuning.emplace(n, resolve_tuning(c, n));
  const NormSpec norm = resolve_norm(c);
  const auto theta_star = dry_run ? std::nullopt : try_fixed_point(c.problem);
  const Vector theta0 = resolve_theta0(c, theta_star);

  std::vector<Task> tasks;
  for (auto s : seeds)
    for (long n : horizons) tasks.push_back({s, n});
  std::vector<RunRecord> out(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        out[i] = run_one(c, tasks[i], tuning.at(tasks[i].n), norm, theta_star, theta0, dry_run);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));
  if (w == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < w; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void write_records_csv(const std::string& path, const std::vector<RunRecord>& records) {
  auto out = open_out(path);
  out << "problem_id,algorithm,seed,n,alpha,burn_in,restarts,samples_used,final_defect,final_error,diverged,message\n";
  for (const auto& r : records) {
    out << csv_quote(r.problem_id) << ',' << r.algorithm << ',' << r.seed << ',' << r.n << ',' << fmt(r.alpha) << ','
        << r.burn_in << ',' << r.restarts << ',' << r.samples_used << ',' << fmt(r.final_defect) << ','
        << fmt(r.final_error) << ',' << (r.diverged ? 1 : 0) << ',' << csv_quote(r.message) << '\n';
  }
}

void write_checkpoints_csv(const std::string& path, const std::vector<RunRecord>& records) {
  auto out = open_out(path);
  out << "problem_id,algorithm,seed,n,t,defect,error,z\n";
  for (const auto& r : records)
    for (const auto& cp : r.series)
      out << csv_quote(r.problem_id) << ',' << r.algorithm << ',' << r.seed << ',' << r.n << ',' << cp.t << ','
          << fmt(cp.defect) << ',' << fmt(cp.error) << ',' << fmt(cp.z) << '\n';
}

std::vector<RunRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run CSV '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("run CSV '" + path + "' is empty");
  const auto header = csv_split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"seed", "n", "final_defect", "final_error", "diverged"})
    if (!col.count(need)) throw ConfigError("run CSV '" + path + "' lacks column " + need);
  std::vector<RunRecord> out;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != header.size()) throw ConfigError(path + ":" + std::to_string(lineno) + ": wrong field count");
    RunRecord r;
    // optional columns keep their defaults when absent
    auto field = [&](const char* name) -> const std::string* {
      const auto it = col.find(name);
      return it == col.end() ? nullptr : &f[it->second];
    };
    try {
      r.seed = std::stoull(f[col["seed"]]);
      r.n = std::stol(f[col["n"]]);
      r.final_defect = std::stod(f[col["final_defect"]]);
      if (!f[col["final_error"]].empty()) r.final_error = std::stod(f[col["final_error"]]);
      r.diverged = f[col["diverged"]] == "1";
      if (const auto* v = field("problem_id")) r.problem_id = *v;
      if (const auto* v = field("algorithm")) r.algorithm = *v;
      if (const auto* v = field("alpha"); v && !v->empty()) r.alpha = std::stod(*v);
      if (const auto* v = field("burn_in"); v && !v->empty()) r.burn_in = std::stol(*v);
      if (const auto* v = field("restarts"); v && !v->empty()) r.restarts = std::stoi(*v);
      if (const auto* v = field("samples_used"); v && !v->empty()) r.samples_used = std::stol(*v);
      if (const auto* v = field("message")) r.message = *v;
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unparsable number");
    }
    out.push_back(std::move(r));
  }
  return out;
}

SweepReport summarize_sweep(const std::vector<RunRecord>& records) {
  std::map<long, std::vector<double>> by_n;
  for (const auto& r : records)
    if (!r.diverged && std::isfinite(r.final_defect)) by_n[r.n].push_back(r.final_defect);
  SweepReport rep;
  std::vector<RatePoint> pts;
  for (const auto& [n, ys] : by_n) {
    SweepRow row;
    row.n = n;
    row.count = ys.size();
    for (double y : ys) row.mean += y;
    row.mean /= static_cast<double>(ys.size());
    if (ys.size() > 1) {
      double ss = 0.0;
      for (double y : ys) ss += (y - row.mean) * (y - row.mean);
      row.stderr_ = std::sqrt(ss / static_cast<double>(ys.size() - 1) / static_cast<double>(ys.size()));
    }
    rep.rows.push_back(row);
    pts.push_back({static_cast<double>(n), row.mean});
  }
  rep.slope = rate_slope(pts);
  return rep;
}

std::vector<AuditCheck> audit_problem(const ExperimentConfig& c) {
  std::vector<AuditCheck> checks;
  const auto violations = check_problem(c.problem);
  {
    AuditCheck k{"kernel_stochasticity", violations.empty() ? "pass" : "fail", {}};
    k.fields.emplace_back("violations", std::to_string(violations.size()));
    for (std::size_t i = 0; i < violations.size(); ++i) k.fields.emplace_back("violation_" + std::to_string(i), violations[i]);
    checks.push_back(std::move(k));
  }
  const auto fam = family_of(c.problem);
  auto skipped = [&](const std::string& name) {
    checks.push_back({name, "skip", {{"reason", "kernel checks failed"}}});
  };
  RngStream rng(c.audit.seed, 0, 0);
  if (fam == Family::mdp || fam == Family::game) {
    if (!violations.empty()) return skipped("contraction"), checks;
    const double gamma = discount_of(c.problem);
    const auto a = contraction_audit(c.problem, NormSpec::sup(), c.audit.pairs, rng, 1);
    const double bound = gamma + 1e-9;
    checks.push_back({"contraction",
                      a.max_ratio <= bound ? "pass" : "fail",
                      {{"norm", "sup"}, {"steps", "1"}, {"pairs", std::to_string(a.pairs_used)},
                       {"max_ratio", fmt(a.max_ratio)}, {"bound", fmt(bound)}}});
  } else if (fam == Family::ssp) {
    if (!violations.empty()) return skipped("ssp_weights"), skipped("contraction"), checks;
    const auto& ssp = std::get<SSPInstance>(c.problem);
    WeightVector w;
    try {
      w = ssp_weights(ssp);
    } catch (const ConvergenceError& e) {
      checks.push_back({"ssp_weights", "fail", {{"reason", e.what()}}});
      checks.push_back({"contraction", "skip", {{"reason", "no hitting-time weights"}}});
      return checks;
    }
    const double bound = w.nominal_factor() + 1e-9;
    checks.push_back({"ssp_weights",
                      w.contraction <= bound ? "pass" : "fail",
                      {{"w_max", fmt(w.w_max)}, {"w_min", fmt(w.w_min)}, {"certified_factor", fmt(w.contraction)},
                       {"bound", fmt(bound)}}});
    const auto a = contraction_audit(c.problem, NormSpec::weighted_sup(w.weights), c.audit.pairs, rng, 1);
    checks.push_back({"contraction",
                      a.max_ratio <= bound ? "pass" : "fail",
                      {{"norm", "weighted_sup"}, {"steps", "1"}, {"pairs", std::to_string(a.pairs_used)},
                       {"max_ratio", fmt(a.max_ratio)}, {"bound", fmt(bound)}}});
  } else {
    if (!violations.empty()) return skipped("mixing_time"), skipped("contraction"), checks;
    const auto& mrp = std::get<AvgCostMRP>(c.problem);
    const auto mix = mixing_time(mrp.kernel, c.audit.mixing_cap);
    if (!mix.t_mix) {
      checks.push_back({"mixing_time", "fail", {{"cap", std::to_string(c.audit.mixing_cap)}, {"tv_at_cap", fmt(mix.tv)}}});
      checks.push_back({"contraction", "skip", {{"reason", "no mixing time"}}});
      return checks;
    }
    checks.push_back({"mixing_time", "pass", {{"t_mix", std::to_string(*mix.t_mix)}, {"tv", fmt(mix.tv)}}});
    const auto one = contraction_audit(c.problem, NormSpec::span(), c.audit.pairs, rng, 1);
    checks.push_back({"nonexpansive",
                      one.max_ratio <= 1.0 + 1e-9 ? "pass" : "fail",
                      {{"norm", "span"}, {"steps", "1"}, {"pairs", std::to_string(one.pairs_used)},
                       {"max_ratio", fmt(one.max_ratio)}, {"bound", fmt(1.0 + 1e-9)}}});
    const int steps = 2 * *mix.t_mix;
    const auto multi = contraction_audit(c.problem, NormSpec::span(), c.audit.pairs, rng, steps);
    checks.push_back({"contraction",
                      multi.max_ratio <= 0.5 + 1e-9 ? "pass" : "fail",
                      {{"norm", "span"}, {"steps", std::to_string(steps)}, {"pairs", std::to_string(multi.pairs_used)},
                       {"max_ratio", fmt(multi.max_ratio)}, {"bound", fmt(0.5 + 1e-9)}}});
  }
  return checks;
}

std::string format_audit(const std::vector<AuditCheck>& checks) {
  std::ostringstream os;
  for (const auto& k : checks) {
    os << "check: " << k.name << "\nstatus: " << k.status << "\n";
    for (const auto& [key, value] : k.fields) os << key << ": " << value << "\n";
    os << "\n";
  }
  return os.str();
}

EstimateReport estimate_bounds(const ExperimentConfig& c, const std::vector<RunRecord>* measured) {
  EstimateReport rep;
  const Vector theta_star = fixed_point_oracle(c.problem);
  const NormSpec norm = resolve_norm(c);
  const auto fam = family_of(c.problem);
  RngStream cov_rng(c.estimate.seed, 0, 0);
  const CovEstimate cov = noise_covariance(c.problem, theta_star, c.estimate.cov_samples, cov_rng);
  rep.b_star = cov.noise_bound;
  RngStream g_rng(c.estimate.seed, 1, 0);
  rep.complexity = gaussian_complexity(cov, norm, c.estimate.mc, g_rng);
  rep.notes["norm"] = norm.name();

  RngStream r_rng(c.estimate.seed, 2, 0);
  bool have_resolvent = true;
  if (fam == Family::avgcost) {
    const auto& mrp = std::get<AvgCostMRP>(c.problem);
    rep.resolvent = quotient_resolvent_functional(mrp.kernel, mrp.stationary, cov, c.estimate.mc, r_rng);
  } else if (fam == Family::game && std::get<MarkovGame>(c.problem).actions_min != 1) {
    have_resolvent = false;
    rep.notes["resolvent"] = "skipped: local linearization of a game with a mixed minimizer is not a policy operator";
  } else {
    const Matrix a = local_linear_operator(c.problem, greedy_policy(c.problem, theta_star));
    rep.resolvent = resolvent_functional(a, cov, norm, c.estimate.mc, r_rng);
  }

  std::optional<LocalComplexityModel> model;
  double gamma = 0.0;
  const bool rate = c.estimate.rate && (fam == Family::mdp || fam == Family::ssp);
  if (rate) {
    RngStream l_rng(c.estimate.seed, 3, 0);
    model.emplace(c.problem, theta_star, cov, norm, c.estimate.mc, l_rng);
    gamma = fam == Family::mdp ? discount_of(c.problem) : ssp_weights(std::get<SSPInstance>(c.problem)).nominal_factor();
  }

  std::map<long, std::vector<double>> errors;
  if (measured)
    for (const auto& r : *measured)
      if (r.final_error && !r.diverged) errors[r.n].push_back(*r.final_error);

  auto hs = c.horizons;
  std::sort(hs.begin(), hs.end());
  for (long n : hs) {
    EstimateRow row;
    row.n = n;
    const double lead = have_resolvent ? rep.resolvent.wbar : rep.complexity.wbar;
    row.predicted_leading = lead / std::sqrt(static_cast<double>(n));
    if (model) {
      HigherOrderParams hp;
      hp.gamma = gamma;
      hp.alpha = resolve_tuning(c, n).alpha;
      hp.lipschitz = c.tuning.lipschitz;
      hp.log_dim = std::log(std::max(2.0, static_cast<double>(problem_dim(c.problem))));
      hp.wbar = rep.complexity.wbar;
      hp.b_star = rep.b_star;
      hp.c = c.estimate.hn_constant;
      const double hn = higher_order_term(n, c.delta, hp);
      row.higher_order = hn;
      const double nn = static_cast<double>(n);
      const double uniform = rep.complexity.wbar / ((1.0 - gamma) * std::sqrt(nn)) +
                             rep.complexity.nu / (1.0 - gamma) * std::sqrt(std::log(1.0 / c.delta) / nn) + hn;
      if (uniform <= 0.0) {
        row.s_star = 0.0;
      } else {
        row.s_star = solve_rate_fixed_point(rate_rhs(*model, n, c.delta, hn), 1e-4 * uniform, 2.0 * uniform).s_star;
      }
    }
    if (auto it = errors.find(n); it != errors.end() && !it->second.empty()) {
      double ss = 0.0;
      for (double e : it->second) ss += e * e;
      row.measured = std::sqrt(ss / static_cast<double>(it->second.size()));
      if (row.predicted_leading > 0.0) row.ratio = *row.measured / row.predicted_leading;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

int cmd_run(const CommandOptions& o) {
  return guarded([&] {
    const auto c = load_with_options(o);
    const auto records = execute_batch(c, c.workers, o.dry_run);
    write_records_csv(out_path(o, "records.csv"), records);
    write_checkpoints_csv(out_path(o, "checkpoints.csv"), records);
    write_summary(out_path(o, "summary.json"), "run", c, records, json::object());
    std::size_t diverged = 0;
    for (const auto& r : records) diverged += r.diverged ? 1 : 0;
    std::cout << records.size() << " runs written to " << out_path(o, "records.csv");
    if (diverged) std::cout << " (" << diverged << " diverged)";
    std::cout << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_sweep(const CommandOptions& o) {
  return guarded([&] {
    const auto c = load_with_options(o);
    if (c.horizons.size() < 3) throw ConfigError("config field 'horizons': sweep needs at least 3 horizons");
    if (c.seeds.size() < 5) throw ConfigError("config field 'seeds': sweep needs at least 5 seeds");
    const auto records = execute_batch(c, c.workers, o.dry_run);
    write_records_csv(out_path(o, "records.csv"), records);
    write_checkpoints_csv(out_path(o, "checkpoints.csv"), records);
    const auto rep = summarize_sweep(records);
    json rows = json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"n", r.n}, {"mean_defect", r.mean}, {"stderr", r.stderr_}, {"count", r.count}});
    const json report{{"slope", rep.slope}, {"horizons", rows}};
    write_summary(out_path(o, "summary.json"), "sweep", c, records, json{{"sweep", report}});
    auto out = open_out(out_path(o, "sweep_report.json"));
    out << report.dump(2) << "\n";
    std::cout << "n,mean_defect,stderr,count\n";
    for (const auto& r : rep.rows) std::cout << r.n << ',' << fmt(r.mean) << ',' << fmt(r.stderr_) << ',' << r.count << "\n";
    std::cout << "slope: " << fmt(rep.slope) << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_audit(const CommandOptions& o) {
  return guarded([&] {
    const auto c = load_with_options(o);
    const auto checks = audit_problem(c);
    const auto text = format_audit(checks);
    auto out = open_out(out_path(o, "audit.txt"));
    out << text;
    std::cout << text;
    const bool failed = std::any_of(checks.begin(), checks.end(), [](const auto& k) { return k.status == "fail"; });
    return static_cast<int>(failed ? kAuditViolation : kOk);
  });
}

int cmd_estimate(const CommandOptions& o) {
  return guarded([&] {
    const auto c = load_with_options(o);
    std::vector<RunRecord> measured;
    if (!c.estimate.run_csv.empty()) measured = read_records_csv(c.estimate.run_csv);
    const auto rep = estimate_bounds(c, c.estimate.run_csv.empty() ? nullptr : &measured);
    const bool with_measured = !c.estimate.run_csv.empty();

    auto csv = open_out(out_path(o, "estimate.csv"));
    csv << "n,predicted_leading,s_star,higher_order";
    if (with_measured) csv << ",measured_rms_error,ratio";
    csv << "\n";
    json rows = json::array();
    for (const auto& r : rep.rows) {
      csv << r.n << ',' << fmt(r.predicted_leading) << ',' << fmt(r.s_star) << ',' << fmt(r.higher_order);
      if (with_measured) csv << ',' << fmt(r.measured) << ',' << fmt(r.ratio);
      csv << "\n";
      json row{{"n", r.n}, {"predicted_leading", r.predicted_leading}};
      if (r.s_star) row["s_star"] = *r.s_star;
      if (r.higher_order) row["higher_order"] = *r.higher_order;
      if (r.measured) row["measured_rms_error"] = *r.measured;
      if (r.ratio) row["ratio"] = *r.ratio;
      rows.push_back(row);
    }
    const json report{{"version", ROOTSA_VERSION},
                      {"problem_id", c.problem_id},
                      {"wbar", rep.complexity.wbar},
                      {"wbar_stderr", rep.complexity.wbar_stderr},
                      {"nu", rep.complexity.nu},
                      {"resolvent", rep.resolvent.wbar},
                      {"resolvent_stderr", rep.resolvent.wbar_stderr},
                      {"resolvent_nu", rep.resolvent.nu},
                      {"b_star", rep.b_star},
                      {"notes", rep.notes},
                      {"rows", rows}};
    auto js = open_out(out_path(o, "estimate.json"));
    js << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace rootsa::cli
