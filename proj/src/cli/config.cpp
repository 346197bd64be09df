#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rootsa/cli.hpp"
#include "rootsa/errors.hpp"
#include "rootsa/problem_io.hpp"

namespace rootsa::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) bad(where.empty() ? k : where + "." + k, "unknown key");
  }
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

long integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  return j.get<long>();
}

std::string text(const json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "expected a string");
  return j.get<std::string>();
}

template <class T, class F>
std::vector<T> list(const json& j, const std::string& field, F&& each) {
  if (!j.is_array()) bad(field, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(each(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

// Default tuning constants per rule, see README.
struct RuleConstants {
  double c_step;
  double c_burn;
};

RuleConstants rule_defaults(const std::string& rule) {
  if (rule == "multistep") return {5.0, 0.1};
  return {10.0, 0.08};
}

int avgcost_tmix(const AvgCostMRP& mrp, int cap) {
  const auto est = mixing_time(mrp.kernel, cap);
  if (!est.t_mix) bad("problem", "average-cost chain does not mix within " + std::to_string(cap) + " steps");
  return *est.t_mix;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::vanilla: return "vanilla";
    case Algorithm::rootsa: return "rootsa";
    case Algorithm::rootsa_restart: return "rootsa-restart";
  }
  return "unknown";
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) bad("<root>", "expected an object");
  allow_keys(j, "", {"problem", "problem_file", "problem_id", "algorithm", "tuning", "vanilla", "horizons", "seeds",
                     "delta", "norm", "checkpoints", "theta0", "oracle", "estimate", "audit", "dry_run", "workers"});
  ExperimentConfig c;
  c.raw = j;

  try {
    if (j.contains("problem") && j.contains("problem_file")) bad("problem", "give either problem or problem_file");
    if (j.contains("problem")) {
      c.problem = problem_from_json(j["problem"]);
    } else if (j.contains("problem_file")) {
      c.problem = load_problem(text(j["problem_file"], "problem_file"));
    } else {
      bad("problem", "missing");
    }
  } catch (const InvalidArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("problem_id")) {
    c.problem_id = text(j["problem_id"], "problem_id");
  } else if (j.contains("problem") && j["problem"].contains("generator")) {
    const auto g = generator_from_json(j["problem"]["generator"]);
    c.problem_id = to_string(g.family) + "-gen" + std::to_string(g.seed);
  } else {
    c.problem_id = to_string(family_of(c.problem)) + "-inline";
  }

  if (j.contains("algorithm")) {
    const auto a = text(j["algorithm"], "algorithm");
    if (a == "vanilla") c.algorithm = Algorithm::vanilla;
    else if (a == "rootsa") c.algorithm = Algorithm::rootsa;
    else if (a == "rootsa-restart") c.algorithm = Algorithm::rootsa_restart;
    else bad("algorithm", "expected vanilla, rootsa or rootsa-restart");
  }

  if (j.contains("tuning")) {
    const auto& t = j["tuning"];
    if (t.is_string()) {
      if (t.get<std::string>() != "auto") bad("tuning", "expected \"auto\" or an object");
    } else if (t.is_object()) {
      allow_keys(t, "tuning", {"rule", "alpha", "burn_in", "restarts", "m", "c_step", "c_burn", "c_epoch", "lipschitz"});
      if (t.contains("rule")) c.tuning.rule = text(t["rule"], "tuning.rule");
      if (c.tuning.rule != "auto" && c.tuning.rule != "multistep" && c.tuning.rule != "generic")
        bad("tuning.rule", "expected auto, multistep or generic");
      if (t.contains("alpha") && !(t["alpha"].is_string() && t["alpha"] == "auto")) {
        c.tuning.alpha = number(t["alpha"], "tuning.alpha");
        if (!(*c.tuning.alpha > 0.0 && *c.tuning.alpha <= 1.0)) bad("tuning.alpha", "must lie in (0, 1]");
      }
      if (t.contains("burn_in") && !(t["burn_in"].is_string() && t["burn_in"] == "auto")) {
        c.tuning.burn_in = integer(t["burn_in"], "tuning.burn_in");
        if (*c.tuning.burn_in < 2) bad("tuning.burn_in", "must be >= 2");
      }
      if (t.contains("restarts") && !(t["restarts"].is_string() && t["restarts"] == "auto")) {
        c.tuning.restarts = static_cast<int>(integer(t["restarts"], "tuning.restarts"));
        if (*c.tuning.restarts < 0) bad("tuning.restarts", "must be >= 0");
      }
      if (t.contains("m")) {
        c.tuning.m = integer(t["m"], "tuning.m");
        if (*c.tuning.m < 1) bad("tuning.m", "must be >= 1");
      }
      if (t.contains("c_step")) c.tuning.c_step = number(t["c_step"], "tuning.c_step");
      if (t.contains("c_burn")) c.tuning.c_burn = number(t["c_burn"], "tuning.c_burn");
      if (t.contains("c_epoch")) c.tuning.c_epoch = number(t["c_epoch"], "tuning.c_epoch");
      if (t.contains("lipschitz")) c.tuning.lipschitz = number(t["lipschitz"], "tuning.lipschitz");
      if (c.tuning.c_step < 0.0 || c.tuning.c_burn < 0.0 || !(c.tuning.c_epoch > 0.0) || !(c.tuning.lipschitz > 0.0))
        bad("tuning", "constants must be positive");
    } else {
      bad("tuning", "expected \"auto\" or an object");
    }
  }
  const auto defaults = rule_defaults(c.tuning.rule);
  if (c.tuning.c_step == 0.0) c.tuning.c_step = defaults.c_step;
  if (c.tuning.c_burn == 0.0) c.tuning.c_burn = defaults.c_burn;

  if (j.contains("vanilla")) {
    const auto& v = j["vanilla"];
    if (!v.is_object()) bad("vanilla", "expected an object");
    allow_keys(v, "vanilla", {"schedule", "alpha", "c", "omega"});
    if (v.contains("schedule")) c.vanilla.schedule = text(v["schedule"], "vanilla.schedule");
    if (c.vanilla.schedule != "rescaled_linear" && c.vanilla.schedule != "constant" &&
        c.vanilla.schedule != "polynomial")
      bad("vanilla.schedule", "expected rescaled_linear, constant or polynomial");
    if (v.contains("alpha")) c.vanilla.alpha = number(v["alpha"], "vanilla.alpha");
    if (v.contains("c")) c.vanilla.c = number(v["c"], "vanilla.c");
    if (v.contains("omega")) c.vanilla.omega = number(v["omega"], "vanilla.omega");
  }

  if (!j.contains("horizons")) bad("horizons", "missing");
  c.horizons = list<long>(j["horizons"], "horizons", [](const json& x, const std::string& f) {
    const long n = integer(x, f);
    if (n < 2) bad(f, "horizon must be >= 2");
    return n;
  });
  if (c.horizons.empty()) bad("horizons", "empty");
  if (j.contains("seeds")) {
    c.seeds = list<std::uint64_t>(j["seeds"], "seeds", [](const json& x, const std::string& f) {
      if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0))
        bad(f, "expected a non-negative integer");
      return x.get<std::uint64_t>();
    });
  } else {
    c.seeds = {1};
  }
  if (c.seeds.empty()) bad("seeds", "empty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) bad("seeds", "duplicate seed");
  if (std::set<long>(c.horizons.begin(), c.horizons.end()).size() != c.horizons.size())
    bad("horizons", "duplicate horizon");

  if (j.contains("delta")) c.delta = number(j["delta"], "delta");
  if (!(c.delta > 0.0 && c.delta < 1.0)) bad("delta", "must lie in (0, 1)");

  if (j.contains("norm")) c.norm = text(j["norm"], "norm");
  if (c.norm != "natural" && c.norm != "sup" && c.norm != "span" && c.norm != "weighted_sup")
    bad("norm", "expected natural, sup, span or weighted_sup");
  if (c.norm == "weighted_sup" && family_of(c.problem) != Family::ssp)
    bad("norm", "weighted_sup uses SSP hitting-time weights and needs an SSP problem");

  if (j.contains("checkpoints") && !(j["checkpoints"].is_string() && j["checkpoints"] == "default")) {
    c.checkpoints = list<long>(j["checkpoints"], "checkpoints", [](const json& x, const std::string& f) {
      const long t = integer(x, f);
      if (t < 1) bad(f, "checkpoint must be >= 1");
      return t;
    });
    for (std::size_t i = 1; i < c.checkpoints.size(); ++i)
      if (c.checkpoints[i] <= c.checkpoints[i - 1]) bad("checkpoints", "must be strictly increasing");
  }

  if (j.contains("theta0")) {
    const auto& t = j["theta0"];
    if (!t.is_object()) bad("theta0", "expected an object");
    allow_keys(t, "theta0", {"kind", "value", "values", "pattern"});
    const auto kind = t.contains("kind") ? text(t["kind"], "theta0.kind") : std::string("zero");
    if (kind == "zero") c.theta0.kind = Theta0Spec::Kind::zero;
    else if (kind == "constant") c.theta0.kind = Theta0Spec::Kind::constant;
    else if (kind == "fixed_point_offset") c.theta0.kind = Theta0Spec::Kind::fixed_point_offset;
    else if (kind == "explicit") c.theta0.kind = Theta0Spec::Kind::explicit_values;
    else bad("theta0.kind", "expected zero, constant, fixed_point_offset or explicit");
    if (t.contains("value")) c.theta0.value = number(t["value"], "theta0.value");
    if (t.contains("pattern")) c.theta0.pattern = text(t["pattern"], "theta0.pattern");
    if (c.theta0.pattern != "constant" && c.theta0.pattern != "alternating")
      bad("theta0.pattern", "expected constant or alternating");
    if (c.theta0.kind == Theta0Spec::Kind::explicit_values) {
      if (!t.contains("values")) bad("theta0.values", "missing");
      c.theta0.values = list<double>(t["values"], "theta0.values", number);
      if (c.theta0.values.size() != problem_dim(c.problem)) bad("theta0.values", "length differs from problem dimension");
    }
  }

  if (j.contains("oracle")) {
    try {
      c.oracle = oracle_mode_from_string(text(j["oracle"], "oracle"));
    } catch (const InvalidArgumentError& e) {
      bad("oracle", e.what());
    }
  }

  if (j.contains("estimate")) {
    const auto& e = j["estimate"];
    if (!e.is_object()) bad("estimate", "expected an object");
    allow_keys(e, "estimate", {"cov_samples", "mc", "seed", "rate", "run_csv", "hn_constant"});
    if (e.contains("cov_samples")) c.estimate.cov_samples = integer(e["cov_samples"], "estimate.cov_samples");
    if (e.contains("mc")) c.estimate.mc = integer(e["mc"], "estimate.mc");
    if (e.contains("seed")) c.estimate.seed = static_cast<std::uint64_t>(integer(e["seed"], "estimate.seed"));
    if (e.contains("rate")) {
      if (!e["rate"].is_boolean()) bad("estimate.rate", "expected a boolean");
      c.estimate.rate = e["rate"].get<bool>();
    }
    if (e.contains("run_csv")) c.estimate.run_csv = text(e["run_csv"], "estimate.run_csv");
    if (e.contains("hn_constant")) c.estimate.hn_constant = number(e["hn_constant"], "estimate.hn_constant");
    if (c.estimate.cov_samples < 2 || c.estimate.mc < 2) bad("estimate", "sample counts must be >= 2");
  }
  if (j.contains("audit")) {
    const auto& a = j["audit"];
    if (!a.is_object()) bad("audit", "expected an object");
    allow_keys(a, "audit", {"pairs", "mixing_cap", "seed"});
    if (a.contains("pairs")) c.audit.pairs = integer(a["pairs"], "audit.pairs");
    if (a.contains("mixing_cap")) c.audit.mixing_cap = static_cast<int>(integer(a["mixing_cap"], "audit.mixing_cap"));
    if (a.contains("seed")) c.audit.seed = static_cast<std::uint64_t>(integer(a["seed"], "audit.seed"));
    if (c.audit.pairs < 1 || c.audit.mixing_cap < 1) bad("audit", "pairs and mixing_cap must be >= 1");
  }
  if (j.contains("dry_run")) {
    const auto& d = j["dry_run"];
    if (!d.is_object()) bad("dry_run", "expected an object");
    allow_keys(d, "dry_run", {"scale", "exponent"});
    if (d.contains("scale")) c.dry_run.scale = number(d["scale"], "dry_run.scale");
    if (d.contains("exponent")) c.dry_run.exponent = number(d["exponent"], "dry_run.exponent");
  }
  if (j.contains("workers")) {
    c.workers = static_cast<int>(integer(j["workers"], "workers"));
    if (c.workers < 1) bad("workers", "must be >= 1");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string body = buf.str();
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    const std::size_t pos = std::min(e.byte == 0 ? 0 : e.byte - 1, body.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (body[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  return parse_config(j);
}

NormSpec resolve_norm(const ExperimentConfig& c) {
  if (c.norm == "sup") return NormSpec::sup();
  if (c.norm == "span") return NormSpec::span();
  if (c.norm == "weighted_sup") return NormSpec::weighted_sup(ssp_weights(std::get<SSPInstance>(c.problem)).weights);
  return natural_norm(c.problem);
}

Vector resolve_theta0(const ExperimentConfig& c, const std::optional<Vector>& theta_star) {
  const auto dim = static_cast<Eigen::Index>(problem_dim(c.problem));
  switch (c.theta0.kind) {
    case Theta0Spec::Kind::zero: return Vector::Zero(dim);
    case Theta0Spec::Kind::constant: return Vector::Constant(dim, c.theta0.value);
    case Theta0Spec::Kind::fixed_point_offset:
      if (!theta_star) throw ConfigError("theta0: fixed_point_offset needs the fixed point, which is unavailable");
      if (c.theta0.pattern == "alternating") {
        Vector shift(dim);
        for (Eigen::Index i = 0; i < dim; ++i) shift[i] = i % 2 == 0 ? c.theta0.value : -c.theta0.value;
        return *theta_star + shift;
      }
      return *theta_star + Vector::Constant(dim, c.theta0.value);
    case Theta0Spec::Kind::explicit_values:
      return Eigen::Map<const Vector>(c.theta0.values.data(), dim);
  }
  return Vector::Zero(dim);
}

ResolvedTuning resolve_tuning(const ExperimentConfig& c, long n) {
  ResolvedTuning r;
  const Family fam = family_of(c.problem);
  const auto dim = static_cast<double>(problem_dim(c.problem));
  json echo{{"n", n}, {"rule", c.tuning.rule}, {"delta", c.delta}, {"c_step", c.tuning.c_step},
            {"c_burn", c.tuning.c_burn}};

  // contraction description of the family
  std::optional<double> gamma;
  std::optional<long> m;
  double log_dim_base = dim;
  if (fam == Family::mdp || fam == Family::game) {
    gamma = discount_of(c.problem);
  } else if (fam == Family::ssp) {
    const auto w = ssp_weights(std::get<SSPInstance>(c.problem));
    gamma = w.nominal_factor();
    echo["w_max"] = w.w_max;
  } else {
    const auto& mrp = std::get<AvgCostMRP>(c.problem);
    const int tmix = avgcost_tmix(mrp, c.audit.mixing_cap);
    echo["t_mix"] = tmix;
    m = tmix;
    log_dim_base = static_cast<double>(mrp.states);
  }
  if (!(log_dim_base > 1.0)) log_dim_base = 2.0;  // log D stays positive for one-coordinate problems

  StepsizeKind kind = fam == Family::avgcost ? StepsizeKind::avgcost : StepsizeKind::discounted;
  BurnInRule rule = gamma ? BurnInRule::contractive(*gamma) : BurnInRule::multistep(*m);
  if (c.tuning.rule == "generic") {
    kind = StepsizeKind::generic;
  } else if (c.tuning.rule == "multistep") {
    long mm = 0;
    if (c.tuning.m) mm = *c.tuning.m;
    else if (m) mm = 2 * *m;
    else bad("tuning.m", "multistep rule needs m for discounted families");
    kind = StepsizeKind::multistep;
    rule = BurnInRule::multistep(mm);
    echo["m"] = mm;
  } else if (m) {
    echo["m"] = *m;
  }
  if (gamma && c.tuning.rule != "multistep") echo["gamma"] = *gamma;
  echo["log_dim"] = std::log(log_dim_base);
  echo["stepsize_formula"] = to_string(kind);
  echo["burnin_formula"] = rule.gamma ? "c_burn log(n/delta) / ((1-gamma)^2 alpha)" : "c_burn m log(n/delta) / alpha";

  StepsizeParams sp;
  sp.c = c.tuning.c_step;
  sp.lipschitz = c.tuning.lipschitz;
  sp.m = rule.m.value_or(1);
  if (c.tuning.alpha) {
    r.alpha = *c.tuning.alpha;
    echo["alpha_source"] = "override";
  } else {
    r.alpha = default_stepsize(kind, n, c.delta, log_dim_base, sp);
    echo["alpha_source"] = "auto";
  }
  if (c.tuning.burn_in) {
    r.burn_in = *c.tuning.burn_in;
    echo["burn_in_source"] = "override";
  } else {
    r.burn_in = default_burnin(r.alpha, rule, n, c.delta, c.tuning.c_burn);
    echo["burn_in_source"] = "auto";
  }
  if (c.algorithm != Algorithm::vanilla && n < 2 * r.burn_in) {
    std::ostringstream os;
    os << "horizon " << n << " is below twice the resolved burn-in " << r.burn_in << " (alpha " << r.alpha << ")";
    bad("horizons", os.str());
  }

  if (c.algorithm == Algorithm::rootsa_restart) {
    const long epoch = static_cast<long>(std::ceil(c.tuning.c_epoch * static_cast<double>(r.burn_in) * (1.0 - 1e-12)));
    const long feasible = epoch > 0 ? std::max(0L, (n - 2 * r.burn_in) / epoch) : 0;
    // automatic restarts keep at least half the budget for the final epoch
    const long auto_cap = epoch > 0 ? std::min(feasible, (n / 2) / epoch) : 0;
    if (c.tuning.restarts) {
      r.restarts = *c.tuning.restarts;
      if (r.restarts > feasible) {
        bad("tuning.restarts", std::to_string(r.restarts) + " epochs do not fit horizon " + std::to_string(n));
      }
    } else {
      const int nominal = default_restarts(n);
      r.restarts = static_cast<int>(std::min<long>(nominal, auto_cap));
      echo["restarts_nominal"] = nominal;
    }
    echo["restarts_feasible_max"] = feasible;
    echo["epoch_length"] = epoch;
    echo["c_epoch"] = c.tuning.c_epoch;
  }

  if (c.checkpoints.empty()) {
    r.checkpoints = default_checkpoints(std::min(r.burn_in, n), n);
  } else {
    for (long t : c.checkpoints)
      if (t < n) r.checkpoints.push_back(t);
    r.checkpoints.push_back(n);
  }
  echo["alpha"] = r.alpha;
  echo["burn_in"] = r.burn_in;
  echo["restarts"] = r.restarts;
  r.echo = std::move(echo);
  return r;
}

}  // namespace rootsa::cli
