#include "rootsa/problem_io.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rootsa/errors.hpp"

namespace rootsa {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Run id reserved for instance generation so it never collides with oracle streams.
constexpr std::uint64_t kGeneratorRun = 0x6e6572617465ULL;

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw InvalidArgumentError("problem field '" + path + "': " + what);
}

const json& member(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) field_error(path + key, "missing");
  return j.at(key);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) field_error(path, "expected an integer");
  return j.get<int>();
}

Vector as_vector(const json& j, std::size_t len, const std::string& path) {
  if (!j.is_array() || j.size() != len) {
    field_error(path, "expected an array of " + std::to_string(len) + " numbers");
  }
  Vector v(static_cast<Eigen::Index>(len));
  for (std::size_t i = 0; i < len; ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix as_matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& path) {
  if (!j.is_array() || j.size() != rows) field_error(path, "expected " + std::to_string(rows) + " rows");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    m.row(static_cast<Eigen::Index>(r)) = as_vector(j[r], cols, path + "[" + std::to_string(r) + "]").transpose();
  return m;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

NoiseModel noise_from_json(const json& j, const std::string& path) {
  NoiseModel n;
  if (!j.is_object()) field_error(path, "expected an object");
  if (j.contains("family")) {
    if (!j["family"].is_string()) field_error(path + ".family", "expected a string");
    try {
      n.family = noise_family_from_string(j["family"].get<std::string>());
    } catch (const InvalidArgumentError& e) {
      field_error(path + ".family", e.what());
    }
  }
  n.amplitude = j.contains("amplitude") ? as_number(j["amplitude"], path + ".amplitude") : 0.0;
  if (n.amplitude < 0.0) field_error(path + ".amplitude", "must be >= 0");
  return n;
}

json noise_json(const NoiseModel& n) { return json{{"family", to_string(n.family)}, {"amplitude", n.amplitude}}; }

Family family_from_string(const std::string& s, const std::string& path) {
  if (s == "mdp") return Family::mdp;
  if (s == "ssp") return Family::ssp;
  if (s == "game") return Family::game;
  if (s == "avgcost") return Family::avgcost;
  field_error(path, "unknown family '" + s + "' (expected mdp, ssp, game, avgcost)");
}

// Random probability row over `states` entries with `branching` positive entries.
Vector random_row(RngStream& rng, int states, int branching) {
  const int k = (branching <= 0 || branching > states) ? states : branching;
  std::vector<int> idx(static_cast<std::size_t>(states));
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates with our own draws for reproducibility
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.uniform() * (states - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(std::min(j, states - 1))]);
  }
  Vector row = Vector::Zero(states);
  for (int i = 0; i < k; ++i) row[idx[static_cast<std::size_t>(i)]] = 0.05 + rng.uniform();
  return row / row.sum();
}

}  // namespace

Problem generate_problem(const GeneratorSpec& spec) {
  RngStream rng(spec.seed, kGeneratorRun, static_cast<std::uint64_t>(spec.family));
  const int s = spec.states;
  switch (spec.family) {
    case Family::mdp: {
      if (s < 1 || spec.actions < 1) throw InvalidArgumentError("generator: mdp needs states >= 1, actions >= 1");
      TabularMDP mdp;
      mdp.states = s;
      mdp.actions = spec.actions;
      mdp.discount = spec.discount;
      mdp.noise = spec.noise;
      for (int u = 0; u < spec.actions; ++u) {
        Matrix k(s, s);
        for (int x = 0; x < s; ++x) k.row(x) = random_row(rng, s, spec.branching).transpose();
        mdp.kernel.push_back(std::move(k));
      }
      mdp.reward = Matrix(s, spec.actions);
      for (int x = 0; x < s; ++x)
        for (int u = 0; u < spec.actions; ++u) mdp.reward(x, u) = rng.uniform();
      return mdp;
    }
    case Family::ssp: {
      if (s < 2 || spec.actions < 1) throw InvalidArgumentError("generator: ssp needs states >= 2, actions >= 1");
      if (!(spec.termination > 0.0 && spec.termination <= 1.0))
        throw InvalidArgumentError("generator: ssp termination must lie in (0, 1]");
      SSPInstance ssp;
      ssp.states = s;
      ssp.actions = spec.actions;
      ssp.noise = spec.noise;
      for (int u = 0; u < spec.actions; ++u) {
        Matrix k = Matrix::Zero(s, s);
        k(0, 0) = 1.0;
        for (int x = 1; x < s; ++x) {
          Vector row = (1.0 - spec.termination) * random_row(rng, s, spec.branching);
          row[0] += spec.termination;
          k.row(x) = row.transpose() / row.sum();
        }
        ssp.kernel.push_back(std::move(k));
      }
      ssp.cost = Matrix::Zero(s, spec.actions);
      for (int x = 1; x < s; ++x)
        for (int u = 0; u < spec.actions; ++u) ssp.cost(x, u) = rng.uniform();
      return ssp;
    }
    case Family::game: {
      if (s < 1 || spec.actions < 1 || spec.actions_min < 1)
        throw InvalidArgumentError("generator: game needs states and both action sets non-empty");
      MarkovGame game;
      game.states = s;
      game.actions_max = spec.actions;
      game.actions_min = spec.actions_min;
      game.discount = spec.discount;
      game.noise = spec.noise;
      const int pairs = spec.actions * spec.actions_min;
      for (int a = 0; a < pairs; ++a) {
        Matrix k(s, s);
        for (int x = 0; x < s; ++x) k.row(x) = random_row(rng, s, spec.branching).transpose();
        game.kernel.push_back(std::move(k));
      }
      game.reward = Matrix(s, pairs);
      for (int x = 0; x < s; ++x)
        for (int a = 0; a < pairs; ++a) game.reward(x, a) = 2.0 * rng.uniform() - 1.0;
      return game;
    }
    case Family::avgcost: {
      if (s < 1) throw InvalidArgumentError("generator: avgcost needs states >= 1");
      Matrix k(s, s);
      for (int x = 0; x < s; ++x) {
        Vector row = 0.65 * random_row(rng, s, spec.branching);
        row[(x + 1) % s] += 0.25;
        row[x] += 0.10;
        k.row(x) = row.transpose() / row.sum();
      }
      Vector c(s);
      for (int x = 0; x < s; ++x) c[x] = rng.uniform();
      return make_avgcost(std::move(k), std::move(c), spec.noise);
    }
  }
  throw InvalidArgumentError("generator: unknown family");
}

GeneratorSpec generator_from_json(const json& j) {
  const std::string p = "generator.";
  if (!j.is_object()) field_error("generator", "expected an object");
  GeneratorSpec g;
  const auto& fam = member(j, "family", p);
  if (!fam.is_string()) field_error(p + "family", "expected a string");
  g.family = family_from_string(fam.get<std::string>(), p + "family");
  g.states = as_int(member(j, "states", p), p + "states");
  if (j.contains("actions")) g.actions = as_int(j["actions"], p + "actions");
  if (j.contains("actions_max")) g.actions = as_int(j["actions_max"], p + "actions_max");
  if (j.contains("actions_min")) g.actions_min = as_int(j["actions_min"], p + "actions_min");
  if (j.contains("discount")) g.discount = as_number(j["discount"], p + "discount");
  if (j.contains("branching")) g.branching = as_int(j["branching"], p + "branching");
  if (j.contains("termination")) g.termination = as_number(j["termination"], p + "termination");
  if (j.contains("noise")) g.noise = noise_from_json(j["noise"], p + "noise");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) field_error(p + "seed", "expected an integer");
    g.seed = j["seed"].get<std::uint64_t>();
  }
  return g;
}

json generator_to_json(const GeneratorSpec& g) {
  return json{{"family", to_string(g.family)}, {"states", g.states},          {"actions", g.actions},
              {"actions_min", g.actions_min},  {"discount", g.discount},      {"branching", g.branching},
              {"termination", g.termination},  {"noise", noise_json(g.noise)}, {"seed", g.seed}};
}

Problem problem_from_json(const json& j) {
  if (!j.is_object()) field_error("problem", "expected an object");
  if (j.contains("generator")) return generate_problem(generator_from_json(j["generator"]));

  const std::string p;
  const auto& fam = member(j, "family", p);
  if (!fam.is_string()) field_error("family", "expected a string");
  const Family family = family_from_string(fam.get<std::string>(), "family");
  const NoiseModel noise = j.contains("noise") ? noise_from_json(j["noise"], "noise") : NoiseModel{NoiseFamily::none, 0.0};
  const int states = as_int(member(j, "states", p), "states");
  if (states < 1) field_error("states", "must be >= 1");
  const auto n = static_cast<std::size_t>(states);

  auto kernels = [&](int count) {
    const auto& k = member(j, "kernel", p);
    if (!k.is_array() || k.size() != static_cast<std::size_t>(count))
      field_error("kernel", "expected " + std::to_string(count) + " transition matrices");
    std::vector<Matrix> out;
    for (int a = 0; a < count; ++a) out.push_back(as_matrix(k[static_cast<std::size_t>(a)], n, n, "kernel[" + std::to_string(a) + "]"));
    return out;
  };

  switch (family) {
    case Family::mdp: {
      TabularMDP mdp;
      mdp.states = states;
      mdp.actions = as_int(member(j, "actions", p), "actions");
      if (mdp.actions < 1) field_error("actions", "must be >= 1");
      mdp.discount = as_number(member(j, "discount", p), "discount");
      mdp.kernel = kernels(mdp.actions);
      mdp.reward = as_matrix(member(j, "reward", p), n, static_cast<std::size_t>(mdp.actions), "reward");
      mdp.noise = noise;
      return mdp;
    }
    case Family::ssp: {
      SSPInstance ssp;
      ssp.states = states;
      ssp.actions = as_int(member(j, "actions", p), "actions");
      if (ssp.actions < 1) field_error("actions", "must be >= 1");
      ssp.kernel = kernels(ssp.actions);
      ssp.cost = as_matrix(member(j, "cost", p), n, static_cast<std::size_t>(ssp.actions), "cost");
      ssp.noise = noise;
      return ssp;
    }
    case Family::game: {
      MarkovGame game;
      game.states = states;
      game.actions_max = as_int(member(j, "actions_max", p), "actions_max");
      game.actions_min = as_int(member(j, "actions_min", p), "actions_min");
      if (game.actions_max < 1 || game.actions_min < 1) field_error("actions_max", "action sets must be non-empty");
      game.discount = as_number(member(j, "discount", p), "discount");
      // kernel[u1][u2] -> flattened
      const auto& k = member(j, "kernel", p);
      if (!k.is_array() || k.size() != static_cast<std::size_t>(game.actions_max))
        field_error("kernel", "expected actions_max blocks of actions_min matrices");
      for (int u1 = 0; u1 < game.actions_max; ++u1) {
        const auto& block = k[static_cast<std::size_t>(u1)];
        if (!block.is_array() || block.size() != static_cast<std::size_t>(game.actions_min))
          field_error("kernel[" + std::to_string(u1) + "]", "expected actions_min matrices");
        for (int u2 = 0; u2 < game.actions_min; ++u2)
          game.kernel.push_back(as_matrix(block[static_cast<std::size_t>(u2)], n, n,
                                          "kernel[" + std::to_string(u1) + "][" + std::to_string(u2) + "]"));
      }
      const auto& r = member(j, "reward", p);
      if (!r.is_array() || r.size() != n) field_error("reward", "expected one block per state");
      game.reward = Matrix(states, game.actions_max * game.actions_min);
      for (int x = 0; x < states; ++x) {
        const Matrix block = as_matrix(r[static_cast<std::size_t>(x)], static_cast<std::size_t>(game.actions_max),
                                       static_cast<std::size_t>(game.actions_min), "reward[" + std::to_string(x) + "]");
        for (int u1 = 0; u1 < game.actions_max; ++u1)
          for (int u2 = 0; u2 < game.actions_min; ++u2) game.reward(x, u1 * game.actions_min + u2) = block(u1, u2);
      }
      game.noise = noise;
      return game;
    }
    case Family::avgcost: {
      Matrix k = as_matrix(member(j, "kernel", p), n, n, "kernel");
      Vector c = as_vector(member(j, "cost", p), n, "cost");
      AvgCostMRP mrp;
      mrp.states = states;
      try {
        mrp.stationary = stationary_distribution(k);
      } catch (const Error&) {
        mrp.stationary = Vector();  // reported by check_problem
      }
      mrp.kernel = std::move(k);
      mrp.cost = std::move(c);
      mrp.noise = noise;
      return mrp;
    }
  }
  field_error("family", "unsupported");
}

json problem_to_json(const Problem& problem) {
  return std::visit(
      overloaded{
          [](const TabularMDP& m) {
            json k = json::array();
            for (const auto& mat : m.kernel) k.push_back(matrix_json(mat));
            return json{{"family", "mdp"},        {"states", m.states}, {"actions", m.actions},
                        {"discount", m.discount}, {"kernel", k},        {"reward", matrix_json(m.reward)},
                        {"noise", noise_json(m.noise)}};
          },
          [](const SSPInstance& m) {
            json k = json::array();
            for (const auto& mat : m.kernel) k.push_back(matrix_json(mat));
            return json{{"family", "ssp"}, {"states", m.states},           {"actions", m.actions},
                        {"kernel", k},     {"cost", matrix_json(m.cost)}, {"noise", noise_json(m.noise)}};
          },
          [](const MarkovGame& m) {
            json k = json::array();
            for (int u1 = 0; u1 < m.actions_max; ++u1) {
              json block = json::array();
              for (int u2 = 0; u2 < m.actions_min; ++u2)
                block.push_back(matrix_json(m.kernel[static_cast<std::size_t>(u1 * m.actions_min + u2)]));
              k.push_back(block);
            }
            json r = json::array();
            for (int x = 0; x < m.states; ++x) {
              Matrix block(m.actions_max, m.actions_min);
              for (int u1 = 0; u1 < m.actions_max; ++u1)
                for (int u2 = 0; u2 < m.actions_min; ++u2) block(u1, u2) = m.reward(x, u1 * m.actions_min + u2);
              r.push_back(matrix_json(block));
            }
            return json{{"family", "game"},       {"states", m.states}, {"actions_max", m.actions_max},
                        {"actions_min", m.actions_min}, {"discount", m.discount}, {"kernel", k},
                        {"reward", r},            {"noise", noise_json(m.noise)}};
          },
          [](const AvgCostMRP& m) {
            return json{{"family", "avgcost"},           {"states", m.states},
                        {"kernel", matrix_json(m.kernel)}, {"cost", vector_json(m.cost)},
                        {"noise", noise_json(m.noise)}};
          }},
      problem);
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgumentError("cannot open problem file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgumentError("problem file '" + path + "': " + e.what());
  }
  return problem_from_json(j);
}

}  // namespace rootsa
