#include "rootsa/oracle.hpp"

#include <cmath>
#include <sstream>

#include "rootsa/errors.hpp"

namespace rootsa {

namespace {

constexpr double kRowTol = 1e-12;

// Kernel row feeding each coordinate, in coordinate order.
std::vector<Vector> coordinate_rows(const Problem& problem) {
  std::vector<Vector> rows;
  if (const auto* m = std::get_if<TabularMDP>(&problem)) {
    for (int x = 0; x < m->states; ++x)
      for (int u = 0; u < m->actions; ++u) rows.emplace_back(m->kernel.at(static_cast<std::size_t>(u)).row(x));
  } else if (const auto* s = std::get_if<SSPInstance>(&problem)) {
    for (int x = 1; x < s->states; ++x)
      for (int u = 0; u < s->actions; ++u) rows.emplace_back(s->kernel.at(static_cast<std::size_t>(u)).row(x));
  } else if (const auto* g = std::get_if<MarkovGame>(&problem)) {
    const int pairs = g->actions_max * g->actions_min;
    for (int x = 0; x < g->states; ++x)
      for (int a = 0; a < pairs; ++a) rows.emplace_back(g->kernel.at(static_cast<std::size_t>(a)).row(x));
  } else {
    const auto& mrp = std::get<AvgCostMRP>(problem);
    for (int x = 0; x < mrp.states; ++x) rows.emplace_back(mrp.kernel.row(x));
  }
  return rows;
}

std::vector<std::vector<double>> build_cdfs(const Problem& problem) {
  auto rows = coordinate_rows(problem);
  if (rows.size() != problem_dim(problem)) throw DimensionError("draw_sample: kernel count does not match dimension");
  std::vector<std::vector<double>> cdfs;
  cdfs.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Vector& row = rows[i];
    if (!row.allFinite() || (row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > kRowTol) {
      std::ostringstream os;
      os.precision(17);
      os << "draw_sample: kernel row for coordinate " << i << " is not a distribution (sum " << row.sum() << ")";
      throw InvalidProblemError(os.str());
    }
    std::vector<double> cdf(static_cast<std::size_t>(row.size()));
    double acc = 0.0;
    for (Eigen::Index j = 0; j < row.size(); ++j) cdf[static_cast<std::size_t>(j)] = (acc += row[j]);
    cdfs.push_back(std::move(cdf));
  }
  return cdfs;
}

const NoiseModel& noise_of(const Problem& problem) {
  return std::visit([](const auto& p) -> const NoiseModel& { return p.noise; }, problem);
}

int inverse_cdf(const std::vector<double>& cdf, double u) {
  // scale by the row total so rounding in the last entry cannot fall off the end
  const double target = u * cdf.back();
  int last_positive = 0;
  for (std::size_t j = 0; j < cdf.size(); ++j) {
    const double prev = j == 0 ? 0.0 : cdf[j - 1];
    if (cdf[j] > prev) {
      last_positive = static_cast<int>(j);
      if (target < cdf[j]) return static_cast<int>(j);
    }
  }
  return last_positive;
}

GenerativeSample draw_with(const std::vector<std::vector<double>>& cdfs, const NoiseModel& noise, RngStream& rng) {
  GenerativeSample s;
  s.next_state.resize(cdfs.size());
  s.noise = Vector::Zero(static_cast<Eigen::Index>(cdfs.size()));
  const bool silent = noise.silent();
  for (std::size_t i = 0; i < cdfs.size(); ++i) {
    s.next_state[i] = inverse_cdf(cdfs[i], rng.uniform());
    if (!silent) s.noise[static_cast<Eigen::Index>(i)] = noise.draw(rng);
  }
  return s;
}

}  // namespace

GenerativeSample draw_sample(const Problem& problem, RngStream& rng) {
  return draw_with(build_cdfs(problem), noise_of(problem), rng);
}

Vector empirical_operator_at(const Problem& problem, const GenerativeSample& sample, const Vector& theta) {
  return empirical_operator(problem, sample, theta);
}

Vector empirical_mean_operator(const Problem& problem, const Vector& theta, long k, RngStream& rng) {
  if (k < 1) throw InvalidArgumentError("empirical_mean_operator: k must be >= 1");
  const auto cdfs = build_cdfs(problem);
  const auto& noise = noise_of(problem);
  Vector acc = Vector::Zero(theta.size());
  for (long i = 0; i < k; ++i) acc += empirical_operator(problem, draw_with(cdfs, noise, rng), theta);
  return acc / static_cast<double>(k);
}

std::string to_string(OracleMode mode) { return mode == OracleMode::exact ? "exact" : "generative"; }

OracleMode oracle_mode_from_string(const std::string& name) {
  if (name == "generative") return OracleMode::generative;
  if (name == "exact") return OracleMode::exact;
  throw InvalidArgumentError("unknown oracle mode '" + name + "' (expected generative or exact)");
}

GenerativeOracle::GenerativeOracle(Problem problem, OracleMode mode, std::uint64_t seed, std::uint64_t run)
    : problem_(std::move(problem)), mode_(mode), seed_(seed), run_(run), dim_(problem_dim(problem_)) {
  cdf_ = build_cdfs(problem_);
}

GenerativeSample GenerativeOracle::next() {
  RngStream rng(seed_, run_, counter_++);
  if (mode_ == OracleMode::exact) return {};
  return draw_with(cdf_, noise_of(problem_), rng);
}

Vector GenerativeOracle::apply(const GenerativeSample& sample, const Vector& theta) const {
  if (mode_ == OracleMode::exact) return population_operator(problem_, theta);
  return empirical_operator(problem_, sample, theta);
}

Vector GenerativeOracle::population(const Vector& theta) const { return population_operator(problem_, theta); }

}  // namespace rootsa
