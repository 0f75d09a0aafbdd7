#include "tdbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tdbo {

void BoxDomain::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size())
    throw std::invalid_argument("BoxDomain: bounds size mismatch");
  if (!lower.allFinite() || !upper.allFinite())
    throw std::invalid_argument("BoxDomain: bounds must be finite");
  if (((upper - lower).array() <= 0.0).any())
    throw std::invalid_argument("BoxDomain: need lb < ub elementwise");
}

Eigen::VectorXd BoxDomain::clamp(Eigen::VectorXd x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

bool BoxDomain::contains(const Eigen::VectorXd& x, double tol) const {
  return ((x - lower).array() >= -tol).all() &&
         ((upper - x).array() >= -tol).all();
}

std::vector<Eigen::VectorXd> multistart_seeds(
    const BoxDomain& domain, int n, Rng& rng,
    const std::vector<Eigen::VectorXd>& warm_starts) {
  domain.validate();
  if (n < 1) throw std::invalid_argument("multistart_seeds: n must be >= 1");
  const int d = domain.dim();

  // One stratum per seed and dimension, shuffled independently per dimension.
  std::vector<std::vector<int>> strata(d, std::vector<int>(n));
  for (int j = 0; j < d; ++j) {
    std::iota(strata[j].begin(), strata[j].end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const int k = static_cast<int>(uniform01(rng) * (i + 1));
      std::swap(strata[j][i], strata[j][std::min(k, i)]);
    }
  }

  std::vector<Eigen::VectorXd> seeds;
  seeds.reserve(static_cast<std::size_t>(n) + warm_starts.size());
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd p(d);
    for (int j = 0; j < d; ++j) {
      const double u = (strata[j][i] + uniform01(rng)) / n;
      p[j] = domain.lower[j] + (domain.upper[j] - domain.lower[j]) * u;
    }
    seeds.push_back(std::move(p));
  }
  for (const auto& w : warm_starts) seeds.push_back(domain.clamp(w));
  return seeds;
}

namespace {

// Gradient with components pointing out of the box zeroed at active bounds.
Eigen::VectorXd project_gradient(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& g,
                                 const BoxDomain& domain) {
  Eigen::VectorXd pg = g;
  for (int j = 0; j < x.size(); ++j) {
    if ((x[j] <= domain.lower[j] && g[j] < 0.0) ||
        (x[j] >= domain.upper[j] && g[j] > 0.0))
      pg[j] = 0.0;
  }
  return pg;
}

struct AscentOutcome {
  Eigen::VectorXd x;
  double value;
  int evaluations;
};

AscentOutcome ascend(const Objective& objective, const BoxDomain& domain,
                     Eigen::VectorXd x, const SearchConfig& config) {
  constexpr double kArmijo = 1e-4;
  const double box_scale = domain.scale();

  Eigen::VectorXd grad(x.size());
  double value = objective(x, grad);
  int evals = 1;
  double step = 0.0;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const Eigen::VectorXd pg = project_gradient(x, grad, domain);
    const double pg_norm = pg.norm();
    if (pg_norm < config.tolerance * std::max(1.0, std::abs(value))) break;

    if (step <= 0.0) step = 0.1 * box_scale / pg_norm;

    bool accepted = false;
    for (int bt = 0; bt < config.max_backtracks; ++bt) {
      const Eigen::VectorXd cand = domain.clamp(x + step * pg);
      const Eigen::VectorXd move = cand - x;
      if (move.norm() < 1e-15 * box_scale) break;  // pinned at the boundary
      Eigen::VectorXd cand_grad(x.size());
      const double cand_value = objective(cand, cand_grad);
      ++evals;
      if (cand_value >= value + kArmijo * move.dot(pg)) {
        x = cand;
        value = cand_value;
        grad = std::move(cand_grad);
        step = std::min(step * 2.0, 10.0 * box_scale / std::max(pg_norm, 1e-300));
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return {std::move(x), value, evals};
}

}  // namespace

SearchResult maximize_box(const Objective& objective, const BoxDomain& domain,
                          const std::vector<Eigen::VectorXd>& seeds,
                          const SearchConfig& config) {
  domain.validate();
  if (seeds.empty()) throw std::invalid_argument("maximize_box: no seeds");

  SearchResult best;
  best.value = -std::numeric_limits<double>::infinity();
  int total_evals = 0;
  std::size_t failures = 0;
  std::exception_ptr last_error;

  for (const auto& seed : seeds) {
    try {
      AscentOutcome out = ascend(objective, domain, domain.clamp(seed), config);
      total_evals += out.evaluations;
      if (out.value > best.value) {
        best.value = out.value;
        best.x = std::move(out.x);
      }
    } catch (...) {
      ++failures;
      last_error = std::current_exception();
    }
  }
  if (failures == seeds.size()) std::rethrow_exception(last_error);
  best.evaluations = total_evals;
  return best;
}

SearchResult maximize_box(const Objective& objective, const BoxDomain& domain,
                          int n_starts, Rng& rng, const SearchConfig& config) {
  return maximize_box(objective, domain,
                      multistart_seeds(domain, n_starts, rng), config);
}

}  // namespace tdbo
