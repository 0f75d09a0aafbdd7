#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "tdbo/rng.hpp"

namespace tdbo {

// Axis-aligned box of feasible actions.
struct BoxDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;  // lb < ub elementwise, all finite
  Eigen::VectorXd clamp(Eigen::VectorXd x) const;
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  // Mean edge length; used to scale step sizes and tolerances.
  double scale() const { return (upper - lower).mean(); }
};

// Objective fills `grad` and returns the value. Maximization throughout.
using Objective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct SearchConfig {
  int max_iterations = 200;
  double tolerance = 1e-6;  // on the projected gradient, times value scale
  int max_backtracks = 40;
};

struct SearchResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

// Stratified (Latin hypercube) starting points, plus any warm starts clamped
// into the box. Deterministic given the rng state.
std::vector<Eigen::VectorXd> multistart_seeds(
    const BoxDomain& domain, int n, Rng& rng,
    const std::vector<Eigen::VectorXd>& warm_starts = {});

// Projected-gradient ascent with Armijo backtracking from each seed; best
// terminal point wins, lowest seed index breaking exact ties. A seed whose
// objective throws is skipped; if every seed throws, the error is rethrown.
SearchResult maximize_box(const Objective& objective, const BoxDomain& domain,
                          const std::vector<Eigen::VectorXd>& seeds,
                          const SearchConfig& config = {});

SearchResult maximize_box(const Objective& objective, const BoxDomain& domain,
                          int n_starts, Rng& rng,
                          const SearchConfig& config = {});

}  // namespace tdbo
