#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "tdbo/gp.hpp"
#include "tdbo/optimizer.hpp"

namespace tdbo {

enum class GradientMode {
  // Differentiates the covariance vector and the extended Gram inverse only,
  // holding the simulated observation fixed.
  kPaperFixedY,
  // Additionally propagates the reparameterized observation
  // y = mu + sigma_pred z through the estimate. Default; this is the mode
  // that matches finite differences under common random numbers.
  kFullReparameterized,
};

struct LookaheadConfig {
  double horizon_T = 4.0;
  int mc_samples_M = 5000;
  int inner_starts = 0;  // 0 resolves to 4 + d
  int outer_starts = 0;  // 0 resolves to 2 + d
  GradientMode gradient_mode = GradientMode::kFullReparameterized;
  std::uint64_t crn_seed = 0;
  // When non-empty, these values replace the seed-generated standard-normal
  // draws (diagnostic hook; e.g. a z = 0 sweep).
  std::vector<double> crn_override;
  SearchConfig inner_search{.max_iterations = 80, .tolerance = 1e-8};
  SearchConfig outer_search{.max_iterations = 60, .tolerance = 1e-5};

  void validate() const;
  int resolved_inner_starts(int dim) const {
    return inner_starts > 0 ? inner_starts : 4 + dim;
  }
  int resolved_outer_starts(int dim) const {
    return outer_starts > 0 ? outer_starts : 2 + dim;
  }
};

struct InnerMaxResult {
  Eigen::VectorXd x_q_star;
  double g_star_value = 0.0;
  bool fallback = false;  // dense sampling replaced a failed ascent
};

// Multistart gradient ascent of the posterior mean at the horizon.
// Deterministic given config.crn_seed.
InnerMaxResult inner_max_posterior_mean(const PosteriorModel& model_aug,
                                        double horizon_T,
                                        const BoxDomain& domain,
                                        const LookaheadConfig& config);

struct LookaheadEstimate {
  double value = 0.0;        // alpha_hat
  Eigen::VectorXd grad;      // grad_hat w.r.t. x_next
  double value_stderr = 0.0; // Monte Carlo standard error of value
  int fallback_samples = 0;
};

// Per-sample diagnostics, filled on request by r2ley_estimate.
struct R2leyDiagnostics {
  std::vector<double> nu;
  std::vector<Eigen::VectorXd> inner_argmax;
};

// Monte Carlo estimate of the two-step lookahead expected payoff at x_next
// and of its gradient. The M common-random-number draws come from
// config.crn_seed, each sample extends the model with one simulated
// observation and maximizes the resulting posterior mean at the horizon, and
// the reduction always sums in sample order, so results are bit-identical
// across runs and across thread counts. The sample sweep runs on
// tdbo::threads() OpenMP threads.
LookaheadEstimate r2ley_estimate(const Eigen::VectorXd& x_next,
                                 const PosteriorModel& model, double t_next,
                                 const LookaheadConfig& config,
                                 const BoxDomain& domain,
                                 R2leyDiagnostics* diagnostics = nullptr);

// Single-threaded reference sweep kept for testing and benchmarking; must
// produce output identical to r2ley_estimate.
LookaheadEstimate r2ley_estimate_serial(const Eigen::VectorXd& x_next,
                                        const PosteriorModel& model,
                                        double t_next,
                                        const LookaheadConfig& config,
                                        const BoxDomain& domain,
                                        R2leyDiagnostics* diagnostics = nullptr);

struct R2leyProposal {
  Eigen::VectorXd x;
  double alpha_hat = 0.0;
  bool fallback = false;
};

// Maximizes the Monte Carlo objective over the box with multistart gradient
// ascent; the CRN vector is held fixed across every evaluation, so the
// surrogate objective is smooth and deterministic.
R2leyProposal propose_r2ley(const PosteriorModel& model, double t_next,
                            const LookaheadConfig& config,
                            const BoxDomain& domain, Rng& rng);

// argmax of the posterior mean at the horizon: the decision made at T.
Eigen::VectorXd final_decision(const PosteriorModel& model, double horizon_T,
                               const BoxDomain& domain,
                               const LookaheadConfig& config);

}  // namespace tdbo
