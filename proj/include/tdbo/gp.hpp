#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "tdbo/kernel.hpp"
#include "tdbo/optimizer.hpp"
#include "tdbo/rng.hpp"

namespace tdbo {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordered observation history {(x_i, t_i), y_i}.
struct Dataset {
  std::vector<Point> points;
  std::vector<double> values;

  int size() const { return static_cast<int>(points.size()); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().x.size()); }
  void add(Point p, double y) {
    points.push_back(std::move(p));
    values.push_back(y);
  }
  void validate() const;
};

struct Hyperparams {
  KernelParams kernel;
  double noise_variance = 0.0;

  void validate() const;
};

struct PosteriorSummary {
  double mean = 0.0;
  double variance = 0.0;  // latent, excludes observation noise
};

struct PosteriorGradient {
  Eigen::VectorXd mean_grad;
  Eigen::VectorXd variance_grad;
  Eigen::VectorXd stddev_grad;
  bool stddev_degenerate = false;
};

// Scratch buffers for the posterior evaluation hot paths. Reusing one of
// these across calls keeps the inner optimization loops allocation-free.
struct GpWorkspace {
  Eigen::VectorXd k;
  Eigen::VectorXd gk;
  Eigen::ArrayXd acc;
  Eigen::MatrixXd jac;
};

// Immutable GP posterior snapshot with the inverse of (K + sigma_eps^2 I +
// jitter I) and the weight vector cached. Extension produces a new snapshot.
class PosteriorModel {
 public:
  PosteriorModel(Dataset dataset, Hyperparams hyperparams);

  int size() const { return static_cast<int>(values_.size()); }
  int dim() const { return static_cast<int>(x_matrix_.cols()); }
  const Dataset& dataset() const { return dataset_; }
  const Hyperparams& hyperparams() const { return hyperparams_; }
  const Eigen::MatrixXd& gram_inverse() const { return gram_inverse_; }
  const Eigen::VectorXd& alpha_weights() const { return alpha_; }
  double jitter() const { return jitter_; }
  // k(p, p) for any p; constant for the stationary product kernel.
  double prior_variance() const { return hyperparams_.kernel.x_signal_variance; }

  PosteriorSummary posterior_at(const Point& p) const;
  PosteriorSummary posterior_at(const Point& p, GpWorkspace& ws) const;

  PosteriorGradient posterior_grad_at(const Point& p) const;
  PosteriorGradient posterior_grad_at(const Point& p, GpWorkspace& ws) const;

  // Posterior mean and its action gradient only; no variance work.
  double mean_and_grad_at(const Point& p, Eigen::VectorXd& grad,
                          GpWorkspace& ws) const;

  // mu(p) + sqrt(latent variance + noise variance) * z: a reparameterized
  // draw of a noisy observation.
  double simulate_observation(const Point& p, double z) const;

  // Blockwise-inverse extension with one observation, O(n^2); falls back to
  // a dense rebuild when the Schur complement reaches the jitter floor.
  PosteriorModel extend_rank_one(const Point& p, double y) const;

  void covariance_row(const Point& p, Eigen::VectorXd& out) const;
  // Column d holds dk(p, p_i)/dx_d over the dataset.
  void covariance_jacobian(const Point& p, const Eigen::VectorXd& k_row,
                           Eigen::MatrixXd& out) const;

 private:
  PosteriorModel() = default;

  Dataset dataset_;
  Hyperparams hyperparams_;
  Eigen::MatrixXd x_matrix_;  // n x d actions
  Eigen::VectorXd t_vector_;  // n times
  Eigen::VectorXd values_;
  Eigen::MatrixXd gram_inverse_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

inline PosteriorModel build_model(Dataset dataset, Hyperparams hyperparams) {
  return PosteriorModel(std::move(dataset), std::move(hyperparams));
}

// ---- marginal likelihood and hyperparameter fitting -----------------------

struct LmlResult {
  double value = 0.0;
  Eigen::VectorXd grad_log;  // w.r.t. the log-hyperparameter vector
};

// Log-hyperparameter packing, in order: log x_lengthscales (d entries),
// log x_signal_variance, log t_param, log noise_variance. t_param is the
// time lengthscale for the squared-exponential form and the decay rate
// -log(1 - eps) for the forgetting form.
int n_log_hyperparams(const Hyperparams& prototype);
Eigen::VectorXd to_log_hyperparams(const Hyperparams& hp);
Hyperparams hyperparams_from_log(Hyperparams prototype,
                                 const Eigen::VectorXd& log_values);

LmlResult log_marginal_likelihood(const Dataset& dataset,
                                  const Hyperparams& hyperparams);

struct FitResult {
  Hyperparams hyperparams;
  bool improved = false;  // false means the warm start was returned as-is
};

// Multistart maximization of the log marginal likelihood over a box in log
// space. The warm start, when given, is always the first seed.
FitResult fit_hyperparameters(const Dataset& dataset,
                              const BoxDomain& log_bounds, int n_starts,
                              Rng& rng,
                              const Hyperparams* warm_start = nullptr);

// Data-driven starting hyperparameters and fit box: lengthscales relative to
// the domain edge lengths and the time span, variances relative to var(y).
Hyperparams default_hyperparams(const BoxDomain& domain, double time_span,
                                const Dataset& dataset);
BoxDomain default_fit_bounds(const Hyperparams& prototype,
                             const BoxDomain& domain, double time_span,
                             const Dataset& dataset);

}  // namespace tdbo
