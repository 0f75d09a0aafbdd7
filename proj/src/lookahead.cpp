#include "tdbo/lookahead.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tdbo/parallel.hpp"

namespace tdbo {
namespace {

constexpr std::uint64_t kInnerSeedStream = 0x1a2b3c4d;
constexpr std::uint64_t kDenseFallbackStream = 0x0fa11bac;

std::vector<Eigen::VectorXd> inner_seeds(const LookaheadConfig& config,
                                         const BoxDomain& domain) {
  Rng rng(derive_seed(config.crn_seed, kInnerSeedStream));
  return multistart_seeds(domain, config.resolved_inner_starts(domain.dim()),
                          rng);
}

InnerMaxResult inner_max_with_seeds(const PosteriorModel& model_aug,
                                    double horizon_T, const BoxDomain& domain,
                                    const LookaheadConfig& config,
                                    const std::vector<Eigen::VectorXd>& seeds) {
  GpWorkspace ws;
  const Objective objective = [&](const Eigen::VectorXd& x,
                                  Eigen::VectorXd& grad) {
    return model_aug.mean_and_grad_at({x, horizon_T}, grad, ws);
  };
  try {
    SearchResult r = maximize_box(objective, domain, seeds, config.inner_search);
    return {std::move(r.x), r.value, false};
  } catch (const std::exception&) {
    // Dense sweep fallback over a deterministic stratified sample.
    Rng rng(derive_seed(config.crn_seed, kDenseFallbackStream));
    auto candidates = multistart_seeds(domain, 512, rng);
    InnerMaxResult best;
    best.g_star_value = -std::numeric_limits<double>::infinity();
    best.fallback = true;
    for (auto& c : candidates) {
      const double v = model_aug.posterior_at({c, horizon_T}, ws).mean;
      if (v > best.g_star_value) {
        best.g_star_value = v;
        best.x_q_star = std::move(c);
      }
    }
    return best;
  }
}

// Quantities at x_next shared by all M samples.
struct NextPointContext {
  Point p_next;
  double mu_next = 0.0;
  double sigma_pred = 0.0;  // sqrt(latent + noise variance)
  Eigen::VectorXd mean_grad;        // d mu / d x_next
  Eigen::VectorXd sigma_pred_grad;  // d sigma_pred / d x_next (0 if degenerate)
  Eigen::MatrixXd cov_jacobian;     // n x d: d k(p_next, p_i) / d x_next
};

NextPointContext make_context(const Eigen::VectorXd& x_next,
                              const PosteriorModel& model, double t_next) {
  NextPointContext ctx;
  ctx.p_next = Point{x_next, t_next};
  GpWorkspace ws;
  const PosteriorSummary ps = model.posterior_at(ctx.p_next, ws);
  const PosteriorGradient pg = model.posterior_grad_at(ctx.p_next, ws);
  ctx.mu_next = ps.mean;
  ctx.sigma_pred =
      std::sqrt(ps.variance + model.hyperparams().noise_variance);
  ctx.mean_grad = pg.mean_grad;
  if (ctx.sigma_pred > 1e-12) {
    ctx.sigma_pred_grad = pg.variance_grad / (2.0 * ctx.sigma_pred);
  } else {
    ctx.sigma_pred_grad = Eigen::VectorXd::Zero(x_next.size());
  }
  Eigen::VectorXd k_row;
  model.covariance_row(ctx.p_next, k_row);
  model.covariance_jacobian(ctx.p_next, k_row, ctx.cov_jacobian);
  return ctx;
}

struct SampleOutcome {
  double nu = 0.0;
  Eigen::VectorXd dnu;
  Eigen::VectorXd x_star;
  bool fallback = false;
  bool failed = false;
};

// One Algorithm-2 iteration: simulate y, extend the model by one rank,
// maximize the augmented posterior mean at T, and differentiate the maximum
// with respect to x_next (envelope theorem: x_q* is held fixed).
SampleOutcome simulate_sample(const PosteriorModel& model,
                              const NextPointContext& ctx, double z,
                              const LookaheadConfig& config,
                              const BoxDomain& domain,
                              const std::vector<Eigen::VectorXd>& seeds) {
  SampleOutcome out;
  try {
    const double y = ctx.mu_next + ctx.sigma_pred * z;
    const PosteriorModel aug = model.extend_rank_one(ctx.p_next, y);
    const InnerMaxResult inner =
        inner_max_with_seeds(aug, config.horizon_T, domain, config, seeds);
    out.nu = inner.g_star_value;
    out.x_star = inner.x_q_star;
    out.fallback = inner.fallback;

    const int n = model.size();
    const Point p_star{inner.x_q_star, config.horizon_T};
    Eigen::VectorXd k_aug;
    aug.covariance_row(p_star, k_aug);
    const Eigen::VectorXd c = aug.gram_inverse() * k_aug;
    const Eigen::VectorXd& alpha = aug.alpha_weights();

    // d k(p_star, p_next) / d x_next
    const Eigen::VectorXd dk_last =
        grad_k_wrt_x(ctx.p_next, p_star, model.hyperparams().kernel);

    out.dnu = alpha[n] * dk_last;
    // dK^-1 = -K^-1 dK K^-1 with dK nonzero only in the last row/column
    out.dnu.noalias() -=
        c[n] * (ctx.cov_jacobian.transpose() * alpha.head(n)) +
        alpha[n] * (ctx.cov_jacobian.transpose() * c.head(n));
    if (config.gradient_mode == GradientMode::kFullReparameterized) {
      out.dnu.noalias() +=
          c[n] * (ctx.mean_grad + z * ctx.sigma_pred_grad);
    }
  } catch (const std::exception&) {
    out.failed = true;
  }
  return out;
}

LookaheadEstimate reduce_outcomes(const std::vector<SampleOutcome>& outcomes,
                                  int dim, R2leyDiagnostics* diagnostics) {
  LookaheadEstimate est;
  est.grad = Eigen::VectorXd::Zero(dim);
  double nu_sum = 0.0;
  double nu_sq_sum = 0.0;
  int ok = 0;
  // Fixed index order keeps the reduction independent of thread scheduling.
  for (const auto& o : outcomes) {
    if (o.failed) continue;
    ++ok;
    nu_sum += o.nu;
    nu_sq_sum += o.nu * o.nu;
    est.grad += o.dnu;
    if (o.fallback) ++est.fallback_samples;
  }
  if (ok == 0)
    throw NumericalError("r2ley_estimate: every Monte Carlo sample failed");
  est.value = nu_sum / ok;
  est.grad /= ok;
  if (ok > 1) {
    const double var =
        std::max(nu_sq_sum - ok * est.value * est.value, 0.0) / (ok - 1);
    est.value_stderr = std::sqrt(var / ok);
  }
  if (diagnostics != nullptr) {
    diagnostics->nu.clear();
    diagnostics->inner_argmax.clear();
    for (const auto& o : outcomes) {
      if (o.failed) continue;
      diagnostics->nu.push_back(o.nu);
      diagnostics->inner_argmax.push_back(o.x_star);
    }
  }
  return est;
}

LookaheadEstimate estimate_impl(const Eigen::VectorXd& x_next,
                                const PosteriorModel& model, double t_next,
                                const LookaheadConfig& config,
                                const BoxDomain& domain,
                                R2leyDiagnostics* diagnostics, bool parallel) {
  config.validate();
  domain.validate();
  if (t_next > config.horizon_T + 1e-12)
    throw std::invalid_argument("r2ley_estimate: t_next beyond horizon");

  const NextPointContext ctx = make_context(x_next, model, t_next);
  std::vector<Eigen::VectorXd> seeds = inner_seeds(config, domain);
  // Warm start every sample from the unaugmented maximizer; it is shared by
  // all samples so the sweep stays order-independent.
  seeds.push_back(
      inner_max_with_seeds(model, config.horizon_T, domain, config, seeds)
          .x_q_star);

  const std::vector<double> z =
      config.crn_override.empty()
          ? standard_normal_vector(config.crn_seed, config.mc_samples_M)
          : config.crn_override;
  if (static_cast<int>(z.size()) < config.mc_samples_M)
    throw std::invalid_argument("r2ley_estimate: crn_override shorter than M");
  std::vector<SampleOutcome> outcomes(config.mc_samples_M);

  if (parallel && threads() > 1) {
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads())
    for (int i = 0; i < config.mc_samples_M; ++i)
      outcomes[i] = simulate_sample(model, ctx, z[i], config, domain, seeds);
  } else {
    for (int i = 0; i < config.mc_samples_M; ++i)
      outcomes[i] = simulate_sample(model, ctx, z[i], config, domain, seeds);
  }
  return reduce_outcomes(outcomes, static_cast<int>(x_next.size()), diagnostics);
}

}  // namespace

void LookaheadConfig::validate() const {
  if (mc_samples_M < 1)
    throw std::invalid_argument("LookaheadConfig: mc_samples_M must be >= 1");
  if (!std::isfinite(horizon_T))
    throw std::invalid_argument("LookaheadConfig: horizon must be finite");
}

InnerMaxResult inner_max_posterior_mean(const PosteriorModel& model_aug,
                                        double horizon_T,
                                        const BoxDomain& domain,
                                        const LookaheadConfig& config) {
  LookaheadConfig cfg = config;
  cfg.horizon_T = horizon_T;
  return inner_max_with_seeds(model_aug, horizon_T, domain, cfg,
                              inner_seeds(cfg, domain));
}

LookaheadEstimate r2ley_estimate(const Eigen::VectorXd& x_next,
                                 const PosteriorModel& model, double t_next,
                                 const LookaheadConfig& config,
                                 const BoxDomain& domain,
                                 R2leyDiagnostics* diagnostics) {
  return estimate_impl(x_next, model, t_next, config, domain, diagnostics,
                       /*parallel=*/true);
}

LookaheadEstimate r2ley_estimate_serial(const Eigen::VectorXd& x_next,
                                        const PosteriorModel& model,
                                        double t_next,
                                        const LookaheadConfig& config,
                                        const BoxDomain& domain,
                                        R2leyDiagnostics* diagnostics) {
  return estimate_impl(x_next, model, t_next, config, domain, diagnostics,
                       /*parallel=*/false);
}

R2leyProposal propose_r2ley(const PosteriorModel& model, double t_next,
                            const LookaheadConfig& config,
                            const BoxDomain& domain, Rng& rng) {
  config.validate();
  domain.validate();

  const Objective objective = [&](const Eigen::VectorXd& x,
                                  Eigen::VectorXd& grad) {
    LookaheadEstimate est = r2ley_estimate(x, model, t_next, config, domain);
    grad = std::move(est.grad);
    return est.value;
  };

  const int starts = config.resolved_outer_starts(domain.dim());
  try {
    SearchResult r = maximize_box(objective, domain,
                                  multistart_seeds(domain, starts, rng),
                                  config.outer_search);
    return {std::move(r.x), r.value, false};
  } catch (const std::exception&) {
    // Rare: score a stratified candidate set without gradients.
    auto candidates = multistart_seeds(domain, 64, rng);
    R2leyProposal best;
    best.alpha_hat = -std::numeric_limits<double>::infinity();
    best.fallback = true;
    for (auto& c : candidates) {
      try {
        const double v = r2ley_estimate(c, model, t_next, config, domain).value;
        if (v > best.alpha_hat) {
          best.alpha_hat = v;
          best.x = std::move(c);
        }
      } catch (const std::exception&) {
      }
    }
    if (!std::isfinite(best.alpha_hat))
      throw NumericalError("propose_r2ley: no evaluable candidate");
    return best;
  }
}

Eigen::VectorXd final_decision(const PosteriorModel& model, double horizon_T,
                               const BoxDomain& domain,
                               const LookaheadConfig& config) {
  return inner_max_posterior_mean(model, horizon_T, domain, config).x_q_star;
}

}  // namespace tdbo
