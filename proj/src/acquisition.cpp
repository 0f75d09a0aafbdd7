#include "tdbo/acquisition.hpp"

#include <cmath>
#include <stdexcept>

namespace tdbo {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

// Best of a stratified sample sweep; used when gradient ascent fails.
Eigen::VectorXd dense_argmax(const PosteriorModel& model, double t,
                             const BoxDomain& domain, Rng& rng,
                             const std::function<double(double, double)>& score) {
  GpWorkspace ws;
  auto candidates = multistart_seeds(domain, 512, rng);
  Eigen::VectorXd best = candidates.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    const PosteriorSummary ps = model.posterior_at({c, t}, ws);
    const double s = score(ps.mean, std::sqrt(ps.variance));
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double ei(double mu, double sigma, double xi) {
  if (sigma < 0.0) throw std::invalid_argument("ei: sigma must be >= 0");
  if (sigma == 0.0) return std::max(mu - xi, 0.0);
  const double u = (mu - xi) / sigma;
  return std::max(sigma * normal_pdf(u) + (mu - xi) * normal_cdf(u), 0.0);
}

double pi(double mu, double sigma, double xi) {
  if (sigma < 0.0) throw std::invalid_argument("pi: sigma must be >= 0");
  if (sigma == 0.0) return mu >= xi ? 1.0 : 0.0;
  return normal_cdf((mu - xi) / sigma);
}

double ucb(double mu, double sigma, double beta) {
  if (sigma < 0.0) throw std::invalid_argument("ucb: sigma must be >= 0");
  if (beta <= 0.0) throw std::invalid_argument("ucb: beta must be > 0");
  return mu + std::sqrt(beta) * sigma;
}

TargetResult target_mu_max(const PosteriorModel& model, double t,
                           const BoxDomain& domain, int n_starts, Rng& rng,
                           const SearchConfig& config) {
  GpWorkspace ws;
  const Objective objective = [&](const Eigen::VectorXd& x,
                                  Eigen::VectorXd& grad) {
    return model.mean_and_grad_at({x, t}, grad, ws);
  };
  try {
    SearchResult r = maximize_box(objective, domain, n_starts, rng, config);
    return {r.value, false};
  } catch (const std::exception&) {
    const Eigen::VectorXd x = dense_argmax(
        model, t, domain, rng, [](double mu, double) { return mu; });
    return {model.posterior_at({x, t}).mean, true};
  }
}

Proposal propose_myopic(const AcquisitionParams& params,
                        const PosteriorModel& model, double t_next,
                        const BoxDomain& domain, Rng& rng, bool final_step) {
  domain.validate();

  AcquisitionKind kind = params.kind;
  if (kind == AcquisitionKind::kRandomEi)
    kind = final_step ? AcquisitionKind::kEiMuMax : AcquisitionKind::kRandom;

  if (kind == AcquisitionKind::kRandom) {
    Eigen::VectorXd x(domain.dim());
    for (int j = 0; j < domain.dim(); ++j)
      x[j] = uniform(rng, domain.lower[j], domain.upper[j]);
    return {std::move(x), false};
  }

  bool fallback = false;
  double xi = 0.0;
  if (kind == AcquisitionKind::kEiMuMax || kind == AcquisitionKind::kPiMuMax) {
    TargetResult tr =
        target_mu_max(model, t_next, domain, params.n_starts, rng, params.search);
    xi = tr.value;
    fallback = tr.fallback;
  }

  GpWorkspace ws;
  const double beta = params.ucb_beta;
  // score value and gradient via the chain rule through (mu, sigma)
  const Objective objective = [&](const Eigen::VectorXd& x,
                                  Eigen::VectorXd& grad) -> double {
    const Point p{x, t_next};
    const PosteriorSummary ps = model.posterior_at(p, ws);
    const PosteriorGradient pg = model.posterior_grad_at(p, ws);
    const double sigma = std::sqrt(ps.variance);
    switch (kind) {
      case AcquisitionKind::kEiMuMax: {
        if (sigma == 0.0) {
          grad = pg.mean_grad * (ps.mean > xi ? 1.0 : 0.0);
          return std::max(ps.mean - xi, 0.0);
        }
        const double u = (ps.mean - xi) / sigma;
        grad = normal_cdf(u) * pg.mean_grad + normal_pdf(u) * pg.stddev_grad;
        return ei(ps.mean, sigma, xi);
      }
      case AcquisitionKind::kPiMuMax: {
        if (sigma == 0.0) {
          grad = Eigen::VectorXd::Zero(x.size());
          return ps.mean >= xi ? 1.0 : 0.0;
        }
        const double u = (ps.mean - xi) / sigma;
        grad = normal_pdf(u) * (pg.mean_grad - u * pg.stddev_grad) / sigma;
        return pi(ps.mean, sigma, xi);
      }
      case AcquisitionKind::kUcb:
        grad = pg.mean_grad + std::sqrt(beta) * pg.stddev_grad;
        return ucb(ps.mean, sigma, beta);
      default:
        throw std::logic_error("propose_myopic: unreachable");
    }
  };

  try {
    SearchResult r =
        maximize_box(objective, domain, params.n_starts, rng, params.search);
    return {std::move(r.x), fallback};
  } catch (const std::exception&) {
    Eigen::VectorXd x = dense_argmax(
        model, t_next, domain, rng, [&](double mu, double sigma) {
          switch (kind) {
            case AcquisitionKind::kEiMuMax: return ei(mu, sigma, xi);
            case AcquisitionKind::kPiMuMax: return pi(mu, sigma, xi);
            default: return ucb(mu, sigma, beta);
          }
        });
    return {std::move(x), true};
  }
}

}  // namespace tdbo
