#pragma once

#include <Eigen/Core>

#include "tdbo/gp.hpp"
#include "tdbo/optimizer.hpp"
#include "tdbo/rng.hpp"

namespace tdbo {

double normal_pdf(double z);
double normal_cdf(double z);

enum class AcquisitionKind { kEiMuMax, kPiMuMax, kUcb, kRandom, kRandomEi };

struct AcquisitionParams {
  AcquisitionKind kind = AcquisitionKind::kEiMuMax;
  double ucb_beta = 2.0;
  int n_starts = 8;
  SearchConfig search;
};

// Expected improvement over target xi: sigma phi(u) + (mu - xi) Phi(u),
// u = (mu - xi)/sigma; exact limit max(mu - xi, 0) at sigma = 0.
double ei(double mu, double sigma, double xi);

// Probability of improvement Phi((mu - xi)/sigma); indicator at sigma = 0.
double pi(double mu, double sigma, double xi);

// Upper confidence bound mu + sqrt(beta) sigma.
double ucb(double mu, double sigma, double beta);

struct TargetResult {
  double value = 0.0;
  bool fallback = false;  // optimizer failed; dense sampling was used
};

// Maximum of the posterior mean over the action box at fixed time t.
TargetResult target_mu_max(const PosteriorModel& model, double t,
                           const BoxDomain& domain, int n_starts, Rng& rng,
                           const SearchConfig& config = {});

struct Proposal {
  Eigen::VectorXd x;
  bool fallback = false;
};

// One myopic proposal at time t_next. EImumax/PImumax first set the target to
// the posterior-mean maximum at t_next, UCB needs no target, Random samples
// the box uniformly, and R-EI is Random except on the final step where it
// resolves to EImumax.
Proposal propose_myopic(const AcquisitionParams& params,
                        const PosteriorModel& model, double t_next,
                        const BoxDomain& domain, Rng& rng,
                        bool final_step = false);

}  // namespace tdbo
