// Times the serial reference sweep against the OpenMP sweep for the r2LEY
// Monte Carlo estimator and for the replication runner, and checks that both
// paths return identical values.

#include <chrono>
#include <cstdio>
#include <cmath>

#include "tdbo/bench.hpp"
#include "tdbo/lookahead.hpp"
#include "tdbo/parallel.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

tdbo::PosteriorModel quad_d_model(int n, std::uint64_t seed) {
  const tdbo::OracleSpec spec = tdbo::make_oracle("quad-d");
  tdbo::Rng rng(seed);
  tdbo::Dataset data;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(1);
    x[0] = tdbo::uniform(rng, 0.0, 1.0);
    const double t = 2.0 * i / (n - 1.0);
    data.add({x, t}, tdbo::eval_oracle(spec, x, t) +
                         0.03 * tdbo::standard_normal(rng));
  }
  tdbo::Hyperparams hp;
  hp.kernel.x_lengthscales = Eigen::VectorXd::Constant(1, 0.3);
  hp.kernel.x_signal_variance = 1.0;
  hp.kernel.t_lengthscale = 1.0;
  hp.noise_variance = 1e-3;
  return tdbo::build_model(std::move(data), hp);
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
  const tdbo::PosteriorModel model = quad_d_model(45, 7);
  const tdbo::BoxDomain domain = tdbo::make_oracle("quad-d").domain;
  Eigen::VectorXd x_next(1);
  x_next[0] = 0.4;

  std::printf("r2LEY Monte Carlo sweep, serial vs OpenMP (%d threads)\n",
              tdbo::threads());
  std::printf("%8s %12s %12s %9s %9s\n", "M", "serial[s]", "parallel[s]",
              "speedup", "match");
  for (int M : {250, 1000, 4000}) {
    tdbo::LookaheadConfig cfg;
    cfg.horizon_T = 4.0;
    cfg.mc_samples_M = M;
    cfg.crn_seed = 99;

    double t_serial = 1e300, t_parallel = 1e300;
    tdbo::LookaheadEstimate serial, parallel;
    for (int r = 0; r < reps; ++r) {
      auto t0 = Clock::now();
      serial = tdbo::r2ley_estimate_serial(x_next, model, 2.4, cfg, domain);
      t_serial = std::min(t_serial, seconds_since(t0));
      t0 = Clock::now();
      parallel = tdbo::r2ley_estimate(x_next, model, 2.4, cfg, domain);
      t_parallel = std::min(t_parallel, seconds_since(t0));
    }
    const bool match = serial.value == parallel.value &&
                       serial.grad == parallel.grad;
    std::printf("%8d %12.4f %12.4f %8.2fx %9s\n", M, t_serial, t_parallel,
                t_serial / t_parallel, match ? "exact" : "MISMATCH");
    if (!match) return 1;
  }

  std::printf("\nreplicate() scaling on quad-d (M=128, 8 reps)\n");
  tdbo::RunConfig cfg;
  cfg.oracle = tdbo::make_oracle("quad-d");
  cfg.oracle.noise_stddev = 0.04;
  cfg.method = tdbo::Method::kR2ley;
  cfg.lookahead.mc_samples_M = 128;
  cfg.n_initial = 20;
  cfg.m_steps = 4;
  cfg.replications = 8;
  cfg.seed = 11;

  tdbo::set_threads(1);
  auto t0 = Clock::now();
  auto serial_records = tdbo::replicate(cfg);
  const double t1 = seconds_since(t0);
  tdbo::set_threads(0);
  t0 = Clock::now();
  auto parallel_records = tdbo::replicate(cfg);
  const double t2 = seconds_since(t0);
  bool match = serial_records.size() == parallel_records.size();
  for (std::size_t i = 0; match && i < serial_records.size(); ++i)
    match = serial_records[i].regret == parallel_records[i].regret;
  std::printf("1 thread: %.2fs, %d threads: %.2fs, speedup %.2fx, %s\n", t1,
              tdbo::threads(), t2, t1 / t2, match ? "exact" : "MISMATCH");
  return match ? 0 : 1;
}
