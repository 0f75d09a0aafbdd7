// Acceptance suite: runs every headline check at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tdbo/bench.hpp"
#include "tdbo/parallel.hpp"

using namespace tdbo;

namespace {

using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(int id, bool pass, const std::string& what,
            const std::string& detail, double elapsed_s) {
  std::printf("%s  criterion %2d: %s (%s; %.1fs)\n", pass ? "PASS" : "FAIL", id,
              what.c_str(), detail.c_str(), elapsed_s);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

struct Timer {
  Clock::time_point t0 = Clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }
};

BoxDomain unit_interval() {
  BoxDomain b;
  b.lower = Eigen::VectorXd::Zero(1);
  b.upper = Eigen::VectorXd::Ones(1);
  return b;
}

Hyperparams quad_hp(double noise) {
  Hyperparams hp;
  hp.kernel.x_lengthscales = Eigen::VectorXd::Constant(1, 0.3);
  hp.kernel.x_signal_variance = 1.0;
  hp.kernel.t_lengthscale = 1.0;
  hp.noise_variance = noise;
  return hp;
}

PosteriorModel random_quad_d_state(Rng& rng, int n_min, int n_max) {
  const OracleSpec spec = make_oracle("quad-d");
  const int n = n_min + static_cast<int>(uniform01(rng) * (n_max - n_min));
  Dataset data;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, uniform01(rng));
    const double t = uniform(rng, 0.0, 2.5);
    data.add({x, t},
             eval_oracle(spec, x, t) + 0.05 * standard_normal(rng));
  }
  return build_model(std::move(data), quad_hp(0.0025));
}

// --- criterion 1: gradient/expectation interchange ------------------------

void criterion_1() {
  Timer timer;
  const BoxDomain box = unit_interval();
  Rng rng(101);
  const int n_states = 50;
  const double h = 1e-5;  // times the unit domain scale
  int passed = 0, discontinuities = 0, hard_failures = 0;

  for (int s = 0; s < n_states; ++s) {
    const PosteriorModel model = random_quad_d_state(rng, 15, 30);
    const double t_next = uniform(rng, 2.1, 3.5);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, uniform(rng, 0.05, 0.95));
    LookaheadConfig cfg;
    cfg.horizon_T = 4.0;
    cfg.mc_samples_M = 64;
    cfg.crn_seed = derive_seed(7001, s);

    const LookaheadEstimate est = r2ley_estimate(x, model, t_next, cfg, box);
    Eigen::VectorXd xp = x, xm = x;
    xp[0] += h;
    xm[0] -= h;
    R2leyDiagnostics dp, dm;
    const double fp = r2ley_estimate(xp, model, t_next, cfg, box, &dp).value;
    const double fm = r2ley_estimate(xm, model, t_next, cfg, box, &dm).value;
    const double fd = (fp - fm) / (xp[0] - xm[0]);
    const double denom = std::max({std::abs(est.grad[0]), std::abs(fd), 1e-8});
    if (std::abs(est.grad[0] - fd) / denom < 1e-3) {
      ++passed;
      continue;
    }
    // classify: did any sample's inner argmax jump between x-h and x+h?
    double max_jump = 0.0;
    for (std::size_t i = 0;
         i < std::min(dp.inner_argmax.size(), dm.inner_argmax.size()); ++i) {
      max_jump = std::max(
          max_jump, (dp.inner_argmax[i] - dm.inner_argmax[i]).norm());
    }
    if (max_jump > 0.02) {
      ++discontinuities;
      std::printf("       note: state %d FD mismatch at an inner-argmax jump "
                  "(|dx*| = %.3f)\n",
                  s, max_jump);
    } else {
      ++hard_failures;
      std::printf("       note: state %d FD mismatch without argmax jump "
                  "(grad %.6g vs fd %.6g)\n",
                  s, est.grad[0], fd);
    }
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "%d/%d within 1e-3, %d at argmax jumps, %d unexplained",
                passed, n_states, discontinuities, hard_failures);
  const double el = timer.elapsed();
  report(1, passed >= 48 && hard_failures == 0 && el < 300.0,
         "CRN-fixed r2LEY gradient matches central finite differences",
         detail, el);
}

// --- criterion 2: Monte Carlo consistency ----------------------------------

void criterion_2() {
  Timer timer;
  const BoxDomain box = unit_interval();
  Rng rng(202);
  int within = 0;
  const int n_states = 10;
  for (int s = 0; s < n_states; ++s) {
    const PosteriorModel model = random_quad_d_state(rng, 20, 35);
    const double t_next = uniform(rng, 2.1, 3.5);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, uniform(rng, 0.05, 0.95));

    LookaheadConfig small;
    small.horizon_T = 4.0;
    small.mc_samples_M = 10000;
    small.crn_seed = derive_seed(8001, s);
    LookaheadConfig large = small;
    large.mc_samples_M = 100000;
    large.crn_seed = derive_seed(9001, s);

    const LookaheadEstimate a = r2ley_estimate(x, model, t_next, small, box);
    const LookaheadEstimate b = r2ley_estimate(x, model, t_next, large, box);
    const double se = std::hypot(a.value_stderr, b.value_stderr);
    if (std::abs(a.value - b.value) < 3.0 * se) ++within;
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail), "%d/%d states within 3 stderr", within,
                n_states);
  report(2, within == n_states,
         "alpha_hat at M=1e4 consistent with an independent M=1e5 reference",
         detail, timer.elapsed());
}

// --- criterion 3: mean-preserving augmentation -----------------------------

void criterion_3() {
  Timer timer;
  const BoxDomain box = unit_interval();
  Rng rng(303);
  int ok = 0;
  double worst = 0.0;
  const int n_states = 20;
  for (int s = 0; s < n_states; ++s) {
    const PosteriorModel model = random_quad_d_state(rng, 15, 40);
    const double t_next = uniform(rng, 2.1, 3.9);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, uniform01(rng));
    LookaheadConfig cfg;
    cfg.horizon_T = 4.0;
    cfg.mc_samples_M = 1;
    cfg.crn_seed = derive_seed(333, s);
    cfg.crn_override = {0.0};
    const double estimate = r2ley_estimate(x, model, t_next, cfg, box).value;
    const double base =
        inner_max_posterior_mean(model, 4.0, box, cfg).g_star_value;
    const double err = std::abs(estimate - base);
    worst = std::max(worst, err);
    if (err <= 1e-6) ++ok;
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail), "%d/%d states, worst |diff| = %.2e",
                ok, n_states, worst);
  report(3, ok == n_states,
         "z=0, M=1 estimate equals the unaugmented posterior-mean maximum",
         detail, timer.elapsed());
}

// --- criterion 4: rank-one extension, accuracy and cost --------------------

PosteriorModel random_model_n(int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, uniform01(rng));
    data.add({x, uniform(rng, 0.0, 4.0)}, standard_normal(rng));
  }
  return build_model(std::move(data), quad_hp(0.01));
}

void criterion_4() {
  Timer timer;
  // accuracy: 30 sequential extensions vs the one-shot dense inverse
  Rng rng(404);
  Dataset data;
  const Hyperparams hp = quad_hp(0.01);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, uniform01(rng));
    data.add({x, uniform(rng, 0.0, 4.0)}, standard_normal(rng));
  }
  PosteriorModel model = build_model(data, hp);
  for (int i = 0; i < 30; ++i) {
    Point p{Eigen::VectorXd::Constant(1, uniform01(rng)),
            uniform(rng, 0.0, 4.0)};
    const double y = standard_normal(rng);
    data.add(p, y);
    model = model.extend_rank_one(p, y);
  }
  const PosteriorModel dense = build_model(data, hp);
  const double err = (model.gram_inverse() - dense.gram_inverse()).norm() /
                     dense.gram_inverse().norm();

  // cost: fitted log-log exponent from n = 50 to n = 400
  std::vector<double> log_n, log_t;
  for (int n : {50, 100, 200, 400}) {
    const PosteriorModel base = random_model_n(n, 1000 + n);
    const Point p{Eigen::VectorXd::Constant(1, 0.321), 2.718};
    volatile double sink = 0.0;
    double best = 1e300;
    for (int batch = 0; batch < 5; ++batch) {
      Timer t;
      for (int r = 0; r < 40; ++r) {
        const PosteriorModel ext = base.extend_rank_one(p, 0.5);
        sink = sink + ext.gram_inverse()(n, n);
      }
      best = std::min(best, t.elapsed() / 40.0);
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_t.push_back(std::log(best));
  }
  const int m = static_cast<int>(log_n.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    sx += log_n[i];
    sy += log_t[i];
    sxx += log_n[i] * log_n[i];
    sxy += log_n[i] * log_t[i];
  }
  const double exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);

  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "30-step inverse error %.2e, fitted cost exponent %.2f", err,
                exponent);
  report(4, err < 1e-8 && exponent < 2.5,
         "rank-one extension matches dense inverse and scales quadratically",
         detail, timer.elapsed());
}

// --- criterion 5: expected improvement closed form vs Monte Carlo ----------

void criterion_5() {
  Timer timer;
  Rng rng(505);
  int within = 0;
  const int n_triples = 20;
  for (int s = 0; s < n_triples; ++s) {
    const double mu = uniform(rng, -2.0, 2.0);
    const double sigma = uniform(rng, 0.05, 2.0);
    const double xi = uniform(rng, -2.0, 2.0);
    const int n = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double imp =
          std::max(mu + sigma * standard_normal(rng) - xi, 0.0);
      sum += imp;
      sq += imp * imp;
    }
    const double mc = sum / n;
    const double se =
        std::sqrt(std::max(sq / n - mc * mc, 0.0) / n);
    if (std::abs(ei(mu, sigma, xi) - mc) < 3.0 * se) ++within;
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail), "%d/%d triples within 3 stderr",
                within, n_triples);
  report(5, within >= 19, "closed-form EI matches E[(Y-xi)^+] by Monte Carlo",
         detail, timer.elapsed());
}

// --- criterion 6: marginal-likelihood gradient ------------------------------

void criterion_6() {
  Timer timer;
  Rng rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Dataset data;
    for (int i = 0; i < 10; ++i) {
      Eigen::VectorXd x(2);
      x << uniform01(rng), uniform01(rng);
      data.add({x, uniform(rng, 0.0, 4.0)}, standard_normal(rng));
    }
    Hyperparams hp;
    hp.kernel.x_lengthscales = Eigen::VectorXd::Constant(2, 0.7);
    hp.kernel.x_signal_variance = 1.3;
    hp.kernel.t_lengthscale = 1.1;
    hp.noise_variance = 0.05;
    const LmlResult r = log_marginal_likelihood(data, hp);
    const Eigen::VectorXd logv = to_log_hyperparams(hp);
    const double h = 1e-6;
    for (int j = 0; j < logv.size(); ++j) {
      Eigen::VectorXd vp = logv, vm = logv;
      vp[j] += h;
      vm[j] -= h;
      const double fd =
          (log_marginal_likelihood(data, hyperparams_from_log(hp, vp)).value -
           log_marginal_likelihood(data, hyperparams_from_log(hp, vm)).value) /
          (2.0 * h);
      const double denom =
          std::max({std::abs(r.grad_log[j]), std::abs(fd), 1e-6});
      worst = std::max(worst, std::abs(r.grad_log[j] - fd) / denom);
    }
  }
  char detail[80];
  std::snprintf(detail, sizeof(detail), "worst relative error %.2e", worst);
  report(6, worst < 1e-5,
         "log-marginal-likelihood gradient matches finite differences",
         detail, timer.elapsed());
}

// --- criteria 7 and 8: desk-scale regret reproduction -----------------------

double mean_regret(const std::string& case_name, Method method, int reps,
                   std::uint64_t seed) {
  RunConfig cfg;
  cfg.oracle = make_oracle(case_name);
  cfg.oracle.noise_stddev = 0.01 * probe_range(cfg.oracle);
  cfg.method = method;
  cfg.lookahead.mc_samples_M = 500;
  cfg.n_initial = 40;
  cfg.m_steps = 10;
  cfg.replications = reps;
  cfg.seed = seed;
  const auto rows = summarize(replicate(cfg));
  return rows.at(0).mean;
}

void criterion_7() {
  Timer timer;
  const std::uint64_t seed = 77007;
  const double r2ley = mean_regret("quad-d", Method::kR2ley, 20, seed);
  const double ei_m = mean_regret("quad-d", Method::kEiMuMax, 20, seed);
  const double ucb_m = mean_regret("quad-d", Method::kUcb, 20, seed);
  const double rnd_m = mean_regret("quad-d", Method::kRandom, 20, seed);
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "mean log10 regret: r2ley %.2f, ei %.2f, ucb %.2f, random %.2f",
                r2ley, ei_m, ucb_m, rnd_m);
  const bool pass = r2ley <= -1.5 && r2ley < ei_m && r2ley < ucb_m &&
                    r2ley < rnd_m && timer.elapsed() < 1800.0;
  report(7, pass,
         "desk-scale Quad-d: r2LEY clears -1.5 and beats EI, UCB, Random",
         detail, timer.elapsed());
}

void criterion_8() {
  Timer timer;
  const double qb = mean_regret("quad-b", Method::kR2ley, 10, 88008);
  const double qc = mean_regret("quad-c", Method::kR2ley, 10, 88009);
  char detail[120];
  std::snprintf(detail, sizeof(detail), "quad-b mean %.2f, quad-c mean %.2f",
                qb, qc);
  report(8, qb <= -0.4 && qc <= -0.6,
         "desk-scale Quad-b and Quad-c smoke bounds", detail, timer.elapsed());
}

// --- criterion 9: final decision oracle -------------------------------------

void criterion_9() {
  Timer timer;
  const OracleSpec spec = make_oracle("quad-d");
  Dataset data;
  for (int i = 0; i < 15; ++i) {
    for (int k = 0; k <= 8; ++k) {
      Eigen::VectorXd x = Eigen::VectorXd::Constant(1, i / 14.0);
      const double t = 4.0 * k / 8.0;
      data.add({x, t}, eval_oracle(spec, x, t));
    }
  }
  const PosteriorModel model = build_model(std::move(data), quad_hp(1e-8));
  LookaheadConfig cfg;
  cfg.horizon_T = 4.0;
  cfg.crn_seed = 909;
  const Eigen::VectorXd x = final_decision(model, 4.0, unit_interval(), cfg);
  const double target = 0.5 + std::sin(4.0) / 4.0;  // ~0.31080
  char detail[120];
  std::snprintf(detail, sizeof(detail), "decision %.5f vs oracle %.5f", x[0],
                target);
  report(9, std::abs(x[0] - target) < 0.02,
         "final decision on dense noiseless Quad-d hits the true maximizer",
         detail, timer.elapsed());
}

// --- criterion 10: end-to-end determinism -----------------------------------

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10() {
  Timer timer;
  const std::vector<std::string> base = {
      "suite",     "--cases",      "quad-d",       "--methods",
      "random,ucb,r2ley", "--reps", "2",           "--seed",
      "4242",      "--steps",      "3",            "--n-initial",
      "12",        "--mc-samples", "32",           "--fit-starts",
      "2"};
  auto args_a = base;
  args_a.insert(args_a.end(), {"--out", "acceptance_det_a"});
  auto args_b = base;
  args_b.insert(args_b.end(), {"--out", "acceptance_det_b"});
  const int rc_a = cli_main(args_a);
  const int rc_b = cli_main(args_b);
  const std::string ja = slurp("acceptance_det_a.records.jsonl");
  const std::string jb = slurp("acceptance_det_b.records.jsonl");
  const bool pass = rc_a == 0 && rc_b == 0 && !ja.empty() && ja == jb;
  char detail[120];
  std::snprintf(detail, sizeof(detail), "%zu bytes, byte-identical: %s",
                ja.size(), ja == jb ? "yes" : "NO");
  for (const char* f :
       {"acceptance_det_a.records.jsonl", "acceptance_det_a.summary.csv",
        "acceptance_det_b.records.jsonl", "acceptance_det_b.summary.csv"})
    std::remove(f);
  report(10, pass, "suite invoked twice emits byte-identical JSON-lines",
         detail, timer.elapsed());
}

}  // namespace

int main() {
  std::printf("acceptance suite (%d worker threads)\n", threads());
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
