#include "tdbo/testbed.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"

using namespace tdbo;

namespace {

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path = "tdbo_test_table_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("quadratic family closed forms") {
  const OracleSpec qd = make_oracle("quad-d");

  SUBCASE("quad-d vanishes at x = 0.5, t = 0") {
    CHECK(eval_oracle(qd, scalar(0.5), 0.0) == 0.0);
  }

  SUBCASE("quad-d along the stationary path gives sin t - 3/4 sin^2 t") {
    for (double t : {0.3, 1.1, 2.9, 4.0}) {
      const double st = std::sin(t);
      const double x = 0.5 + st / 4.0;
      CHECK(eval_oracle(qd, scalar(x), t) ==
            doctest::Approx(st - 0.75 * st * st).epsilon(1e-12));
    }
  }

  SUBCASE("quad-b at x = 0 is 0 for every t") {
    const OracleSpec qb = make_oracle("quad-b");
    for (double t : {0.0, 1.0, 2.5, 4.0}) {
      CHECK(eval_oracle(qb, scalar(0.0), t) ==
            doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  SUBCASE("quad-c is time-independent for t <= 3") {
    const OracleSpec qc = make_oracle("quad-c");
    for (double x : {0.0, 0.3, 0.85}) {
      const double at0 = eval_oracle(qc, scalar(x), 0.0);
      for (double t : {0.5, 1.5, 2.999, 3.0}) {
        CHECK(eval_oracle(qc, scalar(x), t) == at0);
      }
      CHECK(eval_oracle(qc, scalar(0.7), 3.8) !=
            eval_oracle(qc, scalar(0.7), 0.0));
    }
  }

  SUBCASE("time-independent part peaks at 0.5 (grid check)") {
    for (const char* name : {"quad-a", "quad-b", "quad-c", "quad-d"}) {
      const OracleSpec spec = make_oracle(name);
      // at t = 0 the a/b/c context terms reduce to constants in x only for
      // b and c; use the bare quadratic: f(x,0) - f_xt(x,0) is handled per
      // case, so instead check quad-b/c/d where f(x, 0) = -4(x-0.5)^2 + 1 or
      // + 0 is maximized at 0.5 on a fine grid.
      if (std::string(name) == "quad-a") continue;
      double best = -1e300, best_x = 0.0;
      for (int i = 0; i <= 10000; ++i) {
        const double x = i / 10000.0;
        const double v = eval_oracle(spec, scalar(x), 0.0);
        if (v > best) {
          best = v;
          best_x = x;
        }
      }
      CHECK(std::abs(best_x - 0.5) < 1e-4);
    }
  }
}

TEST_CASE("domains and registry") {
  CHECK(make_oracle("griewank").dim == 2);
  CHECK(make_oracle("hartmann3").dim == 3);
  CHECK(make_oracle("hartmann6").dim == 6);
  CHECK(make_oracle("levy8").dim == 8);
  CHECK(make_oracle("styblinski-tang10").dim == 10);
  CHECK(make_oracle("levy8").domain.lower[0] == -10.0);
  CHECK_THROWS_AS(make_oracle("nope"), std::invalid_argument);

  SUBCASE("higher-dimensional maximizers at t=0 match the published optima") {
    // the context term at t=0 vanishes, so f(., 0) peaks at the negated
    // benchmark's minimizer
    const OracleSpec g = make_oracle("griewank");
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
    const double at_opt = eval_oracle(g, origin, 0.0);
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
      Eigen::VectorXd x(2);
      x << uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0);
      CHECK(at_opt >= eval_oracle(g, x, 0.0));
    }

    const OracleSpec h3 = make_oracle("hartmann3");
    Eigen::VectorXd xh(3);
    xh << 0.114614, 0.555649, 0.852547;
    CHECK(eval_oracle(h3, xh, 0.0) == doctest::Approx(3.86278).epsilon(1e-4));

    const OracleSpec st = make_oracle("styblinski-tang10");
    Eigen::VectorXd xs = Eigen::VectorXd::Constant(10, -2.903534);
    CHECK(eval_oracle(st, xs, 0.0) ==
          doctest::Approx(39.16599 * 10).epsilon(1e-5));

    const OracleSpec lv = make_oracle("levy8");
    Eigen::VectorXd xl = Eigen::VectorXd::Ones(8);
    CHECK(eval_oracle(lv, xl, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("out-of-domain queries are rejected") {
  const OracleSpec qd = make_oracle("quad-d");
  CHECK_THROWS_AS(eval_oracle(qd, scalar(1.5), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eval_oracle(qd, scalar(0.5), 9.0), std::invalid_argument);
  CHECK_THROWS_AS(eval_oracle(qd, Eigen::VectorXd::Zero(2), 1.0),
                  std::invalid_argument);
}

TEST_CASE("observe") {
  OracleSpec qd = make_oracle("quad-d");

  SUBCASE("noiseless observation equals the payoff") {
    Rng rng(2);
    qd.noise_stddev = 0.0;
    CHECK(observe(qd, scalar(0.3), 1.2, rng) ==
          eval_oracle(qd, scalar(0.3), 1.2));
  }
  SUBCASE("seeded draws are reproducible") {
    qd.noise_stddev = 0.2;
    Rng a(3), b(3);
    CHECK(observe(qd, scalar(0.3), 1.2, a) == observe(qd, scalar(0.3), 1.2, b));
  }
  SUBCASE("empirical noise level within 2 percent") {
    qd.noise_stddev = 0.2;
    Rng rng(4);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double y = observe(qd, scalar(0.3), 1.2, rng);
      sum += y;
      sq += y * y;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(sd == doctest::Approx(0.2).epsilon(0.02));
  }
}

TEST_CASE("extrema at the horizon") {
  SUBCASE("quad-d at T = 4 matches the closed-form grid oracle") {
    const OracleSpec qd = make_oracle("quad-d");
    const Extrema e = extrema_at_horizon(qd, 4.0);
    const double st = std::sin(4.0);
    CHECK(e.f_max == doctest::Approx(st - 0.75 * st * st).epsilon(1e-6));
    // boundary minimum: min(f(0,4), f(1,4))
    const double f0 = -1.0 - st * st;
    const double f1 = -1.0 + 2.0 * st - st * st;
    CHECK(e.f_min == doctest::Approx(std::min(f0, f1)).epsilon(1e-6));
    CHECK(e.f_max == doctest::Approx(-1.1863).epsilon(1e-3));
  }

  SUBCASE("f_max dominates 10^4 random evaluations") {
    for (const char* name : {"quad-b", "griewank", "hartmann3"}) {
      const OracleSpec spec = make_oracle(name);
      const Extrema e = extrema_at_horizon(spec, 4.0);
      CHECK(e.f_max > e.f_min);
      Rng rng(5);
      for (const auto& x : multistart_seeds(spec.domain, 10000, rng)) {
        const double v = eval_oracle(spec, x, 4.0);
        CHECK(e.f_max >= v - 1e-9);
        CHECK(e.f_min <= v + 1e-9);
      }
    }
  }

  SUBCASE("every named function has a nondegenerate range") {
    for (const auto& name : oracle_names()) {
      const Extrema e = extrema_at_horizon(make_oracle(name), 4.0);
      CHECK(e.f_max > e.f_min);
    }
  }
}

TEST_CASE("tabular oracle") {
  // fixture drawn from quad-d on a grid
  const OracleSpec qd = make_oracle("quad-d");
  std::ostringstream csv;
  csv << "# quad-d fixture\n";
  csv << "x1,t,y\n";
  for (int i = 0; i <= 20; ++i) {
    for (int k = 0; k <= 16; ++k) {
      const double x = i / 20.0;
      const double t = 4.0 * k / 16.0;
      char buf[80];
      std::snprintf(buf, sizeof(buf), "%.12f,%.12f,%.12f\n", x, t,
                    eval_oracle(qd, scalar(x), t));
      csv << buf;
    }
  }
  const TempFile file(csv.str());

  SUBCASE("interpolates the generating function on held-out points") {
    const OracleSpec tab = load_table_oracle(file.path);
    CHECK(tab.dim == 1);
    CHECK(tab.horizon_T == doctest::Approx(4.0));
    const Extrema e = extrema_at_horizon(qd, 4.0);
    const double range = e.f_max - e.f_min;
    Rng rng(6);
    for (int i = 0; i < 40; ++i) {
      const double x = uniform(rng, 0.0, 1.0);
      const double t = uniform(rng, 0.0, 4.0);
      const double err =
          std::abs(eval_oracle(tab, scalar(x), t) - eval_oracle(qd, scalar(x), t));
      CHECK(err < 0.05 * range);
    }
  }

  SUBCASE("observation at a recorded row returns the recorded value") {
    OracleSpec tab = load_table_oracle(file.path);
    Rng rng(7);
    const double y = observe(tab, scalar(0.5), 2.0, rng);
    CHECK(y == doctest::Approx(eval_oracle(qd, scalar(0.5), 2.0)).epsilon(1e-12));
    // the fitted reference itself is close at anchors
    CHECK(eval_oracle(tab, scalar(0.5), 2.0) ==
          doctest::Approx(eval_oracle(qd, scalar(0.5), 2.0)).epsilon(0.05));
  }

  SUBCASE("non-numeric cell names row and column") {
    const TempFile bad("x1,t,y\n0.1,0.0,1.0\n0.2,oops,2.0\n");
    try {
      load_table_oracle(bad.path);
      FAIL("expected a parse error");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find(":3") != std::string::npos);
      CHECK(msg.find("'t'") != std::string::npos);
    }
  }

  SUBCASE("empty file is rejected") {
    const TempFile empty("");
    CHECK_THROWS_AS(load_table_oracle(empty.path), std::invalid_argument);
    const TempFile header_only("x1,t,y\n");
    CHECK_THROWS_AS(load_table_oracle(header_only.path), std::invalid_argument);
  }
}

TEST_CASE("probe range is positive and deterministic") {
  const OracleSpec qd = make_oracle("quad-d");
  const double r1 = probe_range(qd);
  const double r2 = probe_range(qd);
  CHECK(r1 == r2);
  CHECK(r1 > 3.0);  // global range of quad-d is about 4.3
  CHECK(r1 < 5.0);
}
