#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tdbo/gp.hpp"
#include "tdbo/optimizer.hpp"
#include "tdbo/rng.hpp"

namespace tdbo {

enum class OracleKind { kSynthetic, kTabular };

enum class SyntheticFunction {
  kQuadraticA,
  kQuadraticB,
  kQuadraticC,
  kQuadraticD,
  kGriewank2,
  kHartmann3,
  kHartmann6,
  kLevy8,
  kStyblinskiTang10,
};

// A tabular payoff backed by a reference GP fitted once on the full table.
struct TabularOracle {
  std::vector<Point> rows;
  std::vector<double> values;
  std::shared_ptr<const PosteriorModel> reference;
  double snap_tolerance = 1e-6;  // relative to the (x, t) box diagonal
  double time_min = 0.0;
};

struct OracleSpec {
  std::string name;
  int dim = 1;
  BoxDomain domain;
  double horizon_T = 4.0;
  double noise_stddev = 0.0;
  OracleKind kind = OracleKind::kSynthetic;
  SyntheticFunction function = SyntheticFunction::kQuadraticD;
  std::shared_ptr<const TabularOracle> table;
};

// Registry of the synthetic test cases: quad-a, quad-b, quad-c, quad-d,
// griewank, hartmann3, hartmann6, levy8, styblinski-tang10.
OracleSpec make_oracle(const std::string& name);
std::vector<std::string> oracle_names();

// Noise-free payoff f(x, t). Throws on out-of-domain queries.
double eval_oracle(const OracleSpec& spec, const Eigen::VectorXd& x, double t);

// f(x, t) + noise_stddev * z with z standard normal from the rng.
double observe(const OracleSpec& spec, const Eigen::VectorXd& x, double t,
               Rng& rng);

struct Extrema {
  double f_max = 0.0;
  double f_min = 0.0;
};

// Extrema of f(., T) over the action box: dense grid plus local polish for
// d <= 2, multistart ascent plus a large stratified sweep above.
Extrema extrema_at_horizon(const OracleSpec& spec, double horizon_T);

// Noise level used by the benchmark when none is configured:
// fraction * (payoff range over a stratified probe of the whole space).
double probe_range(const OracleSpec& spec, int n_probe = 10000);

struct TableSchema {
  std::vector<std::string> x_columns;  // empty: take x1..xd from the header
  std::string t_column = "t";
  std::string y_column = "y";
  double snap_tolerance = 1e-6;
  int fit_starts = 4;
  std::uint64_t fit_seed = 42;
};

// CSV with header x1,...,xd,t,y (comma separated, '#' lines ignored). The
// reference GP fitted on the table serves as the ground truth for regret;
// observations snap to the nearest recorded row when within tolerance.
OracleSpec load_table_oracle(const std::string& path,
                             const TableSchema& schema = {});

}  // namespace tdbo
