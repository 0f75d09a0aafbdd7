#pragma once

#include <string>
#include <vector>

#include "tdbo/acquisition.hpp"
#include "tdbo/gp.hpp"
#include "tdbo/lookahead.hpp"
#include "tdbo/testbed.hpp"

namespace tdbo {

enum class Method { kEiMuMax, kPiMuMax, kUcb, kRandom, kRandomEi, kR2ley };

// CLI spellings: ei, pi, ucb, random, rei, r2ley.
std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::vector<Method> all_methods();

struct RunConfig {
  OracleSpec oracle;
  Method method = Method::kR2ley;
  AcquisitionParams acquisition;
  LookaheadConfig lookahead;
  int n_initial = 0;  // 0 resolves to (d+1)*20 for d <= 6, (d+1)*10 above
  int m_steps = 10;
  double t_train_end = 2.0;
  double horizon_T = 4.0;
  int replications = 20;
  std::uint64_t seed = 0;
  int fit_starts = 8;
  int refit_starts = 2;  // per-step refit, warm-started from the last fit
  bool latin_hypercube_init = false;
  bool record_timings = false;  // adds wall_clock_s to serialized records

  int resolved_n_initial() const;
  void validate() const;
};

struct StepRecord {
  double t = 0.0;
  Eigen::VectorXd x;
  double y = 0.0;
};

struct RunRecord {
  std::string case_name;
  std::string method;
  int replication = 0;
  std::uint64_t seed = 0;
  int dim = 0;
  std::vector<StepRecord> initial;
  std::vector<StepRecord> steps;
  Eigen::VectorXd x_final;
  double f_final = 0.0;
  double f_max = 0.0;
  double f_min = 0.0;
  double regret = 0.0;
  double wall_clock_s = 0.0;
  bool timings = false;
  bool failed = false;
  std::vector<std::string> warnings;
};

// log10((f_max - f_val) / (f_max - f_min)), the normalized gap clamped below
// at 1e-12 so landing on the maximizer stays finite.
double simple_regret(double f_max, double f_min, double f_val);

// Initial design over [0, t_train_end] plus the first hyperparameter fit;
// run_bo starts from exactly this state.
struct InitialState {
  Dataset data;
  Hyperparams hyperparams;
  std::vector<StepRecord> design;
};
InitialState bo_initial_state(const RunConfig& config, Rng& rng);

// One full Algorithm-1 run: initial design, hyperparameter fit, m scheduled
// proposals ending exactly at the horizon, final regret against noise-free
// extrema. Extrema are computed on demand when not supplied.
RunRecord run_bo(const RunConfig& config, Rng& rng,
                 const Extrema* extrema = nullptr);

// Independent replications on seeds derived from config.seed; executes on
// tdbo::threads() OpenMP threads with output ordered by replication index.
std::vector<RunRecord> replicate(const RunConfig& config);

struct SummaryRow {
  std::string case_name;
  int dim = 0;
  std::string method;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  int reps = 0;
};

// Regret statistics grouped by (case, method) in first-seen order; failed
// records are excluded from the statistics.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& line);
void write_records(const std::string& path,
                   const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records(const std::string& path);
std::string summary_to_csv(const std::vector<SummaryRow>& rows);

int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, char** argv);

}  // namespace tdbo
