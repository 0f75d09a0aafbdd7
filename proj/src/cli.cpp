#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdbo/bench.hpp"
#include "tdbo/parallel.hpp"

namespace tdbo {
namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CliOptions {
  std::string case_name = "quad-d";
  std::string cases = "quad-b,quad-c,quad-d";
  std::string method = "r2ley";
  std::string methods = "ei,pi,ucb,random,rei,r2ley";
  int reps = 20;
  std::uint64_t seed = 0;
  int mc_samples = 500;  // desk default; the paper setting is 5000
  int steps = 10;
  double horizon = 4.0;
  double train_end = 2.0;
  double noise = -1.0;  // < 0: 0.01 * payoff range over a space-time probe
  int n_initial = 0;
  int fit_starts = 8;
  int threads_opt = 0;
  bool timings = false;
  bool latin = false;
  std::string out = "tdbo-out";
  std::string config_path;
  std::vector<std::string> record_files;

  // tabular oracle
  std::string table_path;
  std::string table_t_column = "t";
  std::string table_y_column = "y";
  double table_snap = 1e-6;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Config-file values fill whatever was not given explicitly on the command
// line; flags win over the file.
void apply_config_file(CliOptions& opt, const CLI::App* cmd) {
  if (opt.config_path.empty()) return;
  std::ifstream in(opt.config_path);
  if (!in)
    throw CLI::ValidationError("--config",
                               "cannot open config file " + opt.config_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--config", opt.config_path + ": " + e.what());
  }
  const auto unset = [&](const std::string& flag) {
    const CLI::Option* o = cmd->get_option_no_throw(flag);
    return o == nullptr || o->count() == 0;
  };
  auto load = [&](const char* key, const char* flag, auto& target) {
    if (j.contains(key) && unset(flag))
      target = j[key].get<std::remove_reference_t<decltype(target)>>();
  };
  load("case", "--case", opt.case_name);
  load("cases", "--cases", opt.cases);
  load("method", "--method", opt.method);
  load("methods", "--methods", opt.methods);
  load("reps", "--reps", opt.reps);
  load("seed", "--seed", opt.seed);
  load("mc_samples", "--mc-samples", opt.mc_samples);
  load("steps", "--steps", opt.steps);
  load("horizon", "--horizon", opt.horizon);
  load("train_end", "--train-end", opt.train_end);
  load("noise", "--noise", opt.noise);
  load("n_initial", "--n-initial", opt.n_initial);
  load("fit_starts", "--fit-starts", opt.fit_starts);
  load("threads", "--threads", opt.threads_opt);
  load("timings", "--timings", opt.timings);
  load("latin_hypercube", "--latin-hypercube", opt.latin);
  load("out", "--out", opt.out);
  if (j.contains("table")) {
    const json& t = j["table"];
    opt.table_path = t.at("path").get<std::string>();
    if (t.contains("t_column"))
      opt.table_t_column = t["t_column"].get<std::string>();
    if (t.contains("y_column"))
      opt.table_y_column = t["y_column"].get<std::string>();
    if (t.contains("snap_tolerance"))
      opt.table_snap = t["snap_tolerance"].get<double>();
  }
}

OracleSpec resolve_oracle(const CliOptions& opt, const std::string& name) {
  OracleSpec spec;
  if (!opt.table_path.empty()) {
    TableSchema schema;
    schema.t_column = opt.table_t_column;
    schema.y_column = opt.table_y_column;
    schema.snap_tolerance = opt.table_snap;
    spec = load_table_oracle(opt.table_path, schema);
  } else {
    spec = make_oracle(name);
  }
  spec.noise_stddev =
      opt.noise >= 0.0 ? opt.noise : 0.01 * probe_range(spec);
  return spec;
}

RunConfig make_config(const CliOptions& opt, const OracleSpec& oracle,
                      Method method, std::uint64_t seed) {
  RunConfig cfg;
  cfg.oracle = oracle;
  cfg.method = method;
  cfg.lookahead.mc_samples_M = opt.mc_samples;
  cfg.n_initial = opt.n_initial;
  cfg.m_steps = opt.steps;
  cfg.t_train_end =
      oracle.kind == OracleKind::kTabular
          ? oracle.table->time_min +
                0.5 * (oracle.horizon_T - oracle.table->time_min)
          : opt.train_end;
  cfg.horizon_T = std::min(opt.horizon, oracle.horizon_T);
  cfg.replications = opt.reps;
  cfg.seed = seed;
  cfg.fit_starts = opt.fit_starts;
  cfg.latin_hypercube_init = opt.latin;
  cfg.record_timings = opt.timings;
  return cfg;
}

int run_command(const CliOptions& opt) {
  const OracleSpec oracle = resolve_oracle(opt, opt.case_name);
  const RunConfig cfg =
      make_config(opt, oracle, method_from_name(opt.method), opt.seed);
  const auto records = replicate(cfg);
  write_records(opt.out + ".records.jsonl", records);
  std::cout << summary_to_csv(summarize(records));
  return kExitOk;
}

int suite_command(const CliOptions& opt) {
  const auto case_names = split_list(opt.cases);
  const auto method_names = split_list(opt.methods);
  if (case_names.empty() || method_names.empty())
    throw CLI::ValidationError("--cases/--methods", "empty list");

  std::vector<RunRecord> all_records;
  std::uint64_t cell = 0;
  for (const auto& case_name : case_names) {
    const OracleSpec oracle = resolve_oracle(opt, case_name);
    for (const auto& m : method_names) {
      const RunConfig cfg = make_config(opt, oracle, method_from_name(m),
                                        derive_seed(opt.seed, cell++));
      const auto records = replicate(cfg);
      all_records.insert(all_records.end(), records.begin(), records.end());
    }
  }
  write_records(opt.out + ".records.jsonl", all_records);
  const std::string csv = summary_to_csv(summarize(all_records));
  std::ofstream csv_out(opt.out + ".summary.csv");
  csv_out << csv;
  std::cout << csv;
  return kExitOk;
}

int summarize_command(const CliOptions& opt) {
  std::vector<RunRecord> records;
  for (const auto& path : opt.record_files) {
    auto r = read_records(path);
    records.insert(records.end(), r.begin(), r.end());
  }
  const std::string csv = summary_to_csv(summarize(records));
  if (!opt.out.empty() && opt.out != "-") {
    std::ofstream out(opt.out);
    out << csv;
  }
  std::cout << csv;
  return kExitOk;
}

int plot_data_command(const CliOptions& opt) {
  std::vector<RunRecord> records;
  for (const auto& path : opt.record_files) {
    auto r = read_records(path);
    records.insert(records.end(), r.begin(), r.end());
  }
  if (records.empty()) throw std::invalid_argument("plot-data: no records");

  {
    std::ofstream out(opt.out + ".regret_summary.csv");
    out << summary_to_csv(summarize(records));
  }

  // Per-replication trajectories (Fig.-3-style data).
  {
    std::ofstream out(opt.out + ".trajectory.csv");
    out << "case,method,replication,phase,step,t";
    const int d = records.front().dim;
    for (int j = 1; j <= d; ++j) out << ",x" << j;
    out << ",y\n";
    char buf[64];
    auto emit = [&](const RunRecord& r, const StepRecord& s,
                    const char* phase, int idx) {
      out << r.case_name << "," << r.method << "," << r.replication << ","
          << phase << "," << idx;
      std::snprintf(buf, sizeof(buf), ",%.17g", s.t);
      out << buf;
      for (int j = 0; j < s.x.size(); ++j) {
        std::snprintf(buf, sizeof(buf), ",%.17g", s.x[j]);
        out << buf;
      }
      std::snprintf(buf, sizeof(buf), ",%.17g\n", s.y);
      out << buf;
    };
    for (const auto& r : records) {
      if (r.failed) continue;
      int i = 0;
      for (const auto& s : r.initial) emit(r, s, "initial", i++);
      i = 0;
      for (const auto& s : r.steps) emit(r, s, "step", i++);
    }
  }

  // True payoff contour grid for 1-d synthetic cases; tabular record sets
  // carry a file path as the case name and get no contour.
  const std::string& case_name = records.front().case_name;
  OracleSpec spec;
  bool synthetic = true;
  try {
    spec = make_oracle(case_name);
  } catch (const std::invalid_argument&) {
    synthetic = false;
  }
  if (synthetic) {
    if (spec.dim == 1) {
      std::ofstream out(opt.out + ".contour.csv");
      out << "x,t,f\n";
      char buf[128];
      const int nx = 201, nt = 201;
      Eigen::VectorXd x(1);
      for (int i = 0; i < nx; ++i) {
        x[0] = spec.domain.lower[0] +
               (spec.domain.upper[0] - spec.domain.lower[0]) * i / (nx - 1.0);
        for (int k = 0; k < nt; ++k) {
          const double t = spec.horizon_T * k / (nt - 1.0);
          std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", x[0], t,
                        eval_oracle(spec, x, t));
          out << buf;
        }
      }
    }
  }
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Finite-budget Bayesian optimization of time-dependent oracles"};
  app.require_subcommand(1);
  CliOptions opt;

  auto add_shared = [&](CLI::App* cmd) {
    cmd->add_option("--seed", opt.seed, "master seed");
    cmd->add_option("--reps", opt.reps, "replications per cell");
    cmd->add_option("--mc-samples", opt.mc_samples, "r2LEY Monte Carlo budget M");
    cmd->add_option("--steps", opt.steps, "observation steps after training");
    cmd->add_option("--horizon", opt.horizon, "decision horizon T");
    cmd->add_option("--train-end", opt.train_end, "end of the training span");
    cmd->add_option("--noise", opt.noise,
                    "observation noise stddev (<0: 1% of payoff range)");
    cmd->add_option("--n-initial", opt.n_initial,
                    "initial samples (0: (d+1)*20, (d+1)*10 for d>6)");
    cmd->add_option("--fit-starts", opt.fit_starts, "hyperparameter fit starts");
    cmd->add_option("--threads", opt.threads_opt,
                    "worker threads (TDBO_THREADS overrides)");
    cmd->add_option("--out", opt.out, "output path prefix");
    cmd->add_option("--config", opt.config_path, "JSON config file");
    cmd->add_flag("--timings", opt.timings, "include wall-clock in records");
    cmd->add_flag("--latin-hypercube", opt.latin, "LHS initial design");
  };

  CLI::App* run = app.add_subcommand("run", "run one test case / method cell");
  run->add_option("--case", opt.case_name, "test case name");
  run->add_option("--method", opt.method, "ei|pi|ucb|random|rei|r2ley");
  add_shared(run);

  CLI::App* suite = app.add_subcommand("suite", "sweep cases x methods");
  suite->add_option("--cases", opt.cases, "comma-separated test cases");
  suite->add_option("--methods", opt.methods, "comma-separated methods");
  add_shared(suite);

  CLI::App* summ = app.add_subcommand("summarize", "aggregate record files");
  summ->add_option("--records", opt.record_files, "JSONL record files")
      ->required();
  summ->add_option("--out", opt.out, "summary CSV path ('-' for stdout only)");

  CLI::App* plot = app.add_subcommand("plot-data", "emit per-figure CSV data");
  plot->add_option("--records", opt.record_files, "JSONL record files")
      ->required();
  plot->add_option("--out", opt.out, "output path prefix");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  try {
    const CLI::App* active = run->parsed()    ? run
                             : suite->parsed() ? suite
                                               : static_cast<CLI::App*>(&app);
    apply_config_file(opt, active);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  if (opt.threads_opt > 0) set_threads(opt.threads_opt);

  try {
    if (run->parsed()) return run_command(opt);
    if (suite->parsed()) return suite_command(opt);
    if (summ->parsed()) return summarize_command(opt);
    if (plot->parsed()) return plot_data_command(opt);
    std::cerr << app.help();
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args);
}

}  // namespace tdbo
