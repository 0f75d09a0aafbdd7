#include "tdbo/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tdbo/parallel.hpp"

namespace tdbo {
namespace {

using nlohmann::json;

AcquisitionKind to_acquisition_kind(Method m) {
  switch (m) {
    case Method::kEiMuMax: return AcquisitionKind::kEiMuMax;
    case Method::kPiMuMax: return AcquisitionKind::kPiMuMax;
    case Method::kUcb: return AcquisitionKind::kUcb;
    case Method::kRandom: return AcquisitionKind::kRandom;
    case Method::kRandomEi: return AcquisitionKind::kRandomEi;
    default: throw std::logic_error("not a myopic method");
  }
}

double percentile(std::vector<double> sorted, double p) {
  // linear interpolation between order statistics (numpy default)
  const double idx = p * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
  const double w = idx - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

json steps_to_json(const std::vector<StepRecord>& steps) {
  json a = json::array();
  for (const auto& s : steps)
    a.push_back({{"t", s.t}, {"x", vector_to_json(s.x)}, {"y", s.y}});
  return a;
}

std::vector<StepRecord> steps_from_json(const json& a) {
  std::vector<StepRecord> steps;
  for (const auto& s : a)
    steps.push_back({s.at("t").get<double>(), vector_from_json(s.at("x")),
                     s.at("y").get<double>()});
  return steps;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::kEiMuMax: return "ei";
    case Method::kPiMuMax: return "pi";
    case Method::kUcb: return "ucb";
    case Method::kRandom: return "random";
    case Method::kRandomEi: return "rei";
    case Method::kR2ley: return "r2ley";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected ei, pi, ucb, random, rei, r2ley)");
}

std::vector<Method> all_methods() {
  return {Method::kEiMuMax, Method::kPiMuMax, Method::kUcb,
          Method::kRandom,  Method::kRandomEi, Method::kR2ley};
}

int RunConfig::resolved_n_initial() const {
  if (n_initial > 0) return n_initial;
  const int d = oracle.dim;
  return d <= 6 ? (d + 1) * 20 : (d + 1) * 10;
}

void RunConfig::validate() const {
  if (resolved_n_initial() < 2)
    throw std::invalid_argument("RunConfig: need n_initial >= 2");
  if (m_steps < 1) throw std::invalid_argument("RunConfig: need m_steps >= 1");
  if (!(t_train_end < horizon_T))
    throw std::invalid_argument("RunConfig: need t_train_end < horizon");
  if (replications < 1)
    throw std::invalid_argument("RunConfig: need replications >= 1");
  if (horizon_T > oracle.horizon_T + 1e-12)
    throw std::invalid_argument("RunConfig: horizon beyond the oracle range");
}

double simple_regret(double f_max, double f_min, double f_val) {
  if (!(f_max > f_min))
    throw std::invalid_argument("simple_regret: need f_max > f_min");
  const double gap = std::max((f_max - f_val) / (f_max - f_min), 1e-12);
  return std::log10(gap);
}

InitialState bo_initial_state(const RunConfig& config, Rng& rng) {
  config.validate();
  const OracleSpec& oracle = config.oracle;
  const BoxDomain& domain = oracle.domain;
  const int d = oracle.dim;
  const int n0 = config.resolved_n_initial();

  // Initial design: one observation per equally spaced time in
  // [0, t_train_end], actions uniform (or Latin hypercube) over the box.
  InitialState state;
  const double t_lo =
      oracle.kind == OracleKind::kTabular ? oracle.table->time_min : 0.0;
  std::vector<Eigen::VectorXd> xs;
  if (config.latin_hypercube_init) {
    xs = multistart_seeds(domain, n0, rng);
  } else {
    for (int i = 0; i < n0; ++i) {
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j)
        x[j] = uniform(rng, domain.lower[j], domain.upper[j]);
      xs.push_back(std::move(x));
    }
  }
  for (int i = 0; i < n0; ++i) {
    const double t = t_lo + (config.t_train_end - t_lo) * i / (n0 - 1.0);
    const double y = observe(oracle, xs[i], t, rng);
    state.design.push_back({t, xs[i], y});
    state.data.add({std::move(xs[i]), t}, y);
  }

  const double time_span = config.horizon_T - t_lo;
  Hyperparams hp = default_hyperparams(domain, time_span, state.data);
  const BoxDomain fit_bounds =
      default_fit_bounds(hp, domain, time_span, state.data);
  state.hyperparams =
      fit_hyperparameters(state.data, fit_bounds, config.fit_starts, rng, &hp)
          .hyperparams;
  return state;
}

RunRecord run_bo(const RunConfig& config, Rng& rng, const Extrema* extrema) {
  config.validate();
  const auto start_time = std::chrono::steady_clock::now();
  const OracleSpec& oracle = config.oracle;
  const BoxDomain& domain = oracle.domain;
  const int d = oracle.dim;

  RunRecord rec;
  rec.case_name = oracle.name;
  rec.method = method_name(config.method);
  rec.seed = config.seed;
  rec.dim = d;
  rec.timings = config.record_timings;

  InitialState state = bo_initial_state(config, rng);
  rec.initial = std::move(state.design);
  Dataset data = std::move(state.data);
  Hyperparams hp = std::move(state.hyperparams);
  const double t_lo =
      oracle.kind == OracleKind::kTabular ? oracle.table->time_min : 0.0;
  const BoxDomain fit_bounds =
      default_fit_bounds(hp, domain, config.horizon_T - t_lo, data);
  PosteriorModel model = build_model(data, hp);

  LookaheadConfig look = config.lookahead;
  look.horizon_T = config.horizon_T;

  for (int k = 1; k <= config.m_steps; ++k) {
    const bool final_step = (k == config.m_steps);
    const double t_k =
        final_step ? config.horizon_T
                   : config.t_train_end +
                         k * (config.horizon_T - config.t_train_end) /
                             config.m_steps;
    look.crn_seed = derive_seed(config.seed, 0x1000 + k);

    Eigen::VectorXd x_k;
    try {
      if (config.method == Method::kR2ley) {
        if (final_step) {
          x_k = final_decision(model, config.horizon_T, domain, look);
        } else {
          R2leyProposal prop = propose_r2ley(model, t_k, look, domain, rng);
          if (prop.fallback)
            rec.warnings.push_back("step " + std::to_string(k) +
                                   ": r2ley dense fallback");
          x_k = std::move(prop.x);
        }
      } else {
        AcquisitionParams acq = config.acquisition;
        acq.kind = to_acquisition_kind(config.method);
        Proposal prop =
            propose_myopic(acq, model, t_k, domain, rng, final_step);
        if (prop.fallback)
          rec.warnings.push_back("step " + std::to_string(k) +
                                 ": acquisition dense fallback");
        x_k = std::move(prop.x);
      }
    } catch (const std::exception& e) {
      rec.warnings.push_back("step " + std::to_string(k) +
                             ": proposal failed (" + e.what() +
                             "), random fallback");
      x_k.resize(d);
      for (int j = 0; j < d; ++j)
        x_k[j] = uniform(rng, domain.lower[j], domain.upper[j]);
    }

    const double y_k = observe(oracle, x_k, t_k, rng);
    rec.steps.push_back({t_k, x_k, y_k});
    data.add({x_k, t_k}, y_k);

    if (!final_step) {
      hp = fit_hyperparameters(data, fit_bounds, config.refit_starts, rng, &hp)
               .hyperparams;
      model = build_model(data, hp);
    }
  }

  rec.x_final = rec.steps.back().x;
  rec.f_final = eval_oracle(oracle, rec.x_final, config.horizon_T);
  Extrema ext;
  if (extrema != nullptr) {
    ext = *extrema;
  } else {
    ext = extrema_at_horizon(oracle, config.horizon_T);
  }
  rec.f_max = ext.f_max;
  rec.f_min = ext.f_min;
  rec.regret = simple_regret(ext.f_max, ext.f_min, rec.f_final);
  rec.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    start_time)
          .count();
  return rec;
}

std::vector<RunRecord> replicate(const RunConfig& config) {
  config.validate();
  const Extrema extrema =
      extrema_at_horizon(config.oracle, config.horizon_T);
  std::vector<RunRecord> records(config.replications);

#pragma omp parallel for schedule(dynamic) num_threads(threads())
  for (int r = 0; r < config.replications; ++r) {
    RunConfig c = config;
    c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    Rng rng(c.seed);
    try {
      records[r] = run_bo(c, rng, &extrema);
    } catch (const std::exception& e) {
      records[r].case_name = config.oracle.name;
      records[r].method = method_name(config.method);
      records[r].dim = config.oracle.dim;
      records[r].seed = c.seed;
      records[r].failed = true;
      records[r].warnings.push_back(std::string("run failed: ") + e.what());
    }
    records[r].replication = r;
  }

  if (std::all_of(records.begin(), records.end(),
                  [](const RunRecord& r) { return r.failed; }))
    throw NumericalError("replicate: every replication failed");
  return records;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  std::vector<SummaryRow> rows;
  std::vector<std::vector<double>> regrets;
  auto find_row = [&](const RunRecord& r) -> std::size_t {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].case_name == r.case_name && rows[i].method == r.method)
        return i;
    rows.push_back(SummaryRow{r.case_name, r.dim, r.method});
    regrets.emplace_back();
    return rows.size() - 1;
  };
  for (const auto& r : records) {
    if (r.failed) continue;
    regrets[find_row(r)].push_back(r.regret);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& g = regrets[i];
    if (g.empty()) continue;
    std::sort(g.begin(), g.end());
    const int n = static_cast<int>(g.size());
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : g) ss += (v - mean) * (v - mean);
    rows[i].mean = mean;
    rows[i].stderr_mean = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
    rows[i].median = percentile(g, 0.5);
    rows[i].q25 = percentile(g, 0.25);
    rows[i].q75 = percentile(g, 0.75);
    rows[i].reps = n;
  }
  return rows;
}

std::string record_to_json(const RunRecord& r) {
  json j;
  j["case"] = r.case_name;
  j["method"] = r.method;
  j["replication"] = r.replication;
  j["seed"] = r.seed;
  j["d"] = r.dim;
  j["warnings"] = r.warnings;
  if (r.failed) {
    j["failed"] = true;
    return j.dump();
  }
  j["initial"] = steps_to_json(r.initial);
  j["steps"] = steps_to_json(r.steps);
  j["x_final"] = vector_to_json(r.x_final);
  j["f_final"] = r.f_final;
  j["f_max"] = r.f_max;
  j["f_min"] = r.f_min;
  j["regret"] = r.regret;
  if (r.timings) j["wall_clock_s"] = r.wall_clock_s;
  return j.dump();
}

RunRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  RunRecord r;
  r.case_name = j.at("case").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.replication = j.at("replication").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.dim = j.at("d").get<int>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.value("failed", false)) {
    r.failed = true;
    return r;
  }
  r.initial = steps_from_json(j.at("initial"));
  r.steps = steps_from_json(j.at("steps"));
  r.x_final = vector_from_json(j.at("x_final"));
  r.f_final = j.at("f_final").get<double>();
  r.f_max = j.at("f_max").get<double>();
  r.f_min = j.at("f_min").get<double>();
  r.regret = j.at("regret").get<double>();
  if (j.contains("wall_clock_s")) {
    r.wall_clock_s = j.at("wall_clock_s").get<double>();
    r.timings = true;
  }
  return r;
}

void write_records(const std::string& path,
                   const std::vector<RunRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records) out << record_to_json(r) << "\n";
}

std::vector<RunRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::vector<RunRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " +
                                  e.what());
    }
  }
  return records;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "case,d,method,mean,stderr,median,q25,q75,reps\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%s,%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                  r.case_name.c_str(), r.dim, r.method.c_str(), r.mean,
                  r.stderr_mean, r.median, r.q25, r.q75, r.reps);
    out << buf;
  }
  return out.str();
}

}  // namespace tdbo
