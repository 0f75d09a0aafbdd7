#include "tdbo/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace tdbo {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double quadratic_base(double x) { return -4.0 * (x - 0.5) * (x - 0.5); }

// Context-dependent component shared by Quadratic-d and, mapped onto the
// first coordinate, by every higher-dimensional test case.
double quad_d_xt(double u, double t) {
  const double st = std::sin(t);
  return 2.0 * u * st - st * st;
}

double griewank(const Eigen::VectorXd& x) {
  double sum = 0.0;
  double prod = 1.0;
  for (int i = 0; i < x.size(); ++i) {
    sum += x[i] * x[i] / 4000.0;
    prod *= std::cos(x[i] / std::sqrt(i + 1.0));
  }
  return 1.0 + sum - prod;
}

double hartmann(const Eigen::VectorXd& x, int d) {
  static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static const double a3[4][3] = {
      {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
  static const double p3[4][3] = {{0.3689, 0.1170, 0.2673},
                                  {0.4699, 0.4387, 0.7470},
                                  {0.1091, 0.8732, 0.5547},
                                  {0.0381, 0.5743, 0.8828}};
  static const double a6[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                                  {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                                  {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                                  {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
  static const double p6[4][6] = {
      {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
      {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
      {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
      {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double outer = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = d == 3 ? x[j] - p3[i][j] : x[j] - p6[i][j];
      inner += (d == 3 ? a3[i][j] : a6[i][j]) * diff * diff;
    }
    outer += alpha[i] * std::exp(-inner);
  }
  return -outer;  // standard form; minimum approx -3.8628 (3d), -3.3224 (6d)
}

double levy(const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  auto w = [&](int i) { return 1.0 + (x[i] - 1.0) / 4.0; };
  double s = std::sin(kPi * w(0));
  double val = s * s;
  for (int i = 0; i < d - 1; ++i) {
    const double wi = w(i);
    const double sw = std::sin(kPi * wi + 1.0);
    val += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * sw * sw);
  }
  const double wd = w(d - 1);
  const double swd = std::sin(2.0 * kPi * wd);
  val += (wd - 1.0) * (wd - 1.0) * (1.0 + swd * swd);
  return val;
}

double styblinski_tang(const Eigen::VectorXd& x) {
  double val = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    val += xi * xi * xi * xi - 16.0 * xi * xi + 5.0 * xi;
  }
  return 0.5 * val;
}

BoxDomain cube(int d, double lo, double hi) {
  BoxDomain b;
  b.lower = Eigen::VectorXd::Constant(d, lo);
  b.upper = Eigen::VectorXd::Constant(d, hi);
  return b;
}

double synthetic_payoff(const OracleSpec& spec, const Eigen::VectorXd& x,
                        double t) {
  switch (spec.function) {
    case SyntheticFunction::kQuadraticA:
      return quadratic_base(x[0]) + std::sin(kPi * (x[0] + t)) +
             std::cos(kPi * (x[0] + t));
    case SyntheticFunction::kQuadraticB:
      return quadratic_base(x[0]) + std::sin(kPi * x[0] * t) +
             std::cos(kPi * x[0] * t);
    case SyntheticFunction::kQuadraticC: {
      const double tc = std::max(0.0, t - 3.0);
      return quadratic_base(x[0]) + std::sin(kPi * x[0] * tc) +
             std::cos(kPi * x[0] * tc);
    }
    case SyntheticFunction::kQuadraticD:
      return quadratic_base(x[0]) + quad_d_xt(x[0], t);
    default:
      break;
  }
  // d > 1: negated minimization benchmark plus the Quadratic-d context term
  // on the first coordinate mapped to [0, 1].
  const double u = (x[0] - spec.domain.lower[0]) /
                   (spec.domain.upper[0] - spec.domain.lower[0]);
  double base = 0.0;
  switch (spec.function) {
    case SyntheticFunction::kGriewank2: base = -griewank(x); break;
    case SyntheticFunction::kHartmann3: base = -hartmann(x, 3); break;
    case SyntheticFunction::kHartmann6: base = -hartmann(x, 6); break;
    case SyntheticFunction::kLevy8: base = -levy(x); break;
    case SyntheticFunction::kStyblinskiTang10: base = -styblinski_tang(x); break;
    default: throw std::logic_error("synthetic_payoff: unknown function");
  }
  return base + quad_d_xt(u, t);
}

double tabular_payoff(const OracleSpec& spec, const Eigen::VectorXd& x,
                      double t) {
  return spec.table->reference->posterior_at({x, t}).mean;
}

// Central finite differences wrapped as a maximization objective; `sign`
// flips the payoff so the same routine polishes minima.
Objective fd_objective(const OracleSpec& spec, double t, double sign) {
  return [&spec, t, sign](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    grad.resize(x.size());
    for (int j = 0; j < x.size(); ++j) {
      const double h =
          1e-7 * (spec.domain.upper[j] - spec.domain.lower[j]);
      Eigen::VectorXd xp = x, xm = x;
      xp[j] = std::min(x[j] + h, spec.domain.upper[j]);
      xm[j] = std::max(x[j] - h, spec.domain.lower[j]);
      grad[j] = sign * (eval_oracle(spec, xp, t) - eval_oracle(spec, xm, t)) /
                (xp[j] - xm[j]);
    }
    return sign * eval_oracle(spec, x, t);
  };
}

double polish(const OracleSpec& spec, double t, double sign,
              const std::vector<Eigen::VectorXd>& seeds) {
  SearchConfig cfg;
  cfg.max_iterations = 300;
  cfg.tolerance = 1e-10;
  SearchResult r = maximize_box(fd_objective(spec, t, sign), spec.domain, seeds, cfg);
  return sign * r.value;
}

}  // namespace

OracleSpec make_oracle(const std::string& name) {
  OracleSpec spec;
  spec.name = name;
  spec.kind = OracleKind::kSynthetic;
  spec.horizon_T = 4.0;
  if (name == "quad-a" || name == "quad-b" || name == "quad-c" ||
      name == "quad-d") {
    spec.dim = 1;
    spec.domain = cube(1, 0.0, 1.0);
    spec.function = name == "quad-a"   ? SyntheticFunction::kQuadraticA
                    : name == "quad-b" ? SyntheticFunction::kQuadraticB
                    : name == "quad-c" ? SyntheticFunction::kQuadraticC
                                       : SyntheticFunction::kQuadraticD;
  } else if (name == "griewank") {
    spec.dim = 2;
    spec.domain = cube(2, -5.0, 5.0);
    spec.function = SyntheticFunction::kGriewank2;
  } else if (name == "hartmann3") {
    spec.dim = 3;
    spec.domain = cube(3, 0.0, 1.0);
    spec.function = SyntheticFunction::kHartmann3;
  } else if (name == "hartmann6") {
    spec.dim = 6;
    spec.domain = cube(6, 0.0, 1.0);
    spec.function = SyntheticFunction::kHartmann6;
  } else if (name == "levy8") {
    spec.dim = 8;
    spec.domain = cube(8, -10.0, 10.0);
    spec.function = SyntheticFunction::kLevy8;
  } else if (name == "styblinski-tang10") {
    spec.dim = 10;
    spec.domain = cube(10, -5.0, 5.0);
    spec.function = SyntheticFunction::kStyblinskiTang10;
  } else {
    throw std::invalid_argument("make_oracle: unknown test case '" + name + "'");
  }
  return spec;
}

std::vector<std::string> oracle_names() {
  return {"quad-a",    "quad-b",    "quad-c", "quad-d",           "griewank",
          "hartmann3", "hartmann6", "levy8",  "styblinski-tang10"};
}

double eval_oracle(const OracleSpec& spec, const Eigen::VectorXd& x, double t) {
  if (x.size() != spec.dim)
    throw std::invalid_argument("eval_oracle: dimension mismatch");
  if (!spec.domain.contains(x, 1e-12))
    throw std::invalid_argument("eval_oracle: x outside the domain");
  const double t_lo = spec.kind == OracleKind::kTabular ? spec.table->time_min : 0.0;
  if (t < t_lo - 1e-12 || t > spec.horizon_T + 1e-12)
    throw std::invalid_argument("eval_oracle: t outside the time range");
  return spec.kind == OracleKind::kSynthetic ? synthetic_payoff(spec, x, t)
                                             : tabular_payoff(spec, x, t);
}

double observe(const OracleSpec& spec, const Eigen::VectorXd& x, double t,
               Rng& rng) {
  if (spec.kind == OracleKind::kTabular) {
    // Snap to the nearest recorded row when close enough, in units of the
    // normalized (x, t) box diagonal.
    const auto& tab = *spec.table;
    const Eigen::VectorXd range = spec.domain.upper - spec.domain.lower;
    const double t_range = std::max(spec.horizon_T - tab.time_min, 1e-12);
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
      const double dt = (tab.rows[i].t - t) / t_range;
      const double d2 =
          ((tab.rows[i].x - x).array() / range.array()).square().sum() + dt * dt;
      if (d2 < best_d2) {
        best_d2 = d2;
        best_i = i;
      }
    }
    if (std::sqrt(best_d2) <= tab.snap_tolerance)
      return tab.values[best_i];
  }
  const double f = eval_oracle(spec, x, t);
  return f + spec.noise_stddev * standard_normal(rng);
}

Extrema extrema_at_horizon(const OracleSpec& spec, double horizon_T) {
  if (spec.kind == OracleKind::kTabular) {
    // The fitted reference is the ground truth; optimize its mean directly.
    const PosteriorModel& model = *spec.table->reference;
    GpWorkspace ws;
    Rng rng(derive_seed(0x5eedba5e, 1));
    auto seeds = multistart_seeds(spec.domain, 8 + 2 * spec.dim, rng);
    const Objective mean_obj = [&](const Eigen::VectorXd& x,
                                   Eigen::VectorXd& grad) {
      return model.mean_and_grad_at({x, horizon_T}, grad, ws);
    };
    const Objective neg_obj = [&](const Eigen::VectorXd& x,
                                  Eigen::VectorXd& grad) {
      const double v = model.mean_and_grad_at({x, horizon_T}, grad, ws);
      grad = -grad;
      return -v;
    };
    Extrema out;
    out.f_max = maximize_box(mean_obj, spec.domain, seeds).value;
    out.f_min = -maximize_box(neg_obj, spec.domain, seeds).value;
    for (const auto& s : multistart_seeds(spec.domain, 4096, rng)) {
      const double v = model.posterior_at({s, horizon_T}, ws).mean;
      out.f_max = std::max(out.f_max, v);
      out.f_min = std::min(out.f_min, v);
    }
    return out;
  }

  Extrema out;
  out.f_max = -std::numeric_limits<double>::infinity();
  out.f_min = std::numeric_limits<double>::infinity();
  Eigen::VectorXd argmax, argmin;

  if (spec.dim <= 2) {
    const int per_dim = 2001;
    Eigen::VectorXd x(spec.dim);
    if (spec.dim == 1) {
      for (int i = 0; i < per_dim; ++i) {
        x[0] = spec.domain.lower[0] +
               (spec.domain.upper[0] - spec.domain.lower[0]) * i / (per_dim - 1.0);
        const double v = eval_oracle(spec, x, horizon_T);
        if (v > out.f_max) { out.f_max = v; argmax = x; }
        if (v < out.f_min) { out.f_min = v; argmin = x; }
      }
    } else {
      for (int i = 0; i < per_dim; ++i) {
        x[0] = spec.domain.lower[0] +
               (spec.domain.upper[0] - spec.domain.lower[0]) * i / (per_dim - 1.0);
        for (int j = 0; j < per_dim; ++j) {
          x[1] = spec.domain.lower[1] +
                 (spec.domain.upper[1] - spec.domain.lower[1]) * j / (per_dim - 1.0);
          const double v = eval_oracle(spec, x, horizon_T);
          if (v > out.f_max) { out.f_max = v; argmax = x; }
          if (v < out.f_min) { out.f_min = v; argmin = x; }
        }
      }
    }
    out.f_max = std::max(out.f_max, polish(spec, horizon_T, +1.0, {argmax}));
    out.f_min = std::min(out.f_min, polish(spec, horizon_T, -1.0, {argmin}));
    return out;
  }

  Rng rng(derive_seed(0x5eedba5e, 2));
  const auto probe = multistart_seeds(spec.domain, 100000, rng);
  for (const auto& p : probe) {
    const double v = eval_oracle(spec, p, horizon_T);
    if (v > out.f_max) { out.f_max = v; argmax = p; }
    if (v < out.f_min) { out.f_min = v; argmin = p; }
  }
  auto starts = multistart_seeds(spec.domain, 19, rng);
  auto max_starts = starts;
  max_starts.push_back(argmax);
  auto min_starts = std::move(starts);
  min_starts.push_back(argmin);
  out.f_max = std::max(out.f_max, polish(spec, horizon_T, +1.0, max_starts));
  out.f_min = std::min(out.f_min, polish(spec, horizon_T, -1.0, min_starts));
  return out;
}

double probe_range(const OracleSpec& spec, int n_probe) {
  Rng rng(derive_seed(0x5eedba5e, 3));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const double t_lo = spec.kind == OracleKind::kTabular ? spec.table->time_min : 0.0;
  for (const auto& p : multistart_seeds(spec.domain, n_probe, rng)) {
    const double t = uniform(rng, t_lo, spec.horizon_T);
    const double v = eval_oracle(spec, p, t);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

OracleSpec load_table_oracle(const std::string& path,
                             const TableSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_table_oracle: cannot open " + path);

  std::string line;
  int line_no = 0;
  // header
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
        cell.pop_back();
      header.push_back(cell);
    }
    break;
  }
  if (header.empty())
    throw std::invalid_argument("load_table_oracle: empty file " + path);

  std::vector<std::string> x_cols = schema.x_columns;
  if (x_cols.empty()) {
    for (const auto& h : header)
      if (h != schema.t_column && h != schema.y_column) x_cols.push_back(h);
  }
  auto column_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("load_table_oracle: missing column '" + name +
                                "' in " + path);
  };
  std::vector<int> xi;
  for (const auto& c : x_cols) xi.push_back(column_index(c));
  const int ti = column_index(schema.t_column);
  const int yi = column_index(schema.y_column);
  const int d = static_cast<int>(xi.size());
  if (d == 0)
    throw std::invalid_argument("load_table_oracle: no action columns in " + path);

  auto tab = std::make_shared<TabularOracle>();
  tab->snap_tolerance = schema.snap_tolerance;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("load_table_oracle: " + path + ":" +
                                  std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " cells");
    }
    auto parse = [&](int col) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(cells[col], &pos);
        while (pos < cells[col].size() &&
               (cells[col][pos] == ' ' || cells[col][pos] == '\r'))
          ++pos;
        if (pos != cells[col].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw std::invalid_argument(
            "load_table_oracle: " + path + ":" + std::to_string(line_no) +
            ": column '" + header[col] + "' is not numeric");
      }
    };
    Point p;
    p.x.resize(d);
    for (int j = 0; j < d; ++j) p.x[j] = parse(xi[j]);
    p.t = parse(ti);
    tab->rows.push_back(std::move(p));
    tab->values.push_back(parse(yi));
  }
  if (tab->rows.empty())
    throw std::invalid_argument("load_table_oracle: no data rows in " + path);

  OracleSpec spec;
  spec.name = path;
  spec.kind = OracleKind::kTabular;
  spec.dim = d;
  spec.domain.lower.resize(d);
  spec.domain.upper.resize(d);
  for (int j = 0; j < d; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : tab->rows) {
      lo = std::min(lo, r.x[j]);
      hi = std::max(hi, r.x[j]);
    }
    if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
    spec.domain.lower[j] = lo;
    spec.domain.upper[j] = hi;
  }
  double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
  for (const auto& r : tab->rows) {
    t_lo = std::min(t_lo, r.t);
    t_hi = std::max(t_hi, r.t);
  }
  tab->time_min = t_lo;
  spec.horizon_T = t_hi;

  // Fit the reference model once on all rows.
  Dataset data;
  data.points = tab->rows;
  data.values = tab->values;
  Rng rng(schema.fit_seed);
  const Hyperparams start =
      default_hyperparams(spec.domain, t_hi - t_lo, data);
  const BoxDomain bounds =
      default_fit_bounds(start, spec.domain, t_hi - t_lo, data);
  const FitResult fit =
      fit_hyperparameters(data, bounds, schema.fit_starts, rng, &start);
  tab->reference =
      std::make_shared<const PosteriorModel>(std::move(data), fit.hyperparams);

  spec.table = std::move(tab);
  return spec;
}

}  // namespace tdbo
