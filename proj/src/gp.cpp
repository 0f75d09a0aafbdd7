#include "tdbo/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace tdbo {
namespace {

constexpr double kRelJitterFloor = 1e-10;
constexpr double kRelJitterCap = 1e-6;
constexpr double kTwoPi = 6.28318530717958647692528676655900577;

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double y : v) mean += y;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double y : v) ss += (y - mean) * (y - mean);
  return ss / static_cast<double>(v.size() - 1);
}

// Dense symmetric Gram matrix of the kernel (no noise, no jitter).
Eigen::MatrixXd gram_matrix(const std::vector<Point>& points,
                            const KernelParams& kp) {
  const int n = static_cast<int>(points.size());
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = eval_k(points[i], points[j], kp);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

// Cholesky of K + (noise + jitter) I with the escalating jitter policy.
// Returns the factorization and the jitter that succeeded.
struct FactorOutcome {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

FactorOutcome factor_with_jitter(const Eigen::MatrixXd& gram, double noise,
                                 double signal_variance) {
  const int n = static_cast<int>(gram.rows());
  FactorOutcome out;
  for (double jitter = kRelJitterFloor * signal_variance;
       jitter <= kRelJitterCap * signal_variance * (1.0 + 1e-12);
       jitter *= 10.0) {
    Eigen::MatrixXd regularized = gram;
    regularized.diagonal().array() += noise + jitter;
    out.llt.compute(regularized);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "gp: Gram matrix not factorizable (n=" << n << ", noise=" << noise
      << ", jitter escalated to " << kRelJitterCap * signal_variance
      << ", diag range [" << gram.diagonal().minCoeff() << ", "
      << gram.diagonal().maxCoeff() << "])";
  throw NumericalError(msg.str());
}

}  // namespace

void Dataset::validate() const {
  if (points.size() != values.size())
    throw std::invalid_argument("Dataset: points/values length mismatch");
  for (const auto& p : points)
    if (p.x.size() != points.front().x.size())
      throw std::invalid_argument("Dataset: inconsistent action dimension");
}

void Hyperparams::validate() const {
  kernel.validate();
  if (noise_variance < 0.0)
    throw std::invalid_argument("Hyperparams: noise variance must be >= 0");
}

PosteriorModel::PosteriorModel(Dataset dataset, Hyperparams hyperparams)
    : dataset_(std::move(dataset)), hyperparams_(std::move(hyperparams)) {
  dataset_.validate();
  hyperparams_.validate();
  const int n = dataset_.size();
  if (n == 0) throw std::invalid_argument("PosteriorModel: empty dataset");
  const int d = dataset_.dim();
  if (d != hyperparams_.kernel.dim())
    throw std::invalid_argument("PosteriorModel: kernel dimension mismatch");

  x_matrix_.resize(n, d);
  t_vector_.resize(n);
  values_.resize(n);
  for (int i = 0; i < n; ++i) {
    x_matrix_.row(i) = dataset_.points[i].x.transpose();
    t_vector_[i] = dataset_.points[i].t;
    values_[i] = dataset_.values[i];
  }

  const Eigen::MatrixXd gram = gram_matrix(dataset_.points, hyperparams_.kernel);
  FactorOutcome fo = factor_with_jitter(gram, hyperparams_.noise_variance,
                                        hyperparams_.kernel.x_signal_variance);
  jitter_ = fo.jitter;
  gram_inverse_ = fo.llt.solve(Eigen::MatrixXd::Identity(n, n));
  alpha_ = fo.llt.solve(values_);
}

void PosteriorModel::covariance_row(const Point& p, Eigen::VectorXd& out) const {
  const KernelParams& kp = hyperparams_.kernel;
  if (p.x.size() != x_matrix_.cols())
    throw std::invalid_argument("covariance_row: dimension mismatch");
  const int n = size();
  out.resize(n);
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(n);
  for (int d = 0; d < x_matrix_.cols(); ++d) {
    acc += ((x_matrix_.col(d).array() - p.x[d]) / kp.x_lengthscales[d]).square();
  }
  if (kp.t_form == TimeKernel::kSquaredExponential) {
    acc += ((t_vector_.array() - p.t) / kp.t_lengthscale).square();
    out = kp.x_signal_variance * (-0.5 * acc).exp();
  } else {
    // log k_t = 0.5 |dt| log(1 - eps), folded into the single exponential
    Eigen::ArrayXd exponent = -0.5 * acc;
    exponent += 0.5 * std::log1p(-kp.forgetting_epsilon) *
                (t_vector_.array() - p.t).abs();
    out = kp.x_signal_variance * exponent.exp();
  }
}

void PosteriorModel::covariance_jacobian(const Point& p,
                                         const Eigen::VectorXd& k_row,
                                         Eigen::MatrixXd& out) const {
  const KernelParams& kp = hyperparams_.kernel;
  const int n = size();
  out.resize(n, x_matrix_.cols());
  for (int d = 0; d < x_matrix_.cols(); ++d) {
    const double inv_l2 = 1.0 / (kp.x_lengthscales[d] * kp.x_lengthscales[d]);
    out.col(d) = k_row.array() * (x_matrix_.col(d).array() - p.x[d]) * inv_l2;
  }
}

PosteriorSummary PosteriorModel::posterior_at(const Point& p) const {
  GpWorkspace ws;
  return posterior_at(p, ws);
}

PosteriorSummary PosteriorModel::posterior_at(const Point& p,
                                              GpWorkspace& ws) const {
  covariance_row(p, ws.k);
  ws.gk.noalias() = gram_inverse_ * ws.k;
  PosteriorSummary out;
  out.mean = ws.k.dot(alpha_);
  const double prior = prior_variance();
  double var = prior - ws.k.dot(ws.gk);
  // Cancellation in prior - k'Gk grows with n and the condition number
  // (~ prior / regularized diagonal); only a deficit beyond that roundoff
  // envelope indicates broken algebra.
  const double cond_est =
      prior / (hyperparams_.noise_variance + jitter_);
  const double tolerance = 1e-8 * std::max(1.0, prior) +
                           1024.0 * 2.2e-16 * size() * prior * cond_est;
  if (var < -tolerance)
    throw NumericalError("posterior_at: variance below tolerance");
  out.variance = std::min(std::max(var, 0.0), prior);
  return out;
}

PosteriorGradient PosteriorModel::posterior_grad_at(const Point& p) const {
  GpWorkspace ws;
  return posterior_grad_at(p, ws);
}

PosteriorGradient PosteriorModel::posterior_grad_at(const Point& p,
                                                    GpWorkspace& ws) const {
  covariance_row(p, ws.k);
  covariance_jacobian(p, ws.k, ws.jac);
  ws.gk.noalias() = gram_inverse_ * ws.k;

  PosteriorGradient out;
  out.mean_grad.noalias() = ws.jac.transpose() * alpha_;
  out.variance_grad.noalias() = -2.0 * (ws.jac.transpose() * ws.gk);

  const double prior = prior_variance();
  const double var = std::max(prior - ws.k.dot(ws.gk), 0.0);
  const double sigma = std::sqrt(var);
  // Degenerate at interpolation points, where the latent variance collapses
  // to the jitter scale and sigma is no longer differentiable in practice.
  if (sigma <= 1e-12 || var <= 64.0 * jitter_) {
    out.stddev_grad = Eigen::VectorXd::Zero(p.x.size());
    out.stddev_degenerate = true;
  } else {
    out.stddev_grad = out.variance_grad / (2.0 * sigma);
  }
  return out;
}

double PosteriorModel::mean_and_grad_at(const Point& p, Eigen::VectorXd& grad,
                                        GpWorkspace& ws) const {
  covariance_row(p, ws.k);
  covariance_jacobian(p, ws.k, ws.jac);
  grad.noalias() = ws.jac.transpose() * alpha_;
  return ws.k.dot(alpha_);
}

double PosteriorModel::simulate_observation(const Point& p, double z) const {
  const PosteriorSummary ps = posterior_at(p);
  return ps.mean +
         std::sqrt(ps.variance + hyperparams_.noise_variance) * z;
}

PosteriorModel PosteriorModel::extend_rank_one(const Point& p, double y) const {
  const int n = size();
  Eigen::VectorXd b;
  covariance_row(p, b);
  const double c =
      prior_variance() + hyperparams_.noise_variance + jitter_;
  const Eigen::VectorXd u = gram_inverse_ * b;
  const double schur = c - b.dot(u);

  Dataset extended = dataset_;
  extended.add(p, y);

  const double jitter_floor =
      kRelJitterFloor * hyperparams_.kernel.x_signal_variance;
  if (!(schur > jitter_floor)) {
    // Near-singular extension; rebuild densely with the escalation policy.
    return PosteriorModel(std::move(extended), hyperparams_);
  }

  PosteriorModel out;
  out.dataset_ = std::move(extended);
  out.hyperparams_ = hyperparams_;
  out.jitter_ = jitter_;

  out.x_matrix_.resize(n + 1, x_matrix_.cols());
  out.x_matrix_.topRows(n) = x_matrix_;
  out.x_matrix_.row(n) = p.x.transpose();
  out.t_vector_.resize(n + 1);
  out.t_vector_.head(n) = t_vector_;
  out.t_vector_[n] = p.t;
  out.values_.resize(n + 1);
  out.values_.head(n) = values_;
  out.values_[n] = y;

  const double inv_s = 1.0 / schur;
  out.gram_inverse_.resize(n + 1, n + 1);
  out.gram_inverse_.topLeftCorner(n, n) = gram_inverse_;
  out.gram_inverse_.topLeftCorner(n, n).noalias() += (inv_s * u) * u.transpose();
  out.gram_inverse_.block(0, n, n, 1) = -inv_s * u;
  out.gram_inverse_.block(n, 0, 1, n) = -inv_s * u.transpose();
  out.gram_inverse_(n, n) = inv_s;

  // alpha update: the correction vanishes exactly when y equals mu(p).
  const double excess = (y - b.dot(alpha_)) * inv_s;
  out.alpha_.resize(n + 1);
  out.alpha_.head(n) = alpha_ - excess * u;
  out.alpha_[n] = excess;
  return out;
}

// ---- marginal likelihood ---------------------------------------------------

int n_log_hyperparams(const Hyperparams& prototype) {
  return prototype.kernel.dim() + 3;
}

Eigen::VectorXd to_log_hyperparams(const Hyperparams& hp) {
  const int d = hp.kernel.dim();
  Eigen::VectorXd v(d + 3);
  for (int i = 0; i < d; ++i)
    v[i] = std::log(std::max(hp.kernel.x_lengthscales[i], 1e-300));
  v[d] = std::log(std::max(hp.kernel.x_signal_variance, 1e-300));
  const double t_param = hp.kernel.t_form == TimeKernel::kSquaredExponential
                             ? hp.kernel.t_lengthscale
                             : -std::log1p(-hp.kernel.forgetting_epsilon);
  v[d + 1] = std::log(std::max(t_param, 1e-300));
  v[d + 2] = std::log(std::max(hp.noise_variance, 1e-300));
  return v;
}

Hyperparams hyperparams_from_log(Hyperparams prototype,
                                 const Eigen::VectorXd& log_values) {
  const int d = prototype.kernel.dim();
  if (log_values.size() != d + 3)
    throw std::invalid_argument("hyperparams_from_log: wrong vector length");
  for (int i = 0; i < d; ++i)
    prototype.kernel.x_lengthscales[i] = std::exp(log_values[i]);
  prototype.kernel.x_signal_variance = std::exp(log_values[d]);
  if (prototype.kernel.t_form == TimeKernel::kSquaredExponential) {
    prototype.kernel.t_lengthscale = std::exp(log_values[d + 1]);
  } else {
    prototype.kernel.forgetting_epsilon = -std::expm1(-std::exp(log_values[d + 1]));
  }
  prototype.noise_variance = std::exp(log_values[d + 2]);
  return prototype;
}

LmlResult log_marginal_likelihood(const Dataset& dataset,
                                  const Hyperparams& hp) {
  dataset.validate();
  hp.validate();
  const int n = dataset.size();
  const int d = hp.kernel.dim();
  if (n == 0) throw std::invalid_argument("log_marginal_likelihood: empty data");

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = dataset.values[i];

  const Eigen::MatrixXd gram = gram_matrix(dataset.points, hp.kernel);
  FactorOutcome fo = factor_with_jitter(gram, hp.noise_variance,
                                        hp.kernel.x_signal_variance);
  const Eigen::VectorXd alpha = fo.llt.solve(y);
  const Eigen::MatrixXd inv = fo.llt.solve(Eigen::MatrixXd::Identity(n, n));

  double logdet = 0.0;
  for (int i = 0; i < n; ++i)
    logdet += 2.0 * std::log(fo.llt.matrixLLT()(i, i));

  LmlResult out;
  out.value = -0.5 * y.dot(alpha) - 0.5 * logdet -
              0.5 * n * std::log(kTwoPi);

  // dL/dtheta = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta), per log-parameter.
  const Eigen::MatrixXd inner =
      alpha * alpha.transpose() - inv;  // symmetric n x n
  out.grad_log.resize(d + 3);

  Eigen::MatrixXd dK(n, n);
  for (int dd = 0; dd < d; ++dd) {
    const double l = hp.kernel.x_lengthscales[dd];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = (dataset.points[i].x[dd] - dataset.points[j].x[dd]) / l;
        dK(i, j) = gram(i, j) * r * r;
      }
    out.grad_log[dd] = 0.5 * inner.cwiseProduct(dK).sum();
  }
  out.grad_log[d] = 0.5 * inner.cwiseProduct(gram).sum();  // log signal var

  if (hp.kernel.t_form == TimeKernel::kSquaredExponential) {
    const double lt = hp.kernel.t_lengthscale;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = (dataset.points[i].t - dataset.points[j].t) / lt;
        dK(i, j) = gram(i, j) * r * r;
      }
  } else {
    const double rate = -std::log1p(-hp.kernel.forgetting_epsilon);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double adt = std::abs(dataset.points[i].t - dataset.points[j].t);
        dK(i, j) = gram(i, j) * (-0.5 * rate * adt);
      }
  }
  out.grad_log[d + 1] = 0.5 * inner.cwiseProduct(dK).sum();
  out.grad_log[d + 2] = 0.5 * hp.noise_variance * inner.trace();
  return out;
}

// ---- fitting ---------------------------------------------------------------

Hyperparams default_hyperparams(const BoxDomain& domain, double time_span,
                                const Dataset& dataset) {
  const double vy = std::max(sample_variance(dataset.values), 1e-8);
  Hyperparams hp;
  hp.kernel.x_lengthscales = 0.2 * (domain.upper - domain.lower);
  hp.kernel.x_signal_variance = vy;
  hp.kernel.t_form = TimeKernel::kSquaredExponential;
  hp.kernel.t_lengthscale = 0.5 * std::max(time_span, 1e-8);
  hp.noise_variance = 1e-2 * vy;
  return hp;
}

BoxDomain default_fit_bounds(const Hyperparams& prototype,
                             const BoxDomain& domain, double time_span,
                             const Dataset& dataset) {
  const int d = prototype.kernel.dim();
  const double vy = std::max(sample_variance(dataset.values), 1e-8);
  BoxDomain bounds;
  bounds.lower.resize(d + 3);
  bounds.upper.resize(d + 3);
  for (int i = 0; i < d; ++i) {
    const double range = domain.upper[i] - domain.lower[i];
    bounds.lower[i] = std::log(1e-3 * range);
    bounds.upper[i] = std::log(1e3 * range);
  }
  bounds.lower[d] = std::log(1e-3 * vy);
  bounds.upper[d] = std::log(1e3 * vy);
  const double span = std::max(time_span, 1e-8);
  bounds.lower[d + 1] = std::log(1e-3 * span);
  bounds.upper[d + 1] = std::log(1e3 * span);
  bounds.lower[d + 2] = std::log(1e-6 * vy);
  bounds.upper[d + 2] = std::log(1e1 * vy);
  return bounds;
}

FitResult fit_hyperparameters(const Dataset& dataset,
                              const BoxDomain& log_bounds, int n_starts,
                              Rng& rng, const Hyperparams* warm_start) {
  dataset.validate();
  if (dataset.size() < 2)
    throw std::invalid_argument("fit_hyperparameters: need >= 2 points");
  if (n_starts < 1)
    throw std::invalid_argument("fit_hyperparameters: n_starts must be >= 1");

  Hyperparams prototype;
  if (warm_start != nullptr) {
    prototype = *warm_start;
  } else {
    Eigen::VectorXd mid = 0.5 * (log_bounds.lower + log_bounds.upper);
    Hyperparams base;
    base.kernel.x_lengthscales = Eigen::VectorXd::Ones(dataset.dim());
    prototype = hyperparams_from_log(base, mid);
  }

  const Eigen::VectorXd warm_log =
      log_bounds.clamp(to_log_hyperparams(prototype));
  std::vector<Eigen::VectorXd> seeds{warm_log};
  if (n_starts > 1) {
    auto more = multistart_seeds(log_bounds, n_starts - 1, rng);
    seeds.insert(seeds.end(), more.begin(), more.end());
  }

  const Objective objective = [&](const Eigen::VectorXd& logv,
                                  Eigen::VectorXd& grad) {
    const Hyperparams hp = hyperparams_from_log(prototype, logv);
    LmlResult r = log_marginal_likelihood(dataset, hp);
    grad = std::move(r.grad_log);
    return r.value;
  };

  double baseline;
  try {
    Eigen::VectorXd unused;
    baseline = objective(warm_log, unused);
  } catch (const NumericalError&) {
    baseline = -std::numeric_limits<double>::infinity();
  }

  SearchConfig search;
  search.max_iterations = 120;
  search.tolerance = 1e-7;
  try {
    SearchResult best = maximize_box(objective, log_bounds, seeds, search);
    if (best.value > baseline) {
      return {hyperparams_from_log(prototype, best.x), true};
    }
  } catch (const NumericalError&) {
    // every start failed to evaluate; fall through to the warm start
  }
  return {prototype, false};
}

}  // namespace tdbo
