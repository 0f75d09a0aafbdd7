#pragma once

#include <Eigen/Core>

namespace tdbo {

// A point in the joint action-time input space.
struct Point {
  Eigen::VectorXd x;
  double t = 0.0;
};

enum class TimeKernel {
  kSquaredExponential,  // exp(-0.5 ((t - t') / l_t)^2)
  kForgetting,          // (1 - eps)^(|t - t'| / 2)
};

// Parameters of the product covariance k((x,t),(x',t')) = k_x(x,x') k_t(t,t').
// k_x is an ARD squared exponential carrying the signal variance; k_t is unit
// scale in either form.
struct KernelParams {
  Eigen::VectorXd x_lengthscales;
  double x_signal_variance = 1.0;
  TimeKernel t_form = TimeKernel::kSquaredExponential;
  double t_lengthscale = 1.0;
  double forgetting_epsilon = 0.0;

  int dim() const { return static_cast<int>(x_lengthscales.size()); }

  // Throws std::invalid_argument when a scale is non-positive or
  // forgetting_epsilon is outside [0, 1).
  void validate() const;
};

double eval_kx(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
               const KernelParams& params);

double eval_kt(double t, double t2, const KernelParams& params);

double eval_k(const Point& p, const Point& p2, const KernelParams& params);

// dk(p, p2)/dx where x is the action component of the first argument.
Eigen::VectorXd grad_k_wrt_x(const Point& p, const Point& p2,
                             const KernelParams& params);

}  // namespace tdbo
