#include "tdbo/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace tdbo {

void KernelParams::validate() const {
  if (x_lengthscales.size() == 0)
    throw std::invalid_argument("kernel: no action lengthscales");
  if ((x_lengthscales.array() <= 0.0).any())
    throw std::invalid_argument("kernel: action lengthscales must be > 0");
  if (x_signal_variance <= 0.0)
    throw std::invalid_argument("kernel: signal variance must be > 0");
  if (t_form == TimeKernel::kSquaredExponential && t_lengthscale <= 0.0)
    throw std::invalid_argument("kernel: time lengthscale must be > 0");
  if (t_form == TimeKernel::kForgetting &&
      (forgetting_epsilon < 0.0 || forgetting_epsilon >= 1.0))
    throw std::invalid_argument("kernel: forgetting epsilon must be in [0,1)");
}

double eval_kx(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
               const KernelParams& params) {
  if (x.size() != x2.size() || x.size() != params.x_lengthscales.size())
    throw std::invalid_argument("eval_kx: dimension mismatch");
  const double r2 =
      ((x - x2).array() / params.x_lengthscales.array()).square().sum();
  return params.x_signal_variance * std::exp(-0.5 * r2);
}

double eval_kt(double t, double t2, const KernelParams& params) {
  const double dt = t - t2;
  switch (params.t_form) {
    case TimeKernel::kSquaredExponential: {
      const double r = dt / params.t_lengthscale;
      return std::exp(-0.5 * r * r);
    }
    case TimeKernel::kForgetting:
      // (1 - eps)^(|dt|/2); eps = 0 degenerates to constant correlation 1.
      return std::exp(0.5 * std::abs(dt) *
                      std::log1p(-params.forgetting_epsilon));
  }
  return 0.0;  // unreachable
}

double eval_k(const Point& p, const Point& p2, const KernelParams& params) {
  return eval_kx(p.x, p2.x, params) * eval_kt(p.t, p2.t, params);
}

Eigen::VectorXd grad_k_wrt_x(const Point& p, const Point& p2,
                             const KernelParams& params) {
  const double k = eval_k(p, p2, params);
  // d/dx_d of the SE exponent: -(x_d - x2_d) / l_d^2, scaled by k itself.
  return (-k) * ((p.x - p2.x).array() /
                 params.x_lengthscales.array().square())
                    .matrix();
}

}  // namespace tdbo
