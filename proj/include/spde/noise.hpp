#pragma once

// Exact sampling of the spectral Ornstein-Uhlenbeck process
//   OU(t) = int_0^t S(t-s) dB(s),  B = sum_i sigma_i beta^i phi_i,
// mode by mode. Per-step stochastic integrals are drawn once on the finest
// grid and aggregated exactly to coarser dyadic grids, so all resolutions of
// one trajectory share a single Brownian path.

#include "spde/rng.hpp"
#include "spde/spectral_core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace spde {

template <typename Scalar>
struct NoiseParams {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Scalar alpha = Scalar(0.5);
  Scalar rho = Scalar(0);
  Vector sigma;         // lambda_i^{-rho}
  Vector lambda_alpha;  // lambda_i^alpha
  Scalar tau_fine = Scalar(0);
  Eigen::Index n_fine = 0;

  Eigen::Index modes() const { return sigma.size(); }
};

template <typename Scalar>
NoiseParams<Scalar> make_noise_params(const EigenBasis<Scalar>& basis, Scalar alpha, Scalar rho,
                                      Scalar final_time, Eigen::Index n_fine) {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("noise: alpha must lie in (0,1)");
  if (rho < 0) throw std::invalid_argument("noise: rho must be nonnegative");
  if (n_fine < 1 || !(final_time > 0))
    throw std::invalid_argument("noise: need n_fine >= 1 and T > 0");
  NoiseParams<Scalar> p;
  p.alpha = alpha;
  p.rho = rho;
  p.n_fine = n_fine;
  p.tau_fine = final_time / static_cast<Scalar>(n_fine);
  p.sigma = basis.lambdas.array().pow(-rho).matrix();
  p.lambda_alpha = basis.lambdas.array().pow(alpha).matrix();
  return p;
}

/// Variance of int_0^t exp(-lambda^alpha (t-s)) dbeta(s):
/// (1 - exp(-2 lambda^alpha t)) / (2 lambda^alpha), evaluated with expm1.
template <typename Scalar>
Scalar ou_variance(Scalar lambda, Scalar alpha, Scalar t) {
  if (t < 0) throw std::invalid_argument("ou_variance: t must be nonnegative");
  const Scalar rate = std::pow(lambda, alpha);
  return -std::expm1(Scalar(-2) * rate * t) / (Scalar(2) * rate);
}

template <typename Scalar>
struct NoiseLadder {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  // increments(n, i) = int_{t_n}^{t_{n+1}} exp(-lambda_i^alpha (t_{n+1}-r)) dbeta^i(r),
  // without the sigma_i factor.
  Matrix increments;
  Scalar tau = Scalar(0);
  std::uint64_t seed = 0;

  Eigen::Index steps() const { return increments.rows(); }
  Eigen::Index modes() const { return increments.cols(); }
};

/// Draws params.n_fine x M exact increments at step params.tau_fine.
/// Consumption order is step-major: all modes of step 0, then step 1, ...
template <typename Scalar>
NoiseLadder<Scalar> sample_ladder(const NoiseParams<Scalar>& params, NormalStream& stream) {
  const Eigen::Index modes = params.modes();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sd(modes);
  for (Eigen::Index i = 0; i < modes; ++i)
    sd[i] = std::sqrt(-std::expm1(Scalar(-2) * params.lambda_alpha[i] * params.tau_fine) /
                      (Scalar(2) * params.lambda_alpha[i]));
  NoiseLadder<Scalar> ladder;
  ladder.tau = params.tau_fine;
  ladder.seed = stream.seed();
  ladder.increments.resize(params.n_fine, modes);
  for (Eigen::Index n = 0; n < params.n_fine; ++n)
    for (Eigen::Index i = 0; i < modes; ++i)
      ladder.increments(n, i) = sd[i] * static_cast<Scalar>(stream.normal());
  return ladder;
}

/// Exact aggregation to step 2*tau:
///   coarse[m] = exp(-lambda^alpha tau) fine[2m] + fine[2m+1].
template <typename Scalar>
NoiseLadder<Scalar> coarsen(const NoiseLadder<Scalar>& ladder, const NoiseParams<Scalar>& params) {
  if (ladder.steps() % 2 != 0) throw std::invalid_argument("coarsen: odd number of steps");
  detail::check_size(ladder.modes(), params.modes(), "coarsen");
  const Eigen::Index modes = ladder.modes();
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> decay(modes);
  for (Eigen::Index i = 0; i < modes; ++i)
    decay[i] = std::exp(-params.lambda_alpha[i] * ladder.tau);
  NoiseLadder<Scalar> out;
  out.tau = Scalar(2) * ladder.tau;
  out.seed = ladder.seed;
  out.increments.resize(ladder.steps() / 2, modes);
  for (Eigen::Index m = 0; m < out.steps(); ++m)
    out.increments.row(m) = decay.cwiseProduct(ladder.increments.row(2 * m)) +
                            ladder.increments.row(2 * m + 1);
  return out;
}

template <typename Scalar>
struct OUState {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;  // sigma-scaled, per mode
  Scalar t = Scalar(0);

  static OUState zero(Eigen::Index modes) {
    return {Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(modes), Scalar(0)};
  }
};

/// values'[i] = exp(-lambda_i^alpha tau) values[i] + sigma_i increments[i].
template <typename Scalar, typename Derived>
OUState<Scalar> ou_advance(const OUState<Scalar>& state,
                           const Eigen::MatrixBase<Derived>& step_increments,
                           const NoiseParams<Scalar>& params, Scalar tau) {
  detail::check_size(step_increments.size(), params.modes(), "ou_advance");
  detail::check_size(state.values.size(), params.modes(), "ou_advance");
  OUState<Scalar> next;
  next.values.resize(params.modes());
  for (Eigen::Index i = 0; i < params.modes(); ++i)
    next.values[i] = std::exp(-params.lambda_alpha[i] * tau) * state.values[i] +
                     params.sigma[i] * step_increments[i];
  next.t = state.t + tau;
  return next;
}

/// Per-mode int_0^{t_n} A^{-alpha} [S(t_n - r) - S(t_n + tau - r)] dB(r)
/// = lambda^{-alpha} (1 - exp(-lambda^alpha tau)) OU_i(t_n).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> correction_integral(const OUState<Scalar>& state,
                                                             const NoiseParams<Scalar>& params,
                                                             Scalar tau) {
  detail::check_size(state.values.size(), params.modes(), "correction_integral");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(params.modes());
  for (Eigen::Index i = 0; i < params.modes(); ++i) {
    const Scalar rate = params.lambda_alpha[i];
    out[i] = -std::expm1(-rate * tau) / rate * state.values[i];
  }
  return out;
}

// Binary ladder dump: little-endian u64 M, u64 n_steps, f64 tau, u64 seed,
// followed by n_steps*M f64 increments in row-major order.

namespace detail {
inline void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
  os.write(buf, 8);
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8))
    throw std::runtime_error("read_ladder: truncated input");
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | buf[b];
  return v;
}
inline void put_f64(std::ostream& os, double x) {
  std::uint64_t bits;
  static_assert(sizeof bits == sizeof x);
  std::memcpy(&bits, &x, 8);
  put_u64(os, bits);
}
inline double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}
}  // namespace detail

template <typename Scalar>
void write_ladder(std::ostream& os, const NoiseLadder<Scalar>& ladder) {
  detail::put_u64(os, static_cast<std::uint64_t>(ladder.modes()));
  detail::put_u64(os, static_cast<std::uint64_t>(ladder.steps()));
  detail::put_f64(os, static_cast<double>(ladder.tau));
  detail::put_u64(os, ladder.seed);
  for (Eigen::Index n = 0; n < ladder.steps(); ++n)
    for (Eigen::Index i = 0; i < ladder.modes(); ++i)
      detail::put_f64(os, static_cast<double>(ladder.increments(n, i)));
}

template <typename Scalar = double>
NoiseLadder<Scalar> read_ladder(std::istream& is) {
  NoiseLadder<Scalar> ladder;
  const auto modes = static_cast<Eigen::Index>(detail::get_u64(is));
  const auto steps = static_cast<Eigen::Index>(detail::get_u64(is));
  ladder.tau = static_cast<Scalar>(detail::get_f64(is));
  ladder.seed = detail::get_u64(is);
  ladder.increments.resize(steps, modes);
  for (Eigen::Index n = 0; n < steps; ++n)
    for (Eigen::Index i = 0; i < modes; ++i)
      ladder.increments(n, i) = static_cast<Scalar>(detail::get_f64(is));
  return ladder;
}

}  // namespace spde
