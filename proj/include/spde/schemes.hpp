#pragma once

// Time stepping for the transformed equation dz + A^alpha z dt = f(z + OU) dt.
//
// baseline:  z_{n+1} = (I + tau A^alpha)^{-1} [z_n + tau f(u_n)]
// modified:  z_{n+1} = (I + tau A^alpha)^{-1} [z_n + tau f(u_n)
//                        + q_n (C_n - tau OU_n)],   n >= 1,
// with q_n the pointwise divided difference (f(u_n) - f(u_{n-1}))/(u_n - u_{n-1})
// and C_n = A^{-alpha}(I - S(tau)) OU_n. Step 0 of the modified scheme is a
// baseline step. Pointwise products are formed on the collocation grid and
// projected back onto the retained modes.

#include "spde/noise.hpp"
#include "spde/spectral_core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace spde {

enum class SchemeKind { baseline, modified };

inline const char* to_string(SchemeKind kind) {
  return kind == SchemeKind::baseline ? "baseline" : "modified";
}

inline SchemeKind parse_scheme_kind(const std::string& name) {
  if (name == "baseline") return SchemeKind::baseline;
  if (name == "modified") return SchemeKind::modified;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected baseline|modified)");
}

/// Raised when a trajectory produces non-finite coefficients.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct Nonlinearity {
  std::function<Scalar(Scalar)> f;
  std::function<Scalar(Scalar)> f_prime;
  std::string lipschitz_note;

  static Nonlinearity sine() {
    return {[](Scalar v) { return std::sin(v); }, [](Scalar v) { return std::cos(v); },
            "sin: globally Lipschitz with constant 1, f' Lipschitz with constant 1"};
  }
  static Nonlinearity zero() {
    return {[](Scalar) { return Scalar(0); }, [](Scalar) { return Scalar(0); }, "zero"};
  }
  static Nonlinearity identity() {
    return {[](Scalar v) { return v; }, [](Scalar) { return Scalar(1); }, "identity"};
  }
};

template <typename Scalar>
struct SchemeConfig {
  Scalar alpha = Scalar(0.5);
  Scalar tau = Scalar(0);
  Eigen::Index modes = 0;
  Nonlinearity<Scalar> f = Nonlinearity<Scalar>::sine();
  Scalar quotient_guard = Scalar(1e-8);
  SchemeKind kind = SchemeKind::modified;
};

template <typename Scalar>
struct TrajectoryState {
  SpectralField<Scalar> z;
  SpectralField<Scalar> u;  // always z + ou.values
  OUState<Scalar> ou;
  std::optional<SpectralField<Scalar>> u_prev;
  Eigen::Index step = 0;

  static TrajectoryState initial(const SpectralField<Scalar>& u0) {
    TrajectoryState s;
    s.z = u0;
    s.u = u0;
    s.ou = OUState<Scalar>::zero(u0.size());
    return s;
  }
};

namespace detail {

template <typename Scalar>
GridValues<Scalar> apply_pointwise(const std::function<Scalar(Scalar)>& fn,
                                   const GridValues<Scalar>& values) {
  GridValues<Scalar> out(values.size());
  for (Eigen::Index g = 0; g < values.size(); ++g) out[g] = fn(values[g]);
  return out;
}

template <typename Scalar>
GridValues<Scalar> divided_difference(const Nonlinearity<Scalar>& f, const GridValues<Scalar>& a,
                                      const GridValues<Scalar>& b, Scalar delta) {
  GridValues<Scalar> q(a.size());
  for (Eigen::Index g = 0; g < a.size(); ++g) {
    const Scalar diff = a[g] - b[g];
    q[g] = std::abs(diff) < delta ? f.f_prime(a[g]) : (f.f(a[g]) - f.f(b[g])) / diff;
  }
  return q;
}

template <typename Scalar>
SpectralField<Scalar> resolvent(const SpectralField<Scalar>& rhs, const SchemeConfig<Scalar>& cfg,
                                const EigenBasis<Scalar>& basis) {
  const Scalar alpha = cfg.alpha;
  const Scalar tau = cfg.tau;
  return scale_by_spectrum(
      rhs, [=](Scalar lambda) { return Scalar(1) / (Scalar(1) + tau * std::pow(lambda, alpha)); },
      basis);
}

template <typename Scalar, typename Row>
TrajectoryState<Scalar> finish_step(const TrajectoryState<Scalar>& state,
                                    SpectralField<Scalar> z_next, const Row& increments,
                                    const SchemeConfig<Scalar>& cfg,
                                    const NoiseParams<Scalar>& params) {
  TrajectoryState<Scalar> next;
  next.z = std::move(z_next);
  next.ou = ou_advance(state.ou, increments, params, cfg.tau);
  next.u = next.z + next.ou.values;
  next.u_prev = state.u;
  next.step = state.step + 1;
  return next;
}

}  // namespace detail

/// f(u) projected onto the retained modes.
template <typename Scalar>
SpectralField<Scalar> nemytskii(const Nonlinearity<Scalar>& f, const SpectralField<Scalar>& u,
                                const EigenBasis<Scalar>& basis) {
  return to_spectral(detail::apply_pointwise(f.f, to_physical(u, basis)), basis);
}

/// Divided difference of f between u_n and u_prev on the collocation grid;
/// falls back to f'(u_n) where the two differ by less than `delta`.
template <typename Scalar>
GridValues<Scalar> quotient(const Nonlinearity<Scalar>& f, const SpectralField<Scalar>& u_n,
                            const SpectralField<Scalar>& u_prev, const EigenBasis<Scalar>& basis,
                            Scalar delta) {
  detail::check_size(u_prev.size(), u_n.size(), "quotient");
  return detail::divided_difference(f, to_physical(u_n, basis), to_physical(u_prev, basis),
                                    delta);
}

template <typename Scalar, typename Row>
TrajectoryState<Scalar> baseline_step(const TrajectoryState<Scalar>& state, const Row& increments,
                                      const SchemeConfig<Scalar>& cfg,
                                      const EigenBasis<Scalar>& basis,
                                      const NoiseParams<Scalar>& params) {
  SpectralField<Scalar> rhs = state.z + cfg.tau * nemytskii(cfg.f, state.u, basis);
  return detail::finish_step(state, detail::resolvent(rhs, cfg, basis), increments, cfg, params);
}

template <typename Scalar, typename Row>
TrajectoryState<Scalar> first_step(const TrajectoryState<Scalar>& state, const Row& increments,
                                   const SchemeConfig<Scalar>& cfg, const EigenBasis<Scalar>& basis,
                                   const NoiseParams<Scalar>& params) {
  if (state.step != 0) throw std::logic_error("first_step: state is past step 0");
  return baseline_step(state, increments, cfg, basis, params);
}

template <typename Scalar, typename Row>
TrajectoryState<Scalar> modified_step(const TrajectoryState<Scalar>& state, const Row& increments,
                                      const SchemeConfig<Scalar>& cfg,
                                      const EigenBasis<Scalar>& basis,
                                      const NoiseParams<Scalar>& params) {
  if (state.step == 0 || !state.u_prev)
    throw std::logic_error("modified_step: needs u_{n-1}; use first_step at n = 0");
  const GridValues<Scalar> a = to_physical(state.u, basis);
  const GridValues<Scalar> q =
      detail::divided_difference(cfg.f, a, to_physical(*state.u_prev, basis), cfg.quotient_guard);

  // C_n - tau OU_n, both sigma-scaled through the OU state.
  const SpectralField<Scalar> memory =
      correction_integral(state.ou, params, cfg.tau) - cfg.tau * state.ou.values;
  const GridValues<Scalar> correction = q.cwiseProduct(to_physical(memory, basis));

  SpectralField<Scalar> rhs =
      state.z + cfg.tau * to_spectral(detail::apply_pointwise(cfg.f.f, a), basis);
  rhs += to_spectral(correction, basis);
  return detail::finish_step(state, detail::resolvent(rhs, cfg, basis), increments, cfg, params);
}

/// Runs all steps of `ladder` from u0 and returns u at the requested step
/// indices; the final step is always included.
template <typename Scalar>
std::map<Eigen::Index, SpectralField<Scalar>> integrate(
    const SchemeConfig<Scalar>& cfg, const SpectralField<Scalar>& u0,
    const NoiseLadder<Scalar>& ladder, const EigenBasis<Scalar>& basis,
    const NoiseParams<Scalar>& params, const std::set<Eigen::Index>& record_at = {}) {
  detail::check_size(u0.size(), basis.modes, "integrate");
  detail::check_size(ladder.modes(), basis.modes, "integrate");
  const Scalar horizon = params.tau_fine * static_cast<Scalar>(params.n_fine);
  const Scalar tol = Scalar(1e-12) * std::max(Scalar(1), horizon);
  if (std::abs(ladder.tau - cfg.tau) > tol ||
      std::abs(static_cast<Scalar>(ladder.steps()) * cfg.tau - horizon) > tol)
    throw std::invalid_argument("integrate: ladder does not match step size / final time");

  std::map<Eigen::Index, SpectralField<Scalar>> out;
  auto state = TrajectoryState<Scalar>::initial(u0);
  if (record_at.count(0)) out.emplace(0, state.u);
  for (Eigen::Index n = 0; n < ladder.steps(); ++n) {
    const auto row = ladder.increments.row(n);
    if (n == 0)
      state = first_step(state, row, cfg, basis, params);
    else if (cfg.kind == SchemeKind::modified)
      state = modified_step(state, row, cfg, basis, params);
    else
      state = baseline_step(state, row, cfg, basis, params);
    if (!state.u.allFinite())
      throw NumericalError("integrate: non-finite coefficients at step " +
                           std::to_string(state.step));
    if (record_at.count(state.step)) out.emplace(state.step, state.u);
  }
  out.insert_or_assign(ladder.steps(), state.u);
  return out;
}

}  // namespace spde
