#pragma once

// Sine eigenbasis of the Dirichlet Laplacian on (0,1) and the diagonal
// (spectral) calculus built on it. Fields are Galerkin coefficient vectors
// <u, phi_i> with phi_i(x) = sqrt(2) sin(i pi x).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spde {

template <typename Scalar>
using SpectralField = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using GridValues = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct EigenBasis {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Eigen::Index modes = 0;      // M
  Eigen::Index grid_size = 0;  // G, interior nodes x_g = g / (G + 1)
  Vector lambdas;              // pi^2 i^2
  Vector nodes;
  Matrix sine_matrix;          // G x M, sqrt(2) sin(i pi x_g)

  /// Quadrature weight 1/(G+1) of the discrete sine projection.
  Scalar weight() const { return Scalar(1) / Scalar(grid_size + 1); }
};

/// Lower bound on the i-th Dirichlet eigenvalue for d = 1 and |Omega| = 1,
/// where the unit ball has volume 2: (4 pi^2 / 3) i^2 / 4.
template <typename Scalar>
Scalar eigenvalue_lower_bound(Eigen::Index i) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar ii = static_cast<Scalar>(i);
  return Scalar(4) * pi * pi / Scalar(3) * ii * ii / Scalar(4);
}

/// Builds the first `modes` eigenpairs sampled on `grid_size` interior nodes.
/// Requires grid_size >= 2*modes + 1 so products of two retained modes are
/// integrated exactly by the discrete projection.
template <typename Scalar = double>
EigenBasis<Scalar> build_basis(Eigen::Index modes, Eigen::Index grid_size) {
  if (modes < 1) throw std::invalid_argument("build_basis: modes must be >= 1");
  if (grid_size < 2 * modes + 1)
    throw std::invalid_argument("build_basis: grid_size " + std::to_string(grid_size) +
                                " < 2*modes+1 = " + std::to_string(2 * modes + 1));
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar root2 = std::sqrt(Scalar(2));

  EigenBasis<Scalar> b;
  b.modes = modes;
  b.grid_size = grid_size;
  b.lambdas.resize(modes);
  for (Eigen::Index i = 0; i < modes; ++i) {
    const Scalar k = static_cast<Scalar>(i + 1);
    b.lambdas[i] = pi * pi * k * k;
  }
  b.nodes.resize(grid_size);
  for (Eigen::Index g = 0; g < grid_size; ++g)
    b.nodes[g] = static_cast<Scalar>(g + 1) / static_cast<Scalar>(grid_size + 1);
  b.sine_matrix.resize(grid_size, modes);
  // sin(k pi (g+1)/(G+1)) via the reduced integer argument keeps the
  // entries exact-symmetric for large k.
  const Eigen::Index period = 2 * (grid_size + 1);
  for (Eigen::Index i = 0; i < modes; ++i)
    for (Eigen::Index g = 0; g < grid_size; ++g) {
      const Eigen::Index m = ((i + 1) * (g + 1)) % period;
      b.sine_matrix(g, i) =
          root2 * std::sin(pi * static_cast<Scalar>(m) / static_cast<Scalar>(grid_size + 1));
    }
  return b;
}

/// Minimal de-aliasing grid for `modes` retained modes.
template <typename Scalar = double>
EigenBasis<Scalar> build_basis(Eigen::Index modes) {
  return build_basis<Scalar>(modes, 2 * modes + 1);
}

namespace detail {
inline void check_size(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(got) + " vs " + std::to_string(want) + ")");
}
}  // namespace detail

template <typename Scalar, typename Derived>
GridValues<Scalar> to_physical(const Eigen::MatrixBase<Derived>& coeffs,
                               const EigenBasis<Scalar>& basis) {
  detail::check_size(coeffs.size(), basis.modes, "to_physical");
  return basis.sine_matrix * coeffs;
}

template <typename Scalar, typename Derived>
SpectralField<Scalar> to_spectral(const Eigen::MatrixBase<Derived>& values,
                                  const EigenBasis<Scalar>& basis) {
  detail::check_size(values.size(), basis.grid_size, "to_spectral");
  return basis.weight() * (basis.sine_matrix.transpose() * values);
}

/// coeffs'[i] = g(lambda_i) coeffs[i]. Realizes A^nu, the semigroup
/// exp(-t A^alpha) and resolvents (I + tau A^alpha)^{-1}.
template <typename Scalar, typename Derived, typename Fn>
SpectralField<Scalar> scale_by_spectrum(const Eigen::MatrixBase<Derived>& coeffs, Fn&& g,
                                        const EigenBasis<Scalar>& basis) {
  detail::check_size(coeffs.size(), basis.modes, "scale_by_spectrum");
  SpectralField<Scalar> out(coeffs.size());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) out[i] = g(basis.lambdas[i]) * coeffs[i];
  return out;
}

/// (sum_i lambda_i^nu <u,phi_i>^2)^{1/2}; nu = 0 is the L2 norm.
template <typename Scalar, typename Derived>
Scalar sobolev_norm(const Eigen::MatrixBase<Derived>& coeffs, Scalar nu,
                    const EigenBasis<Scalar>& basis) {
  detail::check_size(coeffs.size(), basis.modes, "sobolev_norm");
  if (nu == Scalar(0)) return coeffs.norm();
  Scalar acc = 0;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    acc += std::pow(basis.lambdas[i], nu) * coeffs[i] * coeffs[i];
  return std::sqrt(acc);
}

}  // namespace spde
