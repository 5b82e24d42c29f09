#pragma once

// Monte Carlo strong-error estimation on coupled dyadic refinements.
//
// Every trajectory draws one noise ladder on the finest grid (2 * max N steps)
// and produces u_N(T) for every level by exact coarsening of that ladder. The
// error of row N is (K^{-1} sum_k ||u_{2N,k}(T) - u_{N,k}(T)||^2)^{1/2}, and the
// rate of row N is log2(error(N/2) / error(N)).

#include "spde/noise.hpp"
#include "spde/schemes.hpp"
#include "spde/spectral_core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace spde {

struct StudyConfig {
  double alpha = 0.6;
  double rho = 0.2;
  Eigen::Index M = 128;
  double T = 0.2;
  std::vector<Eigen::Index> N_list{2, 4, 8};
  Eigen::Index K = 200;
  std::uint64_t master_seed = 42;
  SchemeKind scheme = SchemeKind::modified;
  double epsilon = 1e-6;
  bool sigma_zero = false;
  bool f_zero = false;
  unsigned threads = 1;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  Eigen::Index finest_steps() const;  // 2 * max(N_list)
};

/// Everything shared by the trajectories of one study.
struct StudyContext {
  StudyConfig config;
  EigenBasis<double> basis;
  NoiseParams<double> noise;  // on the finest grid
  SpectralField<double> u0;   // projection of sin(2 pi x)
  Nonlinearity<double> f;

  explicit StudyContext(const StudyConfig& study);
  SchemeConfig<double> scheme_config(Eigen::Index steps) const;
};

/// Projection of sin(2 pi x) onto the retained modes.
SpectralField<double> initial_condition(const EigenBasis<double>& basis);

using LevelSolutions = std::map<Eigen::Index, SpectralField<double>>;

/// u_N(T) for each N in N_list and for the finest grid, from one ladder.
LevelSolutions run_trajectory(const StudyContext& ctx, Eigen::Index k);
LevelSolutions run_trajectory(const StudyConfig& study, Eigen::Index k);

/// Per-trajectory ||u_{2N} - u_N||^2 for every N of the study.
std::vector<double> squared_level_gaps(const StudyContext& ctx, const LevelSolutions& sol);

struct ErrorEstimate {
  double error = 0;      // root mean square gap
  double std_error = 0;  // delta-method standard error of `error`
};

/// Root mean square of the samples with compensated summation in index order.
ErrorEstimate rms_estimate(const std::vector<double>& squared_gaps);

/// Runs all K trajectories and returns the estimate for row N.
double mc_error(const StudyConfig& study, Eigen::Index N);

std::map<Eigen::Index, double> empirical_rate(const std::map<Eigen::Index, double>& errors);

/// Negated least-squares slope of log2(error) against log2(N).
double fitted_rate(const std::map<Eigen::Index, double>& errors);

/// gamma = 2 rho + alpha - (d + epsilon)/2; modified -> min(gamma/alpha, 1),
/// baseline -> min(gamma/(2 alpha), 1/2). Throws std::domain_error if gamma <= 0.
double theoretical_rate(double alpha, double rho, int d, double epsilon, SchemeKind scheme);

struct RateRow {
  Eigen::Index N = 0;
  double error = 0;
  double std_error = 0;
  std::optional<double> rate;
};

struct RateTable {
  StudyConfig config;
  std::vector<RateRow> rows;
  std::optional<double> theory_rate;
  double wall_time = 0;  // seconds, not part of the CSV

  std::map<Eigen::Index, double> errors() const;
};

/// Runs the study on `config.threads` workers. Output is independent of the
/// thread count. Throws NumericalError if any trajectory blows up.
RateTable run_study(const StudyConfig& study);

void write_csv_header(std::ostream& os);
void write_csv_rows(std::ostream& os, const RateTable& table);
void write_csv(std::ostream& os, const std::vector<RateTable>& tables);

/// Table 1 configuration for one alpha: rho = 0.2, T = 0.2, M = 500,
/// N = 2, 4, 8, K = 1000.
StudyConfig table1_preset(double alpha);

/// Figure 1 configuration: rho = 1.2, T = 0.5, M = 100, N = 2..16, alpha = 0.5.
StudyConfig fig1_preset(SchemeKind scheme);

std::string format_double(double x);

}  // namespace spde
