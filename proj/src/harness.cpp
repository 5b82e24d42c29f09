#include "spde/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace spde {

namespace {

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

// Neumaier compensated sum.
double stable_sum(const std::vector<double>& xs) {
  double sum = 0, comp = 0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

void StudyConfig::validate() const {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (!(rho >= 0)) throw std::invalid_argument("rho must be nonnegative");
  if (M < 1) throw std::invalid_argument("M must be positive");
  if (!(T > 0)) throw std::invalid_argument("T must be positive");
  if (K < 1) throw std::invalid_argument("K must be positive");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be positive");
  if (N_list.empty()) throw std::invalid_argument("N list is empty");
  for (std::size_t j = 0; j < N_list.size(); ++j) {
    if (!is_power_of_two(N_list[j]))
      throw std::invalid_argument("N values must be powers of two, got " +
                                  std::to_string(N_list[j]));
    if (j > 0 && N_list[j] <= N_list[j - 1])
      throw std::invalid_argument("N list must be strictly increasing");
  }
}

Eigen::Index StudyConfig::finest_steps() const { return 2 * N_list.back(); }

SpectralField<double> initial_condition(const EigenBasis<double>& basis) {
  GridValues<double> samples(basis.grid_size);
  for (Eigen::Index g = 0; g < basis.grid_size; ++g)
    samples[g] = std::sin(2.0 * std::numbers::pi * basis.nodes[g]);
  return to_spectral(samples, basis);
}

StudyContext::StudyContext(const StudyConfig& study)
    : config(study),
      basis((study.validate(), build_basis<double>(study.M))),
      noise(make_noise_params(basis, study.alpha, study.rho, study.T, study.finest_steps())),
      u0(initial_condition(basis)),
      f(study.f_zero ? Nonlinearity<double>::zero() : Nonlinearity<double>::sine()) {
  if (study.sigma_zero) noise.sigma.setZero();
}

SchemeConfig<double> StudyContext::scheme_config(Eigen::Index steps) const {
  SchemeConfig<double> cfg;
  cfg.alpha = config.alpha;
  cfg.tau = config.T / static_cast<double>(steps);
  cfg.modes = config.M;
  cfg.f = f;
  cfg.kind = config.scheme;
  return cfg;
}

LevelSolutions run_trajectory(const StudyContext& ctx, Eigen::Index k) {
  if (k < 0 || k >= ctx.config.K) throw std::out_of_range("run_trajectory: k out of range");
  NormalStream stream(ctx.config.master_seed, static_cast<std::uint64_t>(k));
  NoiseLadder<double> ladder = sample_ladder(ctx.noise, stream);

  LevelSolutions out;
  const Eigen::Index coarsest = ctx.config.N_list.front();
  for (Eigen::Index steps = ctx.config.finest_steps();; steps /= 2) {
    const auto sol = integrate(ctx.scheme_config(steps), ctx.u0, ladder, ctx.basis, ctx.noise);
    out.emplace(steps, sol.at(steps));
    if (steps == coarsest) break;
    ladder = coarsen(ladder, ctx.noise);
  }
  return out;
}

LevelSolutions run_trajectory(const StudyConfig& study, Eigen::Index k) {
  return run_trajectory(StudyContext(study), k);
}

std::vector<double> squared_level_gaps(const StudyContext& ctx, const LevelSolutions& sol) {
  std::vector<double> gaps;
  gaps.reserve(ctx.config.N_list.size());
  for (Eigen::Index n : ctx.config.N_list)
    gaps.push_back((sol.at(2 * n) - sol.at(n)).squaredNorm());
  return gaps;
}

ErrorEstimate rms_estimate(const std::vector<double>& squared_gaps) {
  if (squared_gaps.empty()) throw std::invalid_argument("mc_error: no trajectories (K = 0)");
  const double count = static_cast<double>(squared_gaps.size());
  const double mean = stable_sum(squared_gaps) / count;
  std::vector<double> dev(squared_gaps.size());
  std::transform(squared_gaps.begin(), squared_gaps.end(), dev.begin(),
                 [mean](double x) { return (x - mean) * (x - mean); });
  const double var = squared_gaps.size() > 1 ? stable_sum(dev) / (count - 1) : 0.0;
  ErrorEstimate est;
  est.error = std::sqrt(mean);
  est.std_error = est.error > 0 ? std::sqrt(var / count) / (2.0 * est.error) : 0.0;
  return est;
}

namespace {

// slots[k] = squared gaps of trajectory k; filled by `threads` workers.
std::vector<std::vector<double>> collect_gaps(const StudyContext& ctx) {
  const Eigen::Index K = ctx.config.K;
  std::vector<std::vector<double>> slots(static_cast<std::size_t>(K));
  std::atomic<Eigen::Index> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::mutex failure_mutex;

  auto worker = [&] {
    for (Eigen::Index k = next++; k < K && !failed; k = next++) {
      try {
        slots[static_cast<std::size_t>(k)] = squared_level_gaps(ctx, run_trajectory(ctx, k));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const unsigned n_threads =
      static_cast<unsigned>(std::min<Eigen::Index>(ctx.config.threads, K));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return slots;
}

std::vector<double> column(const std::vector<std::vector<double>>& slots, std::size_t j) {
  std::vector<double> col;
  col.reserve(slots.size());
  for (const auto& row : slots) col.push_back(row[j]);
  return col;
}

}  // namespace

double mc_error(const StudyConfig& study, Eigen::Index N) {
  const auto it = std::find(study.N_list.begin(), study.N_list.end(), N);
  if (it == study.N_list.end()) throw std::invalid_argument("mc_error: N not in the study");
  const StudyContext ctx(study);
  const auto slots = collect_gaps(ctx);
  return rms_estimate(column(slots, static_cast<std::size_t>(it - study.N_list.begin()))).error;
}

std::map<Eigen::Index, double> empirical_rate(const std::map<Eigen::Index, double>& errors) {
  if (errors.size() < 2) throw std::invalid_argument("empirical_rate: need at least two rows");
  for (const auto& [n, e] : errors)
    if (!(e > 0)) throw std::invalid_argument("empirical_rate: errors must be positive");
  std::map<Eigen::Index, double> rates;
  for (auto prev = errors.begin(), it = std::next(prev); it != errors.end(); ++prev, ++it)
    rates[it->first] = std::log(prev->second / it->second) / std::log(2.0);
  return rates;
}

double fitted_rate(const std::map<Eigen::Index, double>& errors) {
  if (errors.size() < 2) throw std::invalid_argument("fitted_rate: need at least two rows");
  Eigen::MatrixXd design(errors.size(), 2);
  Eigen::VectorXd rhs(errors.size());
  Eigen::Index r = 0;
  for (const auto& [n, e] : errors) {
    if (!(e > 0)) throw std::invalid_argument("fitted_rate: errors must be positive");
    design(r, 0) = 1.0;
    design(r, 1) = std::log2(static_cast<double>(n));
    rhs[r] = std::log2(e);
    ++r;
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  return -coef[1];
}

double theoretical_rate(double alpha, double rho, int d, double epsilon, SchemeKind scheme) {
  const double gamma = 2.0 * rho + alpha - (d + epsilon) / 2.0;
  if (!(gamma > 0))
    throw std::domain_error("theoretical_rate: gamma = " + format_double(gamma) +
                            " <= 0, configuration outside the theory");
  return scheme == SchemeKind::modified ? std::min(gamma / alpha, 1.0)
                                        : std::min(gamma / (2.0 * alpha), 0.5);
}

std::map<Eigen::Index, double> RateTable::errors() const {
  std::map<Eigen::Index, double> out;
  for (const auto& row : rows) out[row.N] = row.error;
  return out;
}

RateTable run_study(const StudyConfig& study) {
  const auto start = std::chrono::steady_clock::now();
  const StudyContext ctx(study);
  const auto slots = collect_gaps(ctx);

  RateTable table;
  table.config = study;
  for (std::size_t j = 0; j < study.N_list.size(); ++j) {
    const ErrorEstimate est = rms_estimate(column(slots, j));
    RateRow row;
    row.N = study.N_list[j];
    row.error = est.error;
    row.std_error = est.std_error;
    if (j > 0 && est.error > 0 && table.rows.back().error > 0)
      row.rate = std::log(table.rows.back().error / est.error) / std::log(2.0);
    table.rows.push_back(row);
  }
  try {
    table.theory_rate = theoretical_rate(study.alpha, study.rho, 1, study.epsilon, study.scheme);
  } catch (const std::domain_error&) {
    table.theory_rate.reset();
  }
  table.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv_header(std::ostream& os) {
  os << "scheme,alpha,rho,M,K,T,seed,N,error,rate,theory_rate\n";
}

void write_csv_rows(std::ostream& os, const RateTable& table) {
  const StudyConfig& c = table.config;
  for (const auto& row : table.rows) {
    os << to_string(c.scheme) << ',' << format_double(c.alpha) << ',' << format_double(c.rho)
       << ',' << c.M << ',' << c.K << ',' << format_double(c.T) << ',' << c.master_seed << ','
       << row.N << ',' << format_double(row.error) << ','
       << (row.rate ? format_double(*row.rate) : "") << ','
       << (table.theory_rate ? format_double(*table.theory_rate) : "") << '\n';
  }
}

void write_csv(std::ostream& os, const std::vector<RateTable>& tables) {
  write_csv_header(os);
  for (const auto& t : tables) write_csv_rows(os, t);
}

StudyConfig table1_preset(double alpha) {
  StudyConfig c;
  c.alpha = alpha;
  c.rho = 0.2;
  c.T = 0.2;
  c.M = 500;
  c.N_list = {2, 4, 8};
  c.K = 1000;
  c.scheme = SchemeKind::modified;
  return c;
}

StudyConfig fig1_preset(SchemeKind scheme) {
  StudyConfig c;
  c.alpha = 0.5;
  c.rho = 1.2;
  c.T = 0.5;
  c.M = 100;
  c.N_list = {2, 4, 8, 16};
  c.K = 1000;
  c.scheme = scheme;
  return c;
}

}  // namespace spde
