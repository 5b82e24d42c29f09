#include "spde/config.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <utility>

namespace spde {

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_path;
  std::string ladder_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool strict_gamma = false;
  Eigen::Index trajectory = 0;
};

// Registers the shared study flags on `cmd`; each supplied flag becomes a
// key/value override applied after any config file.
void add_study_flags(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--config", opts.config_path, "flat key = value config file");
  cmd->add_option("--out", opts.out_path, "CSV destination (default stdout)");
  auto value_flag = [&](const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&opts, key](const std::string& v) { opts.overrides.emplace_back(key, v); }, help);
  };
  value_flag("--seed", "seed", "master seed (falls back to $SPDE_SEED)");
  value_flag("--threads", "threads", "worker threads");
  value_flag("--K", "K", "trajectories");
  value_flag("--M", "M", "retained modes");
  value_flag("--alpha", "alpha", "fractional order in (0,1)");
  value_flag("--rho", "rho", "noise decay exponent");
  value_flag("--T", "T", "final time");
  value_flag("--N", "N", "comma-separated step counts, e.g. 2,4,8");
  value_flag("--scheme", "scheme", "baseline|modified");
  value_flag("--epsilon", "epsilon", "epsilon in the regularity index");
  cmd->add_flag_callback(
      "--sigma-zero", [&opts] { opts.overrides.emplace_back("sigma_zero", "true"); },
      "switch the noise off");
  cmd->add_flag_callback(
      "--f-zero", [&opts] { opts.overrides.emplace_back("f_zero", "true"); },
      "switch the nonlinearity off");
  cmd->add_flag("--strict-gamma", opts.strict_gamma,
                "treat gamma <= 0 as a configuration error instead of a warning");
}

bool has_override(const CliOptions& opts, const std::string& key) {
  for (const auto& [k, v] : opts.overrides)
    if (k == key) return true;
  return false;
}

StudyConfig resolve(StudyConfig base, const CliOptions& opts) {
  if (!opts.config_path.empty()) base = load_config(opts.config_path, base);
  if (!has_override(opts, "seed"))
    if (const char* env = std::getenv("SPDE_SEED")) apply_setting(base, "seed", env);
  for (const auto& [key, value] : opts.overrides) apply_setting(base, key, value);
  base.validate();
  return base;
}

void check_gamma(const StudyConfig& c, const CliOptions& opts, std::ostream& err) {
  try {
    theoretical_rate(c.alpha, c.rho, 1, c.epsilon, c.scheme);
  } catch (const std::domain_error& e) {
    if (opts.strict_gamma) throw ConfigError(e.what());
    err << "warning: " << e.what() << '\n';
  }
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void report(std::ostream& err, const RateTable& t) {
  err << to_string(t.config.scheme) << " alpha=" << t.config.alpha << " rho=" << t.config.rho
      << " M=" << t.config.M << " K=" << t.config.K << ": " << t.wall_time << " s\n";
}

int run_tables(const std::vector<StudyConfig>& presets, const CliOptions& opts, std::ostream& out,
               std::ostream& err) {
  std::vector<StudyConfig> configs;
  for (const auto& p : presets) {
    configs.push_back(resolve(p, opts));
    check_gamma(configs.back(), opts, err);
  }
  std::vector<RateTable> tables;
  for (const auto& c : configs) {
    tables.push_back(run_study(c));
    report(err, tables.back());
  }
  Output sink(opts.out_path, out);
  write_csv(sink.get(), tables);
  return 0;
}

int run_single(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  const StudyConfig c = resolve(StudyConfig{}, opts);
  check_gamma(c, opts, err);
  if (opts.trajectory < 0) throw ConfigError("--trajectory must be nonnegative");
  const Eigen::Index steps = c.N_list.back();
  const auto basis = build_basis<double>(c.M);
  auto noise = make_noise_params(basis, c.alpha, c.rho, c.T, steps);
  if (c.sigma_zero) noise.sigma.setZero();

  SchemeConfig<double> cfg;
  cfg.alpha = c.alpha;
  cfg.tau = c.T / static_cast<double>(steps);
  cfg.modes = c.M;
  cfg.f = c.f_zero ? Nonlinearity<double>::zero() : Nonlinearity<double>::sine();
  cfg.kind = c.scheme;

  NormalStream stream(c.master_seed, static_cast<std::uint64_t>(opts.trajectory));
  const auto ladder = sample_ladder(noise, stream);
  if (!opts.ladder_path.empty()) {
    std::ofstream dump(opts.ladder_path, std::ios::binary);
    if (!dump) throw ConfigError("cannot open ladder dump '" + opts.ladder_path + "'");
    write_ladder(dump, ladder);
  }
  const auto u = integrate(cfg, initial_condition(basis), ladder, basis, noise).at(steps);

  Output sink(opts.out_path, out);
  sink.get() << "mode,coefficient\n";
  for (Eigen::Index i = 0; i < u.size(); ++i)
    sink.get() << (i + 1) << ',' << format_double(u[i]) << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral-Galerkin solver and convergence studies for the fractional "
               "stochastic heat equation"};
  app.require_subcommand(1);
  CliOptions opts;

  auto* run = app.add_subcommand("run", "run one study from a config file and/or flags");
  auto* table1 = app.add_subcommand("table1", "alpha = 0.4, 0.6, 0.8 with rho = 0.2, T = 0.2");
  auto* fig1 = app.add_subcommand("fig1", "rho = 1.2, T = 0.5, M = 100, both schemes");
  auto* single = app.add_subcommand("single", "integrate one trajectory and dump u(T)");
  for (auto* cmd : {run, table1, fig1, single}) add_study_flags(cmd, opts);
  single->add_option("--trajectory", opts.trajectory, "trajectory index");
  single->add_option("--dump-ladder", opts.ladder_path, "write the binary noise ladder here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      if (opts.config_path.empty() && opts.overrides.empty())
        throw ConfigError("run: give --config PATH and/or study flags");
      return run_tables({StudyConfig{}}, opts, out, err);
    }
    if (table1->parsed()) {
      std::vector<StudyConfig> presets;
      // --alpha narrows the preset set to a single column.
      for (double alpha : {0.4, 0.6, 0.8}) presets.push_back(table1_preset(alpha));
      if (has_override(opts, "alpha")) presets.resize(1);
      return run_tables(presets, opts, out, err);
    }
    if (fig1->parsed()) {
      std::vector<StudyConfig> presets{fig1_preset(SchemeKind::modified)};
      if (!has_override(opts, "scheme")) presets.push_back(fig1_preset(SchemeKind::baseline));
      return run_tables(presets, opts, out, err);
    }
    return run_single(opts, out, err);
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace spde
