// Command-line front end: single training runs and parameter sweeps.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "desqn/experiments.hpp"
#include "desqn/kernels.hpp"

namespace fs = std::filesystem;
using namespace desqn;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCapReached = 2;

struct CommonArgs {
  std::string task;
  std::optional<std::string> readout;
  std::optional<std::string> config_file;
  std::string out = ".";
};

// Precedence: built-in defaults < --config file < explicit flags.
AgentConfig build_config(Task task, const CommonArgs& args, ConfigMap& file_values) {
  if (args.config_file) file_values = read_config_file(*args.config_file);
  ReadoutKind readout = ReadoutKind::mlp;
  if (auto it = file_values.find("readout"); it != file_values.end())
    readout = parse_readout_kind(it->second);
  if (args.readout) readout = parse_readout_kind(*args.readout);
  AgentConfig cfg = AgentConfig::defaults(task, readout);
  apply_config(cfg, file_values);
  cfg.readout = readout;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("task", args.task, "cartpole | mountaincar | acrobot | pendulum")->required();
  cmd->add_option("--readout", args.readout, "mlp | linear");
  cmd->add_option("--config", args.config_file, "key = value file overriding agent settings");
  cmd->add_option("--out", args.out, "output directory")->capture_default_str();
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir + ": " + ec.message());
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo-state Q-network training and sweeps"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "progress on stderr");

  CommonArgs train_args;
  std::optional<double> train_g, train_lr;
  std::optional<std::string> train_opt;
  std::uint64_t train_seed = 1;
  auto* train = app.add_subcommand("train", "one training run; writes episodes.csv");
  add_common(train, train_args);
  train->add_option("--g", train_g, "reservoir gain");
  train->add_option("--lr", train_lr, "learning rate");
  train->add_option("--optimizer", train_opt, "amsgrad | adam | sgd");
  train->add_option("--seed", train_seed, "master seed")->capture_default_str();

  CommonArgs sg_args;
  std::size_t sg_seeds = 10, sg_jobs = 1;
  bool sg_full = false;
  std::uint64_t sg_master = 1;
  std::vector<double> sg_g;
  auto* sweep_g = app.add_subcommand("sweep-g", "success rate over reservoir gains");
  add_common(sweep_g, sg_args);
  sweep_g->add_option("--seeds", sg_seeds, "runs per gain")->capture_default_str();
  sweep_g->add_flag("--full", sg_full, "100 runs per gain");
  sweep_g->add_option("--g-values", sg_g, "gains to test (default 0, 0.1, ..., 2)")->delimiter(',');
  sweep_g->add_option("--jobs", sg_jobs, "worker threads")->capture_default_str();
  sweep_g->add_option("--master-seed", sg_master, "master seed")->capture_default_str();

  CommonArgs sl_args;
  std::size_t sl_seeds = 10, sl_jobs = 1;
  bool sl_full = false;
  std::uint64_t sl_master = 1;
  std::vector<int> sl_n;
  auto* sweep_lr = app.add_subcommand("sweep-lr", "success rate over optimizers and learning rates");
  add_common(sweep_lr, sl_args);
  sweep_lr->add_option("--seeds", sl_seeds, "runs per cell")->capture_default_str();
  sweep_lr->add_flag("--full", sl_full, "100 runs per cell");
  sweep_lr->add_option("--n-values", sl_n, "exponents n of lr = 0.000005 * 2^n (default 0..19)")
      ->delimiter(',');
  sweep_lr->add_option("--jobs", sl_jobs, "worker threads")->capture_default_str();
  sweep_lr->add_option("--master-seed", sl_master, "master seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    if (verbose) std::cerr << "kernels: " << kernels::to_string(kernels::active_isa()) << "\n";

    if (*train) {
      const Task task = parse_task(train_args.task);
      ConfigMap file_values;
      AgentConfig cfg = build_config(task, train_args, file_values);
      if (train_g) cfg.reservoir.g = *train_g;
      if (train_opt) cfg.optimizer.kind = parse_optimizer_kind(*train_opt);
      if (train_lr) cfg.optimizer.lr = *train_lr;
      cfg.bind_task(task);
      cfg.validate();
      const fs::path out = prepare_out(train_args.out);
      const RunReport report = run_single(task, cfg, train_seed, [&](const EpisodeReport& e) {
        if (verbose)
          std::fprintf(stderr, "episode %zu steps %zu reward %g eps %.4f completed %d\n", e.episode,
                       e.steps, e.total_reward, e.epsilon, static_cast<int>(e.completed));
      });
      emit_csv(out / "episodes.csv", episodes_table(report));
      std::cout << summary_line(task, report, cfg.max_episodes) << "\n";
      return report.success ? kExitSuccess : kExitCapReached;
    }

    const bool is_g = static_cast<bool>(*sweep_g);
    const CommonArgs& args = is_g ? sg_args : sl_args;
    const Task task = parse_task(args.task);
    ConfigMap file_values;
    AgentConfig cfg = build_config(task, args, file_values);
    SweepSpec spec = SweepSpec::defaults(task, cfg.readout);
    cfg.bind_task(task);
    spec.base = cfg;
    spec.seeds = (is_g ? sg_full : sl_full) ? 100 : (is_g ? sg_seeds : sl_seeds);
    spec.jobs = is_g ? sg_jobs : sl_jobs;
    if (spec.jobs == 0) spec.jobs = std::max(1u, std::thread::hardware_concurrency());
    spec.master_seed = is_g ? sg_master : sl_master;
    if (is_g && !sg_g.empty()) spec.g_values = sg_g;
    if (!is_g && !sl_n.empty()) spec.lr_exponents = sl_n;
    spec.validate();
    const fs::path out = prepare_out(args.out);

    auto progress = [&](const CellResult& c) {
      if (!verbose) return;
      std::fprintf(stderr, "g %g %s n %d seed %zu: %s (%zu episodes, %.1fs)\n", c.g,
                   std::string(to_string(c.optimizer)).c_str(), c.n, c.seed_index,
                   c.success ? "success" : "fail", c.episodes, c.seconds);
    };
    if (is_g) {
      const SweepResult r = run_sweep_g(spec, progress);
      emit_csv(out / "sweep_g_runs.csv", sweep_g_runs_table(spec, r));
      emit_csv(out / "sweep_g_summary.csv", sweep_g_summary_table(spec, r));
    } else {
      const SweepResult r = run_sweep_lr(spec, progress);
      emit_csv(out / "sweep_lr_runs.csv", sweep_lr_runs_table(spec, r));
      emit_csv(out / "sweep_lr_summary.csv", sweep_lr_summary_table(spec, r));
    }
    return kExitSuccess;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
