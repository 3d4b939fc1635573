#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "desqn/agent.hpp"
#include "desqn/envs.hpp"

namespace desqn {

// CSV ------------------------------------------------------------------------

using CsvField = std::variant<std::int64_t, double, std::string>;

/// Rows are sorted by `key_columns` (numerically for numeric fields) before
/// being written, so output order never depends on execution order.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::string> key_columns;
  std::vector<std::vector<CsvField>> rows;
};

/// Doubles print with 10 significant digits (9 after the leading one), which
/// round-trips to 1e-9 relative; NaN prints as "nan", absent values as "".
std::string format_field(const CsvField& f);
std::string to_csv(CsvTable table);
/// Throws io_error when the file cannot be written.
void emit_csv(const std::filesystem::path& path, const CsvTable& table);

// Configuration overrides ----------------------------------------------------

using ConfigMap = std::map<std::string, std::string>;

/// Flat `key = value` lines; `#` starts a comment. Throws invalid_config on
/// malformed lines or duplicate keys.
ConfigMap parse_config_text(std::string_view text);
ConfigMap read_config_file(const std::filesystem::path& path);
/// Applies overrides to any AgentConfig field (see README for the key list).
/// Throws invalid_config on unknown keys or unparsable values.
void apply_config(AgentConfig& cfg, const ConfigMap& values);
std::vector<std::string> config_keys();

// Seeding --------------------------------------------------------------------

/// Canonical text of a sweep cell, e.g.
///   "desqn-cell/v1|master=1|task=cartpole|readout=mlp|g=0.9|seed=3"
std::string cell_key(std::uint64_t master_seed, Task task, ReadoutKind readout,
                     std::string_view param, std::size_t seed_index);
/// Stable 64-bit seed of a cell: splitmix64(fnv1a64(cell_key(...))).
std::uint64_t cell_seed(std::uint64_t master_seed, Task task, ReadoutKind readout,
                        std::string_view param, std::size_t seed_index);
std::string g_param(double g);
std::string lr_param(OptimizerKind kind, int n);

/// Shortest decimal text that round-trips to the same double.
std::string shortest_repr(double v);

// Runs -----------------------------------------------------------------------

/// One full training run on a fresh environment.
RunReport run_single(Task task, const AgentConfig& cfg, std::uint64_t seed,
                     const Agent::EpisodeCallback& on_episode = {});

/// Columns: episode, steps, total_reward, epsilon, loss_mean, completed.
CsvTable episodes_table(const RunReport& report);
std::string summary_line(Task task, const RunReport& report, std::size_t max_episodes);

/// g from 0 to 2 in steps of 0.1.
std::vector<double> default_g_values();
/// 0.000005 * 2^n.
double sweep_lr_value(int n);

struct SweepSpec {
  Task task = Task::cartpole;
  ReadoutKind readout = ReadoutKind::mlp;
  AgentConfig base;  // per-cell g / optimizer / lr are overwritten
  std::vector<double> g_values = default_g_values();
  std::vector<OptimizerKind> optimizers{OptimizerKind::amsgrad, OptimizerKind::sgd,
                                        OptimizerKind::adam};
  std::vector<int> lr_exponents;  // default 0..19
  std::size_t seeds = 10;
  std::uint64_t master_seed = 1;
  std::size_t jobs = 1;

  static SweepSpec defaults(Task task, ReadoutKind readout);
  void validate() const;
};

struct CellResult {
  double g = 0.0;
  OptimizerKind optimizer = OptimizerKind::amsgrad;
  int n = 0;
  double lr = 0.0;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::optional<std::size_t> success_episode;
  std::size_t episodes = 0;
  double seconds = 0.0;
};

struct SweepResult {
  std::vector<CellResult> runs;

  std::size_t successes_where(const std::function<bool(const CellResult&)>& pred) const;
};

/// Runs one cell exactly as a sweep would.
CellResult run_g_cell(const SweepSpec& spec, double g, std::size_t seed_index);
CellResult run_lr_cell(const SweepSpec& spec, OptimizerKind kind, int n, std::size_t seed_index);

using CellCallback = std::function<void(const CellResult&)>;
SweepResult run_sweep_g(const SweepSpec& spec, const CellCallback& on_cell = {});
SweepResult run_sweep_lr(const SweepSpec& spec, const CellCallback& on_cell = {});

/// Columns: task, readout, g, seed, success, success_episode.
CsvTable sweep_g_runs_table(const SweepSpec& spec, const SweepResult& result);
/// Columns: task, readout, g, success_rate.
CsvTable sweep_g_summary_table(const SweepSpec& spec, const SweepResult& result);
/// Columns: task, readout, optimizer, n, lr, seed, success.
CsvTable sweep_lr_runs_table(const SweepSpec& spec, const SweepResult& result);
/// Columns: task, readout, optimizer, n, lr, success_rate.
CsvTable sweep_lr_summary_table(const SweepSpec& spec, const SweepResult& result);

/// Runs `count` independent jobs on up to `workers` threads. The first
/// exception thrown by a job is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job);

}  // namespace desqn
