#include "desqn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace desqn {

// CSV ------------------------------------------------------------------------

std::string format_field(const CsvField& f) {
  if (const auto* i = std::get_if<std::int64_t>(&f)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&f)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string q = "\"";
    for (char ch : *s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  }
  const double d = std::get<double>(f);
  if (std::isnan(d)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", d);
  return buf;
}

namespace {

// Numbers before strings; numbers compare by value, strings lexicographically.
int compare_fields(const CsvField& a, const CsvField& b) {
  auto numeric = [](const CsvField& f, double& out) {
    if (const auto* i = std::get_if<std::int64_t>(&f)) return out = static_cast<double>(*i), true;
    if (const auto* d = std::get_if<double>(&f)) return out = *d, true;
    return false;
  };
  double x = 0, y = 0;
  const bool nx = numeric(a, x), ny = numeric(b, y);
  if (nx && ny) {
    if (std::isnan(x) || std::isnan(y)) return std::isnan(x) - std::isnan(y);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  if (nx != ny) return nx ? -1 : 1;
  return std::get<std::string>(a).compare(std::get<std::string>(b));
}

}  // namespace

std::string to_csv(CsvTable table) {
  std::vector<std::size_t> keys;
  for (const auto& k : table.key_columns) {
    auto it = std::find(table.columns.begin(), table.columns.end(), k);
    if (it == table.columns.end()) throw Error(Errc::invalid_config, "unknown CSV key column " + k);
    keys.push_back(static_cast<std::size_t>(it - table.columns.begin()));
  }
  for (const auto& row : table.rows)
    if (row.size() != table.columns.size())
      throw Error(Errc::dimension_mismatch, "CSV row width differs from header");
  std::stable_sort(table.rows.begin(), table.rows.end(), [&](const auto& a, const auto& b) {
    for (std::size_t k : keys) {
      const int c = compare_fields(a[k], b[k]);
      if (c != 0) return c < 0;
    }
    return false;
  });

  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

void emit_csv(const std::filesystem::path& path, const CsvTable& table) {
  const std::string text = to_csv(table);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error(Errc::io_error, "write failed for " + path.string());
}

// Configuration --------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(Errc::invalid_config, "bad value '" + value + "' for " + key);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v);
}

using Setter = void (*)(AgentConfig&, const std::string&, const std::string&);

struct ConfigKey {
  const char* name;
  Setter set;
};

#define DESQN_REAL(field, key) \
  {key, [](AgentConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }}
#define DESQN_COUNT(field, key) \
  {key, [](AgentConfig& c, const std::string& k, const std::string& v) { c.field = to_count(k, v); }}

const ConfigKey kConfigKeys[] = {
    DESQN_REAL(gamma, "gamma"),
    DESQN_REAL(epsilon_start, "epsilon_start"),
    DESQN_REAL(epsilon_floor, "epsilon_floor"),
    DESQN_COUNT(epsilon_decay_episodes, "epsilon_decay_episodes"),
    DESQN_COUNT(batch_size, "batch_size"),
    DESQN_COUNT(memory_capacity, "memory_capacity"),
    DESQN_COUNT(target_sync_every, "target_sync_every"),
    DESQN_COUNT(max_episodes, "max_episodes"),
    DESQN_COUNT(success_streak, "success_streak"),
    {"reset_reservoir_each_episode",
     [](AgentConfig& c, const std::string& k, const std::string& v) {
       c.reset_reservoir_each_episode = to_bool(k, v);
     }},
    {"readout", [](AgentConfig& c, const std::string&, const std::string& v) {
       c.readout = parse_readout_kind(v);
     }},
    DESQN_COUNT(hidden_units, "hidden_units"),
    {"optimizer", [](AgentConfig& c, const std::string&, const std::string& v) {
       c.optimizer.kind = parse_optimizer_kind(v);
     }},
    DESQN_REAL(optimizer.lr, "lr"),
    DESQN_REAL(optimizer.beta1, "beta1"),
    DESQN_REAL(optimizer.beta2, "beta2"),
    DESQN_REAL(optimizer.eps, "eps"),
    DESQN_COUNT(reservoir.n_x, "n_x"),
    DESQN_REAL(reservoir.p, "p"),
    DESQN_REAL(reservoir.g, "g"),
    DESQN_REAL(reservoir.input_scale, "input_scale"),
    DESQN_REAL(reservoir.bias_scale, "bias_scale"),
    DESQN_COUNT(env.mountaincar_actions, "mountaincar_actions"),
    DESQN_COUNT(env.acrobot_actions, "acrobot_actions"),
    DESQN_COUNT(env.pendulum_success_window, "pendulum_success_window"),
};

#undef DESQN_REAL
#undef DESQN_COUNT

}  // namespace

ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::invalid_config, "line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error(Errc::invalid_config, "line " + std::to_string(line_no) + ": empty key or value");
    if (!out.emplace(key, value).second)
      throw Error(Errc::invalid_config, "duplicate key " + key);
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(AgentConfig& cfg, const ConfigMap& values) {
  for (const auto& [key, value] : values) {
    auto it = std::find_if(std::begin(kConfigKeys), std::end(kConfigKeys),
                           [&](const ConfigKey& k) { return key == k.name; });
    if (it == std::end(kConfigKeys)) throw Error(Errc::invalid_config, "unknown config key " + key);
    it->set(cfg, key, value);
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : kConfigKeys) out.emplace_back(k.name);
  return out;
}

// Seeding --------------------------------------------------------------------

std::string shortest_repr(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string g_param(double g) { return "g=" + shortest_repr(g); }

std::string lr_param(OptimizerKind kind, int n) {
  return "optimizer=" + std::string(to_string(kind)) + "|n=" + std::to_string(n);
}

std::string cell_key(std::uint64_t master_seed, Task task, ReadoutKind readout,
                     std::string_view param, std::size_t seed_index) {
  std::string key = "desqn-cell/v1|master=" + std::to_string(master_seed);
  key += "|task=";
  key += to_string(task);
  key += "|readout=";
  key += to_string(readout);
  key += '|';
  key += param;
  key += "|seed=" + std::to_string(seed_index);
  return key;
}

std::uint64_t cell_seed(std::uint64_t master_seed, Task task, ReadoutKind readout,
                        std::string_view param, std::size_t seed_index) {
  return splitmix64(fnv1a64(cell_key(master_seed, task, readout, param, seed_index)));
}

// Runs -----------------------------------------------------------------------

RunReport run_single(Task task, const AgentConfig& cfg, std::uint64_t seed,
                     const Agent::EpisodeCallback& on_episode) {
  AgentConfig bound = cfg;
  bound.bind_task(task);
  auto env = make_env(task, bound.env);
  Agent agent(bound, seed);
  return agent.run_training(*env, on_episode);
}

CsvTable episodes_table(const RunReport& report) {
  CsvTable t;
  t.columns = {"episode", "steps", "total_reward", "epsilon", "loss_mean", "completed"};
  t.key_columns = {"episode"};
  for (const auto& e : report.episodes)
    t.rows.push_back({static_cast<std::int64_t>(e.episode), static_cast<std::int64_t>(e.steps),
                      e.total_reward, e.epsilon, e.loss_mean,
                      static_cast<std::int64_t>(e.completed)});
  return t;
}

std::string summary_line(Task task, const RunReport& report, std::size_t max_episodes) {
  std::string s(to_string(task));
  if (report.success)
    return s + ": success, completion streak reached at episode " +
           std::to_string(*report.success_episode);
  return s + ": no success within " + std::to_string(max_episodes) + " episodes";
}

std::vector<double> default_g_values() {
  std::vector<double> out;
  for (int k = 0; k <= 20; ++k) out.push_back(k / 10.0);
  return out;
}

double sweep_lr_value(int n) { return std::ldexp(0.000005, n); }

SweepSpec SweepSpec::defaults(Task task, ReadoutKind readout) {
  SweepSpec s;
  s.task = task;
  s.readout = readout;
  s.base = AgentConfig::defaults(task, readout);
  for (int n = 0; n < 20; ++n) s.lr_exponents.push_back(n);
  return s;
}

void SweepSpec::validate() const {
  if (seeds == 0) throw Error(Errc::invalid_config, "seeds must be >= 1");
  if (jobs == 0) throw Error(Errc::invalid_config, "jobs must be >= 1");
  for (double g : g_values)
    if (!(g >= 0.0) || !std::isfinite(g)) throw Error(Errc::invalid_range, "g values must be >= 0");
  base.validate();
}

std::size_t SweepResult::successes_where(const std::function<bool(const CellResult&)>& pred) const {
  return static_cast<std::size_t>(
      std::count_if(runs.begin(), runs.end(), [&](const CellResult& c) { return pred(c) && c.success; }));
}

namespace {

CellResult run_cell(const SweepSpec& spec, AgentConfig cfg, CellResult cell, std::string_view param) {
  cfg.readout = spec.readout;
  cfg.bind_task(spec.task);
  cell.seed = cell_seed(spec.master_seed, spec.task, spec.readout, param, cell.seed_index);
  const auto t0 = std::chrono::steady_clock::now();
  const RunReport r = run_single(spec.task, cfg, cell.seed);
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  cell.success = r.success;
  cell.success_episode = r.success_episode;
  cell.episodes = r.episodes.size();
  return cell;
}

SweepResult run_cells(std::size_t count, std::size_t jobs,
                      const std::function<CellResult(std::size_t)>& make,
                      const CellCallback& on_cell) {
  SweepResult out;
  out.runs.resize(count);
  std::mutex mu;
  parallel_for(count, jobs, [&](std::size_t i) {
    out.runs[i] = make(i);
    if (on_cell) {
      std::lock_guard lock(mu);
      on_cell(out.runs[i]);
    }
  });
  return out;
}

}  // namespace

CellResult run_g_cell(const SweepSpec& spec, double g, std::size_t seed_index) {
  AgentConfig cfg = spec.base;
  cfg.reservoir.g = g;
  CellResult cell;
  cell.g = g;
  cell.optimizer = cfg.optimizer.kind;
  cell.lr = cfg.optimizer.lr;
  cell.seed_index = seed_index;
  return run_cell(spec, cfg, cell, g_param(g));
}

CellResult run_lr_cell(const SweepSpec& spec, OptimizerKind kind, int n, std::size_t seed_index) {
  AgentConfig cfg = spec.base;
  cfg.optimizer.kind = kind;
  cfg.optimizer.lr = sweep_lr_value(n);
  CellResult cell;
  cell.g = cfg.reservoir.g;
  cell.optimizer = kind;
  cell.n = n;
  cell.lr = cfg.optimizer.lr;
  cell.seed_index = seed_index;
  return run_cell(spec, cfg, cell, lr_param(kind, n));
}

SweepResult run_sweep_g(const SweepSpec& spec, const CellCallback& on_cell) {
  spec.validate();
  const std::size_t per_g = spec.seeds;
  return run_cells(
      spec.g_values.size() * per_g, spec.jobs,
      [&](std::size_t i) { return run_g_cell(spec, spec.g_values[i / per_g], i % per_g); }, on_cell);
}

SweepResult run_sweep_lr(const SweepSpec& spec, const CellCallback& on_cell) {
  spec.validate();
  const std::size_t per_n = spec.seeds;
  const std::size_t per_opt = spec.lr_exponents.size() * per_n;
  return run_cells(
      spec.optimizers.size() * per_opt, spec.jobs,
      [&](std::size_t i) {
        return run_lr_cell(spec, spec.optimizers[i / per_opt], spec.lr_exponents[(i % per_opt) / per_n],
                           i % per_n);
      },
      on_cell);
}

CsvTable sweep_g_runs_table(const SweepSpec& spec, const SweepResult& result) {
  CsvTable t;
  t.columns = {"task", "readout", "g", "seed", "success", "success_episode"};
  t.key_columns = {"g", "seed"};
  for (const auto& c : result.runs) {
    CsvField ep = std::string();
    if (c.success_episode) ep = static_cast<std::int64_t>(*c.success_episode);
    t.rows.push_back({std::string(to_string(spec.task)), std::string(to_string(spec.readout)), c.g,
                      static_cast<std::int64_t>(c.seed_index), static_cast<std::int64_t>(c.success),
                      ep});
  }
  return t;
}

CsvTable sweep_g_summary_table(const SweepSpec& spec, const SweepResult& result) {
  CsvTable t;
  t.columns = {"task", "readout", "g", "success_rate"};
  t.key_columns = {"g"};
  for (double g : spec.g_values) {
    std::size_t total = 0, ok = 0;
    for (const auto& c : result.runs)
      if (c.g == g) total += 1, ok += c.success;
    if (total == 0) continue;
    t.rows.push_back({std::string(to_string(spec.task)), std::string(to_string(spec.readout)), g,
                      static_cast<double>(ok) / static_cast<double>(total)});
  }
  return t;
}

CsvTable sweep_lr_runs_table(const SweepSpec& spec, const SweepResult& result) {
  CsvTable t;
  t.columns = {"task", "readout", "optimizer", "n", "lr", "seed", "success"};
  t.key_columns = {"optimizer", "n", "seed"};
  for (const auto& c : result.runs)
    t.rows.push_back({std::string(to_string(spec.task)), std::string(to_string(spec.readout)),
                      std::string(to_string(c.optimizer)), static_cast<std::int64_t>(c.n), c.lr,
                      static_cast<std::int64_t>(c.seed_index), static_cast<std::int64_t>(c.success)});
  return t;
}

CsvTable sweep_lr_summary_table(const SweepSpec& spec, const SweepResult& result) {
  CsvTable t;
  t.columns = {"task", "readout", "optimizer", "n", "lr", "success_rate"};
  t.key_columns = {"optimizer", "n"};
  for (OptimizerKind kind : spec.optimizers)
    for (int n : spec.lr_exponents) {
      std::size_t total = 0, ok = 0;
      for (const auto& c : result.runs)
        if (c.optimizer == kind && c.n == n) total += 1, ok += c.success;
      if (total == 0) continue;
      t.rows.push_back({std::string(to_string(spec.task)), std::string(to_string(spec.readout)),
                        std::string(to_string(kind)), static_cast<std::int64_t>(n),
                        sweep_lr_value(n), static_cast<double>(ok) / static_cast<double>(total)});
    }
  return t;
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace desqn
