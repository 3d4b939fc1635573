#include "desqn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace desqn {

double default_learning_rate(Task task, ReadoutKind readout) {
  if (task == Task::mountaincar) return readout == ReadoutKind::mlp ? 0.005 : 0.01;
  return 0.001;
}

AgentConfig AgentConfig::defaults(Task task, ReadoutKind readout) {
  AgentConfig cfg;
  cfg.readout = readout;
  cfg.optimizer.lr = default_learning_rate(task, readout);
  cfg.bind_task(task);
  return cfg;
}

void AgentConfig::bind_task(Task task) {
  const EnvSpec spec = default_spec(task, env);
  reservoir.n_i = spec.n_obs;
  n_actions = spec.n_actions;
}

double AgentConfig::epsilon_decay() const {
  return std::pow(epsilon_floor / epsilon_start, 1.0 / static_cast<double>(epsilon_decay_episodes));
}

double AgentConfig::epsilon_after(std::size_t episodes) const {
  if (episodes >= epsilon_decay_episodes) return epsilon_floor;
  const double frac = static_cast<double>(episodes) / static_cast<double>(epsilon_decay_episodes);
  return std::max(epsilon_floor, epsilon_start * std::pow(epsilon_floor / epsilon_start, frac));
}

void AgentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::invalid_config, msg); };
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must be in [0, 1]");
  if (!(epsilon_floor > 0.0 && epsilon_floor <= epsilon_start && epsilon_start <= 1.0))
    fail("need 0 < epsilon_floor <= epsilon_start <= 1");
  if (epsilon_decay_episodes == 0) fail("epsilon_decay_episodes must be >= 1");
  const double reached =
      epsilon_start * std::pow(epsilon_decay(), static_cast<double>(epsilon_decay_episodes));
  if (std::abs(reached - epsilon_floor) > 1e-12) fail("epsilon schedule does not reach its floor");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (memory_capacity < batch_size) fail("memory_capacity must be >= batch_size");
  if (target_sync_every == 0) fail("target_sync_every must be >= 1");
  if (max_episodes == 0) fail("max_episodes must be >= 1");
  if (success_streak == 0) fail("success_streak must be >= 1");
  if (readout == ReadoutKind::mlp && hidden_units == 0) fail("hidden_units must be >= 1");
  if (n_actions < 2) fail("n_actions must be >= 2");
  optimizer.validate();
  reservoir.validate();
  env.validate();
}

RunStreams RunStreams::from_seed(std::uint64_t master_seed) {
  return {SeededRng::stream(master_seed, "reservoir"), SeededRng::stream(master_seed, "readout"),
          SeededRng::stream(master_seed, "exploration"), SeededRng::stream(master_seed, "replay"),
          SeededRng::stream(master_seed, "environment")};
}

namespace {

std::tuple<Reservoir, Readout, RunStreams> build_parts(const AgentConfig& cfg,
                                                       std::uint64_t master_seed) {
  cfg.validate();
  RunStreams streams = RunStreams::from_seed(master_seed);
  Reservoir reservoir = Reservoir::build(cfg.reservoir, streams.reservoir);
  Readout net = Readout::init(cfg.readout, cfg.reservoir.n_i + cfg.reservoir.n_x, cfg.hidden_units,
                              cfg.n_actions, streams.readout);
  return {std::move(reservoir), std::move(net), std::move(streams)};
}

}  // namespace

Agent::Agent(const AgentConfig& cfg, std::uint64_t master_seed)
    : Agent(cfg, build_parts(cfg, master_seed)) {}

Agent::Agent(const AgentConfig& cfg, Reservoir reservoir, Readout main_net, RunStreams streams)
    : Agent(cfg, std::make_tuple(std::move(reservoir), std::move(main_net), std::move(streams))) {}

Agent::Agent(const AgentConfig& cfg, std::tuple<Reservoir, Readout, RunStreams>&& parts)
    : cfg_(cfg),
      streams_(std::move(std::get<2>(parts))),
      reservoir_(std::move(std::get<0>(parts))),
      main_(std::move(std::get<1>(parts))),
      target_(main_),
      optim_(cfg.optimizer),
      memory_(cfg.memory_capacity),
      epsilon_(cfg.epsilon_start) {
  cfg_.validate();
  if (main_.input_size() != reservoir_.n_i() + reservoir_.n_x())
    throw Error(Errc::dimension_mismatch, "readout input width must be n_obs + n_x");
  if (main_.n_actions() < 2) throw Error(Errc::invalid_dimension, "readout needs >= 2 actions");
  cfg_.n_actions = main_.n_actions();
  cfg_.reservoir.n_i = reservoir_.n_i();
  cfg_.reservoir.n_x = reservoir_.n_x();
  input_.resize(main_.input_size());
  q_.resize(main_.n_actions());
  grads_ = main_.zero_gradients();
}

void Agent::fill_input(std::span<double> row, std::span<const double> o,
                       std::span<const double> x) const {
  std::copy(o.begin(), o.end(), row.begin());
  std::copy(x.begin(), x.end(), row.begin() + static_cast<std::ptrdiff_t>(o.size()));
}

std::span<const double> Agent::observe(std::span<const double> o) { return reservoir_.step(o); }

Vector Agent::q_values(std::span<const double> o, std::span<const double> x) const {
  if (o.size() != reservoir_.n_i() || x.size() != reservoir_.n_x())
    throw Error(Errc::dimension_mismatch, "q_values: observation or state width");
  Vector in(main_.input_size());
  fill_input(in, o, x);
  return main_.forward(in);
}

std::size_t Agent::select_action(std::span<const double> o, std::span<const double> x) {
  if (o.size() != reservoir_.n_i() || x.size() != reservoir_.n_x())
    throw Error(Errc::dimension_mismatch, "select_action: observation or state width");
  if (streams_.exploration.bernoulli(epsilon_))
    return static_cast<std::size_t>(streams_.exploration.uniform_index(main_.n_actions()));
  fill_input(input_, o, x);
  main_.forward(input_, q_, scratch_);
  return argmax(q_);
}

std::pair<std::size_t, Vector> Agent::act(std::span<const double> o) {
  auto xs = observe(o);
  Vector x(xs.begin(), xs.end());
  return {select_action(o, x), std::move(x)};
}

void Agent::targets_for(std::span<const Transition* const> batch, Vector& out) {
  const std::size_t n = batch.size();
  if (n == 0) throw Error(Errc::empty_batch, "compute_targets needs at least one transition");
  next_inputs_.reshape(n, main_.input_size());
  for (std::size_t s = 0; s < n; ++s) {
    const Transition& t = *batch[s];
    if (t.o_next.size() + t.x_next.size() != main_.input_size())
      throw Error(Errc::dimension_mismatch, "transition width differs from readout input");
    fill_input(next_inputs_.row(s), t.o_next, t.x_next);
  }
  main_.forward_columns(next_inputs_, ws_main_);
  target_.forward_columns(next_inputs_, ws_target_);
  const Matrix& qm = ws_main_.q_t;  // n_actions x n
  const Matrix& qt = ws_target_.q_t;
  out.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const Transition& t = *batch[s];
    if (t.terminal) {
      out[s] = t.r;
      continue;
    }
    std::size_t best = 0;
    for (std::size_t a = 1; a < qm.rows(); ++a)
      if (qm(a, s) > qm(best, s)) best = a;
    out[s] = t.r + cfg_.gamma * qt(best, s);
  }
}

Vector Agent::compute_targets(std::span<const Transition> batch) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& t : batch) ptrs.push_back(&t);
  Vector out;
  targets_for(ptrs, out);
  return out;
}

std::optional<double> Agent::train_step() {
  const std::size_t n = cfg_.batch_size;
  if (memory_.size() < n) return std::nullopt;
  const auto idx = memory_.sample_indices(n, streams_.replay);
  picked_.resize(n);
  for (std::size_t s = 0; s < n; ++s) picked_[s] = &memory_.at(idx[s]);

  targets_for(picked_, batch_.targets);
  batch_.inputs.reshape(n, main_.input_size());
  batch_.actions.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    fill_input(batch_.inputs.row(s), picked_[s]->o, picked_[s]->x);
    batch_.actions[s] = picked_[s]->a;
  }
  const double loss = main_.backward_mse(batch_, grads_, ws_main_);
  optim_.apply(main_, grads_);
  return loss;
}

void Agent::sync_target() { copy_parameters(main_, target_); }

void Agent::set_epsilon(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw Error(Errc::invalid_probability, "epsilon must be in [0, 1]");
  epsilon_ = eps;
}

EpisodeReport Agent::run_episode(Environment& env) {
  if (env.spec().n_obs != reservoir_.n_i() || env.spec().n_actions != main_.n_actions())
    throw Error(Errc::dimension_mismatch, "environment does not match agent dimensions");
  EpisodeReport rep;
  rep.episode = episode_ + 1;
  rep.epsilon = epsilon_;

  Vector o = env.reset(streams_.environment);
  if (cfg_.reset_reservoir_each_episode) reservoir_.reset_state();
  auto xs = observe(o);
  Vector x(xs.begin(), xs.end());

  double loss_sum = 0.0;
  bool done = false;
  while (!done) {
    const std::size_t a = select_action(o, x);
    StepResult res = env.step(a);
    auto xn = observe(res.observation);
    Transition t{std::move(o), std::move(x), a, res.reward, res.observation,
                 Vector(xn.begin(), xn.end()), res.terminal};
    memory_.push(t);
    if (auto loss = train_step()) {
      loss_sum += *loss;
      ++rep.train_steps;
    }
    rep.total_reward += res.reward;
    ++rep.steps;
    done = res.terminal;
    o = std::move(t.o_next);
    x = std::move(t.x_next);
  }

  rep.loss_mean = rep.train_steps > 0 ? loss_sum / static_cast<double>(rep.train_steps)
                                      : std::numeric_limits<double>::quiet_NaN();
  rep.completed = env.task_completed();
  ++episode_;
  streak_ = rep.completed ? streak_ + 1 : 0;
  epsilon_ = cfg_.epsilon_after(episode_);
  if (episode_ % cfg_.target_sync_every == 0) sync_target();
  return rep;
}

RunReport Agent::run_training(Environment& env, const EpisodeCallback& on_episode) {
  RunReport report;
  while (episode_ < cfg_.max_episodes) {
    report.episodes.push_back(run_episode(env));
    if (on_episode) on_episode(report.episodes.back());
    if (streak_ >= cfg_.success_streak) {
      report.success = true;
      report.success_episode = episode_;
      break;
    }
  }
  return report;
}

}  // namespace desqn
