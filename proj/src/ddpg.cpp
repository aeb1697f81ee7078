#include "ofgsc/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ofgsc/channel.hpp"
#include "ofgsc/video.hpp"

namespace ofgsc::ddpg {

namespace {

double spectral_efficiency(double snr) { return std::log2(1.0 + snr); }

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace

void AllocationScenario::validate() const {
  if (ues.size() < 2) throw InputError("scenario: need at least 2 UEs");
  if (!(bandwidth_hz > 0)) throw InputError("scenario: bandwidth must be positive");
  for (const auto& ue : ues)
    if (!(ue.load_bits > 0) || !(ue.snr > 0)) throw InputError("scenario: loads and SNRs must be positive");
}

void DdpgHyper::validate() const {
  if (!(actor_lr > 0 && actor_lr <= 1) || !(critic_lr > 0 && critic_lr <= 1))
    throw InputError("ddpg: learning rates must be in (0, 1]");
  if (!(gamma >= 0 && gamma <= 1)) throw InputError("ddpg: gamma must be in [0, 1]");
  if (!(tau > 0 && tau <= 1)) throw InputError("ddpg: tau must be in (0, 1]");
  if (batch < 1 || buffer_capacity < batch || episode_length < 1 || episodes < 1)
    throw InputError("ddpg: bad batch / buffer / episode sizes");
  if (noise_sigma < 0 || noise_floor < 0 || !(noise_decay > 0 && noise_decay <= 1))
    throw InputError("ddpg: bad noise schedule");
}

Allocation evaluate_fractions(const AllocationScenario& sc, const std::vector<double>& fractions) {
  sc.validate();
  if (static_cast<int>(fractions.size()) != sc.n()) throw InputError("allocation: wrong number of fractions");
  const double sum = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("allocation: fractions must sum to 1");
  Allocation a;
  a.fractions = fractions;
  for (int i = 0; i < sc.n(); ++i) {
    if (!(fractions[i] > 0)) throw InputError("allocation: fractions must be positive");
    const double b = fractions[i] * sc.bandwidth_hz;
    a.bandwidth_hz.push_back(b);
    a.times.push_back(channel::tx_time(sc.ues[i].load_bits, channel::realization_from_snr(sc.ues[i].snr, b)));
  }
  a.t_max = *std::max_element(a.times.begin(), a.times.end());
  return a;
}

Allocation oracle_allocate(const AllocationScenario& sc) {
  sc.validate();
  std::vector<double> w(sc.n());
  for (int i = 0; i < sc.n(); ++i) w[i] = sc.ues[i].load_bits / spectral_efficiency(sc.ues[i].snr);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  Allocation a;
  for (int i = 0; i < sc.n(); ++i) {
    a.fractions.push_back(w[i] / total);
    a.bandwidth_hz.push_back(sc.bandwidth_hz * w[i] / total);
    a.times.push_back(total / sc.bandwidth_hz);
  }
  a.t_max = total / sc.bandwidth_hz;
  return a;
}

Allocation equal_split_baseline(const AllocationScenario& sc) {
  return evaluate_fractions(sc, std::vector<double>(sc.n(), 1.0 / sc.n()));
}

double reward_for(double t_max, double alpha_r) { return std::exp(-alpha_r * t_max); }

AllocationEnv::AllocationEnv(AllocationScenario sc, double alpha_r) : sc_(std::move(sc)) {
  sc_.validate();
  t_ref_ = equal_split_baseline(sc_).t_max;
  alpha_r_ = alpha_r > 0 ? alpha_r : std::numbers::ln10 / t_ref_;
}

Eigen::VectorXd AllocationEnv::state_for(double t_max) const {
  Eigen::VectorXd s(state_dim());
  for (int i = 0; i < sc_.n(); ++i) s(i) = sc_.ues[i].rho;
  s(sc_.n()) = t_max / t_ref_;
  return s;
}

Eigen::VectorXd AllocationEnv::reset() { return state_for(t_ref_); }

StepResult AllocationEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != action_dim()) throw InputError("env: action dimension mismatch");
  StepResult r;
  r.allocation = evaluate_fractions(sc_, std::vector<double>(action.data(), action.data() + action.size()));
  r.t_max = r.allocation.t_max;
  r.reward = reward_for(r.t_max, alpha_r_);
  r.next_state = state_for(r.t_max);
  return r;
}

Eigen::VectorXd select_action(const nn::Mlp& actor, const Eigen::VectorXd& state, double noise_scale,
                              std::mt19937_64& rng) {
  Eigen::VectorXd logits = actor.predict(state, true).col(0);
  if (noise_scale > 0) {
    std::normal_distribution<double> n(0.0, noise_scale);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) += n(rng);
  }
  return nn::softmax(logits).col(0);
}

Eigen::VectorXd select_action(const nn::Mlp& actor, const Eigen::VectorXd& state, double noise_scale,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return select_action(actor, state, noise_scale, rng);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, std::mt19937_64& rng) const {
  if (data_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> u(0, data_.size() - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = u(rng);
  return idx;
}

Batch gather(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  const Transition& first = buffer.at(indices.front());
  Batch b{Eigen::MatrixXd(first.state.size(), n), Eigen::MatrixXd(first.action.size(), n), Eigen::RowVectorXd(n),
          Eigen::MatrixXd(first.state.size(), n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Transition& t = buffer.at(indices[k]);
    b.states.col(k) = t.state;
    b.actions.col(k) = t.action;
    b.rewards(k) = t.reward;
    b.next_states.col(k) = t.next_state;
  }
  return b;
}

Eigen::RowVectorXd td_target(const Batch& batch, const nn::Mlp& critic_target, const nn::Mlp& actor_target,
                             double gamma) {
  const Eigen::MatrixXd next_actions = actor_target.predict(batch.next_states);
  const Eigen::MatrixXd q_next = critic_target.predict(stack(batch.next_states, next_actions));
  return batch.rewards + gamma * q_next.row(0);
}

Agent make_agent(int n_ue, const DdpgHyper& hyper, std::uint64_t seed) {
  const int state_dim = n_ue + 1;
  std::vector<int> actor_dims{state_dim};
  std::vector<int> critic_dims{state_dim + n_ue};
  std::vector<nn::Activation> acts;
  for (int h : hyper.hidden) {
    actor_dims.push_back(h);
    critic_dims.push_back(h);
    acts.push_back(nn::Activation::relu);
  }
  actor_dims.push_back(n_ue);
  critic_dims.push_back(1);
  std::vector<nn::Activation> actor_acts = acts, critic_acts = acts;
  actor_acts.push_back(nn::Activation::softmax);
  critic_acts.push_back(nn::Activation::identity);
  Agent a;
  a.actor = nn::Mlp(actor_dims, actor_acts, seed);
  a.critic = nn::Mlp(critic_dims, critic_acts, seed + 1);
  a.actor_target = a.actor;
  a.critic_target = a.critic;
  return a;
}

Learner::Learner(Agent& agent, const DdpgHyper& hyper)
    : agent_(agent),
      hyper_(hyper),
      actor_opt_(agent.actor, hyper.actor_lr),
      critic_opt_(agent.critic, hyper.critic_lr) {}

void Learner::update(const Batch& batch) {
  const double n = static_cast<double>(batch.states.cols());

  // Critic: minimize mean (y - Q(S, A))^2.
  const Eigen::RowVectorXd y = td_target(batch, agent_.critic_target, agent_.actor_target, hyper_.gamma);
  const Eigen::MatrixXd q = agent_.critic.forward(stack(batch.states, batch.actions));
  const Eigen::MatrixXd dq = (2.0 / n) * (q.row(0) - y);
  critic_opt_.step(agent_.critic, agent_.critic.backward(dq));

  // Actor: ascend mean Q(S, mu(S)) by chaining the critic's action gradient.
  const Eigen::MatrixXd mu = agent_.actor.forward(batch.states);
  agent_.critic.forward(stack(batch.states, mu));
  const nn::Gradients through = agent_.critic.backward(Eigen::MatrixXd::Constant(1, batch.states.cols(), -1.0 / n));
  const Eigen::MatrixXd d_action = through.input.bottomRows(mu.rows());
  actor_opt_.step(agent_.actor, agent_.actor.backward(d_action));

  nn::soft_update(agent_.critic_target, agent_.critic, hyper_.tau);
  nn::soft_update(agent_.actor_target, agent_.actor, hyper_.tau);
}

Allocation greedy_allocation(const nn::Mlp& actor, const AllocationScenario& sc, int steps, double alpha_r) {
  AllocationEnv env(sc, alpha_r);
  Eigen::VectorXd s = env.reset();
  Allocation worst;
  worst.t_max = -1.0;
  for (int k = 0; k < std::max(steps, 1); ++k) {
    const Eigen::VectorXd a = actor.predict(s).col(0);
    StepResult r = env.step(a);
    if (r.t_max > worst.t_max) worst = r.allocation;
    s = r.next_state;
  }
  return worst;
}

TrainingResult train_ddpg(const std::vector<AllocationScenario>& scenarios, const DdpgHyper& hyper,
                          std::uint64_t seed) {
  hyper.validate();
  if (scenarios.empty()) throw InputError("ddpg: no scenarios");
  const int n_ue = scenarios.front().n();
  std::vector<AllocationEnv> envs;
  for (const auto& sc : scenarios) {
    if (sc.n() != n_ue) throw InputError("ddpg: all scenarios must have the same number of UEs");
    envs.emplace_back(sc, hyper.alpha_r);
  }

  TrainingResult out;
  out.agent = make_agent(n_ue, hyper, seed);
  Learner learner(out.agent, hyper);
  ReplayBuffer buffer(static_cast<std::size_t>(hyper.buffer_capacity));
  std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ULL);

  for (int ep = 0; ep < hyper.episodes; ++ep) {
    AllocationEnv& env = envs[static_cast<std::size_t>(ep) % envs.size()];
    Eigen::VectorXd s = env.reset();
    double noise = hyper.noise_sigma;
    double reward_sum = 0.0;
    for (int tt = 0; tt < hyper.episode_length; ++tt) {
      const Eigen::VectorXd a = select_action(out.agent.actor, s, noise, rng);
      StepResult r = env.step(a);
      reward_sum += r.reward;
      buffer.push({s, a, r.reward, r.next_state});
      if (buffer.size() >= static_cast<std::size_t>(hyper.batch))
        learner.update(gather(buffer, buffer.sample_indices(static_cast<std::size_t>(hyper.batch), rng)));
      s = std::move(r.next_state);
      noise = std::max(hyper.noise_floor, noise * hyper.noise_decay);
    }
    const Allocation g = greedy_allocation(out.agent.actor, env.scenario(), hyper.episode_length, hyper.alpha_r);
    out.curve.push_back({ep, reward_sum / hyper.episode_length, g.t_max});
  }
  return out;
}

}  // namespace ofgsc::ddpg
