#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "ofgsc/mlp.hpp"

namespace ofgsc::ddpg {

struct UserEquipment {
  double load_bits = 0.0;
  double snr = 0.0;  // linear
  double distance_m = 0.0;
  double rho = 0.0;
};

// Fading is frozen per scenario: snr values are fixed facts of the scenario.
struct AllocationScenario {
  std::vector<UserEquipment> ues;
  double bandwidth_hz = 1e6;

  int n() const { return static_cast<int>(ues.size()); }
  void validate() const;
};

struct Allocation {
  std::vector<double> fractions;
  std::vector<double> bandwidth_hz;
  std::vector<double> times;
  double t_max = 0.0;
};

// B_i proportional to load_i / log2(1 + snr_i); equalizes every t_i.
Allocation oracle_allocate(const AllocationScenario& sc);
Allocation equal_split_baseline(const AllocationScenario& sc);
// Transmit times for explicit bandwidth fractions (must sum to 1, all > 0).
Allocation evaluate_fractions(const AllocationScenario& sc, const std::vector<double>& fractions);

struct DdpgHyper {
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  double noise_sigma = 0.2;
  double noise_floor = 0.01;
  double noise_decay = 0.999;
  int batch = 64;
  int buffer_capacity = 100000;
  int episode_length = 50;
  int episodes = 500;
  double alpha_r = 0.0;  // <= 0 selects ln(10) / t_ref per scenario
  std::vector<int> hidden = {64, 64};

  void validate() const;
};

struct StepResult {
  double reward = 0.0;
  Eigen::VectorXd next_state;
  double t_max = 0.0;
  Allocation allocation;
};

// One bandwidth-allocation decision per TTI. State = [rho_1..rho_n, t_max / t_ref]
// with t_ref the equal-split t_max; reward = exp(-alpha_R t_max).
class AllocationEnv {
 public:
  AllocationEnv(AllocationScenario sc, double alpha_r = 0.0);

  Eigen::VectorXd reset();
  StepResult step(const Eigen::VectorXd& action);

  int state_dim() const { return sc_.n() + 1; }
  int action_dim() const { return sc_.n(); }
  double t_ref() const { return t_ref_; }
  double alpha_r() const { return alpha_r_; }
  const AllocationScenario& scenario() const { return sc_; }
  Eigen::VectorXd state_for(double t_max) const;

 private:
  AllocationScenario sc_;
  double t_ref_ = 1.0;
  double alpha_r_ = 1.0;
};

double reward_for(double t_max, double alpha_r);

// Gaussian noise on the actor's pre-softmax logits, then softmax.
Eigen::VectorXd select_action(const nn::Mlp& actor, const Eigen::VectorXd& state, double noise_scale,
                              std::mt19937_64& rng);
Eigen::VectorXd select_action(const nn::Mlp& actor, const Eigen::VectorXd& state, double noise_scale,
                              std::uint64_t seed);

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }
  // Uniform with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::RowVectorXd rewards;
  Eigen::MatrixXd next_states;
};
Batch gather(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices);

// y = R + gamma Q'(S', mu'(S')); continuing task, no terminal masking.
Eigen::RowVectorXd td_target(const Batch& batch, const nn::Mlp& critic_target, const nn::Mlp& actor_target,
                             double gamma);

struct Agent {
  nn::Mlp actor;
  nn::Mlp critic;
  nn::Mlp actor_target;
  nn::Mlp critic_target;
};

Agent make_agent(int n_ue, const DdpgHyper& hyper, std::uint64_t seed);

struct EpisodeStats {
  int episode = 0;
  double mean_reward = 0.0;
  double greedy_t_max = 0.0;
};

struct TrainingResult {
  Agent agent;
  std::vector<EpisodeStats> curve;
};

// One learning step on a sampled minibatch: critic MSE on TD targets, actor
// ascent through the critic's action gradient, soft target updates.
class Learner {
 public:
  Learner(Agent& agent, const DdpgHyper& hyper);
  void update(const Batch& batch);

 private:
  Agent& agent_;
  DdpgHyper hyper_;
  nn::Adam actor_opt_;
  nn::Adam critic_opt_;
};

TrainingResult train_ddpg(const std::vector<AllocationScenario>& scenarios, const DdpgHyper& hyper,
                          std::uint64_t seed);

// Noise-free rollout of episode_length TTIs; returns the allocation with the
// largest t_max seen (the policy's worst case on this scenario).
Allocation greedy_allocation(const nn::Mlp& actor, const AllocationScenario& sc, int steps, double alpha_r = 0.0);

}  // namespace ofgsc::ddpg
