#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace ofgsc::nn {

enum class Activation { identity, relu, tanh, softmax };

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::identity;
};

// Parameter gradients (summed over the batch) plus dL/dx for chaining.
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
  Eigen::MatrixXd input;
};

// Dense feed-forward network. Batches are matrices with one sample per column.
class Mlp {
 public:
  Mlp() = default;
  // dims = {in, h1, ..., out}; one activation per layer. Weights and biases
  // are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(const std::vector<int>& dims, const std::vector<Activation>& activations, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers_.back().weight.rows()); }

  // Records layer inputs/outputs for a following backward().
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  // Stateless inference. With raw_output the last activation is skipped (logits).
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x, bool raw_output = false) const;
  // upstream = dL/d(output) for the recorded batch.
  Gradients backward(const Eigen::MatrixXd& upstream) const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t parameter_count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& params);

 private:
  std::vector<Layer> layers_;
  std::vector<Eigen::MatrixXd> inputs_;
  std::vector<Eigen::MatrixXd> outputs_;
};

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& z);
// Column-wise softmax.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& z);

class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Mlp& net, const Gradients& grads);
  long steps() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_w_, v_w_;
  std::vector<Eigen::VectorXd> m_b_, v_b_;
};

// target <- tau * source + (1 - tau) * target
void soft_update(Mlp& target, const Mlp& source, double tau);

// "OFNN", u32 layer count, u32 input dim, per layer u32 out dim + u32
// activation, then f64 weights (row-major) and biases per layer; little-endian.
void save_snapshot(const std::filesystem::path& path, const Mlp& net);
Mlp load_snapshot(const std::filesystem::path& path);

}  // namespace ofgsc::nn
