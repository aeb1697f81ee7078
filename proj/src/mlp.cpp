#include "ofgsc/mlp.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "ofgsc/video.hpp"

namespace ofgsc::nn {

Eigen::MatrixXd softmax(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const Eigen::VectorXd e = (z.col(c).array() - z.col(c).maxCoeff()).exp();
    out.col(c) = e / e.sum();
  }
  return out;
}

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::identity:
      return z;
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::softmax:
      return softmax(z);
  }
  return z;
}

Mlp::Mlp(const std::vector<int>& dims, const std::vector<Activation>& activations, std::uint64_t seed) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1)
    throw InputError("mlp: need dims.size() - 1 activations");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] < 1 || dims[l + 1] < 1) throw InputError("mlp: layer sizes must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer layer{Eigen::MatrixXd(dims[l + 1], dims[l]), Eigen::VectorXd(dims[l + 1]), activations[l]};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = u(rng);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = u(rng);
    layers_.push_back(std::move(layer));
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) {
  if (x.rows() != input_dim()) throw InputError("mlp: input dimension mismatch");
  inputs_.clear();
  outputs_.clear();
  Eigen::MatrixXd a = x;
  for (const Layer& layer : layers_) {
    inputs_.push_back(a);
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    a = apply_activation(layer.activation, z);
    outputs_.push_back(a);
  }
  return a;
}

Eigen::MatrixXd Mlp::predict(const Eigen::MatrixXd& x, bool raw_output) const {
  if (x.rows() != input_dim()) throw InputError("mlp: input dimension mismatch");
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    a = (raw_output && l + 1 == layers_.size()) ? z : apply_activation(layers_[l].activation, z);
  }
  return a;
}

Gradients Mlp::backward(const Eigen::MatrixXd& upstream) const {
  if (outputs_.size() != layers_.size()) throw std::logic_error("mlp: backward without a recorded forward pass");
  if (upstream.rows() != output_dim() || upstream.cols() != outputs_.back().cols())
    throw InputError("mlp: upstream gradient shape mismatch");
  Gradients g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  Eigen::MatrixXd grad = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& layer = layers_[k];
    const Eigen::MatrixXd& out = outputs_[k];
    Eigen::MatrixXd dz;
    switch (layer.activation) {
      case Activation::identity:
        dz = grad;
        break;
      case Activation::relu:
        dz = (out.array() > 0.0).select(grad, 0.0);
        break;
      case Activation::tanh:
        dz = grad.array() * (1.0 - out.array().square());
        break;
      case Activation::softmax: {
        dz.resize(grad.rows(), grad.cols());
        for (Eigen::Index c = 0; c < grad.cols(); ++c) {
          const double dot = out.col(c).dot(grad.col(c));
          dz.col(c) = out.col(c).array() * (grad.col(c).array() - dot);
        }
        break;
      }
    }
    g.weight[k] = dz * inputs_[k].transpose();
    g.bias[k] = dz.rowwise().sum();
    grad = layer.weight.transpose() * dz;
  }
  g.input = std::move(grad);
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (const Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) p(k++) = l.weight(r, c);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) p(k++) = l.bias(r);
  }
  return p;
}

void Mlp::unflatten(const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != parameter_count()) throw InputError("mlp: parameter count mismatch");
  Eigen::Index k = 0;
  for (Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = p(k++);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = p(k++);
  }
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Layer& l : net.layers()) {
    m_w_.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    v_w_.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    m_b_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    v_b_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
}

void Adam::step(Mlp& net, const Gradients& grads) {
  auto& layers = net.layers();
  if (grads.weight.size() != layers.size() || m_w_.size() != layers.size()) throw InputError("adam: shape mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l)
    if (grads.weight[l].rows() != layers[l].weight.rows() || grads.weight[l].cols() != layers[l].weight.cols() ||
        grads.bias[l].size() != layers[l].bias.size())
      throw InputError("adam: shape mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grads.weight[l], m_w_[l], v_w_[l]);
    update(layers[l].bias, grads.bias[l], m_b_[l], v_b_[l]);
  }
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
  auto& t = target.layers();
  const auto& s = source.layers();
  if (t.size() != s.size()) throw InputError("soft_update: architecture mismatch");
  for (std::size_t l = 0; l < t.size(); ++l) {
    t[l].weight = tau * s[l].weight + (1.0 - tau) * t[l].weight;
    t[l].bias = tau * s[l].bias + (1.0 - tau) * t[l].bias;
  }
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}
void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}
std::uint64_t get_le(const std::string& buf, std::size_t& pos, int bytes) {
  if (pos + bytes > buf.size()) throw InputError("truncated snapshot");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += bytes;
  return v;
}

}  // namespace

void save_snapshot(const std::filesystem::path& path, const Mlp& net) {
  std::string out = "OFNN";
  put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  put_u32(out, static_cast<std::uint32_t>(net.input_dim()));
  for (const Layer& l : net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
    put_u32(out, static_cast<std::uint32_t>(l.activation));
  }
  const Eigen::VectorXd p = net.flatten();
  for (Eigen::Index k = 0; k < p.size(); ++k) put_f64(out, p(k));
  write_file_atomic(path, out);
}

Mlp load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (buf.size() < 4 || buf.compare(0, 4, "OFNN") != 0) throw InputError("bad snapshot magic");
  std::size_t pos = 4;
  const auto n_layers = static_cast<int>(get_le(buf, pos, 4));
  const auto in_dim = static_cast<int>(get_le(buf, pos, 4));
  if (n_layers < 1 || n_layers > 64) throw InputError("bad snapshot layer count");
  std::vector<int> dims{in_dim};
  std::vector<Activation> acts;
  for (int l = 0; l < n_layers; ++l) {
    dims.push_back(static_cast<int>(get_le(buf, pos, 4)));
    const auto a = get_le(buf, pos, 4);
    if (a > static_cast<std::uint64_t>(Activation::softmax)) throw InputError("bad snapshot activation");
    acts.push_back(static_cast<Activation>(a));
  }
  Mlp net(dims, acts, 0);
  Eigen::VectorXd p(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = std::bit_cast<double>(get_le(buf, pos, 8));
  net.unflatten(p);
  return net;
}

}  // namespace ofgsc::nn
