#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "ofgsc/ddpg.hpp"
#include "ofgsc/mlp.hpp"
#include "oracles.hpp"

using namespace ofgsc;
using namespace ofgsc::nn;

TEST_CASE("forward examples") {
  SUBCASE("identity network") {
    Mlp net({3, 3}, {Activation::identity}, 1);
    net.layers()[0].weight = Eigen::MatrixXd::Identity(3, 3);
    net.layers()[0].bias.setZero();
    const Eigen::VectorXd x = Eigen::Vector3d(1.5, -2.0, 0.25);
    CHECK(net.forward(x) == x);
  }
  SUBCASE("softmax of equal logits") {
    const Eigen::MatrixXd s = softmax(Eigen::MatrixXd::Zero(3, 1));
    for (int i = 0; i < 3; ++i) CHECK(s(i, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("softmax is stable for large logits") {
    Eigen::MatrixXd z(2, 1);
    z << 1000.0, 1000.0;
    CHECK(softmax(z)(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("fixed-seed two-layer network matches scalar arithmetic") {
    Mlp net({4, 5, 3}, {Activation::tanh, Activation::softmax}, 17);
    std::mt19937_64 rng(3);
    const Eigen::VectorXd x = oracle::random_vector(4, rng);
    const Eigen::VectorXd y = net.predict(x);
    CHECK((y - oracle::scalar_forward(net, x)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(y.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("batch columns are independent samples") {
    Mlp net({3, 8, 2}, {Activation::relu, Activation::identity}, 4);
    std::mt19937_64 rng(5);
    Eigen::MatrixXd xs(3, 4);
    for (int c = 0; c < 4; ++c) xs.col(c) = oracle::random_vector(3, rng);
    const Eigen::MatrixXd ys = net.predict(xs);
    for (int c = 0; c < 4; ++c)
      CHECK((ys.col(c) - oracle::scalar_forward(net, xs.col(c))).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("raw output skips the last activation") {
    Mlp net({2, 3}, {Activation::softmax}, 2);
    const Eigen::VectorXd x = Eigen::Vector2d(0.3, -0.7);
    const Eigen::VectorXd logits = net.predict(x, true);
    CHECK((softmax(logits) - net.predict(x)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("dimension mismatch") {
    Mlp net({3, 2}, {Activation::identity}, 1);
    CHECK_THROWS(net.predict(Eigen::VectorXd::Zero(4)));
  }
}

TEST_CASE("construction is deterministic per seed") {
  const Mlp a({6, 16, 16, 3}, {Activation::relu, Activation::relu, Activation::softmax}, 99);
  const Mlp b({6, 16, 16, 3}, {Activation::relu, Activation::relu, Activation::softmax}, 99);
  const Mlp c({6, 16, 16, 3}, {Activation::relu, Activation::relu, Activation::softmax}, 100);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
  CHECK(a.parameter_count() == 6 * 16 + 16 + 16 * 16 + 16 + 16 * 3 + 3);
}

TEST_CASE("backward examples") {
  SUBCASE("linear scalar output") {
    Mlp net({3, 1}, {Activation::identity}, 1);
    const Eigen::VectorXd x = Eigen::Vector3d(2.0, -1.0, 0.5);
    net.forward(x);
    const Gradients g = net.backward(Eigen::MatrixXd::Ones(1, 1));
    CHECK((g.weight[0].row(0).transpose() - x).norm() == 0.0);
    CHECK(g.bias[0](0) == 1.0);
    CHECK((g.input.col(0) - net.layers()[0].weight.row(0).transpose()).norm() == 0.0);
  }
  SUBCASE("zero upstream gives zero gradients") {
    Mlp net({4, 8, 3}, {Activation::tanh, Activation::softmax}, 2);
    std::mt19937_64 rng(1);
    net.forward(oracle::random_vector(4, rng));
    const Gradients g = net.backward(Eigen::MatrixXd::Zero(3, 1));
    for (const auto& w : g.weight) CHECK(w.isZero(0.0));
    for (const auto& b : g.bias) CHECK(b.isZero(0.0));
    CHECK(g.input.isZero(0.0));
  }
  SUBCASE("backward without a recorded forward") {
    Mlp net({2, 2}, {Activation::identity}, 3);
    CHECK_THROWS(net.backward(Eigen::MatrixXd::Ones(2, 1)));
  }
}

TEST_CASE("gradient check on random three-layer networks") {
  std::mt19937_64 rng(21);
  const std::vector<std::vector<Activation>> stacks = {
      {Activation::relu, Activation::relu, Activation::identity},
      {Activation::tanh, Activation::tanh, Activation::softmax},
      {Activation::relu, Activation::tanh, Activation::softmax},
  };
  for (const auto& acts : stacks) {
    for (int k = 0; k < 5; ++k) {
      const int in = std::uniform_int_distribution<int>(2, 6)(rng), out = std::uniform_int_distribution<int>(2, 4)(rng);
      Mlp net({in, 7, 5, out}, acts, rng());
      const auto r = oracle::gradient_check(net, oracle::random_vector(in, rng), oracle::random_vector(out, rng));
      CHECK(r.max_rel_error < 1e-4);
      CHECK(r.checked == static_cast<int>(net.parameter_count()) + in);
    }
  }
}

TEST_CASE("gradient check on the actor and critic architectures") {
  std::mt19937_64 rng(7);
  for (int n_ue : {2, 3}) {
    const ddpg::Agent agent = ddpg::make_agent(n_ue, ddpg::DdpgHyper{}, 5);
    for (int probe = 0; probe < 5; ++probe) {
      const auto a = oracle::gradient_check(agent.actor, oracle::random_vector(n_ue + 1, rng),
                                            oracle::random_vector(n_ue, rng));
      CHECK(a.max_rel_error < 1e-4);
      const auto c = oracle::gradient_check(agent.critic, oracle::random_vector(2 * n_ue + 1, rng),
                                            oracle::random_vector(1, rng));
      CHECK(c.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("Adam examples") {
  Mlp net({3, 4, 2}, {Activation::tanh, Activation::identity}, 8);
  std::mt19937_64 rng(2);
  const Eigen::VectorXd x = oracle::random_vector(3, rng);
  SUBCASE("zero gradient leaves parameters unchanged") {
    Adam opt(net, 1e-3);
    net.forward(x);
    const Eigen::VectorXd before = net.flatten();
    opt.step(net, net.backward(Eigen::MatrixXd::Zero(2, 1)));
    CHECK(net.flatten() == before);
  }
  SUBCASE("first step moves every parameter by lr against the gradient sign") {
    Adam opt(net, 1e-3);
    net.forward(x);
    const Gradients g = net.backward(Eigen::MatrixXd::Constant(2, 1, 0.7));
    const Eigen::VectorXd before = net.flatten();
    opt.step(net, g);
    const Eigen::VectorXd delta = net.flatten() - before;
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
      auto check = [&](double grad) {
        if (std::abs(grad) > 1e-3) CHECK(std::abs(delta(k) + 1e-3 * (grad > 0 ? 1 : -1)) < 1e-6);
        ++k;
      };
      for (Eigen::Index r = 0; r < g.weight[l].rows(); ++r)
        for (Eigen::Index c = 0; c < g.weight[l].cols(); ++c) check(g.weight[l](r, c));
      for (Eigen::Index r = 0; r < g.bias[l].size(); ++r) check(g.bias[l](r));
    }
    CHECK(opt.steps() == 1);
  }
  SUBCASE("constant gradient keeps descending") {
    Adam opt(net, 1e-2);
    Gradients g;
    for (const auto& layer : net.layers()) {
      g.weight.push_back(Eigen::MatrixXd::Constant(layer.weight.rows(), layer.weight.cols(), -0.3));
      g.bias.push_back(Eigen::VectorXd::Constant(layer.bias.size(), 0.3));
    }
    const Eigen::VectorXd before = net.flatten();
    for (int s = 0; s < 200; ++s) opt.step(net, g);
    const Eigen::VectorXd delta = net.flatten() - before;
    Eigen::Index k = 0;
    for (const auto& layer : net.layers()) {
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) CHECK(delta(k++) > 1.5);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) CHECK(delta(k++) < -1.5);
    }
  }
}

TEST_CASE("soft update is an exact convex combination") {
  const Mlp source({4, 6, 2}, {Activation::relu, Activation::identity}, 1);
  Mlp target({4, 6, 2}, {Activation::relu, Activation::identity}, 2);
  const Eigen::VectorXd s = source.flatten(), t = target.flatten();
  soft_update(target, source, 0.005);
  const Eigen::VectorXd got = target.flatten();
  for (Eigen::Index i = 0; i < s.size(); ++i) CHECK(got(i) == 0.005 * s(i) + (1.0 - 0.005) * t(i));
}

TEST_CASE("snapshot round trip") {
  testing::TempDir dir("ofnn");
  const Mlp net({5, 9, 4, 3}, {Activation::relu, Activation::tanh, Activation::softmax}, 12);
  save_snapshot(dir / "net.ofnn", net);
  const Mlp back = load_snapshot(dir / "net.ofnn");
  CHECK(back.flatten() == net.flatten());
  for (std::size_t l = 0; l < net.layers().size(); ++l) CHECK(back.layers()[l].activation == net.layers()[l].activation);
  std::mt19937_64 rng(1);
  const Eigen::VectorXd x = oracle::random_vector(5, rng);
  CHECK(back.predict(x) == net.predict(x));
  std::filesystem::resize_file(dir / "net.ofnn", 30);
  CHECK_THROWS(load_snapshot(dir / "net.ofnn"));
}
