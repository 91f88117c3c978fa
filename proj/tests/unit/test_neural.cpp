#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "network_checks.hpp"
#include "oracles.hpp"
#include "shallowiv/checkpoint.hpp"
#include "shallowiv/errors.hpp"
#include "shallowiv/neural.hpp"

using namespace shallowiv;
using namespace shallowiv::neural;
using shallowiv::testing::derivative;

namespace {

constexpr Activation kAll[] = {Activation::ReLU, Activation::ReLU2, Activation::ReLU3,
                               Activation::ELU,  Activation::Tanh,  Activation::Softplus};

} // namespace

TEST(ActivationTest, DerivativesMatchFiniteDifferences) {
    for (auto kind : kAll) {
        for (double x : {-2.3, -0.4, 0.3, 1.7, 6.0}) {
            const auto a = activation(kind, x);
            const double h = 1e-4;
            EXPECT_NEAR(a.d1, derivative([&](double t) { return activation(kind, t).value; }, x, h), 1e-9)
                << to_string(kind) << ' ' << x;
            EXPECT_NEAR(a.d2, derivative([&](double t) { return activation(kind, t).d1; }, x, h), 1e-9)
                << to_string(kind) << ' ' << x;
            EXPECT_NEAR(a.d3, derivative([&](double t) { return activation(kind, t).d2; }, x, h), 1e-9)
                << to_string(kind) << ' ' << x;
        }
    }
}

TEST(ActivationTest, KinkConventions) {
    EXPECT_EQ(activation(Activation::ReLU, 0.0).d1, 0.0);
    EXPECT_EQ(activation(Activation::ReLU2, 0.0).d2, 0.0);
    EXPECT_EQ(activation(Activation::ReLU3, 0.0).d3, 0.0);
    EXPECT_EQ(activation(Activation::ELU, 0.0).d2, 1.0);
    EXPECT_EQ(activation(Activation::ELU, 0.0).d3, 1.0);
}

TEST(ActivationTest, SoftplusIsStable) {
    EXPECT_NEAR(activation(Activation::Softplus, 800.0).value, 800.0, 1e-12);
    EXPECT_GT(activation(Activation::Softplus, -700.0).value, 0.0);
    EXPECT_TRUE(std::isfinite(activation(Activation::Softplus, -1e4).d3));
}

TEST(ActivationTest, NamesRoundTrip) {
    for (auto kind : kAll) EXPECT_EQ(parse_activation(to_string(kind)), kind);
    EXPECT_FALSE(parse_activation("sigmoid"));
}

TEST(NetworkConfigTest, NameIsBijective) {
    NetworkConfig c{Activation::ReLU2, {128}};
    EXPECT_EQ(c.name(), "relu2-128x1");
    const auto p = NetworkConfig::parse_name("tanh-64x3");
    ASSERT_TRUE(p);
    EXPECT_EQ(p->hidden, Activation::Tanh);
    EXPECT_EQ(p->widths, (std::vector<int>{64, 64, 64}));
    EXPECT_FALSE(NetworkConfig::parse_name("tanh-64"));
    EXPECT_FALSE(NetworkConfig::parse_name("tanh-0x2"));
    EXPECT_FALSE(NetworkConfig::parse_name("foo-8x1"));
}

TEST(InitTest, HeUniformBoundsAndDeterminism) {
    const NetworkConfig c{Activation::Tanh, {32, 32}};
    const auto a = he_uniform_init(c, 5);
    const auto b = he_uniform_init(c, 5);
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == he_uniform_init(c, 6));
    ASSERT_EQ(a.layers().size(), 3u);
    const int fan_in[] = {2, 32, 32};
    for (std::size_t l = 0; l < 3; ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in[l]));
        EXPECT_LE(a.layers()[l].weight.cwiseAbs().maxCoeff(), bound);
        EXPECT_LE(a.layers()[l].bias.cwiseAbs().maxCoeff(), bound);
    }
    EXPECT_EQ(a.parameter_count(), 2u * 32 + 32 + 32 * 32 + 32 + 32 + 1);
}

TEST(InitTest, FlattenAssignRoundTrip) {
    const auto a = he_uniform_init({Activation::ELU, {8, 8}}, 1);
    VolNetwork b(a.config());
    b.assign(a.flatten());
    EXPECT_TRUE(a == b);
    EXPECT_THROW(b.assign(std::vector<double>(3, 0.0)), ContractViolation);
}

TEST(ForwardTest, OutputPositiveAndBatchConsistent) {
    const auto net = he_uniform_init({Activation::ReLU2, {16}}, 3);
    std::vector<double> tau{0.1, 0.7, 2.0}, kappa{-1.0, 0.0, 0.6};
    const auto batch = forward(net, tau, kappa);
    const auto jet = forward_jet(net, tau, kappa, false);
    for (std::size_t i = 0; i < 3; ++i) {
        const double w = forward(net, tau[i], kappa[i]);
        EXPECT_GT(w, 0.0);
        EXPECT_EQ(batch(static_cast<Eigen::Index>(i)), w);
        EXPECT_NEAR(jet.omega(static_cast<Eigen::Index>(i)), w, 1e-15);
    }
}

TEST(ForwardTest, NonFiniteThrows) {
    auto net = he_uniform_init({Activation::Tanh, {4}}, 3);
    net.layers()[0].weight(0, 0) = NAN;
    EXPECT_THROW(forward(net, 1.0, 0.0), NumericError);
}

TEST(JetTest, MatchesFiniteDifferencesForEveryActivation) {
    for (auto kind : kAll) {
        for (int depth : {1, 3}) {
            const auto net = he_uniform_init({kind, std::vector<int>(static_cast<std::size_t>(depth), 16)}, 11);
            const auto e = shallowiv::testing::max_jet_errors(net, 40, 2);
            EXPECT_LE(e.d_tau, 1e-5) << to_string(kind) << depth;
            EXPECT_LE(e.d_kappa, 1e-5) << to_string(kind) << depth;
            EXPECT_LE(e.d_kappa_kappa, 1e-5) << to_string(kind) << depth;
        }
    }
}

TEST(JetTest, KinkedStencilIsRejected) {
    // one hidden unit with pre-activation kappa: the kink sits at kappa = 0
    VolNetwork net({Activation::ReLU, {1}});
    net.layers()[0].weight << 0.0, 1.0;
    net.layers()[1].weight << 1.0;
    EXPECT_FALSE(shallowiv::testing::jet_errors(net, 1.0, 0.0));
    EXPECT_TRUE(shallowiv::testing::jet_errors(net, 1.0, 0.5));
}

TEST(BackwardTest, MatchesFiniteDifferencesOfJetFunctional) {
    for (auto kind : {Activation::Tanh, Activation::ELU, Activation::ReLU3, Activation::Softplus}) {
        const auto net = he_uniform_init({kind, {6, 5}}, 21);
        std::vector<double> tau{0.3, 1.1, 1.8}, kappa{-0.5, 0.1, 0.7};
        JetAdjoints adj;
        adj.omega = Eigen::Vector3d(0.3, -1.2, 0.5);
        adj.d_tau = Eigen::Vector3d(1.0, 0.2, -0.4);
        adj.d_kappa = Eigen::Vector3d(-0.7, 0.9, 0.1);
        adj.d_kappa_kappa = Eigen::Vector3d(0.25, -0.5, 1.5);
        auto functional = [&](const VolNetwork& n) {
            const auto j = forward_jet(n, tau, kappa, false);
            return adj.omega.dot(j.omega) + adj.d_tau.dot(j.d_tau) + adj.d_kappa.dot(j.d_kappa) +
                   adj.d_kappa_kappa.dot(j.d_kappa_kappa);
        };
        VolNetwork grad_net(net.config());
        grad_net.layers() = backward(net, forward_jet(net, tau, kappa, true), adj);
        const auto g = grad_net.flatten();
        const auto theta = net.flatten();
        VolNetwork probe = net;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double fd = derivative(
                [&](double x) {
                    auto t = theta;
                    t[i] = x;
                    probe.assign(t);
                    return functional(probe);
                },
                theta[i], 1e-5);
            EXPECT_NEAR(g[i], fd, 1e-8 * std::max(1.0, std::abs(fd))) << to_string(kind) << " param " << i;
        }
    }
}

TEST(CheckpointTest, RoundTripIsExact) {
    const auto net = he_uniform_init({Activation::ReLU3, {7, 5}}, 9);
    std::stringstream buf;
    write_checkpoint(buf, net);
    const auto back = read_checkpoint(buf);
    EXPECT_TRUE(back == net);
    EXPECT_EQ(back.config().name(), "relu3-7x2");
}

TEST(CheckpointTest, LayoutHeader) {
    const auto net = he_uniform_init({Activation::Tanh, {3}}, 9);
    std::stringstream buf;
    write_checkpoint(buf, net);
    const std::string bytes = buf.str();
    EXPECT_EQ(bytes.substr(0, 8), std::string("SHIVNET\0", 8));
    EXPECT_EQ(bytes.size(), 8u + 4 + 4 + 4 + 4 + 8 * net.parameter_count());
}

TEST(CheckpointTest, CorruptInputThrows) {
    const auto net = he_uniform_init({Activation::Tanh, {3}}, 9);
    std::stringstream buf;
    write_checkpoint(buf, net);
    std::string bytes = buf.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(read_checkpoint(truncated), ParseError);
    bytes[0] = 'X';
    std::stringstream bad_magic(bytes);
    EXPECT_THROW(read_checkpoint(bad_magic), ParseError);
}
