#pragma once

// Shallow feedforward volatility network omega(tau, kappa) with exact input
// derivatives and exact parameter gradients.
//
// Layers l = 1..L are hidden layers sharing one activation; layer L+1 maps to
// a scalar through Softplus, so omega > 0. Input derivatives are propagated
// forward alongside the values:
//
//   x_l      = A(y_l),                     y_l = W_l x_{l-1} + b_l
//   d. x_l   = A'(y_l) . (W_l d. x_{l-1})                      (d. = d_tau, d_kappa)
//   d_kk x_l = A''(y_l) . (W_l d_k x_{l-1})^2 + A'(y_l) . (W_l d_kk x_{l-1})
//
// seeded with d_tau x_0 = (1, 0), d_kappa x_0 = (0, 1), d_kk x_0 = 0.
//
// Each layer keeps the four propagated quantities side by side in one
// n_l x 4B matrix [X | T | K | Q] (value, d_tau, d_kappa, d_kappa_kappa for a
// batch of B points) so a layer costs one matrix product in each direction.
// The reverse pass differentiates both recursions, which needs A''' for the
// curvature term.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace shallowiv::neural {

enum class Activation { ReLU, ReLU2, ReLU3, ELU, Tanh, Softplus };

std::string_view to_string(Activation kind);
std::optional<Activation> parse_activation(std::string_view name);

/// A and its first three derivatives at one point.
///
/// Conventions at the kinks: ReLU'(0) = ReLU''(0) = 0, ReLU2''(0) = 0,
/// ReLU3'''(0) = 0, ELU''(0) = ELU'''(0) = 1 (left limits).
struct ActivationJet {
    double value;
    double d1;
    double d2;
    double d3;
};

ActivationJet activation(Activation kind, double x);

struct NetworkConfig {
    Activation hidden = Activation::ReLU2;
    std::vector<int> widths{128};  // one entry per hidden layer

    int depth() const { return static_cast<int>(widths.size()); }
    /// e.g. "relu2-128x1"; uniform widths only.
    std::string name() const;
    static std::optional<NetworkConfig> parse_name(std::string_view name);
};

struct DenseLayer {
    Eigen::MatrixXd weight;  // n_l x n_{l-1}
    Eigen::VectorXd bias;    // n_l
};

/// Parameter-shaped container, also used for gradients and optimizer moments.
using LayerStack = std::vector<DenseLayer>;

class VolNetwork {
  public:
    VolNetwork() = default;
    /// All-zero parameters with the shapes implied by config.
    explicit VolNetwork(NetworkConfig config);

    const NetworkConfig& config() const { return config_; }
    Activation activation_of(std::size_t layer) const;
    std::size_t layer_count() const { return layers_.size(); }

    LayerStack& layers() { return layers_; }
    const LayerStack& layers() const { return layers_; }

    std::size_t parameter_count() const;
    /// Row-major weights then bias, layer by layer.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    bool operator==(const VolNetwork& other) const;

  private:
    NetworkConfig config_;
    LayerStack layers_;
};

LayerStack zeros_like(const LayerStack& layers);

/// Every weight and bias of layer l i.i.d. uniform on +-n_{l-1}^{-1/2}.
VolNetwork he_uniform_init(const NetworkConfig& config, std::uint64_t seed);

double forward(const VolNetwork& net, double tau, double kappa);
Eigen::VectorXd forward(const VolNetwork& net, std::span<const double> tau, std::span<const double> kappa);

struct LayerCache {
    Eigen::MatrixXd input;  // [X | T | K | Q] of the previous layer, n_{l-1} x 4B
    Eigen::MatrixXd pre;    // W_l * input, with bias on the X block
    Eigen::ArrayXXd d1, d2, d3;  // A', A'', A''' at y_l, n_l x B
};

/// Batch jet: outputs plus the per-layer states the reverse pass replays.
struct NetworkJet {
    Eigen::VectorXd omega;
    Eigen::VectorXd d_tau;
    Eigen::VectorXd d_kappa;
    Eigen::VectorXd d_kappa_kappa;
    std::vector<LayerCache> cache;

    std::size_t batch() const { return static_cast<std::size_t>(omega.size()); }
};

struct PointJet {
    double omega;
    double d_tau;
    double d_kappa;
    double d_kappa_kappa;
};

NetworkJet forward_jet(const VolNetwork& net, std::span<const double> tau, std::span<const double> kappa,
                       bool keep_cache = true);
PointJet forward_jet(const VolNetwork& net, double tau, double kappa);

/// Adjoints of a scalar loss with respect to the four jet outputs.
struct JetAdjoints {
    Eigen::VectorXd omega;
    Eigen::VectorXd d_tau;
    Eigen::VectorXd d_kappa;
    Eigen::VectorXd d_kappa_kappa;
};

/// Adds d(sum_i a_i . jet_i)/d(parameters) into grad.
void backward(const VolNetwork& net, const NetworkJet& jet, const JetAdjoints& adjoints, LayerStack& grad);
LayerStack backward(const VolNetwork& net, const NetworkJet& jet, const JetAdjoints& adjoints);

} // namespace shallowiv::neural
