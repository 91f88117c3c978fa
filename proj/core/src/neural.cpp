#include "shallowiv/neural.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "shallowiv/errors.hpp"
#include "shallowiv/random.hpp"

namespace shallowiv::neural {

std::string_view to_string(Activation kind) {
    switch (kind) {
    case Activation::ReLU: return "relu";
    case Activation::ReLU2: return "relu2";
    case Activation::ReLU3: return "relu3";
    case Activation::ELU: return "elu";
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
    }
    return "?";
}

std::optional<Activation> parse_activation(std::string_view name) {
    for (auto kind : {Activation::ReLU, Activation::ReLU2, Activation::ReLU3, Activation::ELU, Activation::Tanh,
                      Activation::Softplus}) {
        if (name == to_string(kind)) return kind;
    }
    return std::nullopt;
}

namespace {

inline ActivationJet softplus_jet(double x) {
    // A' and A'' are the logistic CDF and PDF.
    const double e = std::exp(-std::abs(x));
    const double value = std::max(x, 0.0) + std::log1p(e);
    const double s = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    const double p = e / ((1.0 + e) * (1.0 + e));
    return {value, s, p, p * (1.0 - 2.0 * s)};
}

inline ActivationJet eval(Activation kind, double x) {
    switch (kind) {
    case Activation::ReLU:
        return x > 0.0 ? ActivationJet{x, 1.0, 0.0, 0.0} : ActivationJet{0.0, 0.0, 0.0, 0.0};
    case Activation::ReLU2:
        return x > 0.0 ? ActivationJet{0.5 * x * x, x, 1.0, 0.0} : ActivationJet{0.0, 0.0, 0.0, 0.0};
    case Activation::ReLU3:
        return x > 0.0 ? ActivationJet{x * x * x / 6.0, 0.5 * x * x, x, 1.0} : ActivationJet{0.0, 0.0, 0.0, 0.0};
    case Activation::ELU:
        if (x > 0.0) return {x, 1.0, 0.0, 0.0};
        {
            const double e = std::exp(x);
            return {e - 1.0, e, e, e};
        }
    case Activation::Tanh: {
        const double t = std::tanh(x);
        const double s = 1.0 - t * t;
        return {t, s, -2.0 * t * s, -2.0 * s * (s - 2.0 * t * t)};
    }
    case Activation::Softplus:
        return softplus_jet(x);
    }
    return {0.0, 0.0, 0.0, 0.0};
}

} // namespace

ActivationJet activation(Activation kind, double x) { return eval(kind, x); }

// ---------------------------------------------------------------------------

std::string NetworkConfig::name() const {
    std::ostringstream os;
    os << to_string(hidden) << '-' << (widths.empty() ? 0 : widths.front()) << 'x' << widths.size();
    return os.str();
}

std::optional<NetworkConfig> NetworkConfig::parse_name(std::string_view name) {
    const auto dash = name.find('-');
    const auto cross = name.rfind('x');
    if (dash == std::string_view::npos || cross == std::string_view::npos || cross < dash) return std::nullopt;
    const auto kind = parse_activation(name.substr(0, dash));
    int width = 0;
    int depth = 0;
    const auto wpart = name.substr(dash + 1, cross - dash - 1);
    const auto dpart = name.substr(cross + 1);
    auto parse = [](std::string_view part, int& out) {
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && ptr == part.data() + part.size() && out > 0;
    };
    if (!kind || !parse(wpart, width) || !parse(dpart, depth)) return std::nullopt;
    return NetworkConfig{*kind, std::vector<int>(static_cast<std::size_t>(depth), width)};
}

VolNetwork::VolNetwork(NetworkConfig config) : config_(std::move(config)) {
    if (config_.widths.empty()) throw ContractViolation("VolNetwork: at least one hidden layer required");
    int fan_in = 2;
    for (int w : config_.widths) {
        if (w <= 0) throw ContractViolation("VolNetwork: widths must be positive");
        layers_.push_back({Eigen::MatrixXd::Zero(w, fan_in), Eigen::VectorXd::Zero(w)});
        fan_in = w;
    }
    layers_.push_back({Eigen::MatrixXd::Zero(1, fan_in), Eigen::VectorXd::Zero(1)});
}

Activation VolNetwork::activation_of(std::size_t layer) const {
    return layer + 1 == layers_.size() ? Activation::Softplus : config_.hidden;
}

std::size_t VolNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<double> VolNetwork::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
    }
    return out;
}

void VolNetwork::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ContractViolation("VolNetwork::assign: size mismatch");
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
    }
}

bool VolNetwork::operator==(const VolNetwork& other) const {
    if (config_.hidden != other.config_.hidden || config_.widths != other.config_.widths) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].weight != other.layers_[i].weight || layers_[i].bias != other.layers_[i].bias) return false;
    }
    return true;
}

LayerStack zeros_like(const LayerStack& layers) {
    LayerStack out;
    out.reserve(layers.size());
    for (const auto& l : layers) {
        out.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    }
    return out;
}

VolNetwork he_uniform_init(const NetworkConfig& config, std::uint64_t seed) {
    VolNetwork net(config);
    std::mt19937_64 rng(splitmix64(seed));
    for (auto& l : net.layers()) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
        auto draw = [&] { return bound * (2.0 * uniform01(rng) - 1.0); };
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = draw();
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = draw();
    }
    return net;
}

// ---------------------------------------------------------------------------

namespace {

void check_batch(std::span<const double> tau, std::span<const double> kappa) {
    if (tau.size() != kappa.size()) throw ContractViolation("forward: tau and kappa sizes differ");
}

void check_finite(const Eigen::MatrixXd& m, std::size_t layer) {
    if (!m.allFinite()) {
        throw NumericError("network evaluation produced a non-finite value at layer " + std::to_string(layer + 1));
    }
}

} // namespace

Eigen::VectorXd forward(const VolNetwork& net, std::span<const double> tau, std::span<const double> kappa) {
    check_batch(tau, kappa);
    const auto B = static_cast<Eigen::Index>(tau.size());
    Eigen::MatrixXd x(2, B);
    for (Eigen::Index j = 0; j < B; ++j) {
        x(0, j) = tau[j];
        x(1, j) = kappa[j];
    }
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::MatrixXd y = layers[l].weight * x;
        y.colwise() += layers[l].bias;
        const Activation kind = net.activation_of(l);
        for (Eigen::Index k = 0; k < y.size(); ++k) y.data()[k] = eval(kind, y.data()[k]).value;
        check_finite(y, l);
        x = std::move(y);
    }
    return x.row(0).transpose();
}

double forward(const VolNetwork& net, double tau, double kappa) {
    const double t[1] = {tau};
    const double k[1] = {kappa};
    return forward(net, t, k)(0);
}

NetworkJet forward_jet(const VolNetwork& net, std::span<const double> tau, std::span<const double> kappa,
                       bool keep_cache) {
    check_batch(tau, kappa);
    const auto B = static_cast<Eigen::Index>(tau.size());

    Eigen::MatrixXd state = Eigen::MatrixXd::Zero(2, 4 * B);
    for (Eigen::Index j = 0; j < B; ++j) {
        state(0, j) = tau[j];
        state(1, j) = kappa[j];
        state(0, B + j) = 1.0;      // d_tau x_0
        state(1, 2 * B + j) = 1.0;  // d_kappa x_0
    }

    NetworkJet jet;
    const auto& layers = net.layers();
    if (keep_cache) jet.cache.resize(layers.size());

    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        const auto n = layer.weight.rows();
        Eigen::MatrixXd pre = layer.weight * state;
        pre.leftCols(B).colwise() += layer.bias;

        Eigen::ArrayXXd a0(n, B), d1(n, B), d2(n, B), d3;
        if (keep_cache) d3.resize(n, B);
        const Activation kind = net.activation_of(l);
        const double* y = pre.data();  // column-major, X block first
        for (Eigen::Index k = 0; k < n * B; ++k) {
            const ActivationJet a = eval(kind, y[k]);
            a0.data()[k] = a.value;
            d1.data()[k] = a.d1;
            d2.data()[k] = a.d2;
            if (keep_cache) d3.data()[k] = a.d3;
        }

        const auto ya = pre.middleCols(B, B).array();
        const auto yc = pre.middleCols(2 * B, B).array();
        const auto yd = pre.middleCols(3 * B, B).array();
        Eigen::MatrixXd next(n, 4 * B);
        next.leftCols(B) = a0.matrix();
        next.middleCols(B, B) = (d1 * ya).matrix();
        next.middleCols(2 * B, B) = (d1 * yc).matrix();
        next.middleCols(3 * B, B) = (d2 * yc.square() + d1 * yd).matrix();
        check_finite(next, l);

        if (keep_cache) {
            jet.cache[l] = {std::move(state), std::move(pre), std::move(d1), std::move(d2), std::move(d3)};
        }
        state = std::move(next);
    }

    jet.omega = state.leftCols(B).row(0).transpose();
    jet.d_tau = state.middleCols(B, B).row(0).transpose();
    jet.d_kappa = state.middleCols(2 * B, B).row(0).transpose();
    jet.d_kappa_kappa = state.middleCols(3 * B, B).row(0).transpose();
    return jet;
}

PointJet forward_jet(const VolNetwork& net, double tau, double kappa) {
    const double t[1] = {tau};
    const double k[1] = {kappa};
    const NetworkJet j = forward_jet(net, t, k, false);
    return {j.omega(0), j.d_tau(0), j.d_kappa(0), j.d_kappa_kappa(0)};
}

void backward(const VolNetwork& net, const NetworkJet& jet, const JetAdjoints& adjoints, LayerStack& grad) {
    const auto& layers = net.layers();
    const auto B = static_cast<Eigen::Index>(jet.batch());
    if (jet.cache.size() != layers.size()) throw ContractViolation("backward: jet was computed without cache");
    if (grad.size() != layers.size()) throw ContractViolation("backward: gradient shape mismatch");
    if (adjoints.omega.size() != B || adjoints.d_tau.size() != B || adjoints.d_kappa.size() != B ||
        adjoints.d_kappa_kappa.size() != B) {
        throw ContractViolation("backward: adjoint length must equal batch size");
    }

    // Adjoint of the layer output state [X | T | K | Q].
    Eigen::MatrixXd bar(1, 4 * B);
    bar.leftCols(B) = adjoints.omega.transpose();
    bar.middleCols(B, B) = adjoints.d_tau.transpose();
    bar.middleCols(2 * B, B) = adjoints.d_kappa.transpose();
    bar.middleCols(3 * B, B) = adjoints.d_kappa_kappa.transpose();

    for (std::size_t l = layers.size(); l-- > 0;) {
        const LayerCache& c = jet.cache[l];
        const auto n = layers[l].weight.rows();
        if (grad[l].weight.rows() != n || grad[l].weight.cols() != layers[l].weight.cols()) {
            throw ContractViolation("backward: gradient shape mismatch");
        }
        const auto xb = bar.leftCols(B).array();
        const auto tb = bar.middleCols(B, B).array();
        const auto kb = bar.middleCols(2 * B, B).array();
        const auto qb = bar.middleCols(3 * B, B).array();
        const auto ya = c.pre.middleCols(B, B).array();
        const auto yc = c.pre.middleCols(2 * B, B).array();
        const auto yd = c.pre.middleCols(3 * B, B).array();

        Eigen::MatrixXd pre_bar(n, 4 * B);
        pre_bar.leftCols(B) =
            (xb * c.d1 + (tb * ya + kb * yc) * c.d2 + qb * (c.d3 * yc.square() + c.d2 * yd)).matrix();
        pre_bar.middleCols(B, B) = (tb * c.d1).matrix();
        pre_bar.middleCols(2 * B, B) = (kb * c.d1 + 2.0 * qb * c.d2 * yc).matrix();
        pre_bar.middleCols(3 * B, B) = (qb * c.d1).matrix();

        grad[l].weight.noalias() += pre_bar * c.input.transpose();
        grad[l].bias += pre_bar.leftCols(B).rowwise().sum();
        if (l > 0) bar = layers[l].weight.transpose() * pre_bar;
    }
}

LayerStack backward(const VolNetwork& net, const NetworkJet& jet, const JetAdjoints& adjoints) {
    LayerStack grad = zeros_like(net.layers());
    backward(net, jet, adjoints, grad);
    return grad;
}

} // namespace shallowiv::neural
