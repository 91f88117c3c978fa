#include "network_checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "shallowiv/parity.hpp"
#include "shallowiv/random.hpp"

namespace shallowiv::testing {

namespace {

std::vector<int> sign_pattern(const neural::VolNetwork& net, double tau, double kappa) {
    const double t[] = {tau};
    const double k[] = {kappa};
    const auto jet = neural::forward_jet(net, t, k, true);
    std::vector<int> out;
    for (std::size_t l = 0; l + 1 < jet.cache.size(); ++l) {
        const auto& pre = jet.cache[l].pre;
        for (Eigen::Index i = 0; i < pre.rows(); ++i) {
            const double y = pre(i, 0);
            out.push_back(y > 0.0 ? 1 : (y < 0.0 ? -1 : 0));
        }
    }
    return out;
}

} // namespace

std::optional<JetErrors> jet_errors(const neural::VolNetwork& net, double tau, double kappa, double h) {
    const auto base = sign_pattern(net, tau, kappa);
    if (std::find(base.begin(), base.end(), 0) != base.end()) return std::nullopt;
    for (int i = -2; i <= 2; ++i) {
        if (sign_pattern(net, tau + i * h, kappa) != base) return std::nullopt;
        if (sign_pattern(net, tau, kappa + i * h) != base) return std::nullopt;
    }
    const auto jet = neural::forward_jet(net, tau, kappa);
    const double fd_tau = derivative([&](double t) { return neural::forward(net, t, kappa); }, tau, h);
    const double fd_kappa = derivative([&](double k) { return neural::forward(net, tau, k); }, kappa, h);
    const double fd_kk = derivative([&](double k) { return neural::forward_jet(net, tau, k).d_kappa; }, kappa, h);
    return JetErrors{parity::relative_error(jet.d_tau, fd_tau), parity::relative_error(jet.d_kappa, fd_kappa),
                     parity::relative_error(jet.d_kappa_kappa, fd_kk)};
}

JetErrors max_jet_errors(const neural::VolNetwork& net, int points, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed));
    JetErrors worst{0.0, 0.0, 0.0};
    int accepted = 0;
    for (int attempt = 0; accepted < points && attempt < 100 * points; ++attempt) {
        const double tau = 0.1 + 1.9 * uniform01(rng);
        const double kappa = -1.0 + 2.0 * uniform01(rng);
        const auto e = jet_errors(net, tau, kappa);
        if (!e) continue;
        ++accepted;
        worst.d_tau = std::max(worst.d_tau, e->d_tau);
        worst.d_kappa = std::max(worst.d_kappa, e->d_kappa);
        worst.d_kappa_kappa = std::max(worst.d_kappa_kappa, e->d_kappa_kappa);
    }
    if (accepted < points) return {INFINITY, INFINITY, INFINITY};
    return worst;
}

GradientCheck gradient_check(const neural::VolNetwork& net, training::Points points,
                             const training::TrainConfig& config, double h) {
    const auto analytic = training::loss_and_gradient(net, points, config);
    neural::VolNetwork probe = net;
    std::vector<double> theta = net.flatten();
    neural::VolNetwork shaped = net;
    shaped.layers() = analytic.gradient;
    const std::vector<double> g = shaped.flatten();

    auto loss_at = [&](std::size_t i, double x) {
        std::vector<double> t = theta;
        t[i] = x;
        probe.assign(t);
        const auto l = training::loss_and_gradient(probe, points, config).losses;
        return l.total();
    };
    double diff2 = 0.0, ref2 = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double fd = derivative([&](double x) { return loss_at(i, x); }, theta[i], h);
        diff2 += (g[i] - fd) * (g[i] - fd);
        ref2 += fd * fd;
        max_abs = std::max(max_abs, std::abs(g[i] - fd));
    }
    return {std::sqrt(diff2 / std::max(ref2, 1e-300)), max_abs, theta.size()};
}

} // namespace shallowiv::testing
