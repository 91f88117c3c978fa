#include "shallowiv/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "shallowiv/errors.hpp"
#include "shallowiv/parity.hpp"
#include "shallowiv/random.hpp"

namespace shallowiv::training {

using market::pivots;
using neural::LayerStack;
using neural::VolNetwork;
using special::normal_cdf;
using special::normal_pdf;

std::string_view to_string(VegaWeight mode) {
    return mode == VegaWeight::PaperLiteral ? "paper" : "squared";
}

std::optional<VegaWeight> parse_vega_weight(std::string_view name) {
    if (name == "paper") return VegaWeight::PaperLiteral;
    if (name == "squared") return VegaWeight::Squared;
    return std::nullopt;
}

namespace {

constexpr std::size_t kEvalChunk = 4096;

// Per-point loss terms and their partials with respect to the jet outputs.
struct PointTerms {
    double price_term;  // (o_hat - o)^2 / w(v_hat)
    double eps_c, eps_v, eps_b;
    double dprice_domega;
    double dg_domega, dg_dk;                  // g = Phi(z+) + zeta
    double dxi_domega, dxi_dk, dxi_dkk;
};

PointTerms point_terms(const market::RelativeQuote& q, double w, double wt, double wk, double wkk,
                       VegaWeight mode, double vega_floor, bool with_partials) {
    if (!(w > 0.0) || !std::isfinite(w)) throw NumericError("network produced a nonpositive total volatility");
    PointTerms t{};
    const auto z = pivots(q.kappa, w);
    const double pdf_minus = normal_pdf(z.minus);
    const double pdf_plus = normal_pdf(z.plus);
    const double sqrt_tau = std::sqrt(q.tau);

    const double r = market::bs_otm(q.tau, q.kappa, w) - q.price;
    const double v = pdf_minus * sqrt_tau;
    const bool floored = v < vega_floor;
    const double ve = floored ? vega_floor : v;
    const double power = mode == VegaWeight::PaperLiteral ? 1.0 : 2.0;
    const double weight = mode == VegaWeight::PaperLiteral ? 1.0 / ve : 1.0 / (ve * ve);
    t.price_term = r * r * weight;

    const parity::SurfaceJet jet{q.tau, q.kappa, w, wt, wk, wkk};
    const auto eps = parity::arbitrage_errors(jet);
    t.eps_c = eps.calendar;
    t.eps_v = eps.vertical;
    t.eps_b = eps.butterfly;

    if (with_partials) {
        // d o_hat / d omega = phi(z-) for puts and calls alike.
        t.dprice_domega = 2.0 * r * pdf_minus * weight;
        if (!floored) {
            const double dv_domega = sqrt_tau * pdf_minus * z.minus * (q.kappa / (w * w) + 0.5);
            t.dprice_domega -= power * r * r * weight / ve * dv_domega;
        }
        const double dzplus_domega = 0.5 - q.kappa / (w * w);
        t.dg_domega = pdf_plus * (1.0 - z.plus * wk) * dzplus_domega;
        t.dg_dk = pdf_plus;
        const double skew = 1.0 - q.kappa * wk / w;
        t.dxi_domega = 2.0 * skew * (q.kappa * wk / (w * w)) - 0.5 * w * wk * wk + wkk;
        t.dxi_dk = -2.0 * skew * (q.kappa / w) - 0.5 * w * w * wk;
        t.dxi_dkk = w;
    }
    return t;
}

struct Sums {
    double price = 0.0, c = 0.0, v = 0.0, b = 0.0;
    std::size_t n = 0;

    LossBreakdown losses() const {
        if (n == 0) return {};
        const double inv = 1.0 / static_cast<double>(n);
        return {std::sqrt(price * inv), std::sqrt(c * inv), std::sqrt(v * inv), std::sqrt(b * inv), std::nullopt};
    }
};

Sums accumulate(const VolNetwork& net, Points points, VegaWeight mode, double vega_floor) {
    Sums s;
    std::vector<double> tau, kappa;
    for (std::size_t start = 0; start < points.size(); start += kEvalChunk) {
        const auto chunk = points.subspan(start, std::min(kEvalChunk, points.size() - start));
        tau.resize(chunk.size());
        kappa.resize(chunk.size());
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            tau[i] = chunk[i].tau;
            kappa[i] = chunk[i].kappa;
        }
        const auto jet = neural::forward_jet(net, tau, kappa, false);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const PointTerms t = point_terms(chunk[i], jet.omega(k), jet.d_tau(k), jet.d_kappa(k),
                                             jet.d_kappa_kappa(k), mode, vega_floor, false);
            s.price += t.price_term;
            s.c += t.eps_c * t.eps_c;
            s.v += t.eps_v * t.eps_v;
            s.b += t.eps_b * t.eps_b;
        }
    }
    s.n = points.size();
    return s;
}

} // namespace

double price_loss(const VolNetwork& net, Points points, VegaWeight mode, double vega_floor) {
    return accumulate(net, points, mode, vega_floor).losses().price;
}

ArbitrageLosses arbitrage_losses(const VolNetwork& net, Points points) {
    const auto l = accumulate(net, points, VegaWeight::PaperLiteral, 1e-8).losses();
    return {l.calendar, l.vertical, l.butterfly};
}

double density_loss(const VolNetwork& net, const market::ChainDataset& grid, const market::LbTermStructure& market) {
    if (grid.moneyness().size() < 2) throw ContractViolation("density_loss: need a uniform moneyness grid");
    const double dk = grid.moneyness_step();
    const auto& kappas = grid.moneyness();
    double sum = 0.0;
    std::vector<double> tau(kappas.size());
    for (double t : grid.tenors()) {
        std::fill(tau.begin(), tau.end(), t);
        const auto m = market::term_structure_eval(t, market);
        const auto jet = neural::forward_jet(net, tau, kappas, false);
        for (std::size_t j = 0; j < kappas.size(); ++j) {
            const auto k = static_cast<Eigen::Index>(j);
            const parity::SurfaceJet sj{t, kappas[j], jet.omega(k), jet.d_tau(k), jet.d_kappa(k),
                                        jet.d_kappa_kappa(k)};
            const double diff = parity::implied_pdf(sj) - market::lb_pdf(kappas[j], m);
            sum += diff * diff * dk;
        }
    }
    return std::sqrt(sum / static_cast<double>(grid.tenors().size()));
}

LossBreakdown evaluate(const VolNetwork& net, const market::ChainDataset& data, const TrainConfig& config,
                       const market::LbTermStructure* market) {
    LossBreakdown out = accumulate(net, data.quotes(), config.vega_weight, config.vega_floor).losses();
    if (market != nullptr) out.density = density_loss(net, data, *market);
    return out;
}

LossAndGradient loss_and_gradient(const VolNetwork& net, Points points, const TrainConfig& config) {
    const std::size_t n = points.size();
    LossAndGradient out{{}, neural::zeros_like(net.layers())};
    if (n == 0) return out;

    std::vector<double> tau(n), kappa(n);
    for (std::size_t i = 0; i < n; ++i) {
        tau[i] = points[i].tau;
        kappa[i] = points[i].kappa;
    }
    const auto jet = neural::forward_jet(net, tau, kappa, true);

    std::vector<PointTerms> terms(n);
    Sums s;
    s.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        terms[i] = point_terms(points[i], jet.omega(k), jet.d_tau(k), jet.d_kappa(k), jet.d_kappa_kappa(k),
                               config.vega_weight, config.vega_floor, true);
        s.price += terms[i].price_term;
        s.c += terms[i].eps_c * terms[i].eps_c;
        s.v += terms[i].eps_v * terms[i].eps_v;
        s.b += terms[i].eps_b * terms[i].eps_b;
    }
    out.losses = s.losses();
    const auto& L = out.losses;
    const double nn = static_cast<double>(n);
    // d sqrt(mean u)/du_i = 1/(2 n L);  d sqrt(mean eps^2)/d eps_i = eps_i/(n L)
    const double cp = L.price > 0.0 ? 1.0 / (2.0 * nn * L.price) : 0.0;
    const double cc = L.calendar > 0.0 ? 1.0 / (nn * L.calendar) : 0.0;
    const double cv = L.vertical > 0.0 ? 1.0 / (nn * L.vertical) : 0.0;
    const double cb = L.butterfly > 0.0 ? 1.0 / (nn * L.butterfly) : 0.0;

    const auto B = static_cast<Eigen::Index>(n);
    neural::JetAdjoints adj{Eigen::VectorXd::Zero(B), Eigen::VectorXd::Zero(B), Eigen::VectorXd::Zero(B),
                            Eigen::VectorXd::Zero(B)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto& t = terms[i];
        const auto k = static_cast<Eigen::Index>(i);
        // eps_V = -g and eps_B = -xi on their active sets; zero elsewhere.
        const double av = cv * t.eps_v;
        const double ab = cb * t.eps_b;
        adj.omega(k) = cp * t.dprice_domega - av * t.dg_domega - ab * t.dxi_domega;
        adj.d_tau(k) = -cc * t.eps_c;
        adj.d_kappa(k) = -av * t.dg_dk - ab * t.dxi_dk;
        adj.d_kappa_kappa(k) = -ab * t.dxi_dkk;
    }
    neural::backward(net, jet, adj, out.gradient);
    return out;
}

// ---------------------------------------------------------------------------

AdamState AdamState::zeros_for(const VolNetwork& net) {
    return {neural::zeros_like(net.layers()), neural::zeros_like(net.layers()), 0};
}

void adam_step(LayerStack& params, const LayerStack& grad, AdamState& state, const TrainConfig& config) {
    if (params.size() != grad.size() || params.size() != state.first.size() ||
        params.size() != state.second.size()) {
        throw ContractViolation("adam_step: shape mismatch");
    }
    ++state.step;
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double lr = config.learning_rate;
    const double eps = config.epsilon;

    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        if (p.rows() != g.rows() || p.cols() != g.cols() || m.rows() != p.rows() || m.cols() != p.cols()) {
            throw ContractViolation("adam_step: shape mismatch");
        }
        m.array() = b1 * m.array() + (1.0 - b1) * g.array();
        v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        update(params[l].weight, grad[l].weight, state.first[l].weight, state.second[l].weight);
        update(params[l].bias, grad[l].bias, state.first[l].bias, state.second[l].bias);
    }
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed) {
    if (batch_size == 0) throw ContractViolation("shuffled_batches: batch size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const auto stop = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return out;
}

std::uint64_t epoch_seed(std::uint64_t master, int epoch) {
    return derive_seed(master, static_cast<std::uint64_t>(epoch));
}

std::optional<int> TrainHistory::arbitrage_zero_epoch() const {
    std::optional<int> first;
    for (const auto& e : epochs) {
        if (e.losses.arbitrage_free()) {
            if (!first) first = e.epoch;
        } else {
            first.reset();
        }
    }
    return first;
}

TrainResult train(VolNetwork initial, const TrainConfig& config, const market::ChainDataset& train_set,
                  const market::LbTermStructure* market, const EpochCallback& on_epoch) {
    if (config.epochs < 0 || config.batch_size <= 0) throw ContractViolation("train: invalid epochs/batch size");
    TrainResult result{std::move(initial), {}};
    if (config.epochs == 0) return result;
    if (train_set.empty()) throw ContractViolation("train: empty training set");

    AdamState adam = AdamState::zeros_for(result.net);
    std::vector<market::RelativeQuote> batch_points;
    const auto& quotes = train_set.quotes();

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        const auto batches = shuffled_batches(quotes.size(), static_cast<std::size_t>(config.batch_size),
                                              epoch_seed(config.seed, epoch));
        EpochRecord rec;
        rec.epoch = epoch;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            batch_points.clear();
            for (auto idx : batches[b]) batch_points.push_back(quotes[idx]);
            auto lg = loss_and_gradient(result.net, batch_points, config);
            if (!std::isfinite(lg.losses.total())) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << ", batch " << (b + 1);
                throw NumericError(msg.str());
            }
            rec.losses.price += lg.losses.price;
            rec.losses.calendar += lg.losses.calendar;
            rec.losses.vertical += lg.losses.vertical;
            rec.losses.butterfly += lg.losses.butterfly;
            adam_step(result.net.layers(), lg.gradient, adam, config);
        }
        const double nb = static_cast<double>(batches.size());
        rec.losses.price /= nb;
        rec.losses.calendar /= nb;
        rec.losses.vertical /= nb;
        rec.losses.butterfly /= nb;

        if (config.snapshot_every > 0 && epoch % config.snapshot_every == 0) {
            Snapshot snap{epoch, evaluate(result.net, train_set, config, market)};
            rec.density = snap.train.density;
            result.history.snapshots.push_back(snap);
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec, result.net);
    }
    return result;
}

TrainResult train(const neural::NetworkConfig& arch, const TrainConfig& config, const market::ChainDataset& train_set,
                  const market::LbTermStructure* market, const EpochCallback& on_epoch) {
    return train(neural::he_uniform_init(arch, config.seed), config, train_set, market, on_epoch);
}

} // namespace shallowiv::training
