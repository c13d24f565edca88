#include "msd/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gaussian.hpp"
#include "parallel.hpp"

namespace msd {

namespace {

void require_step(double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("step size must be positive");
}

// x <- x + sign * eta (x + score / beta) with the score of `law`.
ParticleEnsemble step_with_law(const ParticleEnsemble& e, const Measure& law, double eta, double beta, double sign) {
    const Eigen::ArrayXd& x = e.positions();
    if (std::isinf(beta)) return ParticleEnsemble(x + sign * eta * x);
    Eigen::ArrayXd out(x.size());
    detail::parallel_chunks(x.size(), [&](Index begin, Index end) {
        for (Index i = begin; i < end; ++i) {
            double s;
            try {
                s = density_score(law, x(i));
            } catch (const std::exception& err) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "score failed at particle x = " << x(i) << ": " << err.what();
                throw std::runtime_error(msg.str());
            }
            out(i) = x(i) + sign * eta * (x(i) + s / beta);
        }
    });
    return ParticleEnsemble(std::move(out));
}

ParticleEnsemble step_map(const ParticleEnsemble& e, const Measure& m, double t, double eta, double beta,
                          double sign) {
    require_step(eta);
    if (!(beta > 0.0)) throw std::invalid_argument("inverse temperature must be positive");
    if (std::isinf(beta)) return step_with_law(e, m, eta, beta, sign);
    if (!(t >= kMinTime)) {
        throw std::invalid_argument("score time " + std::to_string(t) + " is below the minimum " +
                                    std::to_string(kMinTime));
    }
    return step_with_law(e, evolve(m, t, beta), eta, beta, sign);
}

double w2_squared(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    const double w = w2(a, b);
    return w * w;
}

// Midpoint quantiles of a sorted sample on an n-point grid.
Eigen::ArrayXd quantiles(const Eigen::ArrayXd& sorted, Index n) {
    const Index size = sorted.size();
    Eigen::ArrayXd out(n);
    for (Index i = 0; i < n; ++i) {
        const double pos = (static_cast<double>(i) + 0.5) * static_cast<double>(size) / static_cast<double>(n) - 0.5;
        const double clamped = std::clamp(pos, 0.0, static_cast<double>(size - 1));
        const auto lo = static_cast<Index>(std::floor(clamped));
        const Index hi = std::min(lo + 1, size - 1);
        const double frac = clamped - static_cast<double>(lo);
        out(i) = sorted(lo) + frac * (sorted(hi) - sorted(lo));
    }
    return out;
}

ParticleEnsemble reference(const Measure& mu, double t, double beta, Index n, std::uint64_t seed) {
    return draw_ensemble(evolve(mu, t, beta), n, seed, 0);
}

double realized_M_between(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
    const Eigen::ArrayXd d2 = (a - b).square();
    const double mean = d2.mean();
    return mean > 0.0 ? d2.maxCoeff() / mean : 1.0;
}

}  // namespace

ParticleEnsemble::ParticleEnsemble(Eigen::ArrayXd positions) : positions_(std::move(positions)) {
    if (positions_.size() < 2) throw std::invalid_argument("ensemble needs at least two particles");
    if (!positions_.allFinite()) throw std::invalid_argument("ensemble positions must be finite");
    std::sort(positions_.begin(), positions_.end());
}

ParticleEnsemble draw_ensemble(const Measure& m, Index n, std::uint64_t seed, std::uint64_t stream) {
    return ParticleEnsemble(sample(m, n, seed, stream));
}

ParticleEnsemble forward_step(const ParticleEnsemble& e, const Measure& m, double t, double eta, double beta) {
    return step_map(e, m, t, eta, beta, -1.0);
}

ParticleEnsemble backward_step(const ParticleEnsemble& e, const Measure& m, double t, double eta, double beta) {
    return step_map(e, m, t, eta, beta, 1.0);
}

double w2(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    if (a.size() == b.size()) {
        return std::sqrt((a.positions() - b.positions()).square().mean());
    }
    const Index n = std::max(a.size(), b.size());
    return std::sqrt((quantiles(a.positions(), n) - quantiles(b.positions(), n)).square().mean());
}

double gaussian_w2(double mean1, double sd1, double mean2, double sd2) {
    if (!(sd1 >= 0.0) || !(sd2 >= 0.0)) throw std::invalid_argument("standard deviations must be non-negative");
    return std::hypot(mean1 - mean2, sd1 - sd2);
}

double forward_rate(const Measure& m, const Measure& nu, double t, double eta, double beta, Index n,
                    std::uint64_t seed) {
    const auto a = draw_ensemble(evolve(m, t, beta), n, seed, 0);
    const auto b = draw_ensemble(evolve(nu, t, beta), n, seed, 0);
    const double before = w2_squared(a, b);
    if (before == 0.0) throw std::invalid_argument("coincident chains: W2 is zero before the step");
    const double after = w2_squared(forward_step(a, m, t, eta, beta), forward_step(b, nu, t, eta, beta));
    return (after - before) / (eta * before);
}

BackwardRate backward_rate(const Measure& m, Perturbation kind, double eps, double t, double eta, double beta,
                           Index n, std::uint64_t seed) {
    if (eps == 0.0 || !(std::abs(eps) <= 0.05)) {
        throw std::invalid_argument("perturbation size must be nonzero with |eps| <= 0.05");
    }
    const auto base = draw_ensemble(evolve(m, t, beta), n, seed, 0);
    const Eigen::ArrayXd& x = base.positions();
    Eigen::ArrayXd moved;
    if (kind == Perturbation::shift) {
        moved = x + eps;
    } else {
        const double centre = x.mean();
        moved = centre + (1.0 + eps) * (x - centre);
    }
    const ParticleEnsemble perturbed(moved);
    const Eigen::ArrayXd d2 = (perturbed.positions() - x).square();
    const double before = d2.mean();

    const auto b_base = backward_step(base, m, t, eta, beta);
    const auto b_perturbed = backward_step(perturbed, m, t, eta, beta);
    const double after = w2_squared(b_base, b_perturbed);
    const double rate = (after - before) / (eta * before);

    // Ratio-estimator error: per-particle contributions to after - (1 + eta rate) before.
    const Eigen::ArrayXd contrib =
        ((b_perturbed.positions() - b_base.positions()).square() - (1.0 + eta * rate) * d2) / (eta * before);
    const double centred = (contrib - contrib.mean()).square().sum() / static_cast<double>(n - 1);
    return {rate, realized_M_between(perturbed.positions(), x), std::sqrt(centred / static_cast<double>(n))};
}

double roundtrip_residual(const Measure& m, double t, double eta, double beta, Index n, std::uint64_t seed) {
    const auto start = draw_ensemble(evolve(m, t, beta), n, seed, 0);
    const auto forward = forward_step(start, m, t, eta, beta);
    return w2(backward_step(forward, m, t + eta, eta, beta), start);
}

ChainReport run_chain(const ChainConfig& cfg) {
    const Index K = cfg.steps;
    const double eta = cfg.eta;
    const double beta = cfg.beta;
    const Index n = cfg.particles;
    if (K < 1) throw std::invalid_argument("chain needs at least one step");
    if (!(eta > 0.0 && eta <= 0.1)) throw std::invalid_argument("step size must lie in (0, 0.1]");
    if (static_cast<double>(K) * eta > 100.0 + 1e-9) throw std::invalid_argument("total time steps * eta exceeds 100");
    if (!(beta > 0.0)) throw std::invalid_argument("inverse temperature must be positive");
    if (n < 2) throw std::invalid_argument("chain needs at least two particles");

    const auto time = [&](Index k) { return static_cast<double>(k) * eta; };
    const auto mu0 = draw_ensemble(cfg.mu, n, cfg.seed, 0);
    const auto nu0 = draw_ensemble(cfg.nu, n, cfg.seed, 1);

    std::vector<ChainRow> rows(static_cast<size_t>(K + 1));
    rows[0] = {0, 0.0, w2(mu0, nu0), 0.0};

    // First step: exact OU transition, since the nu law may have atoms at t = 0.
    const double decay = std::exp(-eta);
    const double noise_var = std::isinf(beta) ? 0.0 : detail::one_minus_exp_m2t(eta) / beta;
    const Eigen::ArrayXd z = sample(MixtureMeasure::normal(0.0, 1.0), n, cfg.seed, 2);
    // Pair the noise with particles in draw order so the result does not
    // depend on the sort.
    const Eigen::ArrayXd nu_draws = sample(cfg.nu, n, cfg.seed, 1);
    ParticleEnsemble nu_t(decay * nu_draws + std::sqrt(noise_var) * z);
    rows[1] = {1, time(1), w2(reference(cfg.mu, time(1), beta, n, cfg.seed), nu_t), 0.0};

    // A single Gaussian (or Dirac) nu stays Gaussian under the affine Euler
    // maps, so its score is taken from the exact law of the iterates. Using
    // evolve(nu, t) instead would freeze the early-step variance error.
    const auto* nu_mix = std::get_if<MixtureMeasure>(&cfg.nu);
    const bool tracked = nu_mix != nullptr && nu_mix->size() == 1;
    double nu_mean = tracked ? decay * nu_mix->means()(0) : 0.0;
    double nu_var = tracked ? decay * decay * nu_mix->variances()(0) + noise_var : 0.0;
    for (Index k = 2; k <= K; ++k) {
        if (tracked && !std::isinf(beta)) {
            nu_t = step_with_law(nu_t, MixtureMeasure::normal(nu_mean, nu_var), eta, beta, -1.0);
            const double slope = 1.0 - eta + eta / (beta * nu_var);
            nu_mean *= 1.0 - eta;
            nu_var *= slope * slope;
        } else {
            nu_t = forward_step(nu_t, cfg.nu, time(k - 1), eta, beta);
        }
        rows[static_cast<size_t>(k)] = {k, time(k), w2(reference(cfg.mu, time(k), beta, n, cfg.seed), nu_t), 0.0};
    }
    const ParticleEnsemble nu_diffused = nu_t;

    const auto mu_T = reference(cfg.mu, time(K), beta, n, cfg.seed);
    ParticleEnsemble current = cfg.equilibrium_restart
                                   ? draw_ensemble(MixtureMeasure::normal(0.0, std::isinf(beta) ? 0.0 : 1.0 / beta),
                                                   n, cfg.seed, 3)
                                   : nu_diffused;
    const double realized_M = realized_M_between(mu_T.positions(), current.positions());
    ParticleEnsemble mu_back = mu_T;
    rows[static_cast<size_t>(K)].w2_backward = w2(mu_T, current);
    for (Index k = K; k >= 1; --k) {
        current = backward_step(current, cfg.mu, time(k), eta, beta);
        mu_back = backward_step(mu_back, cfg.mu, time(k), eta, beta);
        const auto target = k - 1 == 0 ? mu0 : reference(cfg.mu, time(k - 1), beta, n, cfg.seed);
        rows[static_cast<size_t>(k - 1)].w2_backward = w2(target, current);
    }

    return {std::move(rows), mu0, nu0, nu_diffused, current, w2(mu0, mu_back), realized_M};
}

}  // namespace msd
