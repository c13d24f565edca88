#include "msd/measures.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "gaussian.hpp"
#include "quadrature.hpp"

namespace msd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) {
        throw std::invalid_argument(std::string(what) + " must be finite");
    }
}

void require_snr(double r) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw std::invalid_argument("SNR must be finite and non-negative, got " + std::to_string(r));
    }
}

// Accumulates a log-space mixture: each term has log weight a_i, a
// per-component score and a within-component conditional variance. Scores
// are accumulated as offsets from the score of the heaviest term, so the
// between-component variance keeps its relative accuracy in the tails.
class MixtureAccumulator {
public:
    MixtureAccumulator(double max_log_weight, double pivot_score) : shift_(max_log_weight), pivot_(pivot_score) {}

    void add(double log_weight, double component_score, double within) {
        const double w = std::exp(log_weight - shift_);
        const double d = component_score - pivot_;
        total_ += w;
        sum_d_ += w * d;
        sum_d2_ += w * d * d;
        sum_within_ += w * within;
    }

    SmoothedPoint finish() const {
        const double mean_d = sum_d_ / total_;
        const double between = std::max(0.0, sum_d2_ / total_ - mean_d * mean_d);
        return {shift_ + std::log(total_), pivot_ + mean_d, sum_within_ / total_ + between};
    }

private:
    double shift_;
    double pivot_;
    double total_ = 0.0;
    double sum_d_ = 0.0;
    double sum_d2_ = 0.0;
    double sum_within_ = 0.0;
};

// Y_r = rX + Z for a mixture: component i contributes N(r mu_i, v_i^2) with
// v_i^2 = r^2 sigma_i^2 + 1. The conditional variance of rX splits into the
// within-component part r^2 sigma_i^2 / v_i^2 and the spread of the
// per-component scores.
SmoothedPoint mixture_smoothed(const MixtureMeasure& m, double r, double y) {
    const auto& p = m.weights();
    const auto& mu = m.means();
    const auto& var = m.variances();
    const Index k = m.size();

    auto log_weight = [&](Index i, double v) {
        const double t = (y - r * mu(i)) / v;
        return std::log(p(i)) - std::log(v) + detail::log_phi(t);
    };

    auto component_score = [&](Index i) { return -(y - r * mu(i)) / (r * r * var(i) + 1.0); };

    double max_a = -std::numeric_limits<double>::infinity();
    Index heaviest = 0;
    for (Index i = 0; i < k; ++i) {
        const double a = log_weight(i, std::sqrt(r * r * var(i) + 1.0));
        if (a > max_a) {
            max_a = a;
            heaviest = i;
        }
    }
    MixtureAccumulator acc(max_a, component_score(heaviest));
    for (Index i = 0; i < k; ++i) {
        const double signal = r * r * var(i);
        const double v2 = signal + 1.0;
        const double v = std::sqrt(v2);
        acc.add(log_weight(i, v), component_score(i), signal / v2);
    }
    return acc.finish();
}

// Own density of a mixture with strictly positive variances.
double mixture_density_score(const MixtureMeasure& m, double x) {
    const auto& p = m.weights();
    const auto& mu = m.means();
    const auto& var = m.variances();
    const Index k = m.size();

    auto log_weight = [&](Index i) {
        const double sd = std::sqrt(var(i));
        return std::log(p(i)) - std::log(sd) + detail::log_phi((x - mu(i)) / sd);
    };
    auto component_score = [&](Index i) { return -(x - mu(i)) / var(i); };

    double max_a = -std::numeric_limits<double>::infinity();
    Index heaviest = 0;
    for (Index i = 0; i < k; ++i) {
        const double a = log_weight(i);
        if (a > max_a) {
            max_a = a;
            heaviest = i;
        }
    }
    MixtureAccumulator acc(max_a, component_score(heaviest));
    for (Index i = 0; i < k; ++i) acc.add(log_weight(i), component_score(i), 0.0);
    return acc.finish().score;
}

struct TruncatedNormal {
    double log_mass;
    double mean;
    double variance;
};

// Standard normal restricted to [lo, hi]. Narrow windows (relative to where
// they sit) are integrated directly around their centre, which avoids the
// cancellation in Phi(hi) - Phi(lo); wide windows use the tail-appropriate
// erfc difference.
TruncatedNormal truncated_standard_normal(double lo, double hi) {
    const double width = hi - lo;
    const double reach = std::max({std::abs(lo), std::abs(hi), 1.0});
    if (width * reach <= 8.0) {
        const auto& rule = detail::gauss_legendre_32();
        const double centre = 0.5 * (lo + hi);
        const double half = 0.5 * width;
        const Eigen::ArrayXd u = half * rule.nodes;
        const Eigen::ArrayXd g = -centre * u - 0.5 * u.square();
        const double shift = g.maxCoeff();
        const Eigen::ArrayXd w = half * rule.weights * (g - shift).exp();
        const double mass = w.sum();
        const double mean_u = (w * u).sum() / mass;
        const double var_u = (w * (u - mean_u).square()).sum() / mass;
        return {detail::log_phi(centre) + shift + std::log(mass), centre + mean_u, var_u};
    }

    double mass;
    if (lo >= 0.0) {
        mass = detail::normal_sf(lo) - detail::normal_sf(hi);
    } else if (hi <= 0.0) {
        mass = detail::normal_cdf(hi) - detail::normal_cdf(lo);
    } else {
        mass = detail::normal_cdf(hi) - detail::normal_cdf(lo);
    }
    if (!(mass >= DBL_MIN)) {
        throw std::domain_error("far-tail evaluation");
    }
    const double log_mass = std::log(mass);
    const double a = std::exp(detail::log_phi(lo) - log_mass);
    const double b = std::exp(detail::log_phi(hi) - log_mass);
    const double mean = a - b;
    const double second = lo * a - hi * b;
    return {log_mass, mean, 1.0 + second - mean * mean};
}

// Y_r for X ~ Unif(a, b): rX | Y = y is N(y, 1) truncated to [ra, rb].
SmoothedPoint uniform_smoothed(const UniformMeasure& m, double r, double y) {
    if (r == 0.0) {
        return {detail::log_phi(y), -y, 0.0};
    }
    const auto tn = truncated_standard_normal(r * m.lower() - y, r * m.upper() - y);
    return {tn.log_mass - std::log(r * m.width()), tn.mean, tn.variance};
}

SmoothedPoint base_smoothed(const BaseMeasure& base, double r, double y) {
    return std::visit(
        overloaded{[&](const MixtureMeasure& b) { return mixture_smoothed(b, r, y); },
                   [&](const UniformMeasure& b) { return uniform_smoothed(b, r, y); }},
        base);
}

// r (cX + sigma Z) + Z' = v (r' X + Z'') with v^2 = r^2 sigma^2 + 1, r' = rc / v.
SmoothedPoint scaled_smoothed(const ScaledNoised& m, double r, double y) {
    const double signal = r * r * m.noise() * m.noise();
    const double v2 = signal + 1.0;
    const double v = std::sqrt(v2);
    const auto inner = base_smoothed(m.base(), r * m.scale() / v, y / v);
    return {inner.log_density - std::log(v), inner.score / v, (signal + inner.localization) / v2};
}

double base_density_score(const BaseMeasure& base, double x) {
    return std::visit(
        overloaded{[&](const MixtureMeasure& b) {
                       if (b.has_atoms()) {
                           throw std::invalid_argument("score undefined: measure has a Dirac component");
                       }
                       return mixture_density_score(b, x);
                   },
                   [&](const UniformMeasure&) -> double {
                       throw std::invalid_argument("score undefined: uniform measure has no smooth density");
                   }},
        base);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

// One draw per call; the number of engine values consumed per draw depends
// only on the measure family, which keeps streams prefix-consistent and
// couples draws of the same family across evolve().
class Drawer {
public:
    Drawer(const Measure& m, std::uint64_t seed, std::uint64_t stream)
        : measure_(m), engine_(make_engine(seed, stream)) {}

    double operator()() {
        return std::visit(overloaded{[&](const MixtureMeasure& b) { return draw_mixture(b); },
                                     [&](const UniformMeasure& b) { return draw_uniform(b); },
                                     [&](const ScaledNoised& b) { return draw_scaled(b); }},
                          measure_);
    }

    double standard_normal() { return normal_(engine_); }

private:
    double draw_mixture(const MixtureMeasure& m) {
        const double u = uniform_(engine_);
        const double z = normal_(engine_);
        Index i = 0;
        double cumulative = m.weights()(0);
        while (u >= cumulative && i + 1 < m.size()) {
            ++i;
            cumulative += m.weights()(i);
        }
        return m.means()(i) + std::sqrt(m.variances()(i)) * z;
    }

    double draw_uniform(const UniformMeasure& m) { return m.lower() + m.width() * uniform_(engine_); }

    double draw_scaled(const ScaledNoised& m) {
        const double x = std::visit(overloaded{[&](const MixtureMeasure& b) { return draw_mixture(b); },
                                               [&](const UniformMeasure& b) { return draw_uniform(b); }},
                                    m.base());
        return m.scale() * x + m.noise() * normal_(engine_);
    }

    const Measure& measure_;
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

void require_count(Index n) {
    if (n < 1) throw std::invalid_argument("sample count must be at least 1");
}

void require_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("time must be finite and non-negative, got " + std::to_string(t));
    }
}

void require_beta(double beta) {
    if (!(beta > 0.0)) {
        throw std::invalid_argument("inverse temperature must be positive");
    }
}

MixtureMeasure evolve_mixture(const MixtureMeasure& m, double decay, double added_variance) {
    std::vector<MixtureComponent> out;
    out.reserve(static_cast<size_t>(m.size()));
    for (Index i = 0; i < m.size(); ++i) {
        out.push_back({m.weights()(i), decay * m.means()(i),
                       decay * decay * m.variances()(i) + added_variance});
    }
    return MixtureMeasure(out);
}

}  // namespace

MixtureMeasure::MixtureMeasure(const std::vector<MixtureComponent>& components) {
    if (components.empty()) {
        throw std::invalid_argument("mixture needs at least one component");
    }
    const auto k = static_cast<Index>(components.size());
    weights_.resize(k);
    means_.resize(k);
    variances_.resize(k);
    double total = 0.0;
    for (Index i = 0; i < k; ++i) {
        const auto& c = components[static_cast<size_t>(i)];
        if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
            throw std::invalid_argument("mixture weight must be positive, component " + std::to_string(i));
        }
        if (!std::isfinite(c.mean)) {
            throw std::invalid_argument("mixture mean must be finite, component " + std::to_string(i));
        }
        if (!(c.variance >= 0.0) || !std::isfinite(c.variance)) {
            throw std::invalid_argument("mixture variance must be non-negative, component " + std::to_string(i));
        }
        weights_(i) = c.weight;
        means_(i) = c.mean;
        variances_(i) = c.variance;
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("mixture weights sum to " + std::to_string(total) + ", expected 1");
    }
}

MixtureMeasure MixtureMeasure::dirac(double at) { return MixtureMeasure({{1.0, at, 0.0}}); }

MixtureMeasure MixtureMeasure::normal(double mean, double variance) {
    return MixtureMeasure({{1.0, mean, variance}});
}

UniformMeasure::UniformMeasure(double lower, double upper) : lower_(lower), upper_(upper) {
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
        throw std::invalid_argument("uniform measure needs finite a < b");
    }
}

ScaledNoised::ScaledNoised(BaseMeasure base, double scale, double noise)
    : base_(std::move(base)), scale_(scale), noise_(noise) {
    if (!(scale > 0.0 && scale <= 1.0)) {
        throw std::invalid_argument("scale must lie in (0, 1]");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) {
        throw std::invalid_argument("noise level must be finite and non-negative");
    }
}

SmoothingScale snr_schedule(double t, double beta) {
    if (!(t >= kMinTime)) {
        throw std::invalid_argument("time " + std::to_string(t) + " is below the minimum " +
                                    std::to_string(kMinTime));
    }
    require_beta(beta);
    const double noise = std::sqrt(detail::one_minus_exp_m2t(t) / beta);
    const double s = 1.0 / noise;
    return {std::exp(-t) * s, s, t, beta};
}

SmoothedPoint smoothed_point(const Measure& m, double r, double y) {
    require_snr(r);
    require_finite(y, "evaluation point");
    return std::visit(overloaded{[&](const MixtureMeasure& b) { return mixture_smoothed(b, r, y); },
                                 [&](const UniformMeasure& b) { return uniform_smoothed(b, r, y); },
                                 [&](const ScaledNoised& b) { return scaled_smoothed(b, r, y); }},
                      m);
}

double log_smoothed_density(const Measure& m, double r, double y) { return smoothed_point(m, r, y).log_density; }

double smoothed_density(const Measure& m, double r, double y) {
    return std::exp(log_smoothed_density(m, r, y));
}

double score(const Measure& m, double r, double y) { return smoothed_point(m, r, y).score; }

double curvature(const Measure& m, double r, double y) { return smoothed_point(m, r, y).localization - 1.0; }

double localization(const Measure& m, double r, double y) {
    const double value = smoothed_point(m, r, y).localization;
    if (value >= 0.0) return value;
    if (value >= -kClampTolerance) return 0.0;
    throw std::logic_error("negative conditional variance " + std::to_string(value) + " at y = " +
                           std::to_string(y));
}

double posterior_mean(const Measure& m, double r, double y) { return y + score(m, r, y); }

double density_score(const Measure& m, double x) {
    require_finite(x, "evaluation point");
    return std::visit(overloaded{[&](const MixtureMeasure& b) { return base_density_score(b, x); },
                                 [&](const UniformMeasure& b) { return base_density_score(b, x); },
                                 [&](const ScaledNoised& b) {
                                     if (b.noise() == 0.0) {
                                         return base_density_score(b.base(), x / b.scale()) / b.scale();
                                     }
                                     const double sigma = b.noise();
                                     return base_smoothed(b.base(), b.scale() / sigma, x / sigma).score / sigma;
                                 }},
                      m);
}

Eigen::ArrayXd sample(const Measure& m, Index n, std::uint64_t seed, std::uint64_t stream) {
    require_count(n);
    Drawer draw(m, seed, stream);
    Eigen::ArrayXd out(n);
    for (Index i = 0; i < n; ++i) out(i) = draw();
    return out;
}

Eigen::ArrayXd sample_smoothed(const Measure& m, double r, Index n, std::uint64_t seed, std::uint64_t stream) {
    require_count(n);
    require_snr(r);
    Drawer draw(m, seed, stream);
    Eigen::ArrayXd out(n);
    for (Index i = 0; i < n; ++i) {
        const double x = draw();
        out(i) = r * x + draw.standard_normal();
    }
    return out;
}

Measure evolve(const Measure& m, double t, double beta) {
    require_time(t);
    require_beta(beta);
    if (t == 0.0) return m;
    const double decay = std::exp(-t);
    const double added = std::isinf(beta) ? 0.0 : detail::one_minus_exp_m2t(t) / beta;
    return std::visit(
        overloaded{[&](const MixtureMeasure& b) -> Measure { return evolve_mixture(b, decay, added); },
                   [&](const UniformMeasure& b) -> Measure { return ScaledNoised(b, decay, std::sqrt(added)); },
                   [&](const ScaledNoised& b) -> Measure {
                       const double noise2 = decay * decay * b.noise() * b.noise() + added;
                       return ScaledNoised(b.base(), decay * b.scale(), std::sqrt(noise2));
                   }},
        m);
}

double score_at_time(const Measure& m, double t, double beta, double x) {
    if (!std::isfinite(beta)) {
        throw std::invalid_argument("score undefined for the noiseless drift (beta = inf)");
    }
    const auto scale = snr_schedule(t, beta);
    if (std::holds_alternative<MixtureMeasure>(m)) {
        return density_score(evolve(m, t, beta), x);
    }
    return scale.s * score(m, scale.r, scale.s * x);
}

}  // namespace msd
