#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace msd {

using Index = Eigen::Index;

/// Smallest time at which the backward chain may evaluate scores. r(t), s(t)
/// and 1/(1 - e^{-2t}) all diverge at t = 0.
inline constexpr double kMinTime = 1e-6;

/// Localization values in [-kClampTolerance, 0) are roundoff and get clamped.
inline constexpr double kClampTolerance = 1e-10;

struct MixtureComponent {
    double weight;
    double mean;
    double variance;  // 0 for a Dirac atom
};

/// Finite mixture of Gaussians and Dirac atoms, stored column-wise.
class MixtureMeasure {
public:
    /// Throws std::invalid_argument unless weights are positive and sum to
    /// one within 1e-9 and every variance is finite and non-negative.
    explicit MixtureMeasure(const std::vector<MixtureComponent>& components);

    static MixtureMeasure dirac(double at);
    static MixtureMeasure normal(double mean, double variance);

    Index size() const { return weights_.size(); }
    const Eigen::ArrayXd& weights() const { return weights_; }
    const Eigen::ArrayXd& means() const { return means_; }
    const Eigen::ArrayXd& variances() const { return variances_; }
    MixtureComponent component(Index i) const { return {weights_(i), means_(i), variances_(i)}; }

    bool has_atoms() const { return (variances_ == 0.0).any(); }

private:
    Eigen::ArrayXd weights_;
    Eigen::ArrayXd means_;
    Eigen::ArrayXd variances_;
};

class UniformMeasure {
public:
    UniformMeasure(double lower, double upper);

    double lower() const { return lower_; }
    double upper() const { return upper_; }
    double width() const { return upper_ - lower_; }

private:
    double lower_;
    double upper_;
};

using BaseMeasure = std::variant<MixtureMeasure, UniformMeasure>;

/// Law of scale * X + noise * Z with X ~ base and Z ~ N(0, 1) independent.
/// Nesting is one level deep: OU evolution of a ScaledNoised composes into
/// a single layer.
class ScaledNoised {
public:
    ScaledNoised(BaseMeasure base, double scale, double noise);

    const BaseMeasure& base() const { return base_; }
    double scale() const { return scale_; }
    double noise() const { return noise_; }

private:
    BaseMeasure base_;
    double scale_;
    double noise_;
};

using Measure = std::variant<MixtureMeasure, UniformMeasure, ScaledNoised>;

/// Noise schedule of the OU process at time t:
/// r = e^{-t} / sqrt(1/beta (1 - e^{-2t})), s = 1 / sqrt(1/beta (1 - e^{-2t})).
struct SmoothingScale {
    double r;
    double s;
    double t;
    double beta;
};

SmoothingScale snr_schedule(double t, double beta);

// Quantities of Y_r = r X + Z, X ~ m, Z ~ N(0, 1) independent.

struct SmoothedPoint {
    double log_density;
    double score;         // d/dy log p(y) = E[rX | Y = y] - y
    double localization;  // Var[rX | Y = y], unclamped
};

/// All smoothed quantities at one point. Throws std::invalid_argument for
/// r < 0 or non-finite y, std::domain_error("far-tail evaluation") when the
/// density is not representable.
SmoothedPoint smoothed_point(const Measure& m, double r, double y);

double log_smoothed_density(const Measure& m, double r, double y);
double smoothed_density(const Measure& m, double r, double y);
double score(const Measure& m, double r, double y);
double curvature(const Measure& m, double r, double y);
/// Var[rX | Y_r = y]; tiny negative roundoff is clamped to 0, anything below
/// -kClampTolerance throws std::logic_error.
double localization(const Measure& m, double r, double y);
double posterior_mean(const Measure& m, double r, double y);

/// Score of the measure's own Lebesgue density. Requires the measure to have
/// one: no Dirac components, no bare uniform, ScaledNoised with noise > 0.
double density_score(const Measure& m, double x);

/// i.i.d. draws of X ~ m. (seed, stream) fully determine the output and the
/// first k draws do not depend on n.
Eigen::ArrayXd sample(const Measure& m, Index n, std::uint64_t seed, std::uint64_t stream = 0);

/// i.i.d. draws of Y_r = r X + Z under the same determinism contract.
Eigen::ArrayXd sample_smoothed(const Measure& m, double r, Index n, std::uint64_t seed,
                               std::uint64_t stream = 0);

/// Law at time t of the OU process dX = -X dt + sqrt(2/beta) dB started at m.
/// beta = +inf is the noiseless drift.
Measure evolve(const Measure& m, double t, double beta);

/// Score of evolve(m, t, beta) at x. Mixtures go through evolve, other
/// families through s(t) * score(m, r(t), s(t) x). Requires t >= kMinTime
/// and finite beta.
double score_at_time(const Measure& m, double t, double beta, double x);

}  // namespace msd
