#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "msd/measures.hpp"

namespace msd {

/// Equal-weight 1-D empirical measure, kept sorted.
class ParticleEnsemble {
public:
    /// Sorts the positions. Requires at least two finite values.
    explicit ParticleEnsemble(Eigen::ArrayXd positions);

    const Eigen::ArrayXd& positions() const { return positions_; }
    Index size() const { return positions_.size(); }

private:
    Eigen::ArrayXd positions_;
};

ParticleEnsemble draw_ensemble(const Measure& m, Index n, std::uint64_t seed, std::uint64_t stream = 0);

// Step maps under the OU potential f(x) = x^2 / 2. The score is that of
// evolve(m, t, beta); beta = inf drops the score term.

/// x <- x - eta (x + score_t(x) / beta), the Fokker-Planck transport step.
ParticleEnsemble forward_step(const ParticleEnsemble& e, const Measure& m, double t, double eta, double beta);
/// x <- x + eta (x + score_t(x) / beta), the optimal-transport denoising step.
ParticleEnsemble backward_step(const ParticleEnsemble& e, const Measure& m, double t, double eta, double beta);

/// Exact W2 between equal-size ensembles (sorted pairing). Unequal sizes are
/// compared on the finer midpoint quantile grid with linear interpolation.
double w2(const ParticleEnsemble& a, const ParticleEnsemble& b);

double gaussian_w2(double mean1, double sd1, double mean2, double sd2);

/// (W2^2 after - W2^2 before) / (eta W2^2 before) for one forward step of each
/// chain with its own score, starting from samples of evolve(m, t) and
/// evolve(nu, t) drawn with common random numbers.
double forward_rate(const Measure& m, const Measure& nu, double t, double eta, double beta, Index n,
                    std::uint64_t seed);

enum class Perturbation { shift, dilation };

struct BackwardRate {
    double rate;
    double realized_M;      // max d^2 / mean d^2 of the perturbation displacements
    double standard_error;  // Monte-Carlo error of rate over the particle sample
};

/// Perturbs a sample of evolve(m, t) by x + eps or mean + (1 + eps)(x - mean),
/// pushes both through backward_step with the score of evolve(m, t) and
/// reports the normalized change in W2^2. 0 < |eps| <= 0.05.
BackwardRate backward_rate(const Measure& m, Perturbation kind, double eps, double t, double eta, double beta,
                           Index n, std::uint64_t seed);

/// W2 between a sample of evolve(m, t) and its image under a forward step at
/// t followed by a backward step driven by the score at t + eta.
double roundtrip_residual(const Measure& m, double t, double eta, double beta, Index n, std::uint64_t seed);

struct ChainConfig {
    Index steps = 100;
    double eta = 0.01;
    double beta = 1.0;
    Index particles = 10000;
    std::uint64_t seed = 0;
    Measure mu = MixtureMeasure::dirac(0.0);
    Measure nu = MixtureMeasure::dirac(0.0);
    /// Restart the backward pass from N(0, 1/beta) draws instead of the
    /// diffused nu ensemble.
    bool equilibrium_restart = true;
};

struct ChainRow {
    Index k;
    double t;
    double w2_forward;   // W2(mu_t, nu_t) along the forward pass
    double w2_backward;  // W2(mu_t, partially denoised ensemble)
};

struct ChainReport {
    std::vector<ChainRow> rows;  // k = 0..steps
    ParticleEnsemble mu_initial;
    ParticleEnsemble nu_initial;
    ParticleEnsemble nu_diffused;  // after the forward pass
    ParticleEnsemble recovered;    // after the backward pass
    double roundtrip_residual;     // W2(mu_0, backward pass applied to a mu_T sample)
    double realized_M;             // between mu_T and the backward start
};

/// Forward pass: mu_t is sampled from evolve(mu, t) with a fixed stream; the
/// nu ensemble takes one exact OU transition and then Euler forward steps
/// with its own score. Backward pass: steps b_K .. b_1 driven by the mu
/// scores. Requires 0 < eta <= 0.1 and steps * eta <= 100.
ChainReport run_chain(const ChainConfig& cfg);

}  // namespace msd
