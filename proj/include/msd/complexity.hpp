#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "msd/measures.hpp"

namespace msd {

/// Empirical survival function s_r(u) = P(L_r(Y_r) > u) on a threshold grid.
struct SurvivalCurve {
    double snr = 0.0;
    Eigen::ArrayXd u_grid;    // strictly increasing, starts at 0
    Eigen::ArrayXd s_values;  // fraction of samples with L > u
    Index n_samples = 0;
    std::uint64_t seed = 0;
    double max_localization = 0.0;
};

inline constexpr double kDefaultUStep = 0.005;
inline constexpr double kDefaultDeltaStep = 0.002;

/// 0, step, ... up to the first point >= max(2, max_localization).
Eigen::ArrayXd default_u_grid(double max_localization);
/// 0.002, 0.004, ..., 1.
Eigen::ArrayXd default_delta_grid();
/// start, start + step, ... while <= stop (with a half-step tolerance on the
/// end point). Points are start + i * step so no error accumulates.
Eigen::ArrayXd arithmetic_grid(double start, double stop, double step);

/// Sorted localization values L_r(Y_i) for n draws of Y_r.
Eigen::ArrayXd localization_samples(const Measure& m, double r, Index n, std::uint64_t seed,
                                    std::uint64_t stream = 0);

/// Requires n >= 10^4. An empty u_grid selects default_u_grid. The stream
/// index picks an independent sample for the same seed.
SurvivalCurve survival_curve(const Measure& m, double r, Index n, std::uint64_t seed,
                             const Eigen::ArrayXd& u_grid = {}, std::uint64_t stream = 0);

/// Normal-approximation binomial band s +- z sqrt(s (1 - s) / n), clipped to [0, 1].
struct SurvivalBand {
    Eigen::ArrayXd lower;
    Eigen::ArrayXd upper;
};
SurvivalBand survival_band(const SurvivalCurve& curve, double z = 1.96);

/// Linear interpolation of the curve at u; 0 past the end of the grid.
double survival_at(const SurvivalCurve& curve, double u);

/// h(delta, r): integral of the linearly interpolated survival curve from
/// 1 - delta to the end of the grid. Throws if delta is outside [0, 1] or the
/// grid stops short of max_localization.
double integrated_tail(const SurvivalCurve& curve, double delta);

/// Monte-Carlo standard error of integrated_tail, from the second moment
/// E[(L - c)_+^2] = 2 int_c (u - c) s(u) du of the same curve.
double integrated_tail_error(const SurvivalCurve& curve, double delta);

/// m(delta) = h(delta) / delta on a grid inside (0, 1].
Eigen::ArrayXd m_curve(const SurvivalCurve& curve, const Eigen::ArrayXd& delta_grid);

struct MinimizedM {
    double m_star;
    double delta_star;  // largest grid point attaining the minimum
};

/// Needs at least 100 grid points. Values within a relative 1e-9 of the
/// minimum count as ties and the largest delta wins.
MinimizedM minimize_m(const SurvivalCurve& curve, const Eigen::ArrayXd& delta_grid);

inline constexpr double kInfiniteM = std::numeric_limits<double>::infinity();

/// sup over {0} and delta_grid of (delta - M h(delta)) / (1 - e^{-2t}). For
/// M = inf the supremum is taken over deltas with h = 0 exactly, and -inf is
/// returned if there are none. M must be >= 1.
double zeta_star(const SurvivalCurve& curve, double t, double M, const Eigen::ArrayXd& delta_grid);

/// Convenience form that draws its own curve at r(t).
double zeta_star(const Measure& m, double t, double M, double beta, Index n, std::uint64_t seed,
                 const Eigen::ArrayXd& delta_grid);

struct SnrRow {
    double r;
    double m_star;
    double delta_star;
};

struct TimeRow {
    double t;
    double r;
    double M;
    double zeta_star;
};

/// (m*, delta*) per SNR; grid point i uses sample stream i.
std::vector<SnrRow> complexity_profile(const Measure& m, const Eigen::ArrayXd& snr_grid, Index n,
                                       std::uint64_t seed, const Eigen::ArrayXd& delta_grid);

/// zeta*_M(t) for every (t, M); one curve per t (stream = index of t) is
/// shared by all M.
std::vector<TimeRow> zeta_profile(const Measure& m, const Eigen::ArrayXd& t_grid,
                                  const std::vector<double>& M_list, double beta, Index n,
                                  std::uint64_t seed, const Eigen::ArrayXd& delta_grid);

// Closed forms for the symmetric two-point measure 1/2 delta_{-mu} + 1/2 delta_{mu}
// observed at SNR r, written in terms of a = r mu > 0. There L(y) = a^2 sech^2(a y).

double survival_two_point_exact(double a, double u);
double integrated_tail_two_point_exact(double a, double delta);
/// zeta*_M(t) from the exact tail, on the same {0} and delta_grid support as zeta_star.
double zeta_star_two_point_exact(double mu, double t, double M, double beta, const Eigen::ArrayXd& delta_grid);

}  // namespace msd
