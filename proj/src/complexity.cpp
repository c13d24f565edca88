#include "msd/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gaussian.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace msd {

namespace {

void require_delta(double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw std::invalid_argument("delta must lie in [0, 1]");
    }
}

void require_covering(const SurvivalCurve& curve) {
    if (curve.u_grid.size() == 0 || curve.u_grid(curve.u_grid.size() - 1) < curve.max_localization) {
        throw std::invalid_argument("u grid stops before the largest observed localization");
    }
}

void require_delta_grid(const Eigen::ArrayXd& delta_grid) {
    if (delta_grid.size() == 0) throw std::invalid_argument("delta grid is empty");
    if (!(delta_grid > 0.0).all() || !(delta_grid <= 1.0).all()) {
        throw std::invalid_argument("delta grid must lie inside (0, 1]");
    }
}

void require_u_grid(const Eigen::ArrayXd& u) {
    if (u.size() < 2 || u(0) != 0.0) throw std::invalid_argument("u grid must start at 0 with >= 2 points");
    for (Index i = 1; i < u.size(); ++i) {
        if (!(u(i) > u(i - 1))) throw std::invalid_argument("u grid must be strictly increasing");
    }
}

double interpolate(const SurvivalCurve& curve, Index j, double x) {
    const double u0 = curve.u_grid(j), u1 = curve.u_grid(j + 1);
    const double s0 = curve.s_values(j), s1 = curve.s_values(j + 1);
    return s0 + (s1 - s0) * (x - u0) / (u1 - u0);
}

// Calls fn(lo, hi, s_lo, s_hi) for every piece of the interpolated curve
// right of c.
template <class Fn>
void for_each_piece_above(const SurvivalCurve& curve, double c, Fn&& fn) {
    const auto& u = curve.u_grid;
    for (Index j = 0; j + 1 < u.size(); ++j) {
        if (u(j + 1) <= c) continue;
        const double lo = std::max(u(j), c);
        fn(lo, u(j + 1), lo == u(j) ? curve.s_values(j) : interpolate(curve, j, lo), curve.s_values(j + 1));
    }
}

double zeta_denominator(double t) {
    if (!(t >= kMinTime)) throw std::invalid_argument("time below the minimum");
    return detail::one_minus_exp_m2t(t);
}

void require_M(double M) {
    if (!(M >= 1.0)) throw std::invalid_argument("perturbation class parameter M must be >= 1");
}

template <class Tail>
double zeta_from_tail(double t, double M, const Eigen::ArrayXd& delta_grid, Tail&& tail) {
    require_M(M);
    require_delta_grid(delta_grid);
    const double denom = zeta_denominator(t);
    if (std::isinf(M)) {
        double best = tail(0.0) == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < delta_grid.size(); ++i) {
            if (tail(delta_grid(i)) == 0.0) best = std::max(best, delta_grid(i));
        }
        return best / denom;
    }
    double best = -M * tail(0.0);
    for (Index i = 0; i < delta_grid.size(); ++i) {
        best = std::max(best, delta_grid(i) - M * tail(delta_grid(i)));
    }
    return best / denom;
}

}  // namespace

Eigen::ArrayXd arithmetic_grid(double start, double stop, double step) {
    if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0.0) || !std::isfinite(step)) {
        throw std::invalid_argument("grid needs finite start/stop and a positive step");
    }
    if (stop < start) throw std::invalid_argument("grid stop is below its start");
    const auto count = static_cast<Index>(std::floor((stop - start) / step + 0.5)) + 1;
    if (count > 100000000) throw std::invalid_argument("grid has too many points");
    Eigen::ArrayXd out(count);
    for (Index i = 0; i < count; ++i) out(i) = start + static_cast<double>(i) * step;
    return out;
}

Eigen::ArrayXd default_u_grid(double max_localization) {
    const double top = std::max(2.0, max_localization);
    auto count = static_cast<Index>(std::ceil(top / kDefaultUStep)) + 1;
    if (static_cast<double>(count - 1) * kDefaultUStep < top) ++count;
    Eigen::ArrayXd out(count);
    for (Index i = 0; i < count; ++i) out(i) = static_cast<double>(i) * kDefaultUStep;
    return out;
}

Eigen::ArrayXd default_delta_grid() {
    Eigen::ArrayXd out(500);
    for (Index i = 0; i < out.size(); ++i) out(i) = static_cast<double>(i + 1) * kDefaultDeltaStep;
    return out;
}

Eigen::ArrayXd localization_samples(const Measure& m, double r, Index n, std::uint64_t seed, std::uint64_t stream) {
    const Eigen::ArrayXd y = sample_smoothed(m, r, n, seed, stream);
    Eigen::ArrayXd L(n);
    detail::parallel_chunks(n, [&](Index begin, Index end) {
        for (Index i = begin; i < end; ++i) {
            try {
                L(i) = localization(m, r, y(i));
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "localization failed at sample y = " << y(i) << " (r = " << r << "): " << e.what();
                throw std::runtime_error(msg.str());
            }
        }
    });
    std::sort(L.begin(), L.end());
    return L;
}

SurvivalCurve survival_curve(const Measure& m, double r, Index n, std::uint64_t seed, const Eigen::ArrayXd& u_grid,
                             std::uint64_t stream) {
    if (n < 10000) throw std::invalid_argument("survival curve needs at least 10^4 samples");
    if (u_grid.size() > 0) require_u_grid(u_grid);
    const Eigen::ArrayXd L = localization_samples(m, r, n, seed, stream);

    SurvivalCurve curve;
    curve.snr = r;
    curve.n_samples = n;
    curve.seed = seed;
    curve.max_localization = L(n - 1);
    curve.u_grid = u_grid.size() > 0 ? u_grid : default_u_grid(curve.max_localization);
    curve.s_values.resize(curve.u_grid.size());
    for (Index i = 0; i < curve.u_grid.size(); ++i) {
        const auto above = L.end() - std::upper_bound(L.begin(), L.end(), curve.u_grid(i));
        curve.s_values(i) = static_cast<double>(above) / static_cast<double>(n);
    }
    return curve;
}

SurvivalBand survival_band(const SurvivalCurve& curve, double z) {
    const Eigen::ArrayXd& s = curve.s_values;
    const Eigen::ArrayXd half = z * (s * (1.0 - s) / static_cast<double>(curve.n_samples)).sqrt();
    return {(s - half).max(0.0), (s + half).min(1.0)};
}

double survival_at(const SurvivalCurve& curve, double u) {
    const auto& grid = curve.u_grid;
    if (!(u >= 0.0)) throw std::invalid_argument("threshold u must be non-negative");
    if (u >= grid(grid.size() - 1)) return u == grid(grid.size() - 1) ? curve.s_values(grid.size() - 1) : 0.0;
    const auto j = static_cast<Index>(std::upper_bound(grid.begin(), grid.end(), u) - grid.begin()) - 1;
    return grid(j) == u ? curve.s_values(j) : interpolate(curve, j, u);
}

double integrated_tail(const SurvivalCurve& curve, double delta) {
    require_delta(delta);
    require_covering(curve);
    double area = 0.0;
    for_each_piece_above(curve, 1.0 - delta, [&](double lo, double hi, double s_lo, double s_hi) {
        area += 0.5 * (hi - lo) * (s_lo + s_hi);
    });
    return area;
}

double integrated_tail_error(const SurvivalCurve& curve, double delta) {
    const double h = integrated_tail(curve, delta);
    const double c = 1.0 - delta;
    double second = 0.0;
    // (u - c) s(u) is quadratic on each piece, so Simpson's rule is exact.
    for_each_piece_above(curve, c, [&](double lo, double hi, double s_lo, double s_hi) {
        const double mid = 0.5 * (lo + hi);
        const double f_lo = (lo - c) * s_lo;
        const double f_mid = (mid - c) * 0.5 * (s_lo + s_hi);
        const double f_hi = (hi - c) * s_hi;
        second += 2.0 * (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
    });
    return std::sqrt(std::max(0.0, second - h * h) / static_cast<double>(curve.n_samples));
}

Eigen::ArrayXd m_curve(const SurvivalCurve& curve, const Eigen::ArrayXd& delta_grid) {
    require_delta_grid(delta_grid);
    Eigen::ArrayXd out(delta_grid.size());
    for (Index i = 0; i < delta_grid.size(); ++i) out(i) = integrated_tail(curve, delta_grid(i)) / delta_grid(i);
    return out;
}

MinimizedM minimize_m(const SurvivalCurve& curve, const Eigen::ArrayXd& delta_grid) {
    if (delta_grid.size() < 100) throw std::invalid_argument("minimizing m needs at least 100 grid points");
    const Eigen::ArrayXd m = m_curve(curve, delta_grid);
    const double lowest = m.minCoeff();
    const double tie = std::max(1e-9 * std::abs(lowest), 1e-15);
    MinimizedM best{lowest, -1.0};
    for (Index i = 0; i < m.size(); ++i) {
        if (m(i) <= lowest + tie && delta_grid(i) > best.delta_star) best.delta_star = delta_grid(i);
    }
    return best;
}

double zeta_star(const SurvivalCurve& curve, double t, double M, const Eigen::ArrayXd& delta_grid) {
    return zeta_from_tail(t, M, delta_grid, [&](double delta) { return integrated_tail(curve, delta); });
}

double zeta_star(const Measure& m, double t, double M, double beta, Index n, std::uint64_t seed,
                 const Eigen::ArrayXd& delta_grid) {
    require_M(M);
    const auto scale = snr_schedule(t, beta);
    return zeta_star(survival_curve(m, scale.r, n, seed), t, M, delta_grid);
}

std::vector<SnrRow> complexity_profile(const Measure& m, const Eigen::ArrayXd& snr_grid, Index n, std::uint64_t seed,
                                       const Eigen::ArrayXd& delta_grid) {
    std::vector<SnrRow> rows;
    for (Index i = 0; i < snr_grid.size(); ++i) {
        const auto curve = survival_curve(m, snr_grid(i), n, seed, {}, static_cast<std::uint64_t>(i));
        const auto best = minimize_m(curve, delta_grid);
        rows.push_back({snr_grid(i), best.m_star, best.delta_star});
    }
    std::sort(rows.begin(), rows.end(), [](const SnrRow& a, const SnrRow& b) { return a.r < b.r; });
    return rows;
}

std::vector<TimeRow> zeta_profile(const Measure& m, const Eigen::ArrayXd& t_grid, const std::vector<double>& M_list,
                                  double beta, Index n, std::uint64_t seed, const Eigen::ArrayXd& delta_grid) {
    if (M_list.empty()) throw std::invalid_argument("M list is empty");
    for (double M : M_list) require_M(M);
    std::vector<TimeRow> rows;
    for (Index i = 0; i < t_grid.size(); ++i) {
        const auto scale = snr_schedule(t_grid(i), beta);
        const auto curve = survival_curve(m, scale.r, n, seed, {}, static_cast<std::uint64_t>(i));
        for (double M : M_list) {
            rows.push_back({t_grid(i), scale.r, M, zeta_star(curve, t_grid(i), M, delta_grid)});
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const TimeRow& a, const TimeRow& b) { return a.t < b.t; });
    return rows;
}

double survival_two_point_exact(double a, double u) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("r mu must be positive");
    if (!(u >= 0.0)) throw std::invalid_argument("threshold u must be non-negative");
    if (u >= a * a) return 0.0;
    if (u == 0.0) return 1.0;
    // L(y) > u  <=>  |y| < g with tanh(a g) = sqrt(1 - u / a^2).
    const double g = std::atanh(std::sqrt(1.0 - u / (a * a))) / a;
    return detail::normal_cdf(g + a) + detail::normal_cdf(g - a) - 1.0;
}

double integrated_tail_two_point_exact(double a, double delta) {
    require_delta(delta);
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("r mu must be positive");
    const double c = 1.0 - delta;
    if (c >= a * a) return 0.0;
    // h = E[(L - c)_+] = 2 int_0^g (a^2 sech^2(a y) - c) p(y) dy with L(g) = c.
    const double g = c > 0.0 ? std::atanh(std::sqrt(1.0 - c / (a * a))) / a : INFINITY;
    const double top = std::min(g, a + 40.0);
    const double max_width = 0.25 / std::max(1.0, a);
    const int panels = std::max(16, static_cast<int>(std::ceil(top / max_width)));
    const double width = top / panels;
    const auto& rule = detail::gauss_legendre_32();
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double centre = (p + 0.5) * width;
        for (Index k = 0; k < rule.nodes.size(); ++k) {
            const double y = centre + 0.5 * width * rule.nodes(k);
            const double sech = 1.0 / std::cosh(a * y);
            const double density = 0.5 * (detail::phi(y - a) + detail::phi(y + a));
            total += 0.5 * width * rule.weights(k) * 2.0 * (a * a * sech * sech - c) * density;
        }
    }
    return std::max(0.0, total);
}

double zeta_star_two_point_exact(double mu, double t, double M, double beta, const Eigen::ArrayXd& delta_grid) {
    const double a = snr_schedule(t, beta).r * std::abs(mu);
    return zeta_from_tail(t, M, delta_grid, [&](double delta) { return integrated_tail_two_point_exact(a, delta); });
}

}  // namespace msd
