#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "msd/measures.hpp"

using namespace msd;

namespace {

const Measure two_point = MixtureMeasure({{0.5, -1.0, 0.0}, {0.5, 1.0, 0.0}});
const Measure point_plus_gaussian = MixtureMeasure({{0.5, 0.0, 0.0}, {0.5, 0.0, 1.0}});
const Measure four_mixture = MixtureMeasure({{0.1, -4.0, 1.0}, {0.2, -2.0, 0.25}, {0.4, 2.0, 0.25}, {0.3, 4.0, 1.0}});

struct Named {
    std::string name;
    Measure m;
};

std::vector<Named> families() {
    return {
        {"dirac", MixtureMeasure::dirac(0.0)},
        {"dirac shifted", MixtureMeasure::dirac(1.7)},
        {"normal", MixtureMeasure::normal(0.0, 1.0)},
        {"normal wide", MixtureMeasure::normal(-0.5, 2.0)},
        {"uniform", UniformMeasure(-1.0, 1.0)},
        {"uniform offset", UniformMeasure(0.5, 3.0)},
        {"two-point", two_point},
        {"point+gaussian", point_plus_gaussian},
        {"four-mixture", four_mixture},
        {"evolved uniform", evolve(UniformMeasure(-1.0, 1.0), 0.3, 1.0)},
    };
}

double log_p(const Measure& m, double r, double y) { return log_smoothed_density(m, r, y); }

}  // namespace

TEST_CASE("smoothed density reference values") {
    CHECK(smoothed_density(MixtureMeasure::normal(0.0, 1.0), 0.0, 0.0) == doctest::Approx(0.398942).epsilon(1e-6));
    CHECK(smoothed_density(MixtureMeasure::normal(0.0, 1.0), 1.0, 0.0) == doctest::Approx(0.282095).epsilon(1e-6));
    CHECK(smoothed_density(two_point, 1.5, 0.0) == doctest::Approx(0.129518).epsilon(1e-6));
    // Uniform at r = 0 is the standard normal.
    CHECK(smoothed_density(UniformMeasure(-1.0, 1.0), 0.0, 0.3) == doctest::Approx(0.381387815460524).epsilon(1e-14));
}

TEST_CASE("score, curvature, localization and posterior mean reference values") {
    const Measure dirac = MixtureMeasure::dirac(0.0);
    CHECK(score(dirac, 1.0, 2.0) == doctest::Approx(-2.0));
    CHECK(score(two_point, 1.0, 1.0) == doctest::Approx(-1.0 + std::tanh(1.0)).epsilon(1e-12));
    CHECK(score(two_point, 1.0, 1.0) == doctest::Approx(-0.238406).epsilon(1e-6));
    CHECK(curvature(dirac, 2.3, -0.7) == -1.0);
    CHECK(curvature(two_point, 1.5, 0.0) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(localization(dirac, 3.0, 5.0) == 0.0);
    CHECK(localization(two_point, 1.5, 0.0) == doctest::Approx(2.25).epsilon(1e-12));
    for (double y : {-3.0, 0.0, 0.4, 8.0}) {
        CHECK(localization(MixtureMeasure::normal(0.0, 1.0), 2.0, y) == doctest::Approx(0.8).epsilon(1e-12));
    }
    CHECK(posterior_mean(dirac, 1.0, 3.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(posterior_mean(two_point, 1.0, 1.0) == doctest::Approx(0.761594).epsilon(1e-6));
}

TEST_CASE("normal curvature is constant") {
    for (double var : {0.25, 1.0, 3.0}) {
        for (double r : {0.0, 0.5, 2.0}) {
            for (double y : {-4.0, 0.0, 1.5}) {
                CHECK(curvature(MixtureMeasure::normal(0.3, var), r, y) ==
                      doctest::Approx(-1.0 / (var * r * r + 1.0)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("symmetric measures have zero score and posterior mean at the origin") {
    for (const Measure& m : {two_point, point_plus_gaussian, Measure(UniformMeasure(-1.0, 1.0)),
                             Measure(MixtureMeasure::normal(0.0, 2.0))}) {
        for (double r : {0.0, 0.7, 3.0}) {
            CHECK(std::abs(score(m, r, 0.0)) < 1e-14);
            CHECK(std::abs(posterior_mean(m, r, 0.0)) < 1e-14);
        }
    }
}

// Reference values from adaptive quadrature at 30 significant digits.
TEST_CASE("uniform smoothed quantities match high-precision quadrature") {
    struct Row {
        double r, y, density, score, loc;
    };
    const Row rows[] = {
        {1.5, 0.7, 0.25808038463436824, -0.32834338323879153, 0.49206032102064394},
        {3.0, 2.9, 0.089971305909920192, -0.73533173057544847, 0.38575395051496197},
        {0.5, -1.2, 0.19739818946452998, 1.105404545916988, 0.075420506989307735},
        {2.0, 9.0, 3.199531359714587e-13, -7.1375456132265027, 0.018261911696619901},
    };
    const Measure u = UniformMeasure(-1.0, 1.0);
    for (const auto& row : rows) {
        CAPTURE(row.r);
        CAPTURE(row.y);
        const auto p = smoothed_point(u, row.r, row.y);
        CHECK(std::exp(p.log_density) == doctest::Approx(row.density).epsilon(1e-10));
        CHECK(p.score == doctest::Approx(row.score).epsilon(1e-10));
        CHECK(p.localization == doctest::Approx(row.loc).epsilon(1e-9));
    }
}

TEST_CASE("four-component mixture matches high-precision values") {
    struct Row {
        double r, y, density, score, loc;
    };
    const Row rows[] = {
        {1.5, 0.3, 0.014840574454277854, 1.2102078999570688, 2.0922506725344607},
        {0.7, -2.0, 0.091434513413942558, 0.25067482816329512, 0.48594120084493765},
        {3.0, 7.5, 0.076367665269674145, -0.29741387743006245, 0.85237216272992944},
    };
    for (const auto& row : rows) {
        const auto p = smoothed_point(four_mixture, row.r, row.y);
        CHECK(std::exp(p.log_density) == doctest::Approx(row.density).epsilon(1e-12));
        CHECK(p.score == doctest::Approx(row.score).epsilon(1e-12));
        CHECK(p.localization == doctest::Approx(row.loc).epsilon(1e-12));
    }
}

TEST_CASE("score is the derivative of the log density") {
    constexpr double h = 1e-5;
    for (const auto& [name, m] : families()) {
        for (double r : {0.5, 1.0, 2.0}) {
            for (int i = -100; i <= 100; ++i) {
                const double y = 0.1 * i;
                const double fd = (log_p(m, r, y + h) - log_p(m, r, y - h)) / (2.0 * h);
                INFO(name << " r=" << r << " y=" << y);
                CHECK(std::abs(score(m, r, y) - fd) <= 1e-6);
            }
        }
    }
}

TEST_CASE("curvature is the second derivative of the log density") {
    constexpr double h = 1e-4;
    for (const auto& [name, m] : families()) {
        for (double r : {0.5, 1.0, 2.0}) {
            for (int i = -100; i <= 100; ++i) {
                const double y = 0.1 * i;
                const double fd = (log_p(m, r, y + h) - 2.0 * log_p(m, r, y) + log_p(m, r, y - h)) / (h * h);
                INFO(name << " r=" << r << " y=" << y);
                CHECK(std::abs(curvature(m, r, y) - fd) <= 1e-5);
            }
        }
    }
}

TEST_CASE("localization is non-negative and bounded by 1 for log-concave measures") {
    const std::vector<Measure> log_concave{MixtureMeasure::dirac(0.0), MixtureMeasure::normal(0.0, 0.5),
                                           MixtureMeasure::normal(0.0, 4.0), UniformMeasure(-1.0, 1.0)};
    for (double r : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        for (int i = -150; i <= 150; ++i) {
            const double y = 0.1 * i;
            for (const auto& [name, m] : families()) {
                INFO(name << " r=" << r << " y=" << y);
                CHECK(localization(m, r, y) >= 0.0);
            }
            for (const auto& m : log_concave) CHECK(localization(m, r, y) <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("mixture tails stay finite far from the atoms") {
    for (double y : {-1e3, -60.0, 45.0, 1e3}) {
        const auto p = smoothed_point(two_point, 1.0, y);
        CHECK(std::isfinite(p.log_density));
        CHECK(p.score == doctest::Approx(-(y - (y > 0 ? 1.0 : -1.0))).epsilon(1e-12));
        CHECK(p.localization >= 0.0);
    }
    // Between-component variance keeps relative accuracy: L = 4 a^2 w (1 - w).
    const double a = 3.0, y = 4.0;
    const double w = 1.0 / (1.0 + std::exp(2.0 * a * y));
    CHECK(localization(two_point, a, y) == doctest::Approx(4.0 * a * a * w * (1.0 - w)).epsilon(1e-9));
}

TEST_CASE("average curvature identity and mean localization") {
    constexpr Index n = 100000;
    for (const auto& [name, m] : families()) {
        for (double r : {0.7, 1.5, 3.0}) {
            const Eigen::ArrayXd y = sample_smoothed(m, r, n, 11, 0);
            Eigen::ArrayXd identity(n), loc(n);
            for (Index i = 0; i < n; ++i) {
                const auto p = smoothed_point(m, r, y(i));
                identity(i) = p.localization - 1.0 + p.score * p.score;
                loc(i) = p.localization;
            }
            const auto se = [&](const Eigen::ArrayXd& v) {
                return std::sqrt((v - v.mean()).square().sum() / (n - 1.0) / n);
            };
            INFO(name << " r=" << r);
            CHECK(std::abs(identity.mean()) <= 3.0 * se(identity) + 1e-12);
            CHECK(loc.mean() <= 1.0 + 3.0 * se(loc));
        }
    }
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(score(two_point, -0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(score(two_point, 1.0, NAN), std::invalid_argument);
    CHECK_THROWS_AS(score(two_point, 1.0, INFINITY), std::invalid_argument);
    CHECK_THROWS_AS(MixtureMeasure({{0.6, 0.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(MixtureMeasure({{0.5, 0.0, -1.0}, {0.5, 0.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(MixtureMeasure({{1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(MixtureMeasure(std::vector<MixtureComponent>{}), std::invalid_argument);
    CHECK_THROWS_AS(UniformMeasure(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ScaledNoised(UniformMeasure(0.0, 1.0), 1.5, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(ScaledNoised(UniformMeasure(0.0, 1.0), 0.5, -0.1), std::invalid_argument);
    // Weights within the 1e-9 tolerance are accepted as given.
    CHECK_NOTHROW(MixtureMeasure({{0.5, 0.0, 1.0}, {0.5 + 5e-10, 1.0, 1.0}}));
}

TEST_CASE("far-tail evaluation of the uniform is reported") {
    const Measure u = UniformMeasure(-1.0, 1.0);
    try {
        (void)score(u, 1.0, 60.0);
        FAIL("expected an error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()) == "far-tail evaluation");
    }
    CHECK(std::isfinite(score(u, 1.0, 30.0)));
}

TEST_CASE("snr schedule") {
    const auto half_log2 = snr_schedule(0.5 * std::log(2.0), 1.0);
    CHECK(half_log2.r == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(half_log2.s == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(snr_schedule(std::log(2.0), 1.0).r == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
    const auto late = snr_schedule(30.0, 1.0);
    CHECK(late.r < 1e-12);
    CHECK(late.s == doctest::Approx(1.0));
    const auto hot = snr_schedule(0.5, 4.0);
    CHECK(hot.r == doctest::Approx(std::exp(-0.5) * hot.s).epsilon(1e-15));
    CHECK(hot.s == doctest::Approx(1.0 / std::sqrt((1.0 - std::exp(-1.0)) / 4.0)).epsilon(1e-14));
    CHECK_THROWS_AS(snr_schedule(0.5 * kMinTime, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(snr_schedule(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("sampling determinism and prefix consistency") {
    for (const auto& [name, m] : families()) {
        const Eigen::ArrayXd a = sample(m, 1000, 42, 3);
        const Eigen::ArrayXd b = sample(m, 1000, 42, 3);
        const Eigen::ArrayXd prefix = sample(m, 10, 42, 3);
        CHECK((a == b).all());
        CHECK((prefix == a.head(10)).all());
        const Eigen::ArrayXd other = sample(m, 1000, 42, 4);
        if (name.rfind("dirac", 0) != 0) CHECK(!(other == a).all());
        const Eigen::ArrayXd ys = sample_smoothed(m, 1.3, 50, 42, 3);
        CHECK((ys.head(5) == sample_smoothed(m, 1.3, 5, 42, 3)).all());
    }
    CHECK((sample(MixtureMeasure::dirac(0.0), 3, 9) == 0.0).all());
    CHECK_THROWS_AS(sample(two_point, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_smoothed(two_point, 1.0, 0, 1), std::invalid_argument);
}

TEST_CASE("sample moments") {
    const Eigen::ArrayXd u = sample(UniformMeasure(-1.0, 1.0), 1000000, 5);
    CHECK(std::abs(u.mean()) < 0.003);
    CHECK((u >= -1.0).all());
    CHECK((u <= 1.0).all());
    const Eigen::ArrayXd g = sample(MixtureMeasure::normal(2.0, 4.0), 1000000, 5);
    const double var = (g - g.mean()).square().sum() / (g.size() - 1.0);
    CHECK(var > 3.97);
    CHECK(var < 4.03);
    const Eigen::ArrayXd y = sample_smoothed(MixtureMeasure::normal(0.0, 1.0), 1.0, 1000000, 5);
    const double yvar = (y - y.mean()).square().sum() / (y.size() - 1.0);
    CHECK(yvar == doctest::Approx(2.0).epsilon(0.01));
    const Eigen::ArrayXd z = sample_smoothed(MixtureMeasure::dirac(0.0), 2.0, 1000000, 5);
    CHECK((z - z.mean()).square().mean() == doctest::Approx(1.0).epsilon(0.01));
    const Eigen::ArrayXd tp = sample(two_point, 100000, 5);
    CHECK(((tp == 1.0) || (tp == -1.0)).all());
    CHECK(std::abs((tp == 1.0).cast<double>().mean() - 0.5) < 0.01);
}

TEST_CASE("evolve closed forms") {
    const Measure eq_m = evolve(MixtureMeasure::dirac(0.0), 40.0, 1.0);
    const auto& eq = std::get<MixtureMeasure>(eq_m);
    CHECK(eq.means()(0) == doctest::Approx(0.0));
    CHECK(eq.variances()(0) == doctest::Approx(1.0));

    const double t = 0.37;
    const Measure g_m = evolve(MixtureMeasure::normal(1.5, 0.2), t, 1.0);
    const auto& g = std::get<MixtureMeasure>(g_m);
    CHECK(g.means()(0) == doctest::Approx(std::exp(-t) * 1.5).epsilon(1e-15));
    CHECK(g.variances()(0) ==
          doctest::Approx(std::exp(-2 * t) * 0.2 + 1.0 - std::exp(-2 * t)).epsilon(1e-15));

    const Measure tp_m = evolve(two_point, std::log(2.0), 1.0);
    const auto& tp = std::get<MixtureMeasure>(tp_m);
    CHECK(tp.means()(0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(tp.means()(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tp.variances()(0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(tp.weights()(1) == 0.5);

    const Measure sn_m = evolve(UniformMeasure(-1.0, 1.0), t, 2.0);
    const auto& sn = std::get<ScaledNoised>(sn_m);
    CHECK(sn.scale() == doctest::Approx(std::exp(-t)));
    CHECK(sn.noise() == doctest::Approx(std::sqrt((1.0 - std::exp(-2 * t)) / 2.0)));

    const auto same = evolve(two_point, 0.0, 1.0);
    CHECK((std::get<MixtureMeasure>(same).means() == std::get<MixtureMeasure>(two_point).means()).all());

    const Measure frozen_m = evolve(MixtureMeasure::normal(1.0, 2.0), 0.5, INFINITY);
    const auto& frozen = std::get<MixtureMeasure>(frozen_m);
    CHECK(frozen.variances()(0) == doctest::Approx(2.0 * std::exp(-1.0)));

    CHECK_THROWS_AS(evolve(two_point, -0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(evolve(two_point, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("evolve is a semigroup") {
    const double t1 = 0.23, t2 = 0.61;
    for (double beta : {0.5, 1.0, 3.0}) {
        const auto twice = evolve(evolve(four_mixture, t1, beta), t2, beta);
        const auto once = evolve(four_mixture, t1 + t2, beta);
        const auto& a = std::get<MixtureMeasure>(twice);
        const auto& b = std::get<MixtureMeasure>(once);
        CHECK((a.weights() == b.weights()).all());
        CHECK(((a.means() - b.means()).abs() <= 1e-14).all());
        CHECK(((a.variances() - b.variances()).abs() <= 1e-14).all());

        const Measure u2_m = evolve(evolve(UniformMeasure(0.0, 2.0), t1, beta), t2, beta);
    const auto& u2 = std::get<ScaledNoised>(u2_m);
        const Measure u1_m = evolve(UniformMeasure(0.0, 2.0), t1 + t2, beta);
    const auto& u1 = std::get<ScaledNoised>(u1_m);
        CHECK(u2.scale() == doctest::Approx(u1.scale()).epsilon(1e-14));
        CHECK(u2.noise() == doctest::Approx(u1.noise()).epsilon(1e-14));
        CHECK(std::holds_alternative<UniformMeasure>(u2.base()));
    }
}

TEST_CASE("score at time") {
    const Measure normal = MixtureMeasure::normal(0.0, 1.0);
    for (double t : {1e-3, 0.2, 1.0, 5.0}) {
        for (double x : {-2.0, 0.0, 0.7}) {
            CHECK(score_at_time(normal, t, 1.0, x) == doctest::Approx(-x).scale(1.0).epsilon(1e-12));
            CHECK(score_at_time(MixtureMeasure::dirac(0.0), t, 1.0, x) ==
                  doctest::Approx(-x / (1.0 - std::exp(-2.0 * t))).scale(1.0).epsilon(1e-12));
            CHECK(std::abs(score_at_time(two_point, t, 1.0, 0.0)) < 1e-14);
        }
    }
    CHECK_THROWS_AS(score_at_time(two_point, 0.5 * kMinTime, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(score_at_time(two_point, 0.5, INFINITY, 0.0), std::invalid_argument);
}

TEST_CASE("score at time: evolve route and rescaled smoothed score agree") {
    for (const Measure& m : {two_point, point_plus_gaussian, four_mixture, Measure(MixtureMeasure::normal(1.0, 0.3))}) {
        for (double beta : {0.5, 1.0, 2.0}) {
            for (double t : {1e-4, 0.05, 0.3, 1.0, 4.0}) {
                const auto sc = snr_schedule(t, beta);
                for (int i = -30; i <= 30; ++i) {
                    const double x = 0.2 * i;
                    const double via_evolve = score_at_time(m, t, beta, x);
                    const double via_snr = sc.s * score(m, sc.r, sc.s * x);
                    CHECK(std::abs(via_evolve - via_snr) <= 1e-9 * std::max(1.0, std::abs(via_evolve)));
                }
            }
        }
    }
}

TEST_CASE("evolved uniform score matches high-precision differentiation") {
    const Measure u = UniformMeasure(-1.0, 1.0);
    CHECK(score_at_time(u, 0.3, 1.0, 0.4) == doctest::Approx(-0.58796276525228615).epsilon(1e-10));
    CHECK(score_at_time(u, 0.3, 1.0, 1.3) == doctest::Approx(-2.056398259944586).epsilon(1e-10));
    CHECK(density_score(evolve(u, 0.3, 1.0), 0.4) == doctest::Approx(-0.58796276525228615).epsilon(1e-10));
}

TEST_CASE("density score needs a density") {
    CHECK_THROWS_AS(density_score(two_point, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(density_score(UniformMeasure(-1.0, 1.0), 0.3), std::invalid_argument);
    CHECK(density_score(MixtureMeasure::normal(1.0, 4.0), 3.0) == doctest::Approx(-0.5));
}
