#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "evlab/dynamics.hpp"
#include "evlab/evt.hpp"
#include "evlab/observables.hpp"
#include "evlab/rng.hpp"
#include "evlab/stats.hpp"

using namespace evlab;
using namespace evlab::evt;

namespace {

BlockMaximaSeries series_of(std::vector<double> values, const char* tag = "g1") {
    BlockMaximaSeries bm;
    bm.values = std::move(values);
    bm.block_length = 1;
    bm.observable_tag = tag;
    return bm;
}

}  // namespace

TEST_CASE("block maxima basics") {
    const std::vector<double> xs{1, 5, 2, 4, 3, 6};
    auto bm = block_maxima(xs, 3);
    REQUIRE(bm.values.size() == 2);
    CHECK(bm.values[0] == 5);
    CHECK(bm.values[1] == 6);
}

TEST_CASE("block maxima drops the trailing partial block") {
    const std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 9, 8, 0, 42};
    auto bm = block_maxima(xs, 4);
    REQUIRE(bm.values.size() == 2);
    CHECK(bm.values[1] == 9);
}

TEST_CASE("block maxima rejects non-finite input and short series") {
    std::vector<double> xs(10, 1.0);
    xs[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS((void)block_maxima(xs, 5), Error);
    CHECK_THROWS_AS((void)block_maxima(std::vector<double>{1.0, 2.0, 3.0}, 2), Error);
}

TEST_CASE("constant series flagged degenerate") {
    std::vector<double> xs(100, 7.5);
    auto bm = block_maxima(xs, 10);
    CHECK(is_degenerate(bm.values));
}

TEST_CASE("exponential block maxima have Gumbel mean log n + gamma") {
    // oracle: direct simulation of 1e6 standard exponentials
    Rng rng(2024);
    std::vector<double> xs(1000000);
    for (auto& x : xs) x = -std::log(rng.uniform01_open());
    auto bm = block_maxima(xs, 1000);
    REQUIRE(bm.values.size() == 1000);
    auto ms = stats::mean_sd(bm.values);
    CHECK(std::abs(ms.mean - (std::log(1000.0) + 0.5772156649)) < 0.15);
}

TEST_CASE("gev cdf/quantile round trip across shapes") {
    for (double kappa : {-0.4, -0.1, 0.0, 0.2, 0.7}) {
        for (double u : {0.01, 0.2, 0.5, 0.8, 0.99}) {
            const double x = gev_quantile(u, kappa, 1.3, -0.4);
            CHECK(gev_cdf(x, kappa, 1.3, -0.4) == doctest::Approx(u).epsilon(1e-10));
        }
    }
}

TEST_CASE("gev MLE recovers Gumbel parameters") {
    Rng rng(501);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = -std::log(-std::log(rng.uniform01_open()));
    auto fit = fit_gev_mle(series_of(std::move(xs)));
    CHECK(std::abs(fit.kappa) < 0.05);
    CHECK(std::abs(fit.sigma - 1.0) < 0.05);
    CHECK(std::abs(fit.nu) < 0.05);
    // intervals should bracket the truth
    CHECK(fit.kappa_ci.lo < 0.0);
    CHECK(fit.kappa_ci.hi > 0.0);
    CHECK(fit.sigma_ci.lo < 1.0);
    CHECK(fit.sigma_ci.hi > 1.0);
}

TEST_CASE("gev MLE recovers a Frechet shape via the type-2 tail") {
    // tau_2(y) = y^-alpha with alpha = 2: F(y) = exp(-y^-2)
    Rng rng(502);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = 1.0 / std::sqrt(-std::log(rng.uniform01_open()));
    auto fit = fit_gev_mle(series_of(std::move(xs), "g2"));
    CHECK(std::abs(fit.kappa - 0.5) < 0.07);
}

TEST_CASE("gev MLE recovers a Weibull shape") {
    // F(y) = exp(-(-y)^alpha) for y <= 0, alpha = 2 -> kappa = -1/2
    Rng rng(503);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = -std::sqrt(-std::log(rng.uniform01_open()));
    auto fit = fit_gev_mle(series_of(std::move(xs), "g3"));
    CHECK(std::abs(fit.kappa + 0.5) < 0.07);
}

TEST_CASE("degenerate and tiny samples are refused") {
    CHECK_THROWS_AS((void)fit_gev_mle(series_of(std::vector<double>(100, 2.0))), Error);
    CHECK_THROWS_AS((void)fit_gev_mle(series_of(std::vector<double>{1, 2, 3})), Error);
}

TEST_CASE("fit support constraint holds on every sample point") {
    Rng rng(504);
    std::vector<double> xs(2000);
    for (auto& x : xs) x = gev_sample(rng, -0.3, 2.0, 5.0);
    auto fit = fit_gev_mle(series_of(xs));
    for (double x : xs) CHECK(1.0 + fit.kappa * (x - fit.nu) / fit.sigma > 0.0);
}

TEST_CASE("returned parameters are a local maximum of the likelihood") {
    Rng rng(505);
    std::vector<double> xs(3000);
    for (auto& x : xs) x = gev_sample(rng, 0.2, 1.0, 0.0);
    auto fit = fit_gev_mle(series_of(xs));
    const double best = gev_log_likelihood(xs, fit.kappa, fit.sigma, fit.nu);
    Rng prng(506);
    int admissible = 0;
    while (admissible < 50) {
        const double k = fit.kappa + 1e-2 * prng.uniform_pm1();
        const double s = fit.sigma + 1e-2 * prng.uniform_pm1();
        const double n = fit.nu + 1e-2 * prng.uniform_pm1();
        const double ll = gev_log_likelihood(xs, k, s, n);
        if (!std::isfinite(ll)) continue;
        ++admissible;
        CHECK(ll <= best + 1e-9);
    }
}

TEST_CASE("analytic gradient matches finite differences away from kappa=0") {
    Rng rng(507);
    std::vector<double> xs(400);
    for (auto& x : xs) x = gev_sample(rng, -0.25, 0.8, 1.5);
    for (double kappa : {-0.3, -0.01, 0.005, 0.4}) {
        const double sigma = 0.9, nu = 1.4;
        if (std::abs(kappa) <= 1e-3) continue;
        auto g = gev_loglik_gradient(xs, kappa, sigma, nu);
        const std::array<double, 3> theta{kappa, sigma, nu};
        for (int d = 0; d < 3; ++d) {
            auto tp = theta, tm = theta;
            const double h = 1e-6 * std::max(1.0, std::abs(theta[d]));
            tp[d] += h;
            tm[d] -= h;
            const double fd = (gev_log_likelihood(xs, tp[0], tp[1], tp[2]) -
                               gev_log_likelihood(xs, tm[0], tm[1], tm[2])) /
                              (2 * h);
            CHECK(std::abs(fd - g[d]) / std::max(1.0, std::abs(g[d])) < 1e-5);
        }
    }
}

TEST_CASE("gradient norm at the optimum is tiny") {
    Rng rng(508);
    std::vector<double> xs(5000);
    for (auto& x : xs) x = gev_sample(rng, 0.33, 2.0, 7.0);
    auto fit = fit_gev_mle(series_of(xs));
    REQUIRE(std::abs(fit.kappa) > 1e-3);
    auto g = gev_loglik_gradient(xs, fit.kappa, fit.sigma, fit.nu);
    CHECK(std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) < 1e-4);
}

TEST_CASE("fitted relations for known normalizing sequences") {
    // iid draws with the circle-model tails; fitted parameters must obey
    // the type relations within 3 standard errors.
    Rng rng(509);
    const std::uint64_t n = 1000;
    const std::size_t m = 4000;
    auto circle = observables::MeasureModel::uniform_circle();

    auto draw_maxima = [&](auto&& one_draw) {
        std::vector<double> ms(m);
        for (auto& v : ms) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::uint64_t i = 0; i < n; ++i) mx = std::max(mx, one_draw());
            v = mx;
        }
        return ms;
    };

    SUBCASE("type 1 (g1): kappa=0, nu=b_n, sigma=1/a_n") {
        observables::Observable o;
        o.family = observables::Family::G1;
        o.z = dynamics::make_state(0.25);
        o.space = dynamics::Space::Circle;
        auto nc = observables::normalizing_constants(circle, o, n);
        auto ms = draw_maxima([&] { return -std::log(rng.uniform01_open() / 2.0); });
        auto fit = fit_gev_mle(series_of(std::move(ms)));
        const double se = 1.0 / std::sqrt(static_cast<double>(m));
        CHECK(std::abs(fit.kappa - 0.0) < 3.0 * se);
        CHECK(std::abs(fit.nu - nc.b_n) < 3.0 * 1.2 * se);
        CHECK(std::abs(fit.sigma - 1.0 / nc.a_n) < 3.0 * se);
    }

    SUBCASE("type 2 (g2): kappa=1/alpha, nu=b_n+1/a_n, sigma=kappa/a_n") {
        const double a = 2.0;
        observables::Observable o;
        o.family = observables::Family::G2;
        o.a = a;
        o.z = dynamics::make_state(0.25);
        o.space = dynamics::Space::Circle;
        auto nc = observables::normalizing_constants(circle, o, n);
        // P(X > u) = 2 u^-a  =>  X = (2/U)^(1/a)
        auto ms = draw_maxima([&] { return std::pow(2.0 / rng.uniform01_open(), 1.0 / a); });
        auto fit = fit_gev_mle(series_of(std::move(ms), "g2"));
        const double kappa = 1.0 / a;
        // generous shape-dependent standard errors
        const double se_k = 1.3 / std::sqrt(static_cast<double>(m));
        CHECK(std::abs(fit.kappa - kappa) < 3.0 * se_k);
        CHECK(std::abs(fit.nu - (nc.b_n + 1.0 / nc.a_n)) /
                  (nc.b_n + 1.0 / nc.a_n) <
              0.05);
        CHECK(std::abs(fit.sigma - kappa / nc.a_n) / (kappa / nc.a_n) < 0.05);
    }

    SUBCASE("type 3 (g3): kappa=-1/alpha, nu=b_n-1/a_n... via the C-offset form") {
        const double a = 2.0, C = 0.4;
        observables::Observable o;
        o.family = observables::Family::G3;
        o.a = a;
        o.C = C;
        o.z = dynamics::make_state(0.25);
        o.space = dynamics::Space::Circle;
        auto nc = observables::normalizing_constants(circle, o, n);
        // P(X > u) = 2 (C-u)^a  =>  X = C - (U/2)^(1/a)
        auto ms = draw_maxima([&] { return C - std::pow(rng.uniform01_open() / 2.0, 1.0 / a); });
        auto fit = fit_gev_mle(series_of(std::move(ms), "g3"));
        const double kappa = -1.0 / a;
        CHECK(std::abs(fit.kappa - kappa) < 0.05);
        // for type 3 the GEV location is the right endpoint shifted by
        // sigma/kappa: nu = C + sigma/kappa with sigma = -kappa/a_n
        CHECK(std::abs(fit.sigma - (-kappa) / nc.a_n) / ((-kappa) / nc.a_n) < 0.1);
        CHECK(std::abs(fit.nu - (nc.b_n - 1.0 / nc.a_n)) < 0.05 / nc.a_n + 3e-3);
    }
}

TEST_CASE("ks test calibration: samples from the fitted law pass ~95%") {
    Rng rng(510);
    int passes = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> xs(100);
        for (auto& x : xs) x = gev_sample(rng, 0.1, 1.0, 0.0);
        auto bm = series_of(std::move(xs));
        try {
            auto fit = fit_gev_mle(bm);
            if (ks_test(bm, fit).pass) ++passes;
        } catch (const Error&) {
        }
    }
    CHECK(passes >= 180);  // ~95% less binomial noise
    CHECK(passes <= 199);
}

TEST_CASE("ks test rejects a gross misfit") {
    Rng rng(511);
    std::vector<double> xs(500);
    for (auto& x : xs) x = rng.uniform01();
    auto bm = series_of(std::move(xs));
    GevFit gumbel;
    gumbel.kappa = 0.0;
    gumbel.sigma = 1.0;
    gumbel.nu = 0.0;
    auto ks = ks_test(bm, gumbel);
    CHECK(!ks.pass);
    CHECK(ks.statistic > 0.2);
}

TEST_CASE("extremal index estimator") {
    Rng rng(512);

    SUBCASE("iid uniform ball distances give theta ~ 1") {
        // 2n * min of n uniform circle distances to a point ~ Exp(1)
        const std::uint64_t n = 1000;
        std::vector<double> dmin(1000);
        for (auto& d : dmin) {
            double mn = 1.0;
            for (std::uint64_t i = 0; i < n; ++i) {
                double x = rng.uniform01();
                double dd = std::min(std::abs(x - 0.5), 1.0 - std::abs(x - 0.5));
                mn = std::min(mn, dd);
            }
            d = mn;
        }
        auto est = estimate_extremal_index(dmin, n, EiNormalization::TwoN);
        CHECK(std::abs(est.theta - 1.0) < 0.07);
    }

    SUBCASE("exact exponential rate recovery with clipping") {
        // v ~ Exp(2) scaled into distances: theta_raw = 2 clips to 1
        std::vector<double> dmin(500);
        for (auto& d : dmin) d = -std::log(rng.uniform01_open()) / (2.0 * 2.0 * 1000.0);
        auto est = estimate_extremal_index(dmin, 1000, EiNormalization::TwoN);
        CHECK(est.theta == 1.0);
        CHECK(est.clipped);
    }

    SUBCASE("errors") {
        std::vector<double> bad{0.1, 0.0, 0.2};
        CHECK_THROWS_AS(
            (void)estimate_extremal_index(bad, 10, EiNormalization::TwoN), Error);
        std::vector<double> ok{0.1, 0.2};
        CHECK_THROWS_AS((void)estimate_extremal_index(ok, 10,
                                                      EiNormalization::TwoNOverEps, 0.0),
                        Error);
    }
}

TEST_CASE("local dimension accessor") {
    GevFit fit;
    fit.sigma = 1.0;
    fit.observable_tag = "g1";
    CHECK(local_dimension_from_fit(fit) == doctest::Approx(1.0));
    fit.sigma = 0.5;
    CHECK(local_dimension_from_fit(fit) == doctest::Approx(2.0));
    fit.observable_tag = "g2[a=1]";
    CHECK_THROWS_AS((void)local_dimension_from_fit(fit), Error);
}

TEST_CASE("EI hiding: free fit shows kappa~0 while a-priori normalization finds 2/3") {
    // deterministic ternary shift at the periodic point z = 1/2
    auto map = dynamics::make_ternary();
    const auto z = dynamics::make_state(0.5);
    const std::uint64_t n = 1000, m = 1000;
    auto orbit = dynamics::random_orbit(map, {0.0, false}, dynamics::make_state(0.2137),
                                        {n * m, 1000, 513});
    std::vector<double> dmin(m, 1.0);
    for (std::uint64_t t = 0; t < n * m; ++t) {
        const double d =
            observables::distance(dynamics::Space::Circle, orbit[t], z);
        dmin[t / n] = std::min(dmin[t / n], d);
    }
    std::vector<double> maxima(m);
    for (std::size_t b = 0; b < m; ++b) maxima[b] = -std::log(dmin[b]);

    auto fit = fit_gev_mle(series_of(std::move(maxima)));
    CHECK(std::abs(fit.kappa) < 0.06);  // the free fit hides the EI

    auto est = estimate_extremal_index(dmin, n, EiNormalization::TwoN);
    CHECK(std::abs(est.theta - 2.0 / 3.0) < 0.06);

    // the location absorbs it: nu ~ b_n + log(theta)
    CHECK(std::abs(fit.nu - (std::log(2.0 * n) + std::log(2.0 / 3.0))) < 0.1);
}

TEST_CASE("gev quantile rejects levels outside (0,1)") {
    CHECK_THROWS_AS((void)gev_quantile(0.0, 0.1, 1.0, 0.0), Error);
    CHECK_THROWS_AS((void)gev_quantile(1.0, 0.1, 1.0, 0.0), Error);
}
