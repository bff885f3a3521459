#include "evlab/evt.hpp"

#include "evlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

namespace evlab::evt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGumbelSwitch = 1e-6;  // |kappa| below this -> Gumbel limit
constexpr double kEulerGamma = 0.57721566490153286;
constexpr std::size_t kMinBlocksForFit = 30;

using stats::mean_sd;

}  // namespace

BlockMaximaSeries block_maxima(std::span<const double> series, std::uint64_t n,
                               std::string observable_tag) {
    if (n < 1) throw Error(ErrorCode::Configuration, "block length must be >= 1");
    if (series.size() < 2 * n)
        throw Error(ErrorCode::Configuration, "series must contain at least two blocks");
    for (double v : series)
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteInput, "series contains a non-finite value");

    BlockMaximaSeries bm;
    bm.block_length = n;
    bm.observable_tag = std::move(observable_tag);
    const std::size_t blocks = series.size() / n;
    bm.values.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        double mx = series[b * n];
        for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, series[b * n + i]);
        bm.values.push_back(mx);
    }
    return bm;
}

bool is_degenerate(std::span<const double> values) {
    auto ms = mean_sd(values);
    return ms.sd <= std::max(1e-12, 1e-8 * std::abs(ms.mean));
}

// ---------------------------------------------------------------------------
// GEV distribution primitives
// ---------------------------------------------------------------------------

double gev_log_density(double x, double kappa, double sigma, double nu) {
    const double s = (x - nu) / sigma;
    if (std::abs(kappa) < kGumbelSwitch) {
        return -std::log(sigma) - s - std::exp(-s);
    }
    const double ks = kappa * s;
    if (1.0 + ks <= 0.0) return -kInf;
    const double lt = std::log1p(ks);
    return -std::log(sigma) - (1.0 + 1.0 / kappa) * lt - std::exp(-lt / kappa);
}

double gev_cdf(double x, double kappa, double sigma, double nu) {
    const double s = (x - nu) / sigma;
    if (std::abs(kappa) < kGumbelSwitch) return std::exp(-std::exp(-s));
    const double ks = kappa * s;
    if (1.0 + ks <= 0.0) return kappa > 0.0 ? 0.0 : 1.0;
    return std::exp(-std::exp(-std::log1p(ks) / kappa));
}

double gev_quantile(double u, double kappa, double sigma, double nu) {
    if (u <= 0.0 || u >= 1.0)
        throw Error(ErrorCode::Configuration, "quantile level must be in (0,1)");
    const double ll = std::log(-std::log(u));
    if (std::abs(kappa) < kGumbelSwitch) return nu - sigma * ll;
    return nu + sigma * std::expm1(-kappa * ll) / kappa;
}

double gev_log_likelihood(std::span<const double> xs, double kappa, double sigma, double nu) {
    if (sigma <= 0.0) return -kInf;
    double ll = 0.0, c = 0.0;
    for (double x : xs) {
        double term = gev_log_density(x, kappa, sigma, nu);
        if (!std::isfinite(term)) return -kInf;
        double y = term - c;
        double t = ll + y;
        c = (t - ll) - y;
        ll = t;
    }
    return ll;
}

std::array<double, 3> gev_loglik_gradient(std::span<const double> xs, double kappa,
                                          double sigma, double nu) {
    std::array<double, 3> g{0.0, 0.0, 0.0};
    if (std::abs(kappa) < kGumbelSwitch) {
        for (double x : xs) {
            const double s = (x - nu) / sigma;
            const double e = std::exp(-s);
            // d/dkappa at kappa=0: -(s - s^2/2) - e^{-s} s^2/2
            g[0] += -(s - 0.5 * s * s) - 0.5 * e * s * s;
            g[1] += (-1.0 + s * (1.0 - e)) / sigma;
            g[2] += (1.0 - e) / sigma;
        }
        return g;
    }
    for (double x : xs) {
        const double s = (x - nu) / sigma;
        const double t = 1.0 + kappa * s;
        const double lt = std::log1p(kappa * s);
        const double w = std::exp(-lt / kappa);
        g[0] += lt / (kappa * kappa) - (1.0 + 1.0 / kappa) * s / t -
                w * (lt / (kappa * kappa) - s / (kappa * t));
        g[1] += (-1.0 + (1.0 + kappa) * s / t - w * s / t) / sigma;
        g[2] += ((1.0 + kappa) / t - w / t) / sigma;
    }
    return g;
}

double gev_sample(Rng& rng, double kappa, double sigma, double nu) {
    return gev_quantile(rng.uniform01_open(), kappa, sigma, nu);
}

// ---------------------------------------------------------------------------
// Maximum-likelihood fit
// ---------------------------------------------------------------------------

namespace {

// Probability-weighted-moment starting values (Hosking's estimators).
struct Params {
    double kappa, sigma, nu;
};

Params pwm_initial(std::span<const double> values) {
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());

    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double fi = static_cast<double>(i);  // rank-1, zero-based
        b0 += x[i];
        b1 += x[i] * fi / (n - 1.0);
        b2 += x[i] * fi * (fi - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    b0 /= n;
    b1 /= n;
    b2 /= n;

    const double denom = 3.0 * b2 - b0;
    Params p{0.0, 1.0, 0.0};
    double c = 0.0;
    if (denom != 0.0) c = (2.0 * b1 - b0) / denom - std::log(2.0) / std::log(3.0);
    double kappa = -7.8590 * c - 2.9554 * c * c;
    kappa = std::clamp(kappa, -0.9, 0.9);

    if (std::abs(kappa) < 1e-6) {
        p.kappa = 0.0;
        p.sigma = (2.0 * b1 - b0) / std::log(2.0);
        p.nu = b0 - kEulerGamma * p.sigma;
    } else {
        const double gam = std::tgamma(1.0 - kappa);
        p.kappa = kappa;
        p.sigma = kappa * (2.0 * b1 - b0) / (gam * (std::pow(2.0, kappa) - 1.0));
        p.nu = b0 + p.sigma * (1.0 - gam) / kappa;
    }

    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma) || !std::isfinite(p.nu) ||
        !std::isfinite(p.kappa)) {
        auto ms = mean_sd(values);
        p.sigma = ms.sd * std::sqrt(6.0) / 3.14159265358979323846;
        p.nu = ms.mean - kEulerGamma * p.sigma;
        p.kappa = 0.0;
    }

    // Back off toward Gumbel until the whole sample is inside the support.
    for (int tries = 0; tries < 60; ++tries) {
        if (std::isfinite(gev_log_likelihood(values, p.kappa, p.sigma, p.nu))) break;
        p.kappa *= 0.5;
        if (std::abs(p.kappa) < 1e-8) p.kappa = 0.0;
        if (p.kappa == 0.0) p.sigma *= 1.5;
    }
    return p;
}

// Nelder-Mead on (kappa, log sigma, nu), minimizing the negative
// log-likelihood. Returns true when the simplex met the tolerance.
using Vec3 = std::array<double, 3>;

bool nelder_mead(std::span<const double> values, Vec3& theta, int max_iter, double tol) {
    auto objective = [&](const Vec3& t) {
        return -gev_log_likelihood(values, t[0], std::exp(t[1]), t[2]);
    };

    std::array<Vec3, 4> v;
    std::array<double, 4> f;
    v[0] = theta;
    const Vec3 steps{0.05, 0.1, 0.1 * std::exp(theta[1])};
    for (int i = 0; i < 3; ++i) {
        v[i + 1] = theta;
        v[i + 1][i] += steps[i];
    }
    for (int i = 0; i < 4; ++i) f[i] = objective(v[i]);

    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        std::array<int, 4> idx{0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] < f[b]; });
        const int best = idx[0], worst = idx[3], second = idx[2];

        double spread = 0.0;
        for (int i = 1; i < 4; ++i)
            for (int d = 0; d < 3; ++d)
                spread = std::max(spread, std::abs(v[idx[i]][d] - v[best][d]));
        if (spread < tol * (1.0 + std::abs(v[best][0]) + std::abs(v[best][1]) +
                            std::abs(v[best][2]))) {
            converged = true;
            break;
        }

        Vec3 centroid{0.0, 0.0, 0.0};
        for (int i = 0; i < 4; ++i) {
            if (i == worst) continue;
            for (int d = 0; d < 3; ++d) centroid[d] += v[i][d] / 3.0;
        }

        auto blend = [&](double coef) {
            Vec3 p;
            for (int d = 0; d < 3; ++d)
                p[d] = centroid[d] + coef * (v[worst][d] - centroid[d]);
            return p;
        };

        Vec3 refl = blend(-1.0);
        double frefl = objective(refl);
        if (frefl < f[best]) {
            Vec3 expd = blend(-2.0);
            double fexpd = objective(expd);
            if (fexpd < frefl) {
                v[worst] = expd;
                f[worst] = fexpd;
            } else {
                v[worst] = refl;
                f[worst] = frefl;
            }
        } else if (frefl < f[second]) {
            v[worst] = refl;
            f[worst] = frefl;
        } else {
            Vec3 contr = blend(frefl < f[worst] ? -0.5 : 0.5);
            double fcontr = objective(contr);
            if (fcontr < std::min(frefl, f[worst])) {
                v[worst] = contr;
                f[worst] = fcontr;
            } else {
                for (int i = 0; i < 4; ++i) {
                    if (i == best) continue;
                    for (int d = 0; d < 3; ++d)
                        v[i][d] = v[best][d] + 0.5 * (v[i][d] - v[best][d]);
                    f[i] = objective(v[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (f[i] < f[best]) best = i;
    theta = v[best];
    return converged;
}

// Observed-information Hessian: central differences of the analytic
// gradient in (kappa, sigma, nu).
std::array<Vec3, 3> loglik_hessian(std::span<const double> values, const Params& p) {
    std::array<Vec3, 3> h{};
    const Vec3 base{p.kappa, p.sigma, p.nu};
    for (int j = 0; j < 3; ++j) {
        const double hj = 1e-6 + 1e-6 * std::abs(base[j]);
        Vec3 plus = base, minus = base;
        plus[j] += hj;
        minus[j] -= hj;
        auto gp = gev_loglik_gradient(values, plus[0], plus[1], plus[2]);
        auto gm = gev_loglik_gradient(values, minus[0], minus[1], minus[2]);
        for (int i = 0; i < 3; ++i) h[i][j] = (gp[i] - gm[i]) / (2.0 * hj);
    }
    // symmetrize
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            double m = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = h[j][i] = m;
        }
    return h;
}

bool solve3(std::array<Vec3, 3> a, Vec3 b, Vec3& out) {
    std::array<int, 3> piv{0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int p = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[piv[r]][col]) > std::abs(a[piv[p]][col])) p = r;
        std::swap(piv[col], piv[p]);
        const double d = a[piv[col]][col];
        if (std::abs(d) < 1e-300) return false;
        for (int r = col + 1; r < 3; ++r) {
            const double m = a[piv[r]][col] / d;
            for (int c = col; c < 3; ++c) a[piv[r]][c] -= m * a[piv[col]][c];
            b[piv[r]] -= m * b[piv[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double s = b[piv[col]];
        for (int c = col + 1; c < 3; ++c) s -= a[piv[col]][c] * out[c];
        out[col] = s / a[piv[col]][col];
    }
    return true;
}

bool invert3(const std::array<Vec3, 3>& a, std::array<Vec3, 3>& inv) {
    for (int col = 0; col < 3; ++col) {
        Vec3 e{0.0, 0.0, 0.0};
        e[col] = 1.0;
        Vec3 x{};
        if (!solve3(a, e, x)) return false;
        for (int r = 0; r < 3; ++r) inv[r][col] = x[r];
    }
    return true;
}

}  // namespace

GevFit fit_gev_mle(const BlockMaximaSeries& bm, const FitOptions& opts) {
    const auto& xs = bm.values;
    if (xs.size() < kMinBlocksForFit)
        throw Error(ErrorCode::InsufficientData,
                    "need >= 30 block maxima, got " + std::to_string(xs.size()));
    for (double v : xs)
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteInput, "block maxima contain a non-finite value");
    if (is_degenerate(xs))
        throw Error(ErrorCode::DegenerateSample,
                    "block maxima are numerically constant; no non-degenerate EVL");

    Params p = pwm_initial(xs);
    Vec3 theta{p.kappa, std::log(p.sigma), p.nu};
    bool converged = nelder_mead(xs, theta, 500, 1e-8);
    if (!converged) converged = nelder_mead(xs, theta, 500, 1e-8);

    Params fitp{theta[0], std::exp(theta[1]), theta[2]};
    double best_ll = gev_log_likelihood(xs, fitp.kappa, fitp.sigma, fitp.nu);
    if (!std::isfinite(best_ll))
        throw Error(ErrorCode::SupportViolation, "no admissible parameters found");

    if (opts.newton_polish) {
        for (int iter = 0; iter < 25; ++iter) {
            auto grad = gev_loglik_gradient(xs, fitp.kappa, fitp.sigma, fitp.nu);
            auto hess = loglik_hessian(xs, fitp);
            Vec3 step{};
            Vec3 rhs{-grad[0], -grad[1], -grad[2]};
            if (!solve3(hess, rhs, step)) break;
            double scale = 1.0;
            bool accepted = false;
            for (int half = 0; half < 12; ++half, scale *= 0.5) {
                Params trial{fitp.kappa + scale * step[0], fitp.sigma + scale * step[1],
                             fitp.nu + scale * step[2]};
                if (trial.sigma <= 0.0) continue;
                double ll = gev_log_likelihood(xs, trial.kappa, trial.sigma, trial.nu);
                if (ll > best_ll) {
                    fitp = trial;
                    best_ll = ll;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            const double move =
                std::abs(step[0]) + std::abs(step[1]) + std::abs(step[2]);
            if (scale * move < 1e-12) break;
        }
    }

    if (!converged) {
        auto grad = gev_loglik_gradient(xs, fitp.kappa, fitp.sigma, fitp.nu);
        const double gnorm =
            std::sqrt(grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]);
        if (gnorm > 1e-3 * (1.0 + std::abs(best_ll)))
            throw Error(ErrorCode::NonConvergence,
                        "optimizer failed the gradient/simplex tolerance");
    }

    // Support must hold on every fitted sample point.
    for (double x : xs)
        if (1.0 + fitp.kappa * (x - fitp.nu) / fitp.sigma <= 0.0)
            throw Error(ErrorCode::SupportViolation,
                        "fitted parameters violate the support constraint");

    GevFit fit;
    fit.kappa = fitp.kappa;
    fit.sigma = fitp.sigma;
    fit.nu = fitp.nu;
    fit.loglik = best_ll;
    fit.observable_tag = bm.observable_tag;

    if (opts.confidence_intervals) {
        auto hess = loglik_hessian(xs, fitp);
        std::array<Vec3, 3> info;  // observed information = -Hessian
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) info[i][j] = -hess[i][j];
        std::array<Vec3, 3> cov;
        if (invert3(info, cov) && cov[0][0] > 0.0 && cov[1][1] > 0.0 && cov[2][2] > 0.0) {
            const double zk = 1.959963984540054 * std::sqrt(cov[0][0]);
            const double zs = 1.959963984540054 * std::sqrt(cov[1][1]);
            const double zn = 1.959963984540054 * std::sqrt(cov[2][2]);
            fit.kappa_ci = {fitp.kappa - zk, fitp.kappa + zk};
            fit.sigma_ci = {fitp.sigma - zs, fitp.sigma + zs};
            fit.nu_ci = {fitp.nu - zn, fitp.nu + zn};
        } else {
            fit.kappa_ci = {-kInf, kInf};
            fit.sigma_ci = {-kInf, kInf};
            fit.nu_ci = {-kInf, kInf};
        }
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

double ks_statistic(std::vector<double> values, const GevFit& fit) {
    std::sort(values.begin(), values.end());
    const double m = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = gev_cdf(values[i], fit.kappa, fit.sigma, fit.nu);
        const double lo = static_cast<double>(i) / m;
        const double hi = static_cast<double>(i + 1) / m;
        d = std::max(d, std::max(f - lo, hi - f));
    }
    return d;
}

namespace {

// Critical values for the estimated-parameter KS test. The null
// distribution of D is invariant under affine changes of the data (the
// MLE is equivariant), so the table only depends on the sample size and
// the shape; kappa is binned at 0.1.
class KsCriticalTable {
public:
    double critical(std::size_t m, double kappa) {
        const int bin = static_cast<int>(std::lround(std::clamp(kappa, -2.0, 2.0) * 10.0));
        const Key key{m, bin};
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = table_.find(key);
            if (it != table_.end()) return it->second;
        }
        const double crit = compute(m, static_cast<double>(bin) / 10.0);
        std::lock_guard<std::mutex> lock(mutex_);
        table_.emplace(key, crit);
        return crit;
    }

private:
    using Key = std::pair<std::size_t, int>;

    static double compute(std::size_t m, double kappa) {
        constexpr std::size_t kResamples = 999;
        Rng rng(splitmix_key(m, kappa), 0xb0075ULL);
        std::vector<double> ds;
        ds.reserve(kResamples);
        BlockMaximaSeries bm;
        bm.block_length = 1;
        FitOptions fast{false, false};
        std::size_t attempts = 0;
        while (ds.size() < kResamples && attempts < 2 * kResamples) {
            ++attempts;
            bm.values.clear();
            for (std::size_t i = 0; i < m; ++i)
                bm.values.push_back(gev_sample(rng, kappa, 1.0, 0.0));
            try {
                GevFit f = fit_gev_mle(bm, fast);
                ds.push_back(ks_statistic(bm.values, f));
            } catch (const Error&) {
                continue;  // rare resample failure; draw again
            }
        }
        if (ds.empty())
            throw Error(ErrorCode::NonConvergence, "bootstrap table could not be built");
        std::sort(ds.begin(), ds.end());
        // 95th percentile position for B=999: the 950th order statistic.
        std::size_t idx = std::min(ds.size() - 1, (ds.size() * 95) / 100);
        return ds[idx];
    }

    static std::uint64_t splitmix_key(std::size_t m, double kappa) {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(m) << 20);
        h ^= static_cast<std::uint64_t>(
            static_cast<std::int64_t>(std::llround(kappa * 10.0)) + 4096);
        return splitmix64(h);
    }

    std::mutex mutex_;
    std::map<Key, double> table_;
};

KsCriticalTable& ks_table() {
    static KsCriticalTable table;
    return table;
}

}  // namespace

KsResult ks_test(const BlockMaximaSeries& bm, const GevFit& fit) {
    KsResult r;
    r.statistic = ks_statistic(bm.values, fit);
    r.critical = ks_table().critical(bm.values.size(), fit.kappa);
    r.pass = r.statistic < r.critical;
    return r;
}

// ---------------------------------------------------------------------------
// Extremal index
// ---------------------------------------------------------------------------

EiEstimate estimate_extremal_index(std::span<const double> min_distances, std::uint64_t n,
                                   EiNormalization normalization, double epsilon) {
    if (min_distances.empty())
        throw Error(ErrorCode::InsufficientData, "no block minima provided");
    for (double d : min_distances)
        if (!(d > 0.0))
            throw Error(ErrorCode::ZeroDistance, "block minimum distance is not positive");
    double factor;
    if (normalization == EiNormalization::TwoN) {
        factor = 2.0 * static_cast<double>(n);
    } else {
        if (epsilon <= 0.0)
            throw Error(ErrorCode::EpsilonRequired,
                        "TwoNOverEps normalization requires epsilon > 0");
        factor = static_cast<double>(n) / epsilon;
    }

    double sum = 0.0, c = 0.0;
    for (double d : min_distances) {
        double y = factor * d - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    const double m = static_cast<double>(min_distances.size());
    const double mean = sum / m;
    const double raw = 1.0 / mean;
    const double half = 1.959963984540054 / std::sqrt(m);

    EiEstimate est;
    est.normalization = normalization;
    est.blocks = min_distances.size();
    est.clipped = raw > 1.0;
    est.theta = std::min(raw, 1.0);
    est.ci = {std::min(std::max(raw * (1.0 - half), 0.0), 1.0),
              std::min(raw * (1.0 + half), 1.0)};
    return est;
}

double local_dimension_from_fit(const GevFit& fit) {
    if (!fit.observable_tag.empty() && fit.observable_tag.rfind("g1", 0) != 0)
        throw Error(ErrorCode::Configuration,
                    "local dimension requires a g1 fit, got " + fit.observable_tag);
    if (!(fit.sigma > 0.0))
        throw Error(ErrorCode::Configuration, "fit has non-positive scale");
    return 1.0 / fit.sigma;
}

}  // namespace evlab::evt
