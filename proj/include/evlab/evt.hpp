#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evlab/errors.hpp"
#include "evlab/rng.hpp"

namespace evlab::evt {

struct BlockMaximaSeries {
    std::vector<double> values;
    std::uint64_t block_length = 1;
    std::string observable_tag;
};

/// One maximum per contiguous block of `n` values; the trailing partial
/// block is discarded. Throws NonFiniteInput if the series contains a
/// non-finite value and Configuration if it is shorter than two blocks.
BlockMaximaSeries block_maxima(std::span<const double> series, std::uint64_t n,
                               std::string observable_tag = {});

/// True when the maxima are (numerically) constant and no non-degenerate
/// law can be fitted.
bool is_degenerate(std::span<const double> values);

struct ParamCi {
    double lo = 0.0;
    double hi = 0.0;
};

struct GevFit {
    double kappa = 0.0;  // shape
    double sigma = 1.0;  // scale
    double nu = 0.0;     // location
    ParamCi kappa_ci, sigma_ci, nu_ci;
    double loglik = 0.0;
    double ks_stat = 0.0;
    bool ks_pass = false;
    std::string observable_tag;
};

// GEV distribution with CDF exp{-[1 + kappa (x-nu)/sigma]^(-1/kappa)};
// evaluation switches to the Gumbel limit for |kappa| < 1e-6.
double gev_log_density(double x, double kappa, double sigma, double nu);
double gev_cdf(double x, double kappa, double sigma, double nu);
double gev_quantile(double u, double kappa, double sigma, double nu);
double gev_log_likelihood(std::span<const double> xs, double kappa, double sigma, double nu);
/// Analytic gradient of the log-likelihood in (kappa, sigma, nu).
std::array<double, 3> gev_loglik_gradient(std::span<const double> xs, double kappa,
                                          double sigma, double nu);
double gev_sample(Rng& rng, double kappa, double sigma, double nu);

struct FitOptions {
    bool newton_polish = true;
    bool confidence_intervals = true;
};

/// Maximum-likelihood GEV fit: probability-weighted-moment start, then
/// Nelder-Mead on (kappa, log sigma, nu) and a Newton polish on the
/// analytic gradient. 95% intervals come from the observed information.
GevFit fit_gev_mle(const BlockMaximaSeries& bm, const FitOptions& opts = {});

struct KsResult {
    double statistic = 0.0;
    double critical = 0.0;
    bool pass = false;
};

/// One-sample Kolmogorov-Smirnov statistic against the fitted GEV, with
/// the estimated-parameter (Lilliefors-style) critical value at level 0.05
/// taken from a parametric-bootstrap table (999 resamples, cached by
/// sample size and shape bin).
KsResult ks_test(const BlockMaximaSeries& bm, const GevFit& fit);

/// KS statistic alone (no critical value).
double ks_statistic(std::vector<double> values, const GevFit& fit);

enum class EiNormalization { TwoN, TwoNOverEps };

struct EiEstimate {
    double theta = 1.0;
    ParamCi ci;
    EiNormalization normalization = EiNormalization::TwoN;
    bool clipped = false;
    std::size_t blocks = 0;
};

/// Extremal index from block minima of the distance to the target:
/// v_i = factor * d_min,i is treated as an Exp(theta) sample and theta is
/// the rate MLE 1/mean(v), clipped to (0,1]. TwoN multiplies by 2n (unit
/// density); TwoNOverEps multiplies by n/eps, the same ball-mass rule for
/// a measure smoothed uniformly over the noise support [-eps, eps].
EiEstimate estimate_extremal_index(std::span<const double> min_distances, std::uint64_t n,
                                   EiNormalization normalization, double epsilon = 0.0);

/// d_L = 1/sigma for a fit of the g1 observable.
double local_dimension_from_fit(const GevFit& fit);

}  // namespace evlab::evt
