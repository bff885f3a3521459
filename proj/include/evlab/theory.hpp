#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "evlab/dynamics.hpp"
#include "evlab/errors.hpp"

namespace evlab::theory {

using dynamics::MapSpec;
using dynamics::StateVector;

enum class ParamBasis { OneD, TwoD, LocalDimension };

/// Closed-form asymptotic GEV parameters for the three observables:
/// kappa(g1) = 0, kappa(g2) = -kappa(g3) = 1/(d*a) and sigma(g1) = 1/d,
/// with d = 1, 2 or the local dimension d_L.
struct ExpectedParams {
    double kappa_g1 = 0.0;
    double kappa_g2 = 0.0;
    double kappa_g3 = 0.0;
    double sigma_g1 = 1.0;
};

ExpectedParams expected_params(ParamBasis basis, double a, double d_local = 0.0);

/// Extremal index at a periodic point of the deterministic map:
/// theta = 1 - 1/|det Df^p(z)| along the cycle. Throws NotPeriodic when z
/// does not return to itself within 1e-9 after p steps, and Configuration
/// when the cycle is not repelling.
double theoretical_ei(const MapSpec& map, const StateVector& z, int period);

struct CorrelationBound {
    double bound = 0.0;
    bool valid = false;  // eps^2 < 1 - log 2 / log(2 pi)
};

/// The decay-of-correlations bound 4 exp(-j eps^2 log(2 pi)) for the
/// noisy rotation, with its validity condition on eps.
CorrelationBound correlation_bound(std::uint64_t j, double epsilon);

/// sin(2 pi x)/(2 pi x), the characteristic function of the uniform noise.
double s_kernel(double x);

struct Interval {
    double a = 0.0;
    double b = 0.0;
};

/// k-th Fourier coefficient of the indicator of a union of intervals;
/// its magnitude is bounded by 1/|k|.
std::complex<double> indicator_fourier_coefficient(std::span<const Interval> parts,
                                                   std::int64_t k);

enum class CorrelationMethod { Fourier, MonteCarlo };

struct CorrelationReport {
    std::uint64_t j = 0;
    double epsilon = 0.0;
    double value = 0.0;
    /// Fourier: rigorous truncation tail bound. MonteCarlo: standard error.
    double uncertainty = 0.0;
    double bound = 0.0;
    bool valid = false;
    bool within_bound = false;
    CorrelationMethod method = CorrelationMethod::Fourier;
};

/// Exact (truncated-series) indicator correlation for the noisy rotation:
/// |sum_{k != 0} psi_k phi_{-k} e^{2 pi i k j alpha} S(k eps)^j| for
/// phi = 1_A, psi = 1_B, plus a rigorous tail bound for the discarded
/// k > K terms. Requires K >= 1/eps.
CorrelationReport fourier_correlation(const Interval& A, std::span<const Interval> B,
                                      double alpha, double epsilon, std::uint64_t j,
                                      std::uint64_t K);

/// Monte Carlo estimate of |E[1_A(x) 1_B(f^j(x))] - Leb(A) Leb(B)| with
/// x uniform on the circle and iid noise per step.
CorrelationReport monte_carlo_correlation(const MapSpec& map, const dynamics::NoiseSpec& noise,
                                          const Interval& A, std::span<const Interval> B,
                                          std::uint64_t j, std::uint64_t samples,
                                          std::uint64_t seed);

/// Empirical D'(u_n) diagnostic: n * sum_{j=1}^{floor(n/k_n)} of the time-
/// average estimate of P(X_0 > u_n, X_j > u_n) over an exceedance series.
double dprime_sum(std::span<const std::uint8_t> exceedances, std::uint64_t n, std::uint64_t k_n);

/// Diagnostic counter: entrances into the annulus Q_p(u) = {X_0 > u,
/// X_p <= u}, i.e. positions t with an exceedance at t but none at t+p.
std::uint64_t count_annulus_entrances(std::span<const std::uint8_t> exceedances,
                                      std::uint64_t p);

}  // namespace evlab::theory
