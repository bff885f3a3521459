#include "evlab/theory.hpp"

#include <cmath>
#include <complex>

#include "evlab/observables.hpp"

namespace evlab::theory {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void check_interval(const Interval& iv) {
    if (!(iv.a <= iv.b) || iv.a < 0.0 || iv.b > 1.0)
        throw Error(ErrorCode::Configuration, "intervals must satisfy 0 <= a <= b <= 1");
}

double lebesgue(std::span<const Interval> parts) {
    double s = 0.0;
    for (const auto& iv : parts) s += iv.b - iv.a;
    return s;
}

bool in_union(double x, std::span<const Interval> parts) {
    for (const auto& iv : parts)
        if (x >= iv.a && x < iv.b) return true;
    return false;
}

double pow_int(double base, std::uint64_t n) {
    double r = 1.0, b = base;
    while (n > 0) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
    }
    return r;
}

}  // namespace

std::complex<double> indicator_fourier_coefficient(std::span<const Interval> parts,
                                                   std::int64_t k) {
    if (k == 0) {
        double s = 0.0;
        for (const auto& iv : parts) s += iv.b - iv.a;
        return {s, 0.0};
    }
    // sum_l (e^{-2 pi i k a_l} - e^{-2 pi i k b_l}) / (2 pi i k)
    std::complex<double> num(0.0, 0.0);
    for (const auto& iv : parts) {
        num += std::exp(std::complex<double>(0.0, -kTwoPi * static_cast<double>(k) * iv.a));
        num -= std::exp(std::complex<double>(0.0, -kTwoPi * static_cast<double>(k) * iv.b));
    }
    return num / std::complex<double>(0.0, kTwoPi * static_cast<double>(k));
}

ExpectedParams expected_params(ParamBasis basis, double a, double d_local) {
    if (a <= 0.0) throw Error(ErrorCode::Configuration, "exponent a must be > 0");
    double d;
    switch (basis) {
        case ParamBasis::OneD: d = 1.0; break;
        case ParamBasis::TwoD: d = 2.0; break;
        case ParamBasis::LocalDimension:
            if (d_local <= 0.0)
                throw Error(ErrorCode::Configuration, "local dimension must be > 0");
            d = d_local;
            break;
        default:
            throw Error(ErrorCode::Configuration, "unknown basis");
    }
    ExpectedParams p;
    p.kappa_g1 = 0.0;
    p.kappa_g2 = 1.0 / (d * a);
    p.kappa_g3 = -p.kappa_g2;
    p.sigma_g1 = 1.0 / d;
    return p;
}

double theoretical_ei(const MapSpec& map, const StateVector& z, int period) {
    if (period < 1) throw Error(ErrorCode::Configuration, "period must be >= 1");
    if (z.dim != map.dimension())
        throw Error(ErrorCode::Configuration, "target dimension does not match map space");

    StateVector cur = z;
    double det = 1.0;
    for (int i = 0; i < period; ++i) {
        det *= dynamics::jacobian_det(map, cur);
        cur = dynamics::step_deterministic(map, cur);
        if (!cur.alive())
            throw Error(ErrorCode::NotPeriodic, "orbit escaped before closing the cycle");
    }
    const double gap = observables::distance(map.space(), cur, z);
    if (gap > 1e-9)
        throw Error(ErrorCode::NotPeriodic,
                    "point does not return after " + std::to_string(period) +
                        " steps (gap " + std::to_string(gap) + ")");
    const double mag = std::abs(det);
    if (mag <= 1.0)
        throw Error(ErrorCode::Configuration,
                    "periodic point is not repelling (|det Df^p| <= 1)");
    return 1.0 - 1.0 / mag;
}

CorrelationBound correlation_bound(std::uint64_t j, double epsilon) {
    CorrelationBound b;
    b.bound = 4.0 * std::exp(-static_cast<double>(j) * epsilon * epsilon * kLogTwoPi);
    b.valid = epsilon * epsilon < 1.0 - std::log(2.0) / kLogTwoPi;
    return b;
}

double s_kernel(double x) {
    if (x == 0.0) return 1.0;
    const double t = kTwoPi * x;
    return std::sin(t) / t;
}

CorrelationReport fourier_correlation(const Interval& A, std::span<const Interval> B,
                                      double alpha, double epsilon, std::uint64_t j,
                                      std::uint64_t K) {
    if (epsilon <= 0.0) throw Error(ErrorCode::Configuration, "epsilon must be > 0");
    if (static_cast<double>(K) < 1.0 / epsilon)
        throw Error(ErrorCode::Configuration, "truncation order K must be >= 1/eps");
    check_interval(A);
    for (const auto& iv : B) check_interval(iv);

    const std::array<Interval, 1> aparts{A};
    std::complex<double> sum(0.0, 0.0);
    for (std::uint64_t k = 1; k <= K; ++k) {
        const auto ki = static_cast<std::int64_t>(k);
        const std::complex<double> psi = indicator_fourier_coefficient(B, ki);
        const std::complex<double> phi_minus = indicator_fourier_coefficient(aparts, -ki);
        const double s = s_kernel(static_cast<double>(k) * epsilon);
        double sj = pow_int(std::abs(s), j);
        if ((j & 1ULL) && s < 0.0) sj = -sj;
        const std::complex<double> rot =
            std::exp(std::complex<double>(0.0, kTwoPi * static_cast<double>(k) *
                                                   static_cast<double>(j) * alpha));
        sum += psi * phi_minus * rot * sj;
    }

    // Discarded terms: |psi_k phi_-k| <= 1/k^2 and |S(k eps)^j| <=
    // (2 pi k eps)^-j for k > K >= 1/eps, summed over +-k.
    double tail;
    if (j == 0) {
        tail = 2.0 / static_cast<double>(K);
    } else {
        const double base = kTwoPi * epsilon;
        const double jd = static_cast<double>(j);
        tail = 2.0 * std::pow(base, -jd) *
               std::pow(static_cast<double>(K), -(jd + 1.0)) / (jd + 1.0);
    }

    const auto cb = correlation_bound(j, epsilon);
    CorrelationReport r;
    r.j = j;
    r.epsilon = epsilon;
    r.value = std::abs(2.0 * sum.real());
    r.uncertainty = tail;
    r.bound = cb.bound;
    r.valid = cb.valid;
    r.within_bound = r.value + r.uncertainty <= r.bound;
    r.method = CorrelationMethod::Fourier;
    if (tail > 0.1 * cb.bound)
        throw Error(ErrorCode::TruncationTooSmall,
                    "tail bound exceeds 10% of the lemma bound; increase K");
    return r;
}

CorrelationReport monte_carlo_correlation(const MapSpec& map, const dynamics::NoiseSpec& noise,
                                          const Interval& A, std::span<const Interval> B,
                                          std::uint64_t j, std::uint64_t samples,
                                          std::uint64_t seed) {
    if (samples < 10000)
        throw Error(ErrorCode::Configuration, "need at least 1e4 samples");
    if (map.space() != dynamics::Space::Circle)
        throw Error(ErrorCode::Configuration, "indicator correlation is for circle maps");
    check_interval(A);
    for (const auto& iv : B) check_interval(iv);

    Rng rng(seed, 0xc0441ULL);
    std::uint64_t hits = 0;
    std::array<double, 1> xi{0.0};
    for (std::uint64_t s = 0; s < samples; ++s) {
        StateVector x = dynamics::make_state(rng.uniform01());
        const bool in_a = x.x() >= A.a && x.x() < A.b;
        if (!in_a) continue;  // product of indicators is already 0
        StateVector y = x;
        for (std::uint64_t t = 0; t < j; ++t) {
            xi[0] = rng.uniform_pm1();
            y = dynamics::step(map, noise, y, xi);
        }
        if (in_union(y.x(), B)) ++hits;
    }

    const double n = static_cast<double>(samples);
    const double p_hat = static_cast<double>(hits) / n;
    const double product = (A.b - A.a) * lebesgue(B);
    const auto cb = correlation_bound(j, noise.epsilon);

    CorrelationReport r;
    r.j = j;
    r.epsilon = noise.epsilon;
    r.value = std::abs(p_hat - product);
    r.uncertainty = std::sqrt(std::max(p_hat * (1.0 - p_hat), 1.0 / n) / n);
    r.bound = cb.bound;
    r.valid = cb.valid;
    r.within_bound = r.value <= r.bound + 3.0 * r.uncertainty;
    r.method = CorrelationMethod::MonteCarlo;
    return r;
}

double dprime_sum(std::span<const std::uint8_t> exceedances, std::uint64_t n,
                  std::uint64_t k_n) {
    if (k_n < 2) throw Error(ErrorCode::Configuration, "k_n must be >= 2");
    const std::uint64_t jmax = n / k_n;
    if (exceedances.size() < 2 * (jmax + 1))
        throw Error(ErrorCode::Configuration, "exceedance series too short");

    std::uint64_t total = 0;
    for (auto e : exceedances) total += e;
    if (total < 50)
        throw Error(ErrorCode::TooFewExceedances,
                    "need >= 50 exceedances, got " + std::to_string(total));

    double sum = 0.0;
    for (std::uint64_t j = 1; j <= jmax; ++j) {
        std::uint64_t joint = 0;
        const std::size_t limit = exceedances.size() - j;
        for (std::size_t t = 0; t < limit; ++t)
            joint += static_cast<std::uint64_t>(exceedances[t] & exceedances[t + j]);
        sum += static_cast<double>(joint) / static_cast<double>(limit);
    }
    return static_cast<double>(n) * sum;
}

std::uint64_t count_annulus_entrances(std::span<const std::uint8_t> exceedances,
                                      std::uint64_t p) {
    if (p < 1) throw Error(ErrorCode::Configuration, "period must be >= 1");
    if (exceedances.size() <= p) return 0;
    std::uint64_t count = 0;
    for (std::size_t t = 0; t + p < exceedances.size(); ++t)
        if (exceedances[t] && !exceedances[t + p]) ++count;
    return count;
}

}  // namespace evlab::theory
