#include "evlab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evlab::observables {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kMinEmpirical = 1000;

double circle_dist(double x, double z) {
    double d = std::abs(x - z);
    return std::min(d, 1.0 - d);
}

// Ball volume under the uniform models: Leb(B_r) = coef * r^dim.
struct BallLaw {
    double coef;
    int dim;
};

BallLaw ball_law(MeasureKind kind) {
    switch (kind) {
        case MeasureKind::UniformCircle: return {2.0, 1};
        case MeasureKind::UniformTorus2: return {kPi, 2};
        case MeasureKind::Empirical: break;
    }
    throw Error(ErrorCode::Configuration, "empirical model has no closed-form ball law");
}

std::vector<double> evaluate_on_samples(const MeasureModel& model, const Observable& obs) {
    if (model.data.size() < kMinEmpirical)
        throw Error(ErrorCode::InsufficientData,
                    "empirical model needs >= 1000 samples, got " +
                        std::to_string(model.data.size()));
    std::vector<double> values;
    values.reserve(model.data.size());
    for (const auto& s : model.data) values.push_back(evaluate(obs, s));
    return values;
}

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::G1: return "g1";
        case Family::G2: return "g2";
        case Family::G3: return "g3";
    }
    return "unknown";
}

Family family_from_name(const std::string& name) {
    if (name == "g1") return Family::G1;
    if (name == "g2") return Family::G2;
    if (name == "g3") return Family::G3;
    throw Error(ErrorCode::Configuration, "unknown observable family: " + name);
}

void Observable::validate() const {
    if (family != Family::G1 && a <= 0.0)
        throw Error(ErrorCode::Configuration, "observable exponent a must be > 0");
    if (!z.alive()) throw Error(ErrorCode::Configuration, "target point must be Alive");
    if (z.dim != dynamics::dimension_of(space))
        throw Error(ErrorCode::Configuration, "target dimension does not match space");
}

std::string Observable::tag() const {
    switch (family) {
        case Family::G1: return "g1";
        case Family::G2: return "g2[a=" + std::to_string(a) + "]";
        case Family::G3:
            return "g3[a=" + std::to_string(a) + ",C=" + std::to_string(C) + "]";
    }
    return "unknown";
}

double distance(Space space, const StateVector& x, const StateVector& z) {
    if (!x.alive() || !z.alive())
        throw Error(ErrorCode::EscapedState, "distance requires Alive states");
    if (x.dim != z.dim)
        throw Error(ErrorCode::Configuration, "mismatched state dimensions");
    switch (space) {
        case Space::Circle:
            return circle_dist(x.x(), z.x());
        case Space::Torus2: {
            double dx = circle_dist(x.x(), z.x());
            double dy = circle_dist(x.y(), z.y());
            return std::hypot(dx, dy);
        }
        case Space::Interval:
            return std::abs(x.x() - z.x());
        case Space::Plane2:
            return std::hypot(x.x() - z.x(), x.y() - z.y());
    }
    throw Error(ErrorCode::Configuration, "unknown space");
}

double apply_g(const Observable& obs, double y) {
    switch (obs.family) {
        case Family::G1:
            return y == 0.0 ? kInf : -std::log(y);
        case Family::G2:
            return y == 0.0 ? kInf : std::pow(y, -1.0 / obs.a);
        case Family::G3:
            return obs.C - std::pow(y, 1.0 / obs.a);
    }
    throw Error(ErrorCode::Configuration, "unknown family");
}

double evaluate(const Observable& obs, const StateVector& x) {
    return apply_g(obs, distance(obs.space, x, obs.z));
}

double ball_radius(const Observable& obs, double u) {
    switch (obs.family) {
        case Family::G1:
            return std::exp(-u);
        case Family::G2:
            return u <= 0.0 ? kInf : std::pow(u, -obs.a);
        case Family::G3:
            return u >= obs.C ? 0.0 : std::pow(obs.C - u, obs.a);
    }
    throw Error(ErrorCode::Configuration, "unknown family");
}

MeasureModel MeasureModel::empirical(std::vector<StateVector> samples) {
    if (samples.size() < kMinEmpirical)
        throw Error(ErrorCode::InsufficientData,
                    "empirical model needs >= 1000 samples, got " +
                        std::to_string(samples.size()));
    return {MeasureKind::Empirical, std::move(samples)};
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::InsufficientData, "empty sample");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    // plotting position p_k = k/(N+1), k = 1..N
    double pos = q * (n + 1.0);
    if (pos <= 1.0) return values.front();
    if (pos >= n) return values.back();
    std::size_t k = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(k);
    return values[k - 1] * (1.0 - frac) + values[k] * frac;
}

double threshold_for_tau(const MeasureModel& model, const Observable& obs, std::uint64_t n,
                         double tau) {
    if (n < 1) throw Error(ErrorCode::Configuration, "n must be >= 1");
    if (tau <= 0.0) throw Error(ErrorCode::Configuration, "tau must be > 0");
    if (tau > static_cast<double>(n))
        throw Error(ErrorCode::InfeasibleThreshold,
                    "tau/n > 1: requested tail probability exceeds 1");

    if (model.kind == MeasureKind::Empirical) {
        auto values = evaluate_on_samples(model, obs);
        return empirical_quantile(std::move(values), 1.0 - tau / static_cast<double>(n));
    }

    // Solve n * Leb(B_r) = tau for the ball radius, then map through g.
    const auto law = ball_law(model.kind);
    double r = std::pow(tau / (law.coef * static_cast<double>(n)), 1.0 / law.dim);
    return apply_g(obs, r);
}

NormalizingConstants normalizing_constants(const MeasureModel& model, const Observable& obs,
                                           std::uint64_t n) {
    if (n < 1) throw Error(ErrorCode::Configuration, "n must be >= 1");
    NormalizingConstants nc;
    nc.n = n;

    if (model.kind == MeasureKind::Empirical) {
        auto values = evaluate_on_samples(model, obs);
        switch (obs.family) {
            case Family::G1: {
                double q1 = empirical_quantile(values, 1.0 - 1.0 / static_cast<double>(n));
                double qe = empirical_quantile(
                    values, 1.0 - 1.0 / (std::exp(1.0) * static_cast<double>(n)));
                if (qe <= q1)
                    throw Error(ErrorCode::InsufficientData, "flat empirical tail");
                nc.b_n = q1;
                nc.a_n = 1.0 / (qe - q1);
                break;
            }
            case Family::G2: {
                double q1 = empirical_quantile(values, 1.0 - 1.0 / static_cast<double>(n));
                if (q1 <= 0.0)
                    throw Error(ErrorCode::InsufficientData, "non-positive empirical scale");
                nc.b_n = 0.0;
                nc.a_n = 1.0 / q1;
                break;
            }
            case Family::G3: {
                double q1 = empirical_quantile(values, 1.0 - 1.0 / static_cast<double>(n));
                if (q1 >= obs.C)
                    throw Error(ErrorCode::InsufficientData, "flat empirical tail");
                nc.b_n = obs.C;
                nc.a_n = 1.0 / (obs.C - q1);
                break;
            }
        }
        return nc;
    }

    // Uniform models: P(X > u) = coef * g^{-1}(u)^dim gives the constants in
    // closed form per family.
    const auto law = ball_law(model.kind);
    const double cn = law.coef * static_cast<double>(n);
    const double d = static_cast<double>(law.dim);
    switch (obs.family) {
        case Family::G1:
            nc.a_n = d;
            nc.b_n = std::log(cn) / d;
            break;
        case Family::G2:
            nc.a_n = std::pow(cn, -1.0 / (d * obs.a));
            nc.b_n = 0.0;
            break;
        case Family::G3:
            nc.a_n = std::pow(cn, 1.0 / (d * obs.a));
            nc.b_n = obs.C;
            break;
    }
    return nc;
}

}  // namespace evlab::observables
