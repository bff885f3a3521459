#pragma once

#include <string>
#include <vector>

#include "evlab/dynamics.hpp"
#include "evlab/errors.hpp"

namespace evlab::observables {

using dynamics::Space;
using dynamics::StateVector;

enum class Family { G1, G2, G3 };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

/// phi(x) = g(dist(x, z)) with g one of
///   g1(y) = -log y,  g2(y) = y^(-1/a),  g3(y) = C - y^(1/a).
/// All three are decreasing in the distance, so high values of phi mean
/// close approaches to the target z.
struct Observable {
    Family family = Family::G1;
    double a = 1.0;  // exponent, G2/G3 only
    double C = 0.0;  // offset, G3 only
    StateVector z;
    Space space = Space::Circle;

    void validate() const;
    std::string tag() const;  // "g1", "g2[a=3]", ...
};

/// Distance induced by the space: arc distance on the circle, Euclidean of
/// per-coordinate arc distances on the torus, Euclidean otherwise.
double distance(Space space, const StateVector& x, const StateVector& z);

/// g(dist(x, z)); +infinity at distance 0 for G1/G2, C for G3.
double evaluate(const Observable& obs, const StateVector& x);

/// Value of g at distance y >= 0 (shared by evaluate and the tests).
double apply_g(const Observable& obs, double y);

/// Radius of the exceedance ball {phi > u}; may be +infinity (G2, u <= 0)
/// or 0 (G3, u >= C).
double ball_radius(const Observable& obs, double u);

enum class MeasureKind { UniformCircle, UniformTorus2, Empirical };

/// The stationary law used for thresholds and normalizing sequences:
/// closed-form for the Lebesgue cases, sample-based otherwise.
struct MeasureModel {
    MeasureKind kind = MeasureKind::UniformCircle;
    std::vector<StateVector> data;  // Empirical only

    static MeasureModel uniform_circle() { return {MeasureKind::UniformCircle, {}}; }
    static MeasureModel uniform_torus2() { return {MeasureKind::UniformTorus2, {}}; }
    static MeasureModel empirical(std::vector<StateVector> samples);
};

struct NormalizingConstants {
    double a_n = 1.0;
    double b_n = 0.0;
    std::uint64_t n = 1;
};

/// u_n with n * P(X0 > u_n) = tau under the model.
double threshold_for_tau(const MeasureModel& model, const Observable& obs, std::uint64_t n,
                         double tau);

/// (a_n, b_n) such that a_n (M_n - b_n) converges to the standard law of
/// the observable's type for iid draws from the model.
NormalizingConstants normalizing_constants(const MeasureModel& model, const Observable& obs,
                                           std::uint64_t n);

/// Empirical quantile at probability q using the k/(N+1) plotting position.
double empirical_quantile(std::vector<double> values, double q);

}  // namespace evlab::observables
