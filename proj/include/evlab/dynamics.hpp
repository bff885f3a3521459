#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evlab/errors.hpp"
#include "evlab/rng.hpp"

namespace evlab::dynamics {

enum class MapKind {
    Rotation,
    TernaryShift,
    Quadratic,
    PomeauManneville,
    Lsv,
    CuspLorenz,
    ArnoldCat,
    Henon,
};

enum class Space { Circle, Interval, Torus2, Plane2 };

enum class Status { Alive, Escaped };

Space space_of(MapKind kind);
int dimension_of(Space space);
std::string map_name(MapKind kind);
MapKind map_from_name(const std::string& name);

/// Map family plus its real parameters. `alpha` is the rotation angle or
/// the intermittency exponent, `a`/`b` the polynomial coefficients.
struct MapSpec {
    MapKind kind = MapKind::TernaryShift;
    double alpha = 0.0;
    double a = 0.0;
    double b = 0.0;

    Space space() const { return space_of(kind); }
    int dimension() const { return dimension_of(space()); }

    /// Throws Configuration if the parameters violate the family's domain.
    void validate() const;
};

MapSpec make_rotation(double alpha);
MapSpec make_ternary();
MapSpec make_quadratic(double a);
MapSpec make_pomeau_manneville(double alpha);
MapSpec make_lsv(double alpha);
MapSpec make_cusp_lorenz(double a);
MapSpec make_arnold_cat();
MapSpec make_henon(double a = 1.4, double b = 0.3);

/// Additive noise, uniform on [-eps, eps]. For the 2-D torus maps the same
/// draw is added to both coordinates unless `independent_xy` is set.
struct NoiseSpec {
    double epsilon = 0.0;
    bool independent_xy = false;

    void validate() const {
        if (epsilon < 0.0) throw Error(ErrorCode::Configuration, "epsilon must be >= 0");
    }
};

struct StateVector {
    std::array<double, 2> coords{0.0, 0.0};
    int dim = 1;
    Status status = Status::Alive;

    double x() const { return coords[0]; }
    double y() const { return coords[1]; }
    bool alive() const { return status == Status::Alive; }
};

inline StateVector make_state(double x) { return StateVector{{x, 0.0}, 1, Status::Alive}; }
inline StateVector make_state(double x, double y) { return StateVector{{x, y}, 2, Status::Alive}; }

struct OrbitConfig {
    std::uint64_t length = 1;
    std::uint64_t burn_in = 0;
    std::uint64_t seed = 0;
};

/// Number of iid noise draws consumed per step.
int noise_draws_per_step(const MapSpec& map, const NoiseSpec& noise);

/// One application of the perturbed map: deterministic formula plus
/// eps*xi, then reduction into the space (mod 1 on circle/torus) and the
/// escape checks for the interval/plane families. xi components must lie
/// in [-1, 1].
StateVector step(const MapSpec& map, const NoiseSpec& noise, const StateVector& x,
                 std::span<const double> xi);

/// Deterministic step (eps = 0), convenience for periodicity checks.
StateVector step_deterministic(const MapSpec& map, const StateVector& x);

/// Length-cfg.length orbit (the initial state is the first entry), with
/// burn_in noisy steps applied before recording. Once a state escapes the
/// remainder of the orbit is marked Escaped.
std::vector<StateVector> random_orbit(const MapSpec& map, const NoiseSpec& noise,
                                      const StateVector& x0, const OrbitConfig& cfg);

/// `count` states off one long run, after `burn_in` steps and spaced by a
/// fixed decorrelation stride of 100 steps. On escape the run restarts
/// from a fresh in-basin point (counted); throws EscapeDominates when the
/// restart budget is exhausted before `count` samples are collected.
struct StationarySample {
    std::vector<StateVector> states;
    std::uint64_t escapes = 0;
};

StationarySample sample_stationary(const MapSpec& map, const NoiseSpec& noise,
                                   std::uint64_t burn_in, std::uint64_t count,
                                   std::uint64_t seed);

/// Fresh initial condition inside the map's basin of attraction.
StateVector basin_point(const MapSpec& map, Rng& rng);

/// Determinant of the Jacobian of the deterministic map at x (the 1-D
/// derivative for interval/circle maps).
double jacobian_det(const MapSpec& map, const StateVector& x);

/// Reduce a coordinate into [0, 1).
inline double wrap01(double v) {
    double r = v - std::floor(v);
    if (r >= 1.0) r -= 1.0;  // guards against rounding at the seam
    if (r < 0.0) r += 1.0;
    return r;
}

}  // namespace evlab::dynamics
