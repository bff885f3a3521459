#include "evlab/dynamics.hpp"

#include <cmath>

namespace evlab::dynamics {

namespace {

constexpr double kQuadraticEscape = 1e3;
constexpr double kHenonEscape = 10.0;

double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

Space space_of(MapKind kind) {
    switch (kind) {
        case MapKind::Rotation:
        case MapKind::TernaryShift:
        case MapKind::PomeauManneville:
        case MapKind::Lsv:
            return Space::Circle;
        case MapKind::Quadratic:
        case MapKind::CuspLorenz:
            return Space::Interval;
        case MapKind::ArnoldCat:
            return Space::Torus2;
        case MapKind::Henon:
            return Space::Plane2;
    }
    throw Error(ErrorCode::Configuration, "unknown map kind");
}

int dimension_of(Space space) {
    return (space == Space::Torus2 || space == Space::Plane2) ? 2 : 1;
}

std::string map_name(MapKind kind) {
    switch (kind) {
        case MapKind::Rotation: return "rotation";
        case MapKind::TernaryShift: return "ternary";
        case MapKind::Quadratic: return "quadratic";
        case MapKind::PomeauManneville: return "pm";
        case MapKind::Lsv: return "lsv";
        case MapKind::CuspLorenz: return "cusp";
        case MapKind::ArnoldCat: return "cat";
        case MapKind::Henon: return "henon";
    }
    return "unknown";
}

MapKind map_from_name(const std::string& name) {
    if (name == "rotation") return MapKind::Rotation;
    if (name == "ternary") return MapKind::TernaryShift;
    if (name == "quadratic") return MapKind::Quadratic;
    if (name == "pm") return MapKind::PomeauManneville;
    if (name == "lsv") return MapKind::Lsv;
    if (name == "cusp") return MapKind::CuspLorenz;
    if (name == "cat") return MapKind::ArnoldCat;
    if (name == "henon") return MapKind::Henon;
    throw Error(ErrorCode::Configuration, "unknown map name: " + name);
}

void MapSpec::validate() const {
    switch (kind) {
        case MapKind::Quadratic:
            if (a <= 0.0) throw Error(ErrorCode::Configuration, "quadratic needs a > 0");
            break;
        case MapKind::PomeauManneville:
        case MapKind::Lsv:
            if (alpha <= 0.0 || alpha > 1.0)
                throw Error(ErrorCode::Configuration, "intermittency exponent must be in (0, 1]");
            break;
        case MapKind::CuspLorenz:
            if (a <= 0.0 || a >= 2.0)
                throw Error(ErrorCode::Configuration, "cusp exponent must be in (0, 2)");
            break;
        case MapKind::Henon:
            if (b == 0.0) throw Error(ErrorCode::Configuration, "henon needs b != 0");
            break;
        default:
            break;
    }
}

MapSpec make_rotation(double alpha) { return MapSpec{MapKind::Rotation, alpha, 0.0, 0.0}; }
MapSpec make_ternary() { return MapSpec{MapKind::TernaryShift, 0.0, 0.0, 0.0}; }
MapSpec make_quadratic(double a) { return MapSpec{MapKind::Quadratic, 0.0, a, 0.0}; }
MapSpec make_pomeau_manneville(double alpha) {
    return MapSpec{MapKind::PomeauManneville, alpha, 0.0, 0.0};
}
MapSpec make_lsv(double alpha) { return MapSpec{MapKind::Lsv, alpha, 0.0, 0.0}; }
MapSpec make_cusp_lorenz(double a) { return MapSpec{MapKind::CuspLorenz, 0.0, a, 0.0}; }
MapSpec make_arnold_cat() { return MapSpec{MapKind::ArnoldCat, 0.0, 0.0, 0.0}; }
MapSpec make_henon(double a, double b) { return MapSpec{MapKind::Henon, 0.0, a, b}; }

int noise_draws_per_step(const MapSpec& map, const NoiseSpec& noise) {
    if (map.space() == Space::Torus2 && noise.independent_xy) return 2;
    return 1;
}

StateVector step(const MapSpec& map, const NoiseSpec& noise, const StateVector& x,
                 std::span<const double> xi) {
    if (x.status != Status::Alive)
        throw Error(ErrorCode::EscapedState, "step requires an Alive state");
    if (x.dim != map.dimension())
        throw Error(ErrorCode::Configuration, "state dimension does not match map space");
    const int need = noise_draws_per_step(map, noise);
    if (static_cast<int>(xi.size()) < need)
        throw Error(ErrorCode::Configuration, "too few noise draws for this map");

    const double eps = noise.epsilon;
    StateVector out = x;

    switch (map.kind) {
        case MapKind::Rotation:
            out.coords[0] = wrap01(x.x() + map.alpha + eps * xi[0]);
            break;
        case MapKind::TernaryShift:
            out.coords[0] = wrap01(3.0 * x.x() + eps * xi[0]);
            break;
        case MapKind::Quadratic: {
            double v = 1.0 - map.a * x.x() * x.x() + eps * xi[0];
            out.coords[0] = v;
            if (std::abs(v) > kQuadraticEscape) out.status = Status::Escaped;
            break;
        }
        case MapKind::PomeauManneville: {
            double u = x.x();
            out.coords[0] = wrap01(u + std::pow(u, 1.0 + map.alpha) + eps * xi[0]);
            break;
        }
        case MapKind::Lsv: {
            double u = x.x();
            double v = (u < 0.5) ? u * (1.0 + std::pow(2.0 * u, map.alpha)) + eps * xi[0]
                                 : 2.0 * u - 1.0 + eps * xi[0];
            out.coords[0] = wrap01(v);
            break;
        }
        case MapKind::CuspLorenz: {
            double u = x.x();
            double v = (-map.a + std::pow(std::abs(u), map.a)) * sgn(u) + eps * xi[0];
            out.coords[0] = v;
            if (v < -1.0 || v > 1.0) out.status = Status::Escaped;
            break;
        }
        case MapKind::ArnoldCat: {
            double wx = eps * xi[0];
            double wy = eps * (noise.independent_xy ? xi[1] : xi[0]);
            out.coords[0] = wrap01(2.0 * x.x() + x.y() + wx);
            out.coords[1] = wrap01(x.x() + x.y() + wy);
            break;
        }
        case MapKind::Henon: {
            double nx = x.y() + 1.0 - map.a * x.x() * x.x() + eps * xi[0];
            double ny = map.b * x.x();
            out.coords[0] = nx;
            out.coords[1] = ny;
            if (std::abs(nx) > kHenonEscape) out.status = Status::Escaped;
            break;
        }
    }
    return out;
}

StateVector step_deterministic(const MapSpec& map, const StateVector& x) {
    static constexpr std::array<double, 2> zero{0.0, 0.0};
    return step(map, NoiseSpec{0.0, false}, x, zero);
}

std::vector<StateVector> random_orbit(const MapSpec& map, const NoiseSpec& noise,
                                      const StateVector& x0, const OrbitConfig& cfg) {
    if (cfg.length < 1) throw Error(ErrorCode::Configuration, "orbit length must be >= 1");
    if (x0.dim != map.dimension())
        throw Error(ErrorCode::Configuration, "state dimension does not match map space");

    Rng rng(cfg.seed);
    const int draws = noise_draws_per_step(map, noise);
    std::array<double, 2> xi{0.0, 0.0};

    StateVector cur = x0;
    for (std::uint64_t i = 0; i < cfg.burn_in && cur.alive(); ++i) {
        for (int d = 0; d < draws; ++d) xi[d] = rng.uniform_pm1();
        cur = step(map, noise, cur, xi);
    }

    std::vector<StateVector> orbit;
    orbit.reserve(cfg.length);
    orbit.push_back(cur);
    for (std::uint64_t i = 1; i < cfg.length; ++i) {
        if (cur.alive()) {
            for (int d = 0; d < draws; ++d) xi[d] = rng.uniform_pm1();
            cur = step(map, noise, cur, xi);
        }
        orbit.push_back(cur);
    }
    return orbit;
}

StateVector basin_point(const MapSpec& map, Rng& rng) {
    switch (map.space()) {
        case Space::Circle:
            return make_state(rng.uniform01());
        case Space::Torus2:
            return make_state(rng.uniform01(), rng.uniform01());
        case Space::Interval:
            if (map.kind == MapKind::Quadratic) return make_state(rng.uniform(-0.9, 0.9));
            return make_state(rng.uniform(-0.95, 0.95));
        case Space::Plane2:
            return make_state(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
    }
    throw Error(ErrorCode::Configuration, "unknown space");
}

StationarySample sample_stationary(const MapSpec& map, const NoiseSpec& noise,
                                   std::uint64_t burn_in, std::uint64_t count,
                                   std::uint64_t seed) {
    if (count < 1) throw Error(ErrorCode::Configuration, "count must be >= 1");
    constexpr std::uint64_t kStride = 100;
    constexpr std::uint64_t kMaxRestarts = 64;

    Rng rng(seed, 0xa11ce5);
    const int draws = noise_draws_per_step(map, noise);
    std::array<double, 2> xi{0.0, 0.0};

    StationarySample out;
    out.states.reserve(count);

    std::uint64_t restarts = 0;
    StateVector cur = basin_point(map, rng);
    std::uint64_t until_sample = burn_in;

    while (out.states.size() < count) {
        if (!cur.alive()) {
            ++out.escapes;
            if (++restarts > kMaxRestarts)
                throw Error(ErrorCode::EscapeDominates,
                            "escape dominates: collected " + std::to_string(out.states.size()) +
                                " of " + std::to_string(count) + " samples");
            cur = basin_point(map, rng);
            until_sample = burn_in;
        }
        if (until_sample == 0) {
            out.states.push_back(cur);
            until_sample = kStride;
            continue;
        }
        for (int d = 0; d < draws; ++d) xi[d] = rng.uniform_pm1();
        cur = step(map, noise, cur, xi);
        --until_sample;
    }
    return out;
}

double jacobian_det(const MapSpec& map, const StateVector& x) {
    switch (map.kind) {
        case MapKind::Rotation: return 1.0;
        case MapKind::TernaryShift: return 3.0;
        case MapKind::Quadratic: return -2.0 * map.a * x.x();
        case MapKind::PomeauManneville:
            return 1.0 + (1.0 + map.alpha) * std::pow(x.x(), map.alpha);
        case MapKind::Lsv:
            return x.x() < 0.5
                       ? 1.0 + (1.0 + map.alpha) * std::pow(2.0 * x.x(), map.alpha)
                       : 2.0;
        case MapKind::CuspLorenz:
            return map.a * std::pow(std::abs(x.x()), map.a - 1.0);
        case MapKind::ArnoldCat: return 1.0;  // [[2,1],[1,1]]
        case MapKind::Henon: return -map.b;   // [[-2ax,1],[b,0]]
    }
    throw Error(ErrorCode::Configuration, "unknown map kind");
}

}  // namespace evlab::dynamics
