#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evlab/dynamics.hpp"
#include "evlab/evt.hpp"
#include "evlab/observables.hpp"

namespace evlab::experiments {

using dynamics::MapSpec;
using dynamics::StateVector;

struct ObservableSettings {
    observables::Family family = observables::Family::G1;
    double a = 1.0;
    double C = 0.0;
};

enum class TargetKind { FixedPoint, PeriodicPoint, FromStationary };

struct TargetSpec {
    TargetKind kind = TargetKind::FromStationary;
    StateVector z;   // FixedPoint / PeriodicPoint
    int period = 1;  // PeriodicPoint
};

struct EiSettings {
    bool enabled = false;
    evt::EiNormalization normalization = evt::EiNormalization::TwoN;
};

struct ExperimentConfig {
    MapSpec map;
    std::vector<double> eps_grid;  // noise intensities, 0 allowed
    TargetSpec target;
    std::vector<ObservableSettings> observables;
    EiSettings ei;
    std::uint64_t m = 200;    // blocks per realization
    std::uint64_t n = 1000;   // block length
    std::uint64_t realizations = 50;
    std::uint64_t burn_in = 10000;
    std::uint64_t master_seed = 1;
    bool independent_noise_xy = false;

    /// Throws RangeError on invariant violations (desk-scale guard m*n <= 1e8).
    void validate() const;
};

struct ParamStats {
    double mean = 0.0;
    double sd = 0.0;
};

struct ObservableAggregate {
    std::string tag;
    ParamStats kappa, sigma, nu;
    ParamStats local_dim;  // 1/sigma per realization, g1 only
    double ks_pass_fraction = 0.0;
    bool reliable = false;  // ks_pass_fraction >= 0.7
    std::uint64_t fits_ok = 0;
    std::uint64_t fits_failed = 0;
};

struct EiAggregate {
    ParamStats theta;
    double theoretical = 0.0;  // NaN when no repelling periodic target
    double success_fraction = 0.0;
    std::uint64_t estimates_ok = 0;
};

struct AggregateResult {
    double epsilon = 0.0;
    std::vector<ObservableAggregate> observables;
    bool has_ei = false;
    EiAggregate ei;
    std::uint64_t escape_count = 0;
    std::uint64_t failed_realizations = 0;
    std::uint64_t realizations = 0;
    bool aborted = false;  // more than half of the realizations failed
    std::vector<std::string> failure_log;
};

/// The five-step ensemble protocol for one configuration: stationary
/// initial conditions, independent noisy orbits, per-block maxima, GEV
/// fits with KS checks, order-independent aggregation. One result per
/// epsilon; deterministic given the master seed.
std::vector<AggregateResult> run_ensemble(const ExperimentConfig& cfg);

/// run_ensemble with the extremal-index estimator switched on (requires a
/// fixed or periodic target point).
std::vector<AggregateResult> ei_sweep(ExperimentConfig cfg);

enum class Scale { Desk, Full };

struct LabeledRun {
    std::string label;
    ExperimentConfig config;
    std::vector<AggregateResult> results;
};

/// Named parameter-sweep datasets: rot, ber, ei, pm, lor, cat, henon.
/// Desk scale uses R=50 and m*n=1e5 per realization.
std::vector<LabeledRun> figure_dataset(const std::string& name, Scale scale,
                                       std::uint64_t master_seed);

std::vector<std::string> figure_names();

/// Configured worker count: EVLAB_WORKERS when set, otherwise the
/// hardware concurrency.
unsigned worker_count();

}  // namespace evlab::experiments
