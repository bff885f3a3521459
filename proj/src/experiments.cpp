#include "evlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <thread>

#include "evlab/stats.hpp"
#include "evlab/theory.hpp"

namespace evlab::experiments {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxCuspRestarts = 20;

// Stream-id salts: every random decision in a run draws from a stream
// derived from (master_seed, salt ^ indices), so results do not depend on
// scheduling.
constexpr std::uint64_t kSaltStationary = 0x517a7100000000ULL;
constexpr std::uint64_t kSaltTargets = 0x7a26e700000000ULL;
constexpr std::uint64_t kSaltOrbit = 0x0cb17000000000ULL;

std::uint64_t stream_id(std::uint64_t salt, std::uint64_t eps_idx, std::uint64_t r) {
    return salt ^ (eps_idx << 24) ^ r;
}

unsigned env_workers() {
    if (const char* s = std::getenv("EVLAB_WORKERS")) {
        long v = std::strtol(s, nullptr, 10);
        if (v >= 1 && v <= 4096) return static_cast<unsigned>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

void parallel_for(std::uint64_t count, const std::function<void(std::uint64_t)>& body) {
    const unsigned workers = std::min<std::uint64_t>(worker_count(), count);
    if (workers <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::uint64_t i = next.fetch_add(1);
                if (i >= count) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

observables::Observable build_observable(const ObservableSettings& s, const MapSpec& map,
                                         const StateVector& z) {
    observables::Observable obs;
    obs.family = s.family;
    obs.a = s.a;
    obs.C = s.C;
    obs.z = z;
    obs.space = map.space();
    obs.validate();
    return obs;
}

struct ObsRealization {
    bool ok = false;
    double kappa = 0.0, sigma = 0.0, nu = 0.0;
    bool ks_pass = false;
    std::string error;
};

struct RealizationOutcome {
    std::vector<ObsRealization> fits;
    bool ei_ok = false;
    double theta = 0.0;
    std::string ei_error;
    std::uint64_t escapes = 0;
    bool failed = false;
    std::string failure;
};

// One realization: stream the orbit once, keeping only per-block minimum
// distances to the target (every observable's block maximum is g of that
// minimum, since all three g are decreasing in the distance).
RealizationOutcome run_realization(const ExperimentConfig& cfg, double eps,
                                   std::uint64_t eps_idx, std::uint64_t r,
                                   const StateVector& x0, const StateVector& z) {
    RealizationOutcome out;
    Rng rng(cfg.master_seed, stream_id(kSaltOrbit, eps_idx, r));
    const dynamics::NoiseSpec noise{eps, cfg.independent_noise_xy};
    const int draws = dynamics::noise_draws_per_step(cfg.map, noise);
    const auto space = cfg.map.space();
    const std::uint64_t total = cfg.m * cfg.n;

    std::vector<double> dmin(cfg.m, std::numeric_limits<double>::infinity());
    std::array<double, 2> xi{0.0, 0.0};

    StateVector cur = x0;
    int restarts = 0;
    std::uint64_t t = 0;
    while (t < total) {
        if (!cur.alive()) {
            ++out.escapes;
            // The cusp family restarts from a fresh near-stationary point;
            // every other map ends the realization.
            if (cfg.map.kind == dynamics::MapKind::CuspLorenz &&
                restarts < kMaxCuspRestarts) {
                ++restarts;
                cur = dynamics::basin_point(cfg.map, rng);
                for (std::uint64_t b = 0; b < cfg.burn_in && cur.alive(); ++b) {
                    for (int d = 0; d < draws; ++d) xi[d] = rng.uniform_pm1();
                    cur = dynamics::step(cfg.map, noise, cur, xi);
                }
                std::fill(dmin.begin(), dmin.end(),
                          std::numeric_limits<double>::infinity());
                t = 0;
                continue;
            }
            out.failed = true;
            out.failure = "escape";
            return out;
        }
        const double d = observables::distance(space, cur, z);
        auto& slot = dmin[t / cfg.n];
        if (d < slot) slot = d;
        ++t;
        if (t == total) break;
        for (int k = 0; k < draws; ++k) xi[k] = rng.uniform_pm1();
        cur = dynamics::step(cfg.map, noise, cur, xi);
    }

    for (double d : dmin) {
        if (!(d > 0.0)) {
            out.failed = true;
            out.failure = "orbit hit the target exactly (infinite observable)";
            return out;
        }
    }

    out.fits.resize(cfg.observables.size());
    for (std::size_t i = 0; i < cfg.observables.size(); ++i) {
        auto obs = build_observable(cfg.observables[i], cfg.map, z);
        evt::BlockMaximaSeries bm;
        bm.block_length = cfg.n;
        bm.observable_tag = obs.tag();
        bm.values.reserve(cfg.m);
        for (double d : dmin) bm.values.push_back(observables::apply_g(obs, d));
        try {
            evt::GevFit fit = evt::fit_gev_mle(bm);
            auto ks = evt::ks_test(bm, fit);
            auto& slot = out.fits[i];
            slot.ok = true;
            slot.kappa = fit.kappa;
            slot.sigma = fit.sigma;
            slot.nu = fit.nu;
            slot.ks_pass = ks.pass;
        } catch (const Error& e) {
            out.fits[i].error = e.what();
        }
    }

    if (cfg.ei.enabled) {
        try {
            auto est = evt::estimate_extremal_index(dmin, cfg.n, cfg.ei.normalization, eps);
            out.ei_ok = true;
            out.theta = est.theta;
        } catch (const Error& e) {
            out.ei_error = e.what();
        }
    }
    return out;
}

void note_failure(std::map<std::string, std::uint64_t>& log, const std::string& reason) {
    ++log[reason];
}

AggregateResult reduce_outcomes(const ExperimentConfig& cfg, double eps,
                                const std::vector<RealizationOutcome>& outcomes,
                                double theoretical_theta, std::uint64_t sampling_escapes) {
    AggregateResult agg;
    agg.epsilon = eps;
    agg.realizations = cfg.realizations;
    agg.escape_count = sampling_escapes;

    std::map<std::string, std::uint64_t> reasons;
    for (const auto& rz : outcomes) {
        agg.escape_count += rz.escapes;
        if (rz.failed) {
            ++agg.failed_realizations;
            note_failure(reasons, rz.failure);
        }
    }
    agg.aborted = 2 * agg.failed_realizations > cfg.realizations;

    const double total = static_cast<double>(cfg.realizations);
    const StateVector dummy_z = cfg.map.dimension() == 2 ? dynamics::make_state(0.0, 0.0)
                                                         : dynamics::make_state(0.0);
    for (std::size_t i = 0; i < cfg.observables.size(); ++i) {
        ObservableAggregate oa;
        oa.tag = build_observable(cfg.observables[i], cfg.map, dummy_z).tag();
        std::vector<double> ks_vals, ss_vals, nn_vals, dl_vals;
        std::uint64_t passes = 0;
        for (const auto& rz : outcomes) {
            if (rz.failed || !rz.fits[i].ok) {
                if (!rz.failed) {
                    ++oa.fits_failed;
                    note_failure(reasons, rz.fits[i].error);
                }
                continue;
            }
            ++oa.fits_ok;
            if (rz.fits[i].ks_pass) ++passes;
            ks_vals.push_back(rz.fits[i].kappa);
            ss_vals.push_back(rz.fits[i].sigma);
            nn_vals.push_back(rz.fits[i].nu);
            dl_vals.push_back(1.0 / rz.fits[i].sigma);
        }
        oa.fits_failed += agg.failed_realizations;
        auto fill = [](ParamStats& ps, std::span<const double> v) {
            if (v.empty()) {
                ps = {kNaN, kNaN};
            } else {
                auto ms = stats::mean_sd(v);
                ps = {ms.mean, ms.sd};
            }
        };
        fill(oa.kappa, ks_vals);
        fill(oa.sigma, ss_vals);
        fill(oa.nu, nn_vals);
        if (cfg.observables[i].family == observables::Family::G1)
            fill(oa.local_dim, dl_vals);
        else
            oa.local_dim = {kNaN, kNaN};
        oa.ks_pass_fraction = total > 0 ? static_cast<double>(passes) / total : 0.0;
        oa.reliable = oa.ks_pass_fraction >= 0.7;
        agg.observables.push_back(std::move(oa));
    }

    if (cfg.ei.enabled) {
        agg.has_ei = true;
        std::vector<double> thetas;
        for (const auto& rz : outcomes) {
            if (rz.failed) continue;
            if (rz.ei_ok)
                thetas.push_back(rz.theta);
            else
                note_failure(reasons, rz.ei_error);
        }
        agg.ei.estimates_ok = thetas.size();
        agg.ei.success_fraction = total > 0 ? static_cast<double>(thetas.size()) / total : 0.0;
        agg.ei.theoretical = theoretical_theta;
        if (thetas.empty()) {
            agg.ei.theta = {kNaN, kNaN};
        } else {
            auto ms = stats::mean_sd(thetas);
            agg.ei.theta = {ms.mean, ms.sd};
        }
    }

    for (const auto& [reason, count] : reasons)
        agg.failure_log.push_back(reason + " x" + std::to_string(count));
    return agg;
}

AggregateResult failed_result(const ExperimentConfig& cfg, double eps,
                              const std::string& reason, double theoretical_theta,
                              bool escape_driven) {
    std::vector<RealizationOutcome> outcomes(cfg.realizations);
    for (auto& rz : outcomes) {
        rz.fits.resize(cfg.observables.size());
        rz.failed = true;
        rz.failure = reason;
        // attribute one escape per lost realization when sampling itself
        // was escape-dominated
        if (escape_driven) rz.escapes = 1;
    }
    return reduce_outcomes(cfg, eps, outcomes, theoretical_theta, 0);
}

// NotPeriodic propagates: a PeriodicPoint target must actually close its
// cycle. A periodic but non-repelling cycle only loses the theoretical
// reference value.
double theoretical_theta_for(const ExperimentConfig& cfg) {
    if (cfg.target.kind != TargetKind::PeriodicPoint) return kNaN;
    try {
        return theory::theoretical_ei(cfg.map, cfg.target.z, cfg.target.period);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotPeriodic) throw;
        return kNaN;
    }
}

}  // namespace

unsigned worker_count() { return env_workers(); }

void ExperimentConfig::validate() const {
    map.validate();
    if (realizations < 1) throw Error(ErrorCode::RangeError, "realizations must be >= 1");
    if (m < 1 || n < 1) throw Error(ErrorCode::RangeError, "m and n must be >= 1");
    if (m * n > 100000000ULL)
        throw Error(ErrorCode::RangeError, "m*n exceeds the desk-scale guard of 1e8");
    if (eps_grid.empty()) throw Error(ErrorCode::RangeError, "eps grid is empty");
    for (double e : eps_grid)
        if (e < 0.0 || !std::isfinite(e))
            throw Error(ErrorCode::RangeError, "epsilon must be finite and >= 0");
    for (const auto& o : observables)
        if (o.family != observables::Family::G1 && o.a <= 0.0)
            throw Error(ErrorCode::RangeError, "observable exponent a must be > 0");
    if (target.kind != TargetKind::FromStationary &&
        target.z.dim != map.dimension())
        throw Error(ErrorCode::RangeError, "target dimension does not match map space");
    if (target.kind == TargetKind::PeriodicPoint && target.period < 1)
        throw Error(ErrorCode::RangeError, "period must be >= 1");
}

std::vector<AggregateResult> run_ensemble(const ExperimentConfig& cfg) {
    cfg.validate();
    const double theo = theoretical_theta_for(cfg);

    std::vector<AggregateResult> all;
    all.reserve(cfg.eps_grid.size());
    std::uint64_t complete_failures = 0;

    for (std::size_t ei = 0; ei < cfg.eps_grid.size(); ++ei) {
        const double eps = cfg.eps_grid[ei];
        const dynamics::NoiseSpec noise{eps, cfg.independent_noise_xy};
        const bool need_z = cfg.target.kind == TargetKind::FromStationary;

        // Targets come from a second, independent stationary run: for a
        // deterministic map the realization orbit retraces the sampling
        // orbit, so a target off the same run would be hit exactly.
        dynamics::StationarySample sample, targets;
        try {
            sample = dynamics::sample_stationary(
                cfg.map, noise, cfg.burn_in, cfg.realizations,
                cfg.master_seed ^ stream_id(kSaltStationary, ei, 0));
            if (need_z)
                targets = dynamics::sample_stationary(
                    cfg.map, noise, cfg.burn_in, cfg.realizations,
                    cfg.master_seed ^ stream_id(kSaltTargets, ei, 0));
        } catch (const Error& e) {
            all.push_back(failed_result(cfg, eps, e.what(), theo,
                                        e.code() == ErrorCode::EscapeDominates));
            ++complete_failures;
            continue;
        }

        std::vector<RealizationOutcome> outcomes(cfg.realizations);
        parallel_for(cfg.realizations, [&](std::uint64_t r) {
            const StateVector x0 = sample.states[r];
            const StateVector z = need_z ? targets.states[r] : cfg.target.z;
            try {
                outcomes[r] = run_realization(cfg, eps, ei, r, x0, z);
            } catch (const std::exception& e) {
                outcomes[r].fits.resize(cfg.observables.size());
                outcomes[r].failed = true;
                outcomes[r].failure = e.what();
            }
        });

        auto agg = reduce_outcomes(cfg, eps, outcomes, theo,
                                   sample.escapes + targets.escapes);
        if (agg.failed_realizations == cfg.realizations) ++complete_failures;
        all.push_back(std::move(agg));
    }

    if (complete_failures == cfg.eps_grid.size())
        throw Error(ErrorCode::AllRealizationsFailed,
                    "every realization failed at every noise level");
    return all;
}

std::vector<AggregateResult> ei_sweep(ExperimentConfig cfg) {
    cfg.ei.enabled = true;
    if (cfg.target.kind == TargetKind::FromStationary)
        throw Error(ErrorCode::Configuration,
                    "extremal-index sweep needs a fixed or periodic target");
    return run_ensemble(cfg);
}

// ---------------------------------------------------------------------------
// Figure datasets
// ---------------------------------------------------------------------------

namespace {

constexpr double kGoldenMean = 0.61803398874989484820;
constexpr double kGenericTarget = 0.7371;  // generic non-periodic target point

std::vector<double> default_eps_grid() {
    return {0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
}

ExperimentConfig scaled_base(Scale scale, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.master_seed = seed;
    cfg.burn_in = 10000;
    if (scale == Scale::Desk) {
        cfg.realizations = 50;
        cfg.m = 100;
        cfg.n = 1000;  // m*n = 1e5
    } else {
        cfg.realizations = 500;
        cfg.m = 1000;
        cfg.n = 1000;  // m*n = 1e6
    }
    return cfg;
}

std::vector<ObservableSettings> standard_observables(double a) {
    using observables::Family;
    return {{Family::G1, 1.0, 0.0}, {Family::G2, a, 0.0}, {Family::G3, a, 0.0}};
}

}  // namespace

std::vector<std::string> figure_names() {
    return {"rot", "ber", "ei", "pm", "lor", "cat", "henon"};
}

std::vector<LabeledRun> figure_dataset(const std::string& name, Scale scale,
                                       std::uint64_t master_seed) {
    std::vector<LabeledRun> runs;
    auto add = [&](std::string label, ExperimentConfig cfg) {
        LabeledRun run;
        run.label = std::move(label);
        run.results = run_ensemble(cfg);
        run.config = std::move(cfg);
        runs.push_back(std::move(run));
    };

    if (name == "rot" || name == "ber") {
        ExperimentConfig cfg = scaled_base(scale, master_seed);
        cfg.map = name == "rot" ? dynamics::make_rotation(kGoldenMean)
                                : dynamics::make_ternary();
        cfg.eps_grid = default_eps_grid();
        cfg.target = {TargetKind::FixedPoint, dynamics::make_state(kGenericTarget), 1};
        cfg.observables = standard_observables(3.0);
        add(name, std::move(cfg));
    } else if (name == "ei") {
        ExperimentConfig cfg = scaled_base(scale, master_seed);
        cfg.map = dynamics::make_ternary();
        cfg.eps_grid = {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
        cfg.target = {TargetKind::PeriodicPoint, dynamics::make_state(0.5), 1};
        cfg.observables = {};
        cfg.ei = {true, evt::EiNormalization::TwoN};
        LabeledRun run;
        run.label = "ei";
        run.results = ei_sweep(cfg);
        run.config = std::move(cfg);
        runs.push_back(std::move(run));
    } else if (name == "pm") {
        const std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5,
                                         0.6, 0.7, 0.8, 0.9, 0.95};
        for (double alpha : alphas) {
            ExperimentConfig cfg = scaled_base(scale, master_seed);
            cfg.map = dynamics::make_pomeau_manneville(alpha);
            cfg.eps_grid = {0.0, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1};
            cfg.target = {TargetKind::FromStationary, {}, 1};
            cfg.observables = {{observables::Family::G1, 1.0, 0.0}};
            add("pm_alpha" + std::to_string(alpha).substr(0, 4), std::move(cfg));
        }
    } else if (name == "lor") {
        const std::vector<double> as{0.95, 0.96, 0.97, 0.98, 0.99};
        for (double a : as) {
            ExperimentConfig cfg = scaled_base(scale, master_seed);
            cfg.map = dynamics::make_cusp_lorenz(a);
            cfg.eps_grid = {0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
            cfg.target = {TargetKind::FromStationary, {}, 1};
            cfg.observables = {{observables::Family::G1, 1.0, 0.0}};
            add("lor_a" + std::to_string(a).substr(0, 4), std::move(cfg));
        }
    } else if (name == "cat") {
        ExperimentConfig cfg = scaled_base(scale, master_seed);
        cfg.map = dynamics::make_arnold_cat();
        cfg.eps_grid = default_eps_grid();
        cfg.target = {TargetKind::FixedPoint,
                      dynamics::make_state(kGenericTarget, 0.2371), 1};
        cfg.observables = standard_observables(1.0);
        add("cat", std::move(cfg));
    } else if (name == "henon") {
        ExperimentConfig cfg = scaled_base(scale, master_seed);
        cfg.map = dynamics::make_henon();
        cfg.eps_grid = {0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
        cfg.target = {TargetKind::FromStationary, {}, 1};
        cfg.observables = standard_observables(1.0);
        add("henon", std::move(cfg));
    } else {
        throw Error(ErrorCode::Configuration, "unknown figure name: " + name);
    }
    return runs;
}

}  // namespace evlab::experiments
