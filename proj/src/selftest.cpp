#include "evlab/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <unordered_set>

#include "evlab/evt.hpp"
#include "evlab/experiments.hpp"
#include "evlab/io.hpp"
#include "evlab/observables.hpp"
#include "evlab/stats.hpp"
#include "evlab/theory.hpp"

namespace evlab::selftest {

using dynamics::StateVector;
using experiments::ExperimentConfig;
using experiments::TargetKind;
using observables::Family;

namespace {

constexpr double kGoldenMean = 0.61803398874989484820;

struct Check {
    bool pass = true;
    std::string detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAIL ") + what;
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

bool within(double v, double center, double half) {
    return std::isfinite(v) && v >= center - half && v <= center + half;
}

const experiments::ObservableAggregate& find_obs(
    const experiments::AggregateResult& r, const std::string& prefix) {
    for (const auto& oa : r.observables)
        if (oa.tag.rfind(prefix, 0) == 0) return oa;
    throw Error(ErrorCode::Configuration, "no observable with tag prefix " + prefix);
}

void write_csv(const Options& opts, const std::string& name, const ExperimentConfig& cfg,
               const std::vector<experiments::AggregateResult>& results) {
    if (opts.out_dir.empty()) return;
    std::filesystem::create_directories(opts.out_dir);
    io::write_file(opts.out_dir + "/" + name, io::results_to_csv(cfg, results));
}

// --------------------------------------------------------------------------
// Criterion 1: quantitative verification of the correlation-decay lemma.
// --------------------------------------------------------------------------

Check criterion_lemma(const Options&) {
    Check c;
    struct Pair {
        theory::Interval a;
        std::vector<theory::Interval> b;
    };
    const std::vector<Pair> pairs = {
        {{0.0, 0.1}, {{0.0, 0.1}}},
        {{0.2, 0.5}, {{0.6, 0.9}}},
        {{0.0, 0.3}, {{0.1, 0.2}, {0.55, 0.8}}},
    };
    const std::vector<double> eps_grid = {0.1, 0.3, 0.5, 0.7};

    std::uint64_t checked = 0, violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& pr : pairs) {
        for (double eps : eps_grid) {
            const auto K = static_cast<std::uint64_t>(
                std::max(std::ceil(1.0 / eps), 10000.0));
            for (std::uint64_t j = 5; j <= 200; ++j) {
                auto rep = theory::fourier_correlation(pr.a, pr.b, kGoldenMean, eps, j, K);
                ++checked;
                if (!rep.valid || !rep.within_bound) ++violations;
                worst_margin =
                    std::min(worst_margin, rep.bound - (rep.value + rep.uncertainty));
            }
        }
    }
    c.expect(violations == 0, "0 violations on " + std::to_string(checked) +
                                  " grid points (worst margin " + num(worst_margin) + ")");
    return c;
}

// --------------------------------------------------------------------------
// Criterion 2: ternary shift at a generic point reproduces Eq.-style
// parameters at desk scale.
// --------------------------------------------------------------------------

ExperimentConfig ternary_generic_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.map = dynamics::make_ternary();
    cfg.eps_grid = {1e-3};
    cfg.target = {TargetKind::FixedPoint, dynamics::make_state(0.7371), 1};
    cfg.observables = {{Family::G1, 1.0, 0.0}, {Family::G2, 3.0, 0.0}, {Family::G3, 3.0, 0.0}};
    cfg.m = 200;
    cfg.n = 1000;
    cfg.realizations = 50;
    cfg.master_seed = seed;
    return cfg;
}

Check criterion_ternary(const Options& opts) {
    Check c;
    auto cfg = ternary_generic_config(opts.seed);
    auto results = experiments::run_ensemble(cfg);
    write_csv(opts, "c2_ternary_generic.csv", cfg, results);
    const auto& r = results.front();
    const auto& g1 = find_obs(r, "g1");
    const auto& g2 = find_obs(r, "g2");
    const auto& g3 = find_obs(r, "g3");
    c.expect(within(g1.kappa.mean, 0.0, 0.05), "kappa(g1)=" + num(g1.kappa.mean) + " in 0+-0.05");
    c.expect(g1.sigma.mean >= 0.93 && g1.sigma.mean <= 1.07,
             "sigma(g1)=" + num(g1.sigma.mean) + " in [0.93,1.07]");
    c.expect(within(g2.kappa.mean, 1.0 / 3.0, 0.05),
             "kappa(g2,a=3)=" + num(g2.kappa.mean) + " in 1/3+-0.05");
    c.expect(within(g3.kappa.mean, -1.0 / 3.0, 0.05),
             "kappa(g3,a=3)=" + num(g3.kappa.mean) + " in -1/3+-0.05");
    c.expect(g1.ks_pass_fraction >= 0.7 && g2.ks_pass_fraction >= 0.7 &&
                 g3.ks_pass_fraction >= 0.7,
             "KS pass fractions " + num(g1.ks_pass_fraction) + "/" +
                 num(g2.ks_pass_fraction) + "/" + num(g3.ks_pass_fraction) + " >= 0.7");
    return c;
}

// --------------------------------------------------------------------------
// Criterion 3: extremal-index dichotomy at the period-1 point z = 1/2.
// --------------------------------------------------------------------------

ExperimentConfig ei_dichotomy_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.map = dynamics::make_ternary();
    cfg.eps_grid = {0.0, 1e-1};
    cfg.target = {TargetKind::PeriodicPoint, dynamics::make_state(0.5), 1};
    cfg.observables = {};
    cfg.ei = {true, evt::EiNormalization::TwoN};
    cfg.m = 1000;
    cfg.n = 1000;
    cfg.realizations = 5;
    cfg.master_seed = seed;
    return cfg;
}

Check criterion_ei_dichotomy(const Options& opts) {
    Check c;
    auto cfg = ei_dichotomy_config(opts.seed);
    auto results = experiments::ei_sweep(cfg);
    write_csv(opts, "c3_ei_dichotomy.csv", cfg, results);
    const double t0 = results[0].ei.theta.mean;
    const double t1 = results[1].ei.theta.mean;
    c.expect(within(t0, 2.0 / 3.0, 0.06), "theta(eps=0)=" + num(t0) + " in 2/3+-0.06");
    c.expect(within(t1, 1.0, 0.07), "theta(eps=0.1)=" + num(t1) + " in 1+-0.07");
    c.expect(within(results[0].ei.theoretical, 2.0 / 3.0, 1e-12),
             "theoretical theta=" + num(results[0].ei.theoretical));
    return c;
}

// --------------------------------------------------------------------------
// Criterion 4: noise restores an EVL for the rotation.
// --------------------------------------------------------------------------

Check criterion_rotation(const Options& opts) {
    Check c;
    // Deterministic branch at the m = n = 1e3 scale of the protocol (the
    // within-realization maxima of the unperturbed rotation only expose
    // their non-GEV shape to the KS test with enough blocks).
    ExperimentConfig det_cfg;
    det_cfg.map = dynamics::make_rotation(kGoldenMean);
    det_cfg.eps_grid = {0.0};
    det_cfg.target = {TargetKind::FixedPoint, dynamics::make_state(0.7371), 1};
    det_cfg.observables = {{Family::G1, 1.0, 0.0}};
    det_cfg.m = 1000;
    det_cfg.n = 1000;
    det_cfg.realizations = 50;
    det_cfg.master_seed = opts.seed;
    auto det_results = experiments::run_ensemble(det_cfg);
    write_csv(opts, "c4_rotation_eps0.csv", det_cfg, det_results);
    const auto& det = find_obs(det_results[0], "g1");
    c.expect(!det.reliable, "eps=0 unreliable (pass fraction " +
                                num(det.ks_pass_fraction) + ")");

    ExperimentConfig cfg = det_cfg;
    cfg.eps_grid = {1e-2};
    cfg.m = 200;
    auto results = experiments::run_ensemble(cfg);
    write_csv(opts, "c4_rotation_noisy.csv", cfg, results);
    const auto& noisy = find_obs(results[0], "g1");
    c.expect(noisy.reliable, "eps=1e-2 reliable (pass fraction " +
                                 num(noisy.ks_pass_fraction) + ")");
    c.expect(within(noisy.kappa.mean, 0.0, 0.08),
             "kappa(g1)=" + num(noisy.kappa.mean) + " in 0+-0.08");
    return c;
}

// --------------------------------------------------------------------------
// Criterion 5: Arnold cat map, 2-D parameters insensitive to the noise.
// --------------------------------------------------------------------------

Check criterion_cat(const Options& opts) {
    Check c;
    ExperimentConfig cfg;
    cfg.map = dynamics::make_arnold_cat();
    cfg.eps_grid = {0.0, 1e-3};
    cfg.target = {TargetKind::FixedPoint, dynamics::make_state(0.7371, 0.2371), 1};
    cfg.observables = {{Family::G1, 1.0, 0.0}, {Family::G2, 1.0, 0.0}};
    cfg.m = 200;
    cfg.n = 1000;
    cfg.realizations = 50;
    cfg.master_seed = opts.seed;
    auto results = experiments::run_ensemble(cfg);
    write_csv(opts, "c5_cat.csv", cfg, results);
    for (const auto& r : results) {
        const auto& g1 = find_obs(r, "g1");
        const auto& g2 = find_obs(r, "g2");
        const std::string at = " at eps=" + num(r.epsilon);
        c.expect(within(g1.sigma.mean, 0.5, 0.05),
                 "sigma(g1)=" + num(g1.sigma.mean) + " in 0.5+-0.05" + at);
        c.expect(within(g2.kappa.mean, 0.5, 0.07),
                 "kappa(g2,a=1)=" + num(g2.kappa.mean) + " in 0.5+-0.07" + at);
    }
    return c;
}

// --------------------------------------------------------------------------
// Criterion 6: quadratic map, extremal index one under the noise-adapted
// normalization at the attracting fixed point.
// --------------------------------------------------------------------------

Check criterion_quadratic_ei(const Options& opts) {
    Check c;
    const double a = 0.314;
    const double zstar = (-1.0 + std::sqrt(1.0 + 4.0 * a)) / (2.0 * a);
    ExperimentConfig cfg;
    cfg.map = dynamics::make_quadratic(a);
    cfg.eps_grid = {1e-4, 1e-3, 1e-2};
    cfg.target = {TargetKind::FixedPoint, dynamics::make_state(zstar), 1};
    cfg.observables = {};
    cfg.ei = {true, evt::EiNormalization::TwoNOverEps};
    cfg.m = 1000;
    cfg.n = 1000;
    cfg.realizations = 5;
    cfg.master_seed = opts.seed;
    auto results = experiments::ei_sweep(cfg);
    write_csv(opts, "c6_quadratic_ei.csv", cfg, results);
    for (const auto& r : results)
        c.expect(within(r.ei.theta.mean, 1.0, 0.1),
                 "theta=" + num(r.ei.theta.mean) + " in 1+-0.1 at eps=" + num(r.epsilon));
    return c;
}

// --------------------------------------------------------------------------
// Criterion 7: Pomeau-Manneville contrast between fast and slow mixing.
// --------------------------------------------------------------------------

Check criterion_pm(const Options& opts) {
    Check c;
    ExperimentConfig fast;
    fast.map = dynamics::make_pomeau_manneville(0.3);
    fast.eps_grid = {1e-3};
    fast.target = {TargetKind::FromStationary, {}, 1};
    fast.observables = {{Family::G1, 1.0, 0.0}};
    fast.m = 200;
    fast.n = 1000;
    fast.realizations = 50;
    fast.master_seed = opts.seed;
    auto fr = experiments::run_ensemble(fast);
    write_csv(opts, "c7_pm_alpha03.csv", fast, fr);
    const auto& g1f = find_obs(fr.front(), "g1");
    c.expect(g1f.reliable, "alpha=0.3 reliable at eps=1e-3 (pass fraction " +
                               num(g1f.ks_pass_fraction) + ")");
    c.expect(within(g1f.sigma.mean, 1.0, 0.1),
             "alpha=0.3 sigma(g1)=" + num(g1f.sigma.mean) + " in 1+-0.1");

    ExperimentConfig slow = fast;
    slow.map = dynamics::make_pomeau_manneville(0.9);
    slow.eps_grid = {0.0, 1e-4};
    try {
        auto sr = experiments::run_ensemble(slow);
        write_csv(opts, "c7_pm_alpha09.csv", slow, sr);
        for (const auto& r : sr) {
            const auto& g1 = find_obs(r, "g1");
            c.expect(!g1.reliable, "alpha=0.9 unreliable at eps=" + num(r.epsilon) +
                                       " (pass fraction " + num(g1.ks_pass_fraction) + ")");
        }
    } catch (const Error& e) {
        c.expect(false, std::string("alpha=0.9 must not crash: ") + e.what());
    }
    return c;
}

// --------------------------------------------------------------------------
// Criterion 8: Henon local dimension against the box-counting oracle.
// --------------------------------------------------------------------------

Check criterion_henon(const Options& opts) {
    Check c;
    ExperimentConfig cfg;
    cfg.map = dynamics::make_henon();
    cfg.eps_grid = {0.0};
    cfg.target = {TargetKind::FromStationary, {}, 1};
    cfg.observables = {{Family::G1, 1.0, 0.0}};
    cfg.m = 1000;
    cfg.n = 1000;
    cfg.realizations = 50;
    cfg.master_seed = opts.seed;
    auto results = experiments::run_ensemble(cfg);
    write_csv(opts, "c8_henon_dim.csv", cfg, results);
    const auto& g1 = find_obs(results.front(), "g1");

    // Box-counting oracle on a long orbit of the same system.
    dynamics::OrbitConfig oc;
    oc.length = 4000000;
    oc.burn_in = 10000;
    oc.seed = opts.seed ^ 0xb0c5ULL;
    auto orbit = dynamics::random_orbit(cfg.map, {0.0, false},
                                        dynamics::make_state(0.0, 0.0), oc);
    const double box_dim = box_counting_dimension(orbit, 6, 12);
    c.expect(std::abs(g1.local_dim.mean - box_dim) <= 0.1,
             "mean 1/sigma(g1)=" + num(g1.local_dim.mean) + " vs box dim " +
                 num(box_dim) + " within 0.1");

    ExperimentConfig noisy = cfg;
    noisy.eps_grid = {1e-2, 1e-1};
    noisy.n = 1000;
    noisy.m = 100;
    auto nr = experiments::run_ensemble(noisy);
    write_csv(opts, "c8_henon_noisy.csv", noisy, nr);
    const auto& r = nr.back();  // the eps = 1e-1 row
    c.expect(r.escape_count > 0, "eps=0.1 escape_count=" +
                                     std::to_string(r.escape_count) + " > 0");
    c.expect(!find_obs(r, "g1").reliable, "eps=0.1 fits unreliable (pass fraction " +
                                              num(find_obs(r, "g1").ks_pass_fraction) + ")");
    return c;
}

// --------------------------------------------------------------------------
// Criterion 9: statistical core on synthetic samples.
// --------------------------------------------------------------------------

evt::BlockMaximaSeries synthetic_series(std::vector<double> values, const char* tag) {
    evt::BlockMaximaSeries bm;
    bm.values = std::move(values);
    bm.block_length = 1;
    bm.observable_tag = tag;
    return bm;
}

Check criterion_statistical_core(const Options& opts) {
    Check c;
    Rng rng(opts.seed, 0x57a7ULL);

    {  // Gumbel recovery
        std::vector<double> xs(10000);
        for (auto& x : xs) x = -std::log(-std::log(rng.uniform01_open()));
        auto fit = evt::fit_gev_mle(synthetic_series(std::move(xs), "g1"));
        c.expect(within(fit.kappa, 0.0, 0.05), "gumbel kappa=" + num(fit.kappa));
        c.expect(within(fit.sigma, 1.0, 0.05), "gumbel sigma=" + num(fit.sigma));
        c.expect(within(fit.nu, 0.0, 0.05), "gumbel nu=" + num(fit.nu));
    }

    {  // Frechet alpha=2 recovery: tau_2(y) = y^-2
        std::vector<double> xs(10000);
        for (auto& x : xs) x = 1.0 / std::sqrt(-std::log(rng.uniform01_open()));
        auto fit = evt::fit_gev_mle(synthetic_series(std::move(xs), "g2"));
        c.expect(within(fit.kappa, 0.5, 0.07), "frechet kappa=" + num(fit.kappa));
    }

    {  // constant sample
        bool threw = false;
        try {
            evt::fit_gev_mle(synthetic_series(std::vector<double>(100, 3.25), "g1"));
        } catch (const Error& e) {
            threw = e.code() == ErrorCode::DegenerateSample;
        }
        c.expect(threw, "constant sample raises DegenerateSample");
    }

    {  // analytic gradient vs central differences away from kappa=0
        std::vector<double> xs(500);
        for (auto& x : xs) x = evt::gev_sample(rng, 0.3, 1.2, 0.4);
        const double kap = 0.25, sig = 1.1, nu = 0.3;
        auto grad = evt::gev_loglik_gradient(xs, kap, sig, nu);
        double max_rel = 0.0;
        const std::array<double, 3> theta{kap, sig, nu};
        for (int d = 0; d < 3; ++d) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta[d]));
            std::array<double, 3> tp = theta, tm = theta;
            tp[d] += h;
            tm[d] -= h;
            const double fd = (evt::gev_log_likelihood(xs, tp[0], tp[1], tp[2]) -
                               evt::gev_log_likelihood(xs, tm[0], tm[1], tm[2])) /
                              (2.0 * h);
            max_rel = std::max(max_rel, std::abs(fd - grad[d]) /
                                            std::max(1.0, std::abs(grad[d])));
        }
        c.expect(max_rel < 1e-5, "gradient rel err " + num(max_rel) + " < 1e-5");

        auto fit = evt::fit_gev_mle(synthetic_series(xs, "g2"));
        auto g = evt::gev_loglik_gradient(xs, fit.kappa, fit.sigma, fit.nu);
        const double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        c.expect(std::abs(fit.kappa) < 1e-3 || gnorm < 1e-4,
                 "gradient norm at optimum " + num(gnorm) + " < 1e-4");
    }

    {  // kappa->0 continuity: the general branch at |kappa| = 1e-4 must
        // match the Gumbel-limit branch plus the first-order kappa term on
        // the central 99% of the standard Gumbel range (the drift is the
        // analytic d/dkappa; the quadratic remainder stays below 1e-6
        // there).
        double worst = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double x = -2.0 + 7.5 * static_cast<double>(i) / 1000.0;
            for (double kap : {1e-4, -1e-4}) {
                const double general = evt::gev_log_density(x, kap, 1.0, 0.0);
                const double gum = evt::gev_log_density(x, 0.0, 1.0, 0.0);
                const double slope = -(x - 0.5 * x * x) - 0.5 * std::exp(-x) * x * x;
                worst = std::max(worst, std::abs(general - (gum + kap * slope)));
            }
        }
        c.expect(worst < 1e-6, "kappa->0 continuity residual " + num(worst) + " < 1e-6");

        // The switch to the Gumbel branch at |kappa| = 1e-6 offsets the
        // density by at most the first-order drift kappa * d/dkappa,
        // which stays below 2e-5 on this range.
        double jump = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double x = -2.0 + 7.5 * static_cast<double>(i) / 100.0;
            const double below = evt::gev_log_density(x, 0.999e-6, 1.0, 0.0);
            const double above = evt::gev_log_density(x, 1.001e-6, 1.0, 0.0);
            jump = std::max(jump, std::abs(above - below));
        }
        c.expect(jump < 2e-5, "branch-switch offset " + num(jump) + " < 2e-5");
    }

    {  // normalizing-constant iid oracles, 100 repetitions each
        struct Case {
            observables::MeasureModel model;
            Family family;
            double a;
            const char* name;
        };
        std::vector<Case> cases;
        cases.push_back({observables::MeasureModel::uniform_circle(), Family::G1, 1.0,
                         "circle g1"});
        cases.push_back({observables::MeasureModel::uniform_circle(), Family::G2, 1.0,
                         "circle g2"});
        cases.push_back({observables::MeasureModel::uniform_torus2(), Family::G1, 1.0,
                         "torus g1"});
        const std::uint64_t n = 1000;
        const std::size_t n_max = 1000;
        for (const auto& cs : cases) {
            observables::Observable obs;
            obs.family = cs.family;
            obs.a = cs.a;
            obs.space = cs.model.kind == observables::MeasureKind::UniformTorus2
                            ? dynamics::Space::Torus2
                            : dynamics::Space::Circle;
            obs.z = obs.space == dynamics::Space::Torus2
                        ? dynamics::make_state(0.5, 0.5)
                        : dynamics::make_state(0.5);
            auto nc = observables::normalizing_constants(cs.model, obs, n);
            int passes = 0;
            for (int rep = 0; rep < 100; ++rep) {
                std::vector<double> ys(n_max);
                for (auto& y : ys) {
                    double mx = -std::numeric_limits<double>::infinity();
                    for (std::uint64_t i = 0; i < n; ++i) {
                        StateVector s = obs.space == dynamics::Space::Torus2
                                            ? dynamics::make_state(rng.uniform01(),
                                                                   rng.uniform01())
                                            : dynamics::make_state(rng.uniform01());
                        mx = std::max(mx, observables::evaluate(obs, s));
                    }
                    y = nc.a_n * (mx - nc.b_n);
                }
                std::sort(ys.begin(), ys.end());
                double dstat = 0.0;
                for (std::size_t i = 0; i < ys.size(); ++i) {
                    double f;
                    if (cs.family == Family::G1)
                        f = std::exp(-std::exp(-ys[i]));
                    else
                        f = ys[i] <= 0.0 ? 0.0 : std::exp(-1.0 / ys[i]);
                    const double m = static_cast<double>(ys.size());
                    dstat = std::max(dstat, std::max(f - static_cast<double>(i) / m,
                                                     static_cast<double>(i + 1) / m - f));
                }
                if (dstat < 1.3581 / std::sqrt(static_cast<double>(n_max))) ++passes;
            }
            c.expect(passes >= 90, std::string(cs.name) + " oracle KS passes " +
                                       std::to_string(passes) + "/100 >= 90");
        }
    }
    return c;
}

// --------------------------------------------------------------------------
// Criterion 10: byte-identical result files for identical seeds.
// --------------------------------------------------------------------------

Check criterion_reproducibility(const Options& opts) {
    Check c;
    auto cfg = ei_dichotomy_config(opts.seed);
    experiments::LabeledRun run;
    run.label = "repro";
    run.config = cfg;
    run.results = experiments::ei_sweep(cfg);

    auto rerun = run;
    rerun.results = experiments::ei_sweep(cfg);

    const std::string dir = opts.out_dir.empty() ? "selftest_out" : opts.out_dir;
    auto m1 = io::write_run_dir(dir + "/c10_run1", {run});
    auto m2 = io::write_run_dir(dir + "/c10_run2", {rerun});
    const std::string a_csv = io::read_file(dir + "/c10_run1/results.csv");
    const std::string b_csv = io::read_file(dir + "/c10_run2/results.csv");
    const std::string a_json = io::read_file(dir + "/c10_run1/results.json");
    const std::string b_json = io::read_file(dir + "/c10_run2/results.json");
    c.expect(a_csv == b_csv, "results.csv byte-identical across reruns");
    c.expect(a_json == b_json, "results.json byte-identical across reruns");
    c.expect(m1.output_checksums == m2.output_checksums, "manifest checksums identical");
    return c;
}

}  // namespace

double box_counting_dimension(std::span<const StateVector> points, int kmin, int kmax) {
    if (points.empty()) throw Error(ErrorCode::Configuration, "no points");
    if (kmin >= kmax) throw Error(ErrorCode::Configuration, "need kmin < kmax");

    std::vector<double> ks, logns;
    for (int k = kmin; k <= kmax; ++k) {
        const double delta = std::ldexp(1.0, -k);
        std::unordered_set<std::uint64_t> boxes;
        boxes.reserve(points.size() / 4);
        for (const auto& p : points) {
            if (!p.alive()) continue;
            const auto bx = static_cast<std::int64_t>(std::floor(p.x() / delta));
            const auto by = static_cast<std::int64_t>(
                p.dim == 2 ? std::floor(p.y() / delta) : 0);
            boxes.insert(static_cast<std::uint64_t>(bx + 2097152) * 4194304ULL +
                         static_cast<std::uint64_t>(by + 2097152));
        }
        ks.push_back(static_cast<double>(k));
        logns.push_back(std::log2(static_cast<double>(boxes.size())));
    }

    // least-squares slope of log2 N against k
    const double n = static_cast<double>(ks.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sx += ks[i];
        sy += logns[i];
        sxx += ks[i] * ks[i];
        sxy += ks[i] * logns[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<CriterionResult> run_acceptance(const Options& opts) {
    struct Entry {
        int id;
        const char* name;
        std::function<Check(const Options&)> fn;
    };
    const std::vector<Entry> entries = {
        {1, "lemma verification (Fourier correlation vs decay bound)", criterion_lemma},
        {2, "ternary shift generic point GEV parameters", criterion_ternary},
        {3, "extremal index dichotomy at z=1/2", criterion_ei_dichotomy},
        {4, "rotation transition under noise", criterion_rotation},
        {5, "Arnold cat 2-D parameters", criterion_cat},
        {6, "quadratic extremal-index normalization", criterion_quadratic_ei},
        {7, "Pomeau-Manneville mixing contrast", criterion_pm},
        {8, "Henon local dimension vs box counting", criterion_henon},
        {9, "statistical core on synthetic samples", criterion_statistical_core},
        {10, "byte-identical reproducibility", criterion_reproducibility},
    };

    std::vector<CriterionResult> out;
    for (const auto& e : entries) {
        if (!opts.only.empty() &&
            std::find(opts.only.begin(), opts.only.end(), e.id) == opts.only.end())
            continue;
        CriterionResult r;
        r.id = e.id;
        r.name = e.name;
        const auto start = std::chrono::steady_clock::now();
        try {
            Check c = e.fn(opts);
            r.pass = c.pass;
            r.detail = c.detail;
        } catch (const std::exception& ex) {
            r.pass = false;
            r.detail = std::string("exception: ") + ex.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
        out.push_back(std::move(r));
    }
    return out;
}

int run_and_report(const Options& opts) {
    auto results = run_acceptance(opts);
    bool all = true;
    for (const auto& r : results) {
        std::printf("[%s] criterion %d: %s (%.1fs) %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds, r.detail.c_str());
        all = all && r.pass;
    }
    std::printf("%s: %zu criteria\n", all ? "ALL PASS" : "FAILURES PRESENT", results.size());
    return all ? 0 : 1;
}

}  // namespace evlab::selftest
