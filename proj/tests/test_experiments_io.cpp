#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "evlab/experiments.hpp"
#include "evlab/io.hpp"
#include "evlab/stats.hpp"

using namespace evlab;
using namespace evlab::experiments;
using observables::Family;

namespace {

ExperimentConfig small_ternary(std::uint64_t seed = 1) {
    ExperimentConfig cfg;
    cfg.map = dynamics::make_ternary();
    cfg.eps_grid = {1e-3};
    cfg.target = {TargetKind::FixedPoint, dynamics::make_state(0.7371), 1};
    cfg.observables = {{Family::G1, 1.0, 0.0}};
    cfg.m = 50;
    cfg.n = 200;
    cfg.realizations = 4;
    cfg.burn_in = 500;
    cfg.master_seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("config validation guards") {
    auto cfg = small_ternary();
    cfg.realizations = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = small_ternary();
    cfg.m = 100000;
    cfg.n = 100000;  // m*n = 1e10
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = small_ternary();
    cfg.eps_grid = {-0.1};
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("run_ensemble is deterministic and aggregates sensibly") {
    auto cfg = small_ternary();
    auto r1 = run_ensemble(cfg);
    auto r2 = run_ensemble(cfg);
    REQUIRE(r1.size() == 1);
    const auto& a = r1[0].observables[0];
    const auto& b = r2[0].observables[0];
    CHECK(a.kappa.mean == b.kappa.mean);
    CHECK(a.sigma.sd == b.sigma.sd);
    CHECK(r1[0].failed_realizations == 0);
    CHECK(a.fits_ok == 4);
}

TEST_CASE("single realization gives zero standard deviations") {
    auto cfg = small_ternary();
    cfg.realizations = 1;
    auto r = run_ensemble(cfg);
    const auto& oa = r[0].observables[0];
    CHECK(oa.fits_ok == 1);
    CHECK(oa.kappa.sd == 0.0);
    CHECK(oa.sigma.sd == 0.0);
    CHECK(oa.nu.sd == 0.0);
}

TEST_CASE("aggregation is insensitive to input order") {
    Rng rng(9);
    std::vector<double> xs(501);
    for (auto& x : xs) x = rng.uniform(-5.0, 5.0) * std::pow(10.0, rng.uniform(-3, 3));
    auto base = stats::mean_sd(xs);
    std::vector<double> shuffled = xs;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    auto perm = stats::mean_sd(shuffled);
    CHECK(std::abs(base.mean - perm.mean) < 1e-12);
    CHECK(std::abs(base.sd - perm.sd) < 1e-12);
}

TEST_CASE("ei_sweep needs a fixed target and propagates NotPeriodic") {
    auto cfg = small_ternary();
    cfg.target = {TargetKind::FromStationary, {}, 1};
    cfg.ei = {true, evt::EiNormalization::TwoN};
    CHECK_THROWS_AS((void)ei_sweep(cfg), Error);

    cfg = small_ternary();
    cfg.target = {TargetKind::PeriodicPoint, dynamics::make_state(0.7371), 1};
    cfg.ei = {true, evt::EiNormalization::TwoN};
    bool not_periodic = false;
    try {
        (void)ei_sweep(cfg);
    } catch (const Error& e) {
        not_periodic = e.code() == ErrorCode::NotPeriodic;
    }
    CHECK(not_periodic);
}

TEST_CASE("ei_sweep at the ternary periodic point") {
    auto cfg = small_ternary();
    cfg.m = 500;
    cfg.n = 1000;
    cfg.realizations = 2;
    cfg.eps_grid = {0.0, 1e-1};
    cfg.target = {TargetKind::PeriodicPoint, dynamics::make_state(0.5), 1};
    cfg.observables = {};
    auto rs = ei_sweep(cfg);
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].has_ei);
    CHECK(rs[0].ei.theoretical == doctest::Approx(2.0 / 3.0));
    CHECK(std::abs(rs[0].ei.theta.mean - 2.0 / 3.0) < 0.1);
    CHECK(std::abs(rs[1].ei.theta.mean - 1.0) < 0.1);
}

TEST_CASE("figure registry") {
    auto names = figure_names();
    CHECK(std::find(names.begin(), names.end(), "henon") != names.end());
    CHECK_THROWS_AS((void)figure_dataset("nope", Scale::Desk, 1), Error);
}

// ---------------------------------------------------------------------------
// io
// ---------------------------------------------------------------------------

TEST_CASE("config round trip through canonical JSON") {
    auto cfg = small_ternary(77);
    cfg.ei = {true, evt::EiNormalization::TwoNOverEps};
    cfg.observables.push_back({Family::G2, 3.0, 0.0});
    cfg.observables.push_back({Family::G3, 3.0, 1.5});
    auto j = io::config_to_json(cfg);
    auto back = io::config_from_json(j);
    CHECK(io::config_to_json(back).dump() == j.dump());
    CHECK(io::config_hash(back) == io::config_hash(cfg));
}

TEST_CASE("config parsing errors carry the right codes") {
    using nlohmann::json;
    auto parse = [](const json& j) { return io::config_from_json(j); };

    // minimal config resolves defaults
    json minimal = {{"map", "ternary"}, {"eps", {1e-3}}, {"m", 200}, {"n", 1000},
                    {"seed", 1}};
    auto cfg = parse(minimal);
    CHECK(cfg.realizations == 50);
    CHECK(cfg.burn_in == 10000);
    CHECK(cfg.observables.size() == 1);
    CHECK(cfg.target.kind == TargetKind::FromStationary);

    json bad_eps = minimal;
    bad_eps["eps"] = {-0.1};
    CHECK_THROWS_AS((void)parse(bad_eps), Error);
    try {
        (void)parse(bad_eps);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RangeError);
    }

    json big = minimal;
    big["m"] = 1000000;
    big["n"] = 1000;  // m*n = 1e9 over the guard
    try {
        (void)parse(big);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RangeError);
    }

    json missing = minimal;
    missing.erase("map");
    try {
        (void)parse(missing);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SchemaError);
        CHECK(std::string(e.what()).find("map") != std::string::npos);
    }

    json badfield = minimal;
    badfield["target"] = {{"kind", "fixed_point"}};  // z missing
    try {
        (void)parse(badfield);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SchemaError);
        CHECK(std::string(e.what()).find("target.z") != std::string::npos);
    }
}

TEST_CASE("csv schema and reproducible emission") {
    auto cfg = small_ternary();
    cfg.ei = {false, evt::EiNormalization::TwoN};
    LabeledRun run;
    run.label = "ternary";
    run.config = cfg;
    run.results = run_ensemble(cfg);

    const std::string csv = io::results_to_csv({run});
    CHECK(csv.rfind("p,epsilon,observable,param,mean,std,ks_pass_fraction,reliable,"
                    "escape_count\n",
                    0) == 0);
    // ASCII only
    for (unsigned char ch : csv) CHECK(ch < 128);
    // 17 significant digits on the epsilon column
    CHECK(csv.find("0.001") != std::string::npos);

    const std::string csv2 = io::results_to_csv({run});
    CHECK(io::fnv1a_hex(csv) == io::fnv1a_hex(csv2));

    auto dir = std::filesystem::temp_directory_path() / "evlab_io_test";
    std::filesystem::remove_all(dir);
    auto manifest = io::write_run_dir(dir.string(), {run});
    CHECK(std::filesystem::exists(dir / "results.csv"));
    CHECK(std::filesystem::exists(dir / "results.json"));
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(manifest.config_hash == io::config_hash(cfg));
    REQUIRE(manifest.output_checksums.size() == 2);
    CHECK(manifest.output_checksums[0].second ==
          io::fnv1a_hex(io::read_file((dir / "results.csv").string())));
}

TEST_CASE("g17 formatting survives round trips") {
    for (double v : {1.0 / 3.0, 2.718281828459045, 1e-300, 6.02214076e23}) {
        const std::string s = io::format_g17(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("worker count does not change results") {
    auto cfg = small_ternary(31);
    cfg.realizations = 6;
    setenv("EVLAB_WORKERS", "1", 1);
    auto serial = run_ensemble(cfg);
    setenv("EVLAB_WORKERS", "3", 1);
    auto parallel = run_ensemble(cfg);
    unsetenv("EVLAB_WORKERS");
    CHECK(serial[0].observables[0].kappa.mean == parallel[0].observables[0].kappa.mean);
    CHECK(serial[0].observables[0].sigma.mean == parallel[0].observables[0].sigma.mean);
    CHECK(serial[0].observables[0].nu.sd == parallel[0].observables[0].nu.sd);
}

TEST_CASE("reliable points cover the theoretical values for a mixing map") {
    // ensemble-mean confidence bands should cover the expected parameters
    // at >= 60% of the reliable noise levels
    ExperimentConfig cfg;
    cfg.map = dynamics::make_ternary();
    cfg.eps_grid = {1e-4, 1e-3, 1e-2};
    cfg.target = {TargetKind::FixedPoint, dynamics::make_state(0.7371), 1};
    cfg.observables = {{Family::G1, 1.0, 0.0}};
    cfg.m = 100;
    cfg.n = 1000;
    cfg.realizations = 20;
    cfg.master_seed = 8;
    auto rs = run_ensemble(cfg);
    int reliable = 0, covered_kappa = 0, covered_sigma = 0;
    for (const auto& r : rs) {
        const auto& g1 = r.observables[0];
        if (!g1.reliable) continue;
        ++reliable;
        const double half_k =
            1.96 * g1.kappa.sd / std::sqrt(static_cast<double>(g1.fits_ok));
        const double half_s =
            1.96 * g1.sigma.sd / std::sqrt(static_cast<double>(g1.fits_ok));
        if (std::abs(g1.kappa.mean - 0.0) <= half_k) ++covered_kappa;
        if (std::abs(g1.sigma.mean - 1.0) <= half_s) ++covered_sigma;
    }
    REQUIRE(reliable >= 2);
    CHECK(covered_kappa * 10 >= reliable * 6);
    CHECK(covered_sigma * 10 >= reliable * 6);
}

TEST_CASE("ei figure dataset produces the dichotomy endpoints") {
    auto runs = figure_dataset("ei", Scale::Desk, 3);
    REQUIRE(runs.size() == 1);
    const auto& rs = runs[0].results;
    REQUIRE(rs.size() >= 2);
    CHECK(rs.front().epsilon == 0.0);
    CHECK(std::abs(rs.front().ei.theta.mean - 2.0 / 3.0) < 0.08);
    CHECK(std::abs(rs.back().ei.theta.mean - 1.0) < 0.08);
}

TEST_CASE("emit_results single-file output matches the writers") {
    auto cfg = small_ternary(41);
    LabeledRun run;
    run.label = "ternary";
    run.config = cfg;
    run.results = run_ensemble(cfg);
    auto dir = std::filesystem::temp_directory_path() / "evlab_emit_test";
    std::filesystem::create_directories(dir);
    const auto csv_path = (dir / "r.csv").string();
    const auto json_path = (dir / "r.json").string();
    io::emit_results({run}, io::Format::Csv, csv_path);
    io::emit_results({run}, io::Format::Json, json_path);
    CHECK(io::read_file(csv_path) == io::results_to_csv({run}));
    CHECK(io::read_file(json_path) == io::results_to_json({run}).dump(2) + "\n");
}
