// evlab command line: simulate orbits, fit GEV parameters, sweep the
// extremal index, rebuild figure datasets, verify the correlation lemma
// and run the acceptance selftest.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evlab/dynamics.hpp"
#include "evlab/evt.hpp"
#include "evlab/experiments.hpp"
#include "evlab/io.hpp"
#include "evlab/selftest.hpp"
#include "evlab/theory.hpp"

namespace {

using namespace evlab;

dynamics::MapSpec map_from_cli(const std::string& name, double alpha, double a, double b) {
    auto kind = dynamics::map_from_name(name);
    dynamics::MapSpec spec;
    switch (kind) {
        case dynamics::MapKind::Rotation: spec = dynamics::make_rotation(alpha); break;
        case dynamics::MapKind::TernaryShift: spec = dynamics::make_ternary(); break;
        case dynamics::MapKind::Quadratic: spec = dynamics::make_quadratic(a); break;
        case dynamics::MapKind::PomeauManneville:
            spec = dynamics::make_pomeau_manneville(alpha);
            break;
        case dynamics::MapKind::Lsv: spec = dynamics::make_lsv(alpha); break;
        case dynamics::MapKind::CuspLorenz: spec = dynamics::make_cusp_lorenz(a); break;
        case dynamics::MapKind::ArnoldCat: spec = dynamics::make_arnold_cat(); break;
        case dynamics::MapKind::Henon: spec = dynamics::make_henon(a, b); break;
    }
    spec.validate();
    return spec;
}

int cmd_simulate(const std::string& map_name, double alpha, double a, double b, double eps,
                 std::uint64_t length, std::uint64_t burn_in, std::uint64_t seed,
                 std::vector<double> x0, const std::string& out) {
    auto map = map_from_cli(map_name, alpha, a, b);
    dynamics::StateVector start;
    if (x0.empty()) {
        Rng rng(seed, 0x57a27ULL);
        start = dynamics::basin_point(map, rng);
    } else if (static_cast<int>(x0.size()) == map.dimension()) {
        start = map.dimension() == 2 ? dynamics::make_state(x0[0], x0[1])
                                     : dynamics::make_state(x0[0]);
    } else {
        throw Error(ErrorCode::Configuration, "--x0 needs " +
                                                  std::to_string(map.dimension()) +
                                                  " coordinates for this map");
    }
    auto orbit = dynamics::random_orbit(map, {eps, false}, start, {length, burn_in, seed});

    std::string csv = map.dimension() == 2 ? "t,x,y,status\n" : "t,x,status\n";
    for (std::size_t t = 0; t < orbit.size(); ++t) {
        csv += std::to_string(t);
        csv += ',';
        csv += io::format_g17(orbit[t].x());
        if (map.dimension() == 2) {
            csv += ',';
            csv += io::format_g17(orbit[t].y());
        }
        csv += orbit[t].alive() ? ",alive\n" : ",escaped\n";
    }
    if (out.empty())
        std::fputs(csv.c_str(), stdout);
    else
        io::write_file(out, csv);
    return 0;
}

std::vector<double> read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::vector<double> xs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line.find(',') != std::string::npos)
            throw Error(ErrorCode::IoError,
                        path + ":" + std::to_string(lineno) +
                            ": fit input must be a single-column series");
        try {
            xs.push_back(std::stod(line));
        } catch (const std::exception&) {
            // skip a non-numeric header line
            if (lineno > 1)
                throw Error(ErrorCode::IoError, path + ":" + std::to_string(lineno) +
                                                    ": not a number: " + line);
        }
    }
    if (xs.empty()) throw Error(ErrorCode::IoError, "no numeric data in " + path);
    return xs;
}

int cmd_fit(const std::string& input, std::uint64_t block_length, const std::string& out) {
    auto series = read_series(input);
    evt::BlockMaximaSeries bm;
    if (block_length > 0) {
        bm = evt::block_maxima(series, block_length, "series");
    } else {
        bm.values = std::move(series);
        bm.block_length = 1;
        bm.observable_tag = "series";
    }
    auto fit = evt::fit_gev_mle(bm);
    auto ks = evt::ks_test(bm, fit);

    nlohmann::json j;
    j["kappa"] = fit.kappa;
    j["sigma"] = fit.sigma;
    j["nu"] = fit.nu;
    j["kappa_ci"] = {fit.kappa_ci.lo, fit.kappa_ci.hi};
    j["sigma_ci"] = {fit.sigma_ci.lo, fit.sigma_ci.hi};
    j["nu_ci"] = {fit.nu_ci.lo, fit.nu_ci.hi};
    j["loglik"] = fit.loglik;
    j["ks_stat"] = ks.statistic;
    j["ks_critical"] = ks.critical;
    j["ks_pass"] = ks.pass;
    j["blocks"] = bm.values.size();
    j["block_length"] = bm.block_length;
    const std::string text = j.dump(2) + "\n";
    if (out.empty())
        std::fputs(text.c_str(), stdout);
    else
        io::write_file(out, text);
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool ei_only) {
    auto cfg = io::parse_config_file(config_path);
    experiments::LabeledRun run;
    run.label = dynamics::map_name(cfg.map.kind);
    run.results = ei_only ? experiments::ei_sweep(cfg) : experiments::run_ensemble(cfg);
    run.config = cfg;
    // echo the canonical config
    std::fputs((io::config_to_json(cfg).dump(2) + "\n").c_str(), stdout);
    io::write_run_dir(out_dir, {run});
    std::printf("wrote %s/results.csv, results.json, manifest.json\n", out_dir.c_str());
    // nonzero exit when any noise level lost more than half its realizations
    for (const auto& r : run.results)
        if (r.aborted) {
            std::fprintf(stderr, "warning: aborted run at eps=%s (see failure log)\n",
                         io::format_g17(r.epsilon).c_str());
            return 4;
        }
    return 0;
}

int cmd_figure(const std::string& name, const std::string& scale_name,
               std::uint64_t seed, const std::string& out_dir) {
    const auto scale = scale_name == "full" ? experiments::Scale::Full
                                            : experiments::Scale::Desk;
    auto runs = experiments::figure_dataset(name, scale, seed);
    io::write_run_dir(out_dir, runs);
    std::printf("figure %s (%s scale): %zu run(s) -> %s\n", name.c_str(),
                scale_name.c_str(), runs.size(), out_dir.c_str());
    return 0;
}

int cmd_verify_lemma(double eps, std::uint64_t jmax, double alpha, const std::string& out) {
    const theory::Interval A{0.0, 0.1};
    const std::vector<theory::Interval> B{{0.0, 0.1}};
    const auto K =
        static_cast<std::uint64_t>(std::max(std::ceil(1.0 / eps), 10000.0));
    std::string csv = "j,epsilon,value,tail,bound,valid,within_bound\n";
    bool all_within = true;
    for (std::uint64_t j = 1; j <= jmax; ++j) {
        auto rep = theory::fourier_correlation(A, B, alpha, eps, j, K);
        csv += std::to_string(j) + "," + io::format_g17(eps) + "," +
               io::format_g17(rep.value) + "," + io::format_g17(rep.uncertainty) + "," +
               io::format_g17(rep.bound) + "," + (rep.valid ? "1" : "0") + "," +
               (rep.within_bound ? "1" : "0") + "\n";
        if (rep.valid && !rep.within_bound) all_within = false;
    }
    if (out.empty())
        std::fputs(csv.c_str(), stdout);
    else
        io::write_file(out, csv);
    std::printf("# lemma bound %s on all valid rows\n",
                all_within ? "holds" : "VIOLATED");
    return all_within ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"extreme value statistics for randomly perturbed maps"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "dump a noisy orbit as CSV");
    std::string sim_map = "ternary", sim_out;
    double sim_alpha = 0.61803398874989484820, sim_a = 1.4, sim_b = 0.3, sim_eps = 0.0;
    std::uint64_t sim_len = 1000, sim_burn = 0, sim_seed = 1;
    std::vector<double> sim_x0;
    sim->add_option("--map", sim_map, "rotation|ternary|quadratic|pm|lsv|cusp|cat|henon");
    sim->add_option("--alpha", sim_alpha, "rotation angle / intermittency exponent");
    sim->add_option("-a", sim_a, "map parameter a");
    sim->add_option("-b", sim_b, "map parameter b (henon)");
    sim->add_option("--eps", sim_eps, "noise intensity");
    sim->add_option("--length", sim_len, "orbit length");
    sim->add_option("--burn-in", sim_burn, "discarded steps");
    sim->add_option("--seed", sim_seed, "rng seed");
    sim->add_option("--x0", sim_x0, "initial condition coordinates");
    sim->add_option("--out", sim_out, "output file (default stdout)");

    // fit
    auto* fit = app.add_subcommand("fit", "GEV fit of a series file (one value per line)");
    std::string fit_in, fit_out;
    std::uint64_t fit_n = 0;
    fit->add_option("--input", fit_in, "series file")->required();
    fit->add_option("--block-length", fit_n,
                    "take block maxima with this block length first (0 = input "
                    "is already maxima)");
    fit->add_option("--out", fit_out, "output JSON file (default stdout)");

    // run / ei
    auto* run = app.add_subcommand("run", "run an ensemble experiment from a JSON config");
    std::string run_cfg, run_out = "run_out";
    run->add_option("--config", run_cfg, "config JSON")->required();
    run->add_option("--out", run_out, "output directory");

    auto* ei = app.add_subcommand("ei", "extremal-index sweep from a JSON config");
    std::string ei_cfg, ei_out = "ei_out";
    ei->add_option("--config", ei_cfg, "config JSON")->required();
    ei->add_option("--out", ei_out, "output directory");

    // figure
    auto* fig = app.add_subcommand("figure", "rebuild a figure dataset");
    std::string fig_name, fig_scale = "desk", fig_out;
    std::uint64_t fig_seed = 1;
    fig->add_option("name", fig_name, "rot|ber|ei|pm|lor|cat|henon")->required();
    fig->add_option("--scale", fig_scale, "desk|full");
    fig->add_option("--seed", fig_seed, "master seed");
    fig->add_option("--out", fig_out, "output directory (default figure_<name>)");

    // verify-lemma
    auto* lem = app.add_subcommand("verify-lemma", "correlation-decay bound report");
    double lem_eps = 0.3, lem_alpha = 0.61803398874989484820;
    std::uint64_t lem_jmax = 200;
    std::string lem_out;
    lem->add_option("--eps", lem_eps, "noise intensity");
    lem->add_option("--jmax", lem_jmax, "largest lag");
    lem->add_option("--alpha", lem_alpha, "rotation angle");
    lem->add_option("--out", lem_out, "output file (default stdout)");

    // selftest
    auto* self = app.add_subcommand("selftest", "run the acceptance suite");
    selftest::Options self_opts;
    self->add_option("--seed", self_opts.seed, "master seed");
    self->add_option("--out", self_opts.out_dir, "output directory");
    self->add_option("--criterion", self_opts.only, "run only these criterion ids");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_map, sim_alpha, sim_a, sim_b, sim_eps, sim_len,
                                sim_burn, sim_seed, sim_x0, sim_out);
        if (fit->parsed()) return cmd_fit(fit_in, fit_n, fit_out);
        if (run->parsed()) return cmd_run(run_cfg, run_out, false);
        if (ei->parsed()) return cmd_run(ei_cfg, ei_out, true);
        if (fig->parsed())
            return cmd_figure(fig_name, fig_scale, fig_seed,
                              fig_out.empty() ? "figure_" + fig_name : fig_out);
        if (lem->parsed()) return cmd_verify_lemma(lem_eps, lem_jmax, lem_alpha, lem_out);
        if (self->parsed()) return selftest::run_and_report(self_opts);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 3;
    }
    return 1;
}
