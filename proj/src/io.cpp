#include "evlab/io.hpp"

#include <chrono>
#include <ctime>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace evlab::io {

using experiments::AggregateResult;
using experiments::ExperimentConfig;
using experiments::LabeledRun;
using experiments::TargetKind;
using nlohmann::json;

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

double p_of_eps(double eps) {
    if (eps <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log10(eps);
}

std::string target_kind_name(TargetKind k) {
    switch (k) {
        case TargetKind::FixedPoint: return "fixed_point";
        case TargetKind::PeriodicPoint: return "periodic_point";
        case TargetKind::FromStationary: return "from_stationary";
    }
    return "unknown";
}

TargetKind target_kind_from_name(const std::string& s) {
    if (s == "fixed_point") return TargetKind::FixedPoint;
    if (s == "periodic_point") return TargetKind::PeriodicPoint;
    if (s == "from_stationary") return TargetKind::FromStationary;
    throw Error(ErrorCode::SchemaError, "target.kind: unknown value '" + s + "'");
}

template <typename T>
T require(const json& j, const std::string& path, const std::string& key);

template <>
double require<double>(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key))
        throw Error(ErrorCode::SchemaError, path + key + ": missing");
    if (!j[key].is_number())
        throw Error(ErrorCode::SchemaError, path + key + ": expected a number");
    return j[key].get<double>();
}

template <>
std::uint64_t require<std::uint64_t>(const json& j, const std::string& path,
                                     const std::string& key) {
    if (!j.contains(key))
        throw Error(ErrorCode::SchemaError, path + key + ": missing");
    if (!j[key].is_number_integer() && !j[key].is_number_unsigned())
        throw Error(ErrorCode::SchemaError, path + key + ": expected an integer");
    if (j[key].is_number_integer() && j[key].get<std::int64_t>() < 0)
        throw Error(ErrorCode::RangeError, path + key + ": must be >= 0");
    return j[key].get<std::uint64_t>();
}

template <>
std::string require<std::string>(const json& j, const std::string& path,
                                 const std::string& key) {
    if (!j.contains(key))
        throw Error(ErrorCode::SchemaError, path + key + ": missing");
    if (!j[key].is_string())
        throw Error(ErrorCode::SchemaError, path + key + ": expected a string");
    return j[key].get<std::string>();
}

double get_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
        throw Error(ErrorCode::SchemaError, key + ": expected a number");
    return j[key].get<double>();
}

dynamics::StateVector state_from_json(const json& j, const std::string& path, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw Error(ErrorCode::SchemaError,
                    path + ": expected an array of " + std::to_string(dim) + " coordinates");
    for (const auto& c : j)
        if (!c.is_number())
            throw Error(ErrorCode::SchemaError, path + ": coordinates must be numbers");
    if (dim == 1) return dynamics::make_state(j[0].get<double>());
    return dynamics::make_state(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["map"] = dynamics::map_name(cfg.map.kind);
    json params = json::object();
    switch (cfg.map.kind) {
        case dynamics::MapKind::Rotation:
        case dynamics::MapKind::PomeauManneville:
        case dynamics::MapKind::Lsv:
            params["alpha"] = cfg.map.alpha;
            break;
        case dynamics::MapKind::Quadratic:
        case dynamics::MapKind::CuspLorenz:
            params["a"] = cfg.map.a;
            break;
        case dynamics::MapKind::Henon:
            params["a"] = cfg.map.a;
            params["b"] = cfg.map.b;
            break;
        default:
            break;
    }
    j["params"] = params;
    j["eps"] = cfg.eps_grid;
    j["m"] = cfg.m;
    j["n"] = cfg.n;
    j["realizations"] = cfg.realizations;
    j["burn_in"] = cfg.burn_in;
    j["seed"] = cfg.master_seed;
    j["independent_noise_xy"] = cfg.independent_noise_xy;

    json target;
    target["kind"] = target_kind_name(cfg.target.kind);
    if (cfg.target.kind != TargetKind::FromStationary) {
        json z = json::array();
        for (int d = 0; d < cfg.target.z.dim; ++d) z.push_back(cfg.target.z.coords[d]);
        target["z"] = z;
        if (cfg.target.kind == TargetKind::PeriodicPoint)
            target["period"] = cfg.target.period;
    }
    j["target"] = target;

    json obs = json::array();
    for (const auto& o : cfg.observables) {
        json jo;
        jo["family"] = observables::family_name(o.family);
        if (o.family != observables::Family::G1) jo["a"] = o.a;
        if (o.family == observables::Family::G3) jo["C"] = o.C;
        obs.push_back(jo);
    }
    j["observables"] = obs;

    json ei;
    ei["enabled"] = cfg.ei.enabled;
    ei["normalization"] =
        cfg.ei.normalization == evt::EiNormalization::TwoN ? "2n" : "2n_over_eps";
    j["ei"] = ei;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "config must be a JSON object");
    ExperimentConfig cfg;

    const std::string map_name = require<std::string>(j, "", "map");
    dynamics::MapKind kind;
    try {
        kind = dynamics::map_from_name(map_name);
    } catch (const Error&) {
        throw Error(ErrorCode::SchemaError, "map: unknown map '" + map_name + "'");
    }
    const json params = j.contains("params") ? j["params"] : json::object();
    if (!params.is_object()) throw Error(ErrorCode::SchemaError, "params: expected an object");
    switch (kind) {
        case dynamics::MapKind::Rotation:
            cfg.map = dynamics::make_rotation(
                get_or(params, "alpha", 0.61803398874989484820));
            break;
        case dynamics::MapKind::TernaryShift:
            cfg.map = dynamics::make_ternary();
            break;
        case dynamics::MapKind::Quadratic:
            cfg.map = dynamics::make_quadratic(require<double>(params, "params.", "a"));
            break;
        case dynamics::MapKind::PomeauManneville:
            cfg.map = dynamics::make_pomeau_manneville(
                require<double>(params, "params.", "alpha"));
            break;
        case dynamics::MapKind::Lsv:
            cfg.map = dynamics::make_lsv(require<double>(params, "params.", "alpha"));
            break;
        case dynamics::MapKind::CuspLorenz:
            cfg.map = dynamics::make_cusp_lorenz(require<double>(params, "params.", "a"));
            break;
        case dynamics::MapKind::ArnoldCat:
            cfg.map = dynamics::make_arnold_cat();
            break;
        case dynamics::MapKind::Henon:
            cfg.map = dynamics::make_henon(get_or(params, "a", 1.4), get_or(params, "b", 0.3));
            break;
    }
    try {
        cfg.map.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::RangeError, std::string("params: ") + e.what());
    }

    if (!j.contains("eps"))
        throw Error(ErrorCode::SchemaError, "eps: missing");
    if (!j["eps"].is_array() || j["eps"].empty())
        throw Error(ErrorCode::SchemaError, "eps: expected a non-empty array");
    for (const auto& e : j["eps"]) {
        if (!e.is_number()) throw Error(ErrorCode::SchemaError, "eps: entries must be numbers");
        const double v = e.get<double>();
        if (v < 0.0 || !std::isfinite(v))
            throw Error(ErrorCode::RangeError, "eps: epsilon must be finite and >= 0");
        cfg.eps_grid.push_back(v);
    }

    cfg.m = require<std::uint64_t>(j, "", "m");
    cfg.n = require<std::uint64_t>(j, "", "n");
    cfg.master_seed = require<std::uint64_t>(j, "", "seed");
    cfg.realizations = j.contains("realizations")
                           ? require<std::uint64_t>(j, "", "realizations")
                           : 50;
    cfg.burn_in = j.contains("burn_in") ? require<std::uint64_t>(j, "", "burn_in") : 10000;
    if (j.contains("independent_noise_xy")) {
        if (!j["independent_noise_xy"].is_boolean())
            throw Error(ErrorCode::SchemaError, "independent_noise_xy: expected a boolean");
        cfg.independent_noise_xy = j["independent_noise_xy"].get<bool>();
    }

    if (j.contains("target")) {
        const json& t = j["target"];
        if (!t.is_object()) throw Error(ErrorCode::SchemaError, "target: expected an object");
        cfg.target.kind = target_kind_from_name(require<std::string>(t, "target.", "kind"));
        if (cfg.target.kind != TargetKind::FromStationary) {
            if (!t.contains("z")) throw Error(ErrorCode::SchemaError, "target.z: missing");
            cfg.target.z = state_from_json(t["z"], "target.z", cfg.map.dimension());
            if (cfg.target.kind == TargetKind::PeriodicPoint)
                cfg.target.period = static_cast<int>(
                    t.contains("period") ? require<std::uint64_t>(t, "target.", "period") : 1);
        }
    } else {
        cfg.target.kind = TargetKind::FromStationary;
    }

    if (j.contains("observables")) {
        if (!j["observables"].is_array())
            throw Error(ErrorCode::SchemaError, "observables: expected an array");
        for (const auto& jo : j["observables"]) {
            experiments::ObservableSettings s;
            s.family = observables::family_from_name(
                require<std::string>(jo, "observables[].", "family"));
            s.a = get_or(jo, "a", 1.0);
            s.C = get_or(jo, "C", 0.0);
            cfg.observables.push_back(s);
        }
    } else {
        cfg.observables = {{observables::Family::G1, 1.0, 0.0}};
    }

    if (j.contains("ei")) {
        const json& e = j["ei"];
        if (!e.is_object()) throw Error(ErrorCode::SchemaError, "ei: expected an object");
        if (e.contains("enabled")) {
            if (!e["enabled"].is_boolean())
                throw Error(ErrorCode::SchemaError, "ei.enabled: expected a boolean");
            cfg.ei.enabled = e["enabled"].get<bool>();
        }
        if (e.contains("normalization")) {
            const std::string norm = require<std::string>(e, "ei.", "normalization");
            if (norm == "2n")
                cfg.ei.normalization = evt::EiNormalization::TwoN;
            else if (norm == "2n_over_eps")
                cfg.ei.normalization = evt::EiNormalization::TwoNOverEps;
            else
                throw Error(ErrorCode::SchemaError,
                            "ei.normalization: unknown value '" + norm + "'");
        }
    }

    try {
        cfg.validate();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::RangeError) throw;
        throw Error(ErrorCode::RangeError, e.what());
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const ExperimentConfig& cfg) {
    return fnv1a_hex(config_to_json(cfg).dump());
}

namespace {

void append_row(std::string& out, double p, double eps, const std::string& obs,
                const std::string& param, double mean, double sd, double ks_fraction,
                bool reliable, std::uint64_t escapes) {
    out += format_g17(p);
    out += ',';
    out += format_g17(eps);
    out += ',';
    out += obs;
    out += ',';
    out += param;
    out += ',';
    out += format_g17(mean);
    out += ',';
    out += format_g17(sd);
    out += ',';
    out += format_g17(ks_fraction);
    out += ',';
    out += reliable ? '1' : '0';
    out += ',';
    out += std::to_string(escapes);
    out += '\n';
}

void csv_rows_for(std::string& out, const AggregateResult& r) {
    const double p = p_of_eps(r.epsilon);
    for (const auto& oa : r.observables) {
        append_row(out, p, r.epsilon, oa.tag, "kappa", oa.kappa.mean, oa.kappa.sd,
                   oa.ks_pass_fraction, oa.reliable, r.escape_count);
        append_row(out, p, r.epsilon, oa.tag, "sigma", oa.sigma.mean, oa.sigma.sd,
                   oa.ks_pass_fraction, oa.reliable, r.escape_count);
        append_row(out, p, r.epsilon, oa.tag, "nu", oa.nu.mean, oa.nu.sd,
                   oa.ks_pass_fraction, oa.reliable, r.escape_count);
        if (oa.tag.rfind("g1", 0) == 0)
            append_row(out, p, r.epsilon, oa.tag, "dloc", oa.local_dim.mean,
                       oa.local_dim.sd, oa.ks_pass_fraction, oa.reliable, r.escape_count);
    }
    if (r.has_ei)
        append_row(out, p, r.epsilon, "ei", "theta", r.ei.theta.mean, r.ei.theta.sd,
                   r.ei.success_fraction, r.ei.success_fraction >= 0.7, r.escape_count);
}

}  // namespace

std::string results_to_csv(const std::vector<LabeledRun>& runs) {
    std::string out = "p,epsilon,observable,param,mean,std,ks_pass_fraction,reliable,escape_count\n";
    for (const auto& run : runs) {
        if (runs.size() > 1) out += "# " + run.label + "\n";
        for (const auto& r : run.results) csv_rows_for(out, r);
    }
    return out;
}

std::string results_to_csv(const ExperimentConfig& cfg,
                           const std::vector<AggregateResult>& results) {
    LabeledRun run;
    run.label = dynamics::map_name(cfg.map.kind);
    run.config = cfg;
    run.results = results;
    return results_to_csv({run});
}

namespace {

json aggregate_to_json(const AggregateResult& r) {
    json j;
    j["p"] = p_of_eps(r.epsilon);
    j["epsilon"] = r.epsilon;
    j["escape_count"] = r.escape_count;
    j["failed_realizations"] = r.failed_realizations;
    j["realizations"] = r.realizations;
    j["aborted"] = r.aborted;
    j["failures"] = r.failure_log;
    json obs = json::array();
    for (const auto& oa : r.observables) {
        json jo;
        jo["observable"] = oa.tag;
        jo["kappa"] = {{"mean", oa.kappa.mean}, {"std", oa.kappa.sd}};
        jo["sigma"] = {{"mean", oa.sigma.mean}, {"std", oa.sigma.sd}};
        jo["nu"] = {{"mean", oa.nu.mean}, {"std", oa.nu.sd}};
        if (!std::isnan(oa.local_dim.mean))
            jo["dloc"] = {{"mean", oa.local_dim.mean}, {"std", oa.local_dim.sd}};
        jo["ks_pass_fraction"] = oa.ks_pass_fraction;
        jo["reliable"] = oa.reliable;
        jo["fits_ok"] = oa.fits_ok;
        jo["fits_failed"] = oa.fits_failed;
        obs.push_back(jo);
    }
    j["observables"] = obs;
    if (r.has_ei) {
        json je;
        je["theta"] = {{"mean", r.ei.theta.mean}, {"std", r.ei.theta.sd}};
        je["theoretical"] = r.ei.theoretical;
        je["success_fraction"] = r.ei.success_fraction;
        j["ei"] = je;
    }
    return j;
}

}  // namespace

json results_to_json(const std::vector<LabeledRun>& runs) {
    json out;
    out["tool_version"] = kToolVersion;
    json jruns = json::array();
    for (const auto& run : runs) {
        json jr;
        jr["label"] = run.label;
        jr["config"] = config_to_json(run.config);
        jr["config_hash"] = config_hash(run.config);
        json rows = json::array();
        for (const auto& r : run.results) rows.push_back(aggregate_to_json(r));
        jr["results"] = rows;
        jruns.push_back(jr);
    }
    out["runs"] = jruns;
    return out;
}

json manifest_to_json(const RunManifest& m) {
    json j;
    j["config_hash"] = m.config_hash;
    j["tool_version"] = m.tool_version;
    j["master_seed"] = m.master_seed;
    j["timestamp"] = m.timestamp;
    json sums = json::object();
    for (const auto& [name, sum] : m.output_checksums) sums[name] = sum;
    j["output_checksums"] = sums;
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

RunManifest write_run_dir(const std::string& dir, const std::vector<LabeledRun>& runs) {
    std::filesystem::create_directories(dir);
    const std::string csv = results_to_csv(runs);
    const std::string jsn = results_to_json(runs).dump(2) + "\n";
    write_file(dir + "/results.csv", csv);
    write_file(dir + "/results.json", jsn);

    RunManifest m;
    m.tool_version = kToolVersion;
    if (!runs.empty()) {
        m.config_hash = config_hash(runs.front().config);
        m.master_seed = runs.front().config.master_seed;
    }
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char ts[32];
    std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    m.timestamp = ts;
    m.output_checksums.emplace_back("results.csv", fnv1a_hex(csv));
    m.output_checksums.emplace_back("results.json", fnv1a_hex(jsn));
    write_file(dir + "/manifest.json", manifest_to_json(m).dump(2) + "\n");
    return m;
}

void emit_results(const std::vector<LabeledRun>& runs, Format format,
                  const std::string& path) {
    if (format == Format::Csv)
        write_file(path, results_to_csv(runs));
    else
        write_file(path, results_to_json(runs).dump(2) + "\n");
}

}  // namespace evlab::io
