#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "evlab/experiments.hpp"

namespace evlab::io {

inline constexpr const char* kToolVersion = "0.1.0";

/// %.17g formatting; every float in the output files goes through this.
std::string format_g17(double v);

/// Canonical JSON form of a config: all defaults resolved, keys sorted.
nlohmann::json config_to_json(const experiments::ExperimentConfig& cfg);

/// Parse and validate. Throws SchemaError (with the field path) for
/// missing or mistyped fields, RangeError for invariant violations.
experiments::ExperimentConfig config_from_json(const nlohmann::json& j);
experiments::ExperimentConfig parse_config_file(const std::string& path);

/// FNV-1a 64-bit hex digest; the config hash is the digest of the
/// canonical dump.
std::string fnv1a_hex(const std::string& bytes);
std::string config_hash(const experiments::ExperimentConfig& cfg);

/// CSV with the frozen column set:
/// p,epsilon,observable,param,mean,std,ks_pass_fraction,reliable,escape_count
std::string results_to_csv(const std::vector<experiments::LabeledRun>& runs);
std::string results_to_csv(const experiments::ExperimentConfig& cfg,
                           const std::vector<experiments::AggregateResult>& results);

/// JSON mirror of the CSV rows plus config and run metadata (the
/// timestamp lives only in the separate manifest so result files stay
/// byte-reproducible).
nlohmann::json results_to_json(const std::vector<experiments::LabeledRun>& runs);

struct RunManifest {
    std::string config_hash;
    std::string tool_version;
    std::uint64_t master_seed = 0;
    std::string timestamp;  // wall clock; excluded from result files
    std::vector<std::pair<std::string, std::string>> output_checksums;
};

nlohmann::json manifest_to_json(const RunManifest& m);

/// Write results.csv, results.json and manifest.json into `dir`.
/// Returns the manifest.
RunManifest write_run_dir(const std::string& dir,
                          const std::vector<experiments::LabeledRun>& runs);

enum class Format { Csv, Json };

/// Single-file emission of complete results.
void emit_results(const std::vector<experiments::LabeledRun>& runs, Format format,
                  const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace evlab::io
