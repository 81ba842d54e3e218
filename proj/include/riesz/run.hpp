#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "riesz/config.hpp"

namespace riesz {

inline constexpr const char* tool_version = "1.0.0";

struct RunSummary {
    std::string termination;  // t_end | blow-up | stagnation
    bool exploratory = false;
    std::size_t records = 0;
    std::map<std::string, double> scalars;  // final V, a, J, M_q, harnack, fitted exponents, ...
    std::filesystem::path directory;
};

/// Runs one experiment and writes diagnostics.csv, snapshot_<k>.field, final.field,
/// blowup.report (blow-up runs) and manifest.json (atomically, last) into out_dir.
RunSummary run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// The configuration recorded in a manifest.
RunConfig config_from_manifest(const std::filesystem::path& manifest);

/// Column names of diagnostics.csv for a q set.
std::vector<std::string> diagnostics_columns(const std::vector<double>& q_set);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<double> column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

struct RunReport {
    std::string text;
    std::string csv;
};

/// Monotonicity table for a, J, G and the fitted-versus-predicted exponent table of a run
/// directory. Throws ConfigError when the directory holds no run.
RunReport report_run(const std::filesystem::path& run_dir);

}  // namespace riesz
