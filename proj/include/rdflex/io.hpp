#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rdflex/crossfit.hpp"
#include "rdflex/fit.hpp"
#include "rdflex/fuzzy.hpp"
#include "rdflex/pipeline.hpp"
#include "rdflex/simulate.hpp"

namespace rdflex {

inline constexpr const char* kVersion = "0.3.0";

struct ColumnMapping {
    std::string y;
    std::string x;
    // exact names, "prefix*" patterns or "*" for every unmapped column
    std::vector<std::string> z;
    std::optional<std::string> t;
};

struct LoadedData {
    Dataset data;
    Index dropped_rows = 0;
};

/// Reads a headed CSV. X is stored as X - cutoff; rows with a missing value
/// (empty, NA, NaN or ".") in any mapped column are dropped.
LoadedData load_csv(const std::string& path, const ColumnMapping& mapping, double cutoff = 0.0);
LoadedData read_csv(std::istream& in, const ColumnMapping& mapping, double cutoff = 0.0);

/// Expands z patterns against a header, keeping header order within each
/// pattern and dropping repeats.
std::vector<std::string> resolve_columns(const std::vector<std::string>& header,
                                         const std::vector<std::string>& patterns,
                                         const std::vector<std::string>& exclude);

struct RunConfig {
    std::string input;
    ColumnMapping columns;
    double cutoff = 0.0;
    bool fuzzy = false;
    EstimatorConfig estimator;
    std::uint64_t seed = 1;
};

/// INI file with sections [data], [estimator] and [run]. A relative input
/// path is resolved against the directory of the config file.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(std::istream& in);

/// Applies one key of an [estimator] section; unknown keys throw ConfigError.
void set_estimator_key(EstimatorConfig& cfg, const std::string& key, const std::string& value);

/// INI file with a [study] section and one [estimator.LABEL] section per
/// estimator, in file order.
SimStudySpec load_study_spec(const std::string& path);
SimStudySpec parse_study_spec(std::istream& in);

struct BandwidthReport {
    double h = 0.0;
    std::string method;
    std::optional<CctIntermediates> cct;
};

struct RunReport {
    std::string version = kVersion;
    std::uint64_t seed = 0;
    RunConfig config;
    Index n = 0;
    Index dropped_rows = 0;
    std::optional<RdFit> fit;
    std::optional<FuzzyFit> fuzzy;
    BandwidthReport bandwidth;
    double baseline_h = 0.0;
    double window_b = 0.0;
    std::vector<Index> train_sizes;
    std::optional<RdFit> adjustment_jump;
};

/// Sharp RD fit with the first-stage adjustment terms as the outcome; a
/// jump far from zero in SE units flags an adjustment that is not smooth in X.
RdFit diag_adjustment_jump(const AdjustedDataset& adjusted, const Kernel& k, double h, int p = 1);

RunReport run(const RunConfig& config);
RunReport run(const RunConfig& config, std::shared_ptr<const Dataset> data, Index dropped_rows);

void to_json(nlohmann::json& j, const RunReport& r);
void from_json(const nlohmann::json& j, RunReport& r);

/// Human-readable report, numbers at 6 significant digits.
std::string format_report(const RunReport& r);

}  // namespace rdflex
