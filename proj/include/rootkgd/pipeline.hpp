#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rootkgd/dataset.hpp"
#include "rootkgd/fault_features.hpp"
#include "rootkgd/kgraph.hpp"
#include "rootkgd/rfpa.hpp"
#include "rootkgd/scoring.hpp"

namespace rootkgd::pipeline {

struct RelationOverride {
  std::optional<double> distance;
  std::optional<long> priority_offset;
};

/// Everything a diagnosis run needs. Defaults:
///
/// | key                 | default      |
/// |---------------------|--------------|
/// | r_pc                | 0.5          |
/// | sigma_r             | 0.1          |
/// | p_max               | 3            |
/// | delta_s_min_ratio   | 1e-4         |
/// | init_mode           | seed_only    |
/// | window              | 100          |
/// | rbc_statistic       | spe          |
/// | normalization_order | per_sample   |
/// | constant_s0         | 1            |
/// | exclude_candidate   | false        |
/// | candidates          | variables, streams, devices |
/// | top_k               | 10           |
/// | jobs                | 0 (all cores)|
///
/// fault_start has no default.
struct DiagnosisConfig {
  std::filesystem::path graph_path;
  std::filesystem::path normal_data_path;
  std::filesystem::path fault_data_path;
  std::filesystem::path model_path;
  std::filesystem::path json_path;
  /// CSV column -> Variable entity id. Takes precedence over the graph's own bindings.
  std::map<std::string, std::string> column_bindings;
  /// Columns used by the PCA model that no graph entity represents.
  std::vector<std::string> extra_model_columns;
  /// Per-relation replacements for the graph file's d/o values.
  std::map<std::string, RelationOverride> relation_overrides;
  double r_pc = 0.5;
  rfpa::RfpaParams rfpa;
  std::optional<long> fault_start;
  long window = 100;
  features::ContributionOptions contribution;
  scoring::ScoringOptions scoring;
  scoring::CandidateFilter candidates;
  std::size_t top_k = 10;
  unsigned jobs = 0;
};

/// Parses config JSON. Relative paths resolve against `base_dir`.
/// Unknown keys and mistyped values raise ParseError.
DiagnosisConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
DiagnosisConfig load_config(const std::filesystem::path& path);

std::string serialize_model(const features::PcaModel& model);
features::PcaModel parse_model(std::string_view json_text);
features::PcaModel load_model(const std::filesystem::path& path);

/// Loads the graph and applies the config's relation overrides.
kg::KnowledgeGraph load_configured_graph(const DiagnosisConfig& config);

/// Binding of dataset columns to measured Variable entities for one run.
struct Roster {
  /// Dataset column of each measured variable, in graph declaration order.
  std::vector<std::string> columns;
  /// Entity id of each measured variable; parallel to `columns`.
  std::vector<std::string> entities;
  /// Columns of the PCA model: `columns` followed by the extra model columns.
  std::vector<std::string> model_columns;
  std::vector<std::string> warnings;
};

/// Resolves which variables are measured in every header in `headers`.
/// Variables whose graph-declared column is absent are left out with a warning;
/// a missing column named explicitly in the config is an error, as is a binding
/// to an unknown or non-variable entity. Unbound CSV columns produce warnings.
Roster resolve_roster(const kg::KnowledgeGraph& graph, const DiagnosisConfig& config,
                      const std::vector<std::vector<std::string>>& headers);

struct FitOutcome {
  features::PcaModel model;
  Roster roster;
};

/// Fits the PCA model on the normal dataset and writes it to model_path when set.
FitOutcome run_fit(const DiagnosisConfig& config);

struct DiagnosisOutcome {
  scoring::RootCauseRanking ranking;
  /// Contribution rates over the roster's entity ids.
  features::ContributionVector contributions;
  Roster roster;
};

/// Contribution rate over [fault_start, fault_start + window), then ranking.
/// Uses the stored model when model_path names an existing file, otherwise
/// fits on the normal dataset.
DiagnosisOutcome run_diagnose(const DiagnosisConfig& config);

/// Propagation log for one source entity, as TSV.
std::string run_trace(const DiagnosisConfig& config, std::string_view source, double s_0);

/// Prints the validation report. Returns 0 when clean, 1 on validation
/// errors, 2 when the file cannot be read or parsed.
int run_validate(const std::filesystem::path& graph_path, std::ostream& out);

}  // namespace rootkgd::pipeline
