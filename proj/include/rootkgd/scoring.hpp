#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rootkgd/fault_features.hpp"
#include "rootkgd/kgraph.hpp"
#include "rootkgd/rfpa.hpp"

namespace rootkgd::scoring {

struct ScoringOptions {
  /// Seed used for candidates without a positive contribution of their own.
  double constant_s0 = 1.0;
  /// Drop the candidate's own roster entry from both vectors before the cosine.
  bool exclude_candidate = false;
};

/// Which entities rank_all scores. A non-empty `ids` list overrides the kind flags.
struct CandidateFilter {
  bool variables = true;
  bool streams = true;
  bool devices = true;
  bool substances = false;
  std::vector<std::string> ids;

  bool admits(const kg::Entity& entity) const;
};

/// Cosine similarity, or 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

/// Cosine alignment between the candidate's propagation profile over the
/// contribution roster and the contribution vector itself. Roster entries are
/// graph entity ids.
double root_score(const kg::KnowledgeGraph& graph, const rfpa::RfpaParams& params,
                  const features::ContributionVector& contributions, std::string_view candidate,
                  const ScoringOptions& options = {});

struct RankingEntry {
  std::string id;
  kg::EntityKind kind = kg::EntityKind::Variable;
  double score = 0.0;

  bool operator==(const RankingEntry&) const = default;
};

struct WindowInfo {
  long start = 0;
  long length = 0;
  std::string statistic = "spe";
  std::string normalization = "per_sample";

  bool operator==(const WindowInfo&) const = default;
};

struct RankingMetadata {
  std::string graph;
  rfpa::RfpaParams params;
  ScoringOptions scoring;
  std::optional<WindowInfo> window;
};

/// Scores closer than this count as tied when ranking. Mathematically equal
/// scores (e.g. a stream whose only out-edge feeds one device) otherwise land
/// in an order decided by last-bit rounding, which flips under rescaling.
inline constexpr double kScoreResolution = 1e-12;

/// Ranking key: the score snapped to a kScoreResolution grid.
inline long long tie_key(double score) { return std::llround(score / kScoreResolution); }

/// Entries sorted by descending tie_key(score), ties by ascending id.
struct RootCauseRanking {
  std::vector<RankingEntry> entries;
  RankingMetadata metadata;
};

/// Scores every admitted entity. `jobs` worker threads (0 = hardware
/// concurrency); the result does not depend on the thread count.
RootCauseRanking rank_all(const kg::KnowledgeGraph& graph, const rfpa::RfpaParams& params,
                          const features::ContributionVector& contributions,
                          const CandidateFilter& filter = {}, const ScoringOptions& options = {},
                          unsigned jobs = 1);

enum class ReportMode { Text, Json };

/// Text: two side-by-side top-k columns (variables, physical entities) with
/// 5-decimal scores. Json: the full ranking plus metadata.
std::string format_report(const RootCauseRanking& ranking, std::size_t top_k, ReportMode mode);

/// Inverse of the Json report mode. Throws ParseError.
RootCauseRanking parse_report(std::string_view json_text);

}  // namespace rootkgd::scoring
