#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rootkgd/kgraph.hpp"

namespace rootkgd::rfpa {

enum class InitMode {
  /// Only the source starts with s₀.
  SeedOnly,
  /// Every entity starts with s₀ and one receipt.
  Baseline,
};

struct RfpaParams {
  /// Attenuation sharpness; an edge of distance d passes exp(-sigma_r * d).
  double sigma_r = 0.1;
  /// Number of propagation rounds each entity may initiate.
  long p_max = 3;
  /// Edges carrying less than this fraction of s₀ are skipped.
  double delta_s_min_ratio = 1e-4;
  InitMode init_mode = InitMode::SeedOnly;

  /// Throws ValidationError unless sigma_r > 0, p_max >= 1, 0 < ratio < 1.
  void check() const;
};

struct PropagationResult {
  /// Final fault quantity per entity, indexed like KnowledgeGraph::entities().
  std::vector<double> quantities;
  /// Rounds initiated by each entity.
  std::vector<long> initiated;
  /// Receipts per entity, the seed assignment included.
  std::vector<long> received;
  std::size_t source = 0;
  double s_0 = 0.0;
  /// Queue pops, including pops of entities that already hit the cap.
  std::size_t pops = 0;
  /// Pops that initiated a propagation round.
  std::size_t rounds = 0;
  long max_priority = 0;
};

enum class EventKind {
  /// Entity popped and initiating a round.
  Pop,
  /// Entity popped after exhausting its p_max rounds.
  Capped,
  /// Fault quantity moved along an edge.
  Edge,
  /// Edge skipped because the quantity fell below the threshold.
  Skip,
};

std::string_view to_string(EventKind kind);

struct TraceEvent {
  std::size_t seq = 0;
  EventKind kind = EventKind::Pop;
  long priority = 0;
  std::size_t head = 0;
  /// Relation and tail indices; meaningful for Edge and Skip events only.
  std::size_t relation = 0;
  std::size_t tail = 0;
  double delta = 0.0;
  /// Quantity held by the tail after an Edge event.
  double tail_total = 0.0;
};

using TraceSink = std::function<void(const TraceEvent&)>;

/// Runs ripple propagation from `source` with initial quantity `s_0`.
///
/// Entities are popped in ascending (priority, insertion order). A popped
/// entity that has initiated at most p_max rounds sends
/// (quantity / receipts) * exp(-sigma_r * d) along each out-edge in graph
/// order; edges below delta_s_min_ratio * s_0 are skipped individually, and
/// each receiving tail is queued at the popped priority plus the relation's
/// priority offset.
///
/// Throws ValidationError for an unknown source, non-positive s_0, or bad params.
PropagationResult propagate(const kg::KnowledgeGraph& graph, const RfpaParams& params,
                            std::size_t source, double s_0, const TraceSink& sink = {});
PropagationResult propagate(const kg::KnowledgeGraph& graph, const RfpaParams& params,
                            std::string_view source, double s_0, const TraceSink& sink = {});

/// Quantities of the roster entities, in roster order. Throws ValidationError
/// for a roster id missing from the graph.
std::vector<double> aligned_sequence(const kg::KnowledgeGraph& graph,
                                     const PropagationResult& result,
                                     std::span<const std::string> roster);

/// Tab-separated propagation log with a header row. Numbers use the shortest
/// round-trip representation, so identical runs give identical bytes.
std::string format_trace(const kg::KnowledgeGraph& graph, std::span<const TraceEvent> events);

}  // namespace rootkgd::rfpa
