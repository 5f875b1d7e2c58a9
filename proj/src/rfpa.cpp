#include "rootkgd/rfpa.hpp"

#include <charconv>
#include <cmath>
#include <queue>

#include "rootkgd/error.hpp"

namespace rootkgd::rfpa {

void RfpaParams::check() const {
  if (!(sigma_r > 0.0) || !std::isfinite(sigma_r)) throw ValidationError("sigma_r must be positive");
  if (p_max < 1) throw ValidationError("p_max must be at least 1");
  if (!(delta_s_min_ratio > 0.0 && delta_s_min_ratio < 1.0)) {
    throw ValidationError("delta_s_min_ratio must lie in (0, 1)");
  }
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Pop: return "pop";
    case EventKind::Capped: return "capped";
    case EventKind::Edge: return "edge";
    case EventKind::Skip: return "skip";
  }
  return "unknown";
}

namespace {

struct QueueItem {
  long priority;
  std::size_t seq;
  std::size_t entity;
};

struct LaterFirst {
  bool operator()(const QueueItem& a, const QueueItem& b) const {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.seq > b.seq;
  }
};

}  // namespace

PropagationResult propagate(const kg::KnowledgeGraph& graph, const RfpaParams& params,
                            std::size_t source, double s_0, const TraceSink& sink) {
  params.check();
  if (source >= graph.size()) throw ValidationError("propagation source out of range");
  if (!(s_0 > 0.0) || !std::isfinite(s_0)) {
    throw ValidationError("initial fault quantity must be positive");
  }

  const std::size_t n = graph.size();
  PropagationResult result;
  result.source = source;
  result.s_0 = s_0;
  result.initiated.assign(n, 0);
  if (params.init_mode == InitMode::Baseline) {
    result.quantities.assign(n, s_0);
    result.received.assign(n, 1);
  } else {
    result.quantities.assign(n, 0.0);
    result.received.assign(n, 0);
    result.quantities[source] = s_0;
    result.received[source] = 1;
  }

  std::vector<double> attenuation;
  attenuation.reserve(graph.relations().size());
  for (const auto& r : graph.relations()) attenuation.push_back(std::exp(-params.sigma_r * r.distance));

  const double threshold = params.delta_s_min_ratio * s_0;
  std::priority_queue<QueueItem, std::vector<QueueItem>, LaterFirst> queue;
  std::size_t next_seq = 0;
  std::size_t event_seq = 0;
  queue.push({0, next_seq++, source});

  while (!queue.empty()) {
    const QueueItem item = queue.top();
    queue.pop();
    ++result.pops;
    result.max_priority = std::max(result.max_priority, item.priority);

    const std::size_t head = item.entity;
    const bool active = ++result.initiated[head] <= params.p_max;
    if (sink) {
      sink(TraceEvent{.seq = event_seq++,
                      .kind = active ? EventKind::Pop : EventKind::Capped,
                      .priority = item.priority,
                      .head = head,
                      .delta = result.quantities[head]});
    }
    if (!active) continue;
    ++result.rounds;

    for (const kg::Edge& edge : graph.out_edges(head)) {
      // Receipt count read per edge: a self-loop may change it mid-round.
      const double delta = result.quantities[head] / static_cast<double>(result.received[head]) *
                           attenuation[edge.relation];
      if (delta < threshold) {
        if (sink) {
          sink(TraceEvent{.seq = event_seq++,
                          .kind = EventKind::Skip,
                          .priority = item.priority,
                          .head = head,
                          .relation = edge.relation,
                          .tail = edge.tail,
                          .delta = delta,
                          .tail_total = result.quantities[edge.tail]});
        }
        continue;
      }
      result.quantities[edge.tail] += delta;
      ++result.received[edge.tail];
      const long child_priority = item.priority + graph.relation(edge.relation).priority_offset;
      queue.push({child_priority, next_seq++, edge.tail});
      if (sink) {
        sink(TraceEvent{.seq = event_seq++,
                        .kind = EventKind::Edge,
                        .priority = item.priority,
                        .head = head,
                        .relation = edge.relation,
                        .tail = edge.tail,
                        .delta = delta,
                        .tail_total = result.quantities[edge.tail]});
      }
    }
  }
  return result;
}

PropagationResult propagate(const kg::KnowledgeGraph& graph, const RfpaParams& params,
                            std::string_view source, double s_0, const TraceSink& sink) {
  return propagate(graph, params, graph.index_of(source), s_0, sink);
}

std::vector<double> aligned_sequence(const kg::KnowledgeGraph& graph,
                                     const PropagationResult& result,
                                     std::span<const std::string> roster) {
  std::vector<double> out;
  out.reserve(roster.size());
  for (const auto& id : roster) out.push_back(result.quantities.at(graph.index_of(id)));
  return out;
}

namespace {

void append_number(std::string& out, double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, ptr);
}

}  // namespace

std::string format_trace(const kg::KnowledgeGraph& graph, std::span<const TraceEvent> events) {
  std::string out = "seq\tevent\tpriority\thead\trelation\ttail\tdelta\ts_tail\n";
  for (const auto& e : events) {
    out += std::to_string(e.seq);
    out += '\t';
    out += to_string(e.kind);
    out += '\t';
    out += std::to_string(e.priority);
    out += '\t';
    out += graph.entity(e.head).id;
    out += '\t';
    if (e.kind == EventKind::Edge || e.kind == EventKind::Skip) {
      out += graph.relation(e.relation).name;
      out += '\t';
      out += graph.entity(e.tail).id;
      out += '\t';
      append_number(out, e.delta);
      out += '\t';
      append_number(out, e.tail_total);
    } else {
      // Pop rows carry the head's current quantity in the delta column.
      out += "-\t-\t";
      append_number(out, e.delta);
      out += "\t-";
    }
    out += '\n';
  }
  return out;
}

}  // namespace rootkgd::rfpa
